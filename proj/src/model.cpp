#include "mkv/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mkv/format.hpp"
#include "mkv/reduce.hpp"
#include "mkv/rng.hpp"

namespace mkv {

namespace {

const char* family_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::Constant: return "constant";
        case FamilyKind::Affine: return "affine";
        case FamilyKind::TanhSaturated: return "tanh_saturated";
        case FamilyKind::Square: return "square";
        case FamilyKind::Identity: return "identity";
    }
    return "?";
}

void require_coefficient_slice(const FunctionFamily& f, const char* slot) {
    if (f.kind == FamilyKind::Square || f.kind == FamilyKind::Identity)
        throw std::invalid_argument(std::string("ModelSpec: family '") + family_name(f.kind) +
                                    "' has no bounded-derivative guarantee in slot " + slot);
}

void require_interaction_map(const FunctionFamily& g, const char* slot) {
    if (g.kind == FamilyKind::Square)
        throw std::invalid_argument(std::string("ModelSpec: family 'square' rejected in slot ") +
                                    slot);
}

} // namespace

std::string FunctionFamily::describe() const {
    switch (kind) {
        case FamilyKind::Constant: return "constant " + format_double(p0);
        case FamilyKind::Affine: return "affine " + format_double(p0) + " " + format_double(p1);
        case FamilyKind::TanhSaturated:
            return "tanh_saturated " + format_double(p0) + " " + format_double(p1) + " " + format_double(p2);
        case FamilyKind::Square: return "square";
        case FamilyKind::Identity: return "identity";
    }
    return "?";
}

namespace {

// polynomial growth order: bounded families 0, linear 1, square 2
int growth_degree(const FunctionFamily& f) {
    switch (f.kind) {
        case FamilyKind::Constant:
        case FamilyKind::TanhSaturated: return 0;
        case FamilyKind::Affine:
        case FamilyKind::Identity: return 1;
        case FamilyKind::Square: return 2;
    }
    return 2;
}

} // namespace

Criterion Criterion::composed(FunctionFamily psi, FunctionFamily f) {
    if (growth_degree(psi) * growth_degree(f) > 2)
        throw std::invalid_argument(
            "Criterion: composed functional grows faster than quadratically");
    return {CriterionKind::Composed, f, psi};
}

ModelSpec::ModelSpec(BivariateMap drift, FunctionFamily drift_g, BivariateMap diffusion,
                     FunctionFamily diffusion_g, double horizon)
    : drift_(drift),
      drift_g_(drift_g),
      diffusion_(diffusion),
      diffusion_g_(diffusion_g),
      horizon_(horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("ModelSpec: horizon must be positive and finite");
    require_coefficient_slice(drift_.p, "drift_p");
    require_coefficient_slice(drift_.q, "drift_q");
    require_coefficient_slice(diffusion_.p, "diffusion_p");
    require_coefficient_slice(diffusion_.q, "diffusion_q");
    require_interaction_map(drift_g_, "drift_g");
    require_interaction_map(diffusion_g_, "diffusion_g");
}

CoefficientEval eval_coefficients(const ModelSpec& spec, double x, double m0, double m1) {
    if (!std::isfinite(x) || !std::isfinite(m0) || !std::isfinite(m1))
        throw std::domain_error("eval_coefficients: non-finite input");
    return CoefficientEval{
        spec.drift().value(x, m0),  spec.diffusion().value(x, m1), spec.drift().dx(x, m0),
        spec.drift().dm(x),         spec.diffusion().dx(x, m1),    spec.diffusion().dm(x),
    };
}

double criterion_value(const Criterion& c, std::span<const double> atoms) {
    if (atoms.empty()) throw std::invalid_argument("criterion_value: empty atom vector");
    const double n = static_cast<double>(atoms.size());
    switch (c.kind) {
        case CriterionKind::LinearMean:
            return pairwise_sum_of(atoms.size(), [&](std::size_t i) { return c.f.value(atoms[i]); }) / n;
        case CriterionKind::Composed: {
            const double m =
                pairwise_sum_of(atoms.size(), [&](std::size_t i) { return c.f.value(atoms[i]); }) / n;
            return c.psi.value(m);
        }
        case CriterionKind::Variance: {
            const double m1 = pairwise_sum(atoms) / n;
            const double m2 =
                pairwise_sum_of(atoms.size(), [&](std::size_t i) { return atoms[i] * atoms[i]; }) / n;
            return m2 - m1 * m1;
        }
    }
    return 0.0;
}

std::vector<double> criterion_lgrad(const Criterion& c, std::span<const double> atoms) {
    if (atoms.empty()) throw std::invalid_argument("criterion_lgrad: empty atom vector");
    const std::size_t n = atoms.size();
    std::vector<double> grad(n);
    switch (c.kind) {
        case CriterionKind::LinearMean:
            for (std::size_t i = 0; i < n; ++i) grad[i] = c.f.deriv(atoms[i]);
            break;
        case CriterionKind::Composed: {
            const double m =
                pairwise_sum_of(n, [&](std::size_t i) { return c.f.value(atoms[i]); }) /
                static_cast<double>(n);
            const double outer = c.psi.deriv(m);
            for (std::size_t i = 0; i < n; ++i) grad[i] = outer * c.f.deriv(atoms[i]);
            break;
        }
        case CriterionKind::Variance: {
            const double m1 = mean(atoms);
            for (std::size_t i = 0; i < n; ++i) grad[i] = 2.0 * atoms[i] - 2.0 * m1;
            break;
        }
    }
    return grad;
}

InitialLaw InitialLaw::gaussian(double mean, double std_dev, SamplingMode mode) {
    if (!(std_dev > 0.0)) throw std::invalid_argument("InitialLaw: gaussian std must be > 0");
    return {LawKind::Gaussian, mean, std_dev, 0.5, mode};
}

InitialLaw InitialLaw::uniform(double lo, double hi, SamplingMode mode) {
    if (!(hi > lo)) throw std::invalid_argument("InitialLaw: uniform needs hi > lo");
    return {LawKind::Uniform, lo, hi, 0.5, mode};
}

InitialLaw InitialLaw::two_point(double x1, double x2, double prob, SamplingMode mode) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("InitialLaw: two_point probability must lie in (0, 1)");
    return {LawKind::TwoPoint, x1, x2, prob, mode};
}

double InitialLaw::quantile(double u) const {
    switch (kind) {
        case LawKind::Gaussian: return a + b * rng::normal_quantile(u);
        case LawKind::Uniform: return a + (b - a) * u;
        case LawKind::TwoPoint: return (u <= p) ? a : b;
    }
    return 0.0;
}

double InitialLaw::mean() const {
    switch (kind) {
        case LawKind::Gaussian: return a;
        case LawKind::Uniform: return 0.5 * (a + b);
        case LawKind::TwoPoint: return p * a + (1.0 - p) * b;
    }
    return 0.0;
}

double InitialLaw::variance() const {
    switch (kind) {
        case LawKind::Gaussian: return b * b;
        case LawKind::Uniform: return (b - a) * (b - a) / 12.0;
        case LawKind::TwoPoint: {
            const double d = b - a;
            return p * (1.0 - p) * d * d;
        }
    }
    return 0.0;
}

std::vector<double> sample_initial(const InitialLaw& law, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("sample_initial: need at least 2 atoms");
    std::vector<double> atoms(n);
    if (law.sampling == SamplingMode::QuantileStratified) {
        for (std::size_t i = 0; i < n; ++i)
            atoms[i] = law.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
        std::sort(atoms.begin(), atoms.end());
    } else {
        for (std::size_t i = 0; i < n; ++i)
            atoms[i] = law.quantile(
                rng::uniform_at(seed, rng::kStreamInitial, static_cast<std::uint32_t>(i), 0, 0));
    }
    return atoms;
}

} // namespace mkv

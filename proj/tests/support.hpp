#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mkv/dro.hpp"
#include "mkv/model.hpp"
#include "mkv/reduce.hpp"
#include "mkv/sensitivity.hpp"
#include "mkv/simulate.hpp"
#include "mkv/tangent.hpp"

// Shared generators for the property suites. mt19937_64 is bit-portable and
// all mappings below avoid std distributions, so generated cases are stable
// across platforms.

namespace mkvtest {

using namespace mkv;

class Draw {
public:
    explicit Draw(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        const double u = (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
        return lo + (hi - lo) * u;
    }
    double normal() { return rng::normal_quantile(uniform(0.0, 1.0)); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
    bool coin() { return (gen_() & 1u) != 0; }

    std::vector<double> normal_vector(std::size_t n, double scale = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = scale * normal();
        return v;
    }

private:
    std::mt19937_64 gen_;
};

/// Random coefficient slice with bounded, Lipschitz derivative.
inline FunctionFamily random_slice(Draw& d, double scale) {
    switch (d.index(3)) {
        case 0: return FunctionFamily::constant(d.uniform(-scale, scale));
        case 1: return FunctionFamily::affine(d.uniform(-scale, scale), d.uniform(-scale, scale));
        default:
            return FunctionFamily::tanh_saturated(d.uniform(-scale, scale),
                                                  d.uniform(-scale, scale), d.uniform(0.3, 2.0));
    }
}

inline FunctionFamily random_interaction(Draw& d) {
    switch (d.index(4)) {
        case 0: return FunctionFamily::identity();
        case 1: return FunctionFamily::affine(d.uniform(-0.5, 0.5), d.uniform(-1.0, 1.0));
        case 2: return FunctionFamily::constant(d.uniform(-1.0, 1.0));
        default:
            return FunctionFamily::tanh_saturated(0.0, d.uniform(-1.0, 1.0), d.uniform(0.3, 2.0));
    }
}

/// Random admissible model: moderate drift, mild diffusion, horizon <= 1.
inline ModelSpec random_spec(Draw& d) {
    BivariateMap drift{random_slice(d, 1.0), random_slice(d, 0.8)};
    BivariateMap diffusion{
        FunctionFamily::tanh_saturated(d.uniform(0.1, 0.3), d.uniform(-0.1, 0.1),
                                       d.uniform(0.3, 1.5)),
        FunctionFamily::constant(d.uniform(-0.05, 0.05))};
    return ModelSpec(drift, random_interaction(d), diffusion, random_interaction(d),
                     d.uniform(0.25, 1.0));
}

/// Random criterion with closed-form L-derivative; `smooth_only` skips the
/// square f slot (used where growth must stay quadratic-free).
inline Criterion random_criterion(Draw& d) {
    switch (d.index(3)) {
        case 0: {
            switch (d.index(3)) {
                case 0: return Criterion::linear_mean(FunctionFamily::square());
                case 1:
                    return Criterion::linear_mean(
                        FunctionFamily::affine(d.uniform(-1, 1), d.uniform(-2, 2)));
                default: return Criterion::linear_mean(FunctionFamily::identity());
            }
        }
        case 1: {
            const FunctionFamily f = d.coin()
                                         ? FunctionFamily::tanh_saturated(0.0, d.uniform(-1, 1),
                                                                          d.uniform(0.5, 1.5))
                                         : FunctionFamily::affine(d.uniform(-1, 1), d.uniform(-1, 1));
            const FunctionFamily psi =
                d.coin() ? FunctionFamily::square()
                         : FunctionFamily::affine(d.uniform(-1, 1), d.uniform(-2, 2));
            return Criterion::composed(psi, f);
        }
        default: return Criterion::variance();
    }
}

inline std::shared_ptr<const NoiseGrid> make_noise(const ModelSpec& spec, std::size_t n,
                                                   std::size_t l, std::uint64_t seed,
                                                   std::uint32_t replica = 0) {
    return std::make_shared<NoiseGrid>(seed, replica, n, l,
                                       spec.horizon() / static_cast<double>(l));
}

/// The mean-reversion systemic-risk model with constant volatility.
inline ModelSpec ou_spec(double a = 1.0, double sigma = 0.2, double horizon = 1.0) {
    return ModelSpec({FunctionFamily::affine(0.0, -a), FunctionFamily::constant(a)},
                     FunctionFamily::identity(),
                     {FunctionFamily::constant(sigma), FunctionFamily::constant(0.0)},
                     FunctionFamily::constant(0.0), horizon);
}

/// Freeze-everything toy: zero drift and diffusion.
inline ModelSpec frozen_spec(double horizon = 1.0) {
    return ModelSpec({FunctionFamily::constant(0.0), FunctionFamily::constant(0.0)},
                     FunctionFamily::identity(),
                     {FunctionFamily::constant(0.0), FunctionFamily::constant(0.0)},
                     FunctionFamily::constant(0.0), horizon);
}

/// Zero drift, constant diffusion.
inline ModelSpec diffusion_only_spec(double sigma, double horizon = 1.0) {
    return ModelSpec({FunctionFamily::constant(0.0), FunctionFamily::constant(0.0)},
                     FunctionFamily::identity(),
                     {FunctionFamily::constant(sigma), FunctionFamily::constant(0.0)},
                     FunctionFamily::constant(0.0), horizon);
}

inline double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

} // namespace mkvtest

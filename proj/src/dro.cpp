#include "mkv/dro.hpp"

#include <cmath>
#include <stdexcept>

#include "mkv/reduce.hpp"

namespace mkv {

namespace {

/// Per-replica criterion values at the terminal states of xi_prime under the
/// shared noise set.
std::vector<double> replica_values(const ModelSpec& spec, const Criterion& c,
                                   std::span<const double> xi_prime, std::size_t n_steps,
                                   const NoiseSet& noise, unsigned workers) {
    std::vector<double> phis(noise.size());
    parallel_for(noise.size(), workers, [&](std::size_t r) {
        const PathBundle path = simulate_system(spec, xi_prime, n_steps, noise.grids[r]);
        phis[r] = criterion_value(c, path.terminal_states());
    });
    return phis;
}

/// Replica-averaged adjoint gradient of the CRN objective at xi_prime, plus
/// the objective value from the same simulations.
struct GradientEval {
    std::vector<double> grad;
    double value = 0.0;
};

GradientEval objective_gradient(const ModelSpec& spec, const Criterion& c,
                                std::span<const double> xi_prime, std::size_t n_steps,
                                const NoiseSet& noise, unsigned workers) {
    const std::size_t n = xi_prime.size();
    const std::size_t r_count = noise.size();
    std::vector<double> pulls(r_count * n);
    std::vector<double> phis(r_count);
    parallel_for(r_count, workers, [&](std::size_t r) {
        const PathBundle path = simulate_system(spec, xi_prime, n_steps, noise.grids[r]);
        phis[r] = criterion_value(c, path.terminal_states());
        const auto zeta = pull_adjoint(spec, path, terminal_gradient(c, path));
        std::copy(zeta.begin(), zeta.end(), pulls.begin() + r * n);
    });
    GradientEval out;
    out.value = pairwise_sum(phis) / static_cast<double>(r_count);
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.grad[i] = pairwise_sum_of(r_count, [&](std::size_t r) { return pulls[r * n + i]; }) /
                      static_cast<double>(r_count);
    return out;
}

void project_ball(std::vector<double>& eta, double radius) {
    const double norm = norm_n(eta);
    if (norm > radius) {
        const double scale = radius / norm;
        for (double& v : eta) v *= scale;
    }
}

} // namespace

NoiseSet NoiseSet::make(std::uint64_t seed, std::size_t n_replicas, std::size_t n_particles,
                        std::size_t n_steps, double step_size) {
    NoiseSet set;
    set.grids.reserve(n_replicas);
    for (std::size_t r = 0; r < n_replicas; ++r)
        set.grids.push_back(std::make_shared<NoiseGrid>(seed, static_cast<std::uint32_t>(r),
                                                        n_particles, n_steps, step_size));
    return set;
}

double phi_hat(const ModelSpec& spec, const Criterion& c, std::span<const double> xi_prime,
               std::size_t n_steps, const NoiseSet& noise, unsigned workers) {
    if (noise.size() == 0) throw std::invalid_argument("phi_hat: empty noise set");
    const auto phis = replica_values(spec, c, xi_prime, n_steps, noise, workers);
    return pairwise_sum(phis) / static_cast<double>(phis.size());
}

DroCurve push_curve(const ModelSpec& spec, const Criterion& c, std::span<const double> xi,
                    std::span<const double> eta_star, std::span<const double> radii,
                    std::size_t n_steps, const NoiseSet& noise, unsigned workers) {
    if (eta_star.size() != xi.size())
        throw std::invalid_argument("push_curve: direction length mismatch");
    const std::size_t n = xi.size();
    const std::size_t r_count = noise.size();

    DroCurve curve;
    curve.radii.assign(radii.begin(), radii.end());
    const auto base = replica_values(spec, c, xi, n_steps, noise, workers);
    curve.phi_at_zero = pairwise_sum(base) / static_cast<double>(r_count);

    std::vector<double> shifted(n);
    for (const double r : radii) {
        for (std::size_t i = 0; i < n; ++i) shifted[i] = xi[i] + r * eta_star[i];
        const auto pushed = replica_values(spec, c, shifted, n_steps, noise, workers);
        const double phi = pairwise_sum(pushed) / static_cast<double>(r_count);
        curve.phi_push.push_back(phi);
        curve.slope_push.push_back((phi - curve.phi_at_zero) / r);
        // CRN-paired slope stderr across replicas.
        double se = 0.0;
        if (r_count > 1) {
            const double slope_mean = curve.slope_push.back();
            const double var = pairwise_sum_of(r_count, [&](std::size_t rep) {
                const double d = (pushed[rep] - base[rep]) / r - slope_mean;
                return d * d;
            }) / static_cast<double>(r_count - 1);
            se = std::sqrt(var / static_cast<double>(r_count));
        }
        curve.slope_stderr.push_back(se);
    }
    return curve;
}

PgaResult pga_maximize(const ModelSpec& spec, const Criterion& c, std::span<const double> xi,
                       double radius, std::size_t n_steps, const NoiseSet& noise, int iters,
                       double step0, unsigned workers) {
    if (!(radius > 0.0)) throw std::invalid_argument("pga_maximize: radius must be positive");
    if (iters < 1) throw std::invalid_argument("pga_maximize: need at least one iteration");
    const std::size_t n = xi.size();
    double step = (step0 > 0.0) ? step0 : radius / 4.0;

    PgaResult result;
    result.eta_opt.assign(n, 0.0);
    result.phi_value = phi_hat(spec, c, xi, n_steps, noise, workers);
    result.trace.reserve(iters);

    std::vector<double> shifted(n), candidate(n);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) shifted[i] = xi[i] + result.eta_opt[i];
        const auto eval = objective_gradient(spec, c, shifted, n_steps, noise, workers);
        const double gnorm = norm_n(eval.grad);
        if (!(gnorm > 0.0)) break; // flat objective: nothing to ascend
        candidate = result.eta_opt;
        for (std::size_t i = 0; i < n; ++i) candidate[i] += step * eval.grad[i] / gnorm;
        project_ball(candidate, radius);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = xi[i] + candidate[i];
        const double value = phi_hat(spec, c, shifted, n_steps, noise, workers);
        if (value > result.phi_value) {
            result.phi_value = value;
            result.eta_opt = candidate;
        } else {
            step *= 0.5;
        }
        result.trace.push_back(result.phi_value);
    }
    return result;
}

OuOracleValues ou_oracle(const OuOracle& o) {
    if (!(o.rate > 0.0) || !(o.sigma >= 0.0) || !(o.horizon >= 0.0) || !(o.var0 > 0.0))
        throw std::invalid_argument("ou_oracle: parameters out of range");
    const double decay = std::exp(-2.0 * o.rate * o.horizon);
    OuOracleValues v;
    v.var_terminal = decay * o.var0 + o.sigma * o.sigma * (1.0 - decay) / (2.0 * o.rate);
    v.s_star = 2.0 * decay * std::sqrt(o.var0);
    return v;
}

} // namespace mkv

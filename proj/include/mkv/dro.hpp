#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mkv/sensitivity.hpp"

namespace mkv {

/// Fixed set of replica noise grids shared by every evaluation inside one
/// validation run (common random numbers).
struct NoiseSet {
    std::vector<std::shared_ptr<const NoiseGrid>> grids;

    static NoiseSet make(std::uint64_t seed, std::size_t n_replicas, std::size_t n_particles,
                         std::size_t n_steps, double step_size);
    std::size_t size() const { return grids.size(); }
};

/// Monte Carlo estimate of the terminal criterion for perturbed atoms:
/// mean over replicas of phi at the terminal states.
double phi_hat(const ModelSpec& spec, const Criterion& c, std::span<const double> xi_prime,
               std::size_t n_steps, const NoiseSet& noise, unsigned workers = 1);

/// Worst-case value curve over a descending radius grid. Every evaluation
/// shares the NoiseSet, so slope differences cancel path noise.
struct DroCurve {
    std::vector<double> radii;
    double phi_at_zero = 0.0;
    std::vector<double> phi_push;    // value at xi + r * eta_star
    std::vector<double> phi_pga;     // value after projected gradient ascent
    std::vector<double> slope_push;  // (phi_push - phi_at_zero) / r
    std::vector<double> slope_pga;
    std::vector<double> slope_stderr; // CRN paired stderr of the push slope
};

/// Evaluates the push direction at each radius; each point is feasible for
/// the radius-r ball (shared-atom coupling), so each slope is a lower-bound
/// estimate of the worst-case slope. eta_star must have unit ||.||_N.
DroCurve push_curve(const ModelSpec& spec, const Criterion& c, std::span<const double> xi,
                    std::span<const double> eta_star, std::span<const double> radii,
                    std::size_t n_steps, const NoiseSet& noise, unsigned workers = 1);

struct PgaResult {
    std::vector<double> eta_opt;
    double phi_value = 0.0;
    std::vector<double> trace; // best objective after each iteration
};

/// Projected gradient ascent of the CRN objective over the ball
/// ||eta||_N <= r. Steps move a distance `step0` (default r/4 when <= 0)
/// along the normalized adjoint gradient, halving on non-improvement;
/// non-convergence is not an error (best iterate is returned).
PgaResult pga_maximize(const ModelSpec& spec, const Criterion& c, std::span<const double> xi,
                       double radius, std::size_t n_steps, const NoiseSet& noise, int iters,
                       double step0, unsigned workers = 1);

/// Mean-reverting model with constant volatility: closed forms for the
/// terminal variance and the worst-case sensitivity of the variance
/// criterion.
struct OuOracle {
    double rate;    // mean-reversion speed a > 0
    double sigma;   // constant volatility
    double horizon; // T
    double var0;    // initial variance
};

struct OuOracleValues {
    double var_terminal; // e^{-2aT} var0 + sigma^2 (1 - e^{-2aT}) / (2a)
    double s_star;       // 2 e^{-2aT} sqrt(var0)
};

OuOracleValues ou_oracle(const OuOracle& o);

} // namespace mkv

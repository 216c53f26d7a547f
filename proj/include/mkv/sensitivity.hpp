#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mkv/tangent.hpp"

namespace mkv {

/// Adjoint pulls of the terminal criterion gradient for R noise replicas
/// sharing one initial atom vector. The replica average of the pulls is the
/// Monte Carlo estimate of the time-0 conditional expectation; the pathwise
/// pull alone is not time-0 measurable.
class AdjointField {
public:
    AdjointField(std::vector<double> xi, std::size_t n_steps, std::size_t n_replicas,
                 std::uint64_t seed)
        : xi_(std::move(xi)),
          n_steps_(n_steps),
          n_replicas_(n_replicas),
          seed_(seed),
          pulls_(xi_.size() * n_replicas) {}

    std::size_t n_particles() const { return xi_.size(); }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_replicas() const { return n_replicas_; }
    std::uint64_t seed() const { return seed_; }
    std::span<const double> xi() const { return xi_; }

    std::span<double> pull(std::size_t replica) {
        return {pulls_.data() + replica * xi_.size(), xi_.size()};
    }
    std::span<const double> pull(std::size_t replica) const {
        return {pulls_.data() + replica * xi_.size(), xi_.size()};
    }

    /// Atomwise replica average (the conditional-expectation estimate).
    std::vector<double> replica_mean() const;
    /// Delta-method standard error of ||replica_mean()||_N, from the
    /// atomwise replica variances.
    double mean_norm_stderr() const;

private:
    std::vector<double> xi_;
    std::size_t n_steps_;
    std::size_t n_replicas_;
    std::uint64_t seed_;
    std::vector<double> pulls_; // replica-major: [r * N + i]
};

struct SensitivityReport {
    double s_debiased = 0.0; // cross-replica U-statistic estimate of ||E[zeta|xi]||_N
    double s_naive = 0.0;    // ||replica mean||_N (biased up by conditional variance)
    double s_stderr = 0.0;   // standard error of s_debiased (delta method from var of S^2)
    double s2_stderr = 0.0;  // standard error of the squared-norm estimate
    bool clipped = false;    // negative S^2 estimate clipped to zero
    std::vector<double> replica_norms;
    std::vector<double> direction; // eta* = zeta_bar / ||zeta_bar||_N (zeros when flat)
    std::size_t n_particles = 0;
    std::size_t n_steps = 0;
    std::size_t n_replicas = 0;
    std::uint64_t seed = 0;
};

/// L-derivative of the criterion at the terminal atoms of a path.
std::vector<double> terminal_gradient(const Criterion& c, const PathBundle& path);

/// Simulates replicas 0..R-1 of the noise keyed by seed, each sharing the
/// atoms xi, and pulls the terminal criterion gradient back to time 0.
/// Deterministic in its inputs for any worker count.
AdjointField estimate_zeta(const ModelSpec& spec, const Criterion& c,
                           std::span<const double> xi, std::size_t n_steps,
                           std::size_t n_replicas, std::uint64_t seed, unsigned workers = 1);

/// Norm estimates from an adjoint field. The debiased square averages
/// cross-replica inner products (replicas are conditionally independent
/// given xi); products are value-sorted before the final reduction so that
/// permuting replica indices cannot change the result.
SensitivityReport sensitivity_norm(const AdjointField& field);

/// eta* = zeta_bar / ||zeta_bar||_N. Throws FlatCriterionError unless
/// ||zeta_bar||_N exceeds 10x its standard error.
std::vector<double> worst_case_direction(const AdjointField& field);

} // namespace mkv

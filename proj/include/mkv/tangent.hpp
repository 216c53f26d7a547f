#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mkv/simulate.hpp"

namespace mkv {

/// Linearization of one Euler step around a stored path. The step map is
/// diagonal-plus-rank-2:
///   v_i  ->  diag_i * v_i
///          + mean0_load_i * (1/N) sum_j weight0_j v_j
///          + mean1_load_i * (1/N) sum_j weight1_j v_j
/// Recomputable from (spec, bundle) with no extra randomness.
struct StepLinearization {
    std::vector<double> diag;       // 1 + d_x(drift) h + d_x(diff) dB_i
    std::vector<double> mean0_load; // d_m(drift) h
    std::vector<double> mean1_load; // d_m(diff) dB_i
    std::vector<double> weight0;    // g0'(X_j)
    std::vector<double> weight1;    // g1'(X_j)

    static StepLinearization at_step(const ModelSpec& spec, const PathBundle& path,
                                     std::size_t step);

    /// In-place forward application to a tangent vector.
    void apply_forward(std::span<double> v) const;
    /// In-place application of the transpose (w.r.t. <.,.>_N).
    void apply_transpose(std::span<double> w) const;
};

/// Pushes an initial perturbation through all step maps; the particle
/// realization of the pathwise derivative applied to eta. Linear in eta.
std::vector<double> push_tangent(const ModelSpec& spec, const PathBundle& path,
                                 std::span<const double> eta);

/// Applies the transposed step maps in reverse order. Satisfies exact
/// duality: <push(eta), w>_N == <eta, pull(w)>_N on the same path.
std::vector<double> pull_adjoint(const ModelSpec& spec, const PathBundle& path,
                                 std::span<const double> w);

/// Dense path Jacobian for small systems (column j = push_tangent(e_j)).
class DenseJacobian {
public:
    DenseJacobian(std::size_t n) : n_(n), data_(n * n) {}
    std::size_t size() const { return n_; }
    double& at(std::size_t i, std::size_t j) { return data_[j * n_ + i]; }
    double at(std::size_t i, std::size_t j) const { return data_[j * n_ + i]; }
    std::span<double> column(std::size_t j) { return {data_.data() + j * n_, n_}; }
    std::span<const double> column(std::size_t j) const { return {data_.data() + j * n_, n_}; }

    std::vector<double> apply(std::span<const double> v) const;
    std::vector<double> apply_transpose(std::span<const double> w) const;

private:
    std::size_t n_;
    std::vector<double> data_; // column-major
};

inline constexpr std::size_t kDenseJacobianGuard = 512;

/// Throws std::invalid_argument above the N <= 512 guard.
DenseJacobian dense_jacobian(const ModelSpec& spec, const PathBundle& path);

/// Scalar tangent of a decoupled path with respect to its starting point:
/// the product of the per-step diagonal factors along the frozen flow.
double tangent_frozen(const ModelSpec& spec, const FrozenFlow& flow,
                      std::span<const double> decoupled_path,
                      std::span<const double> noise_path);

/// Splits the coupled Jacobian into the frozen-flow tangent (diagonal, up to
/// an O(1/N) self-interaction term) and the mean-field block: N * J_ij for
/// i != j estimates the measure-derivative process at atom j driven by
/// particle i's noise.
struct DecompositionReport {
    std::size_t n_particles = 0;
    DenseJacobian jacobian{0};
    std::vector<double> frozen_tangent; // per particle
    std::vector<double> diag_gap;       // |J_ii - frozen_tangent_i|
    double max_diag_gap = 0.0;

    double u_estimate(std::size_t i, std::size_t j) const {
        return static_cast<double>(n_particles) * jacobian.at(i, j);
    }
};

DecompositionReport decomposition_check(const ModelSpec& spec, std::span<const double> xi,
                                        std::size_t n_steps, std::uint64_t seed);

} // namespace mkv

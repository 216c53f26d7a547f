#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/rng.hpp"

namespace mkv {

namespace detail {

/// The one Euler-Maruyama update used everywhere. Coupled and decoupled
/// simulation must run the identical arithmetic so that a decoupled path
/// started at xi_i with the coupled run's noise row replays the coupled row
/// bit-for-bit.
inline double euler_step(const ModelSpec& spec, double x, double m0, double m1, double h,
                         double db) {
    return x + spec.drift().value(x, m0) * h + spec.diffusion().value(x, m1) * db;
}

} // namespace detail

/// One replica's full trajectory: states, per-step interaction means, and
/// the generating noise. Immutable after construction and safe to share.
class PathBundle {
public:
    std::size_t n_particles() const { return n_particles_; }
    std::size_t n_steps() const { return n_steps_; }
    double horizon() const { return horizon_; }
    double step_size() const { return step_size_; }

    double state(std::size_t particle, std::size_t step) const {
        return states_[step * n_particles_ + particle];
    }
    /// All particle states at one grid time, contiguous.
    std::span<const double> states_at(std::size_t step) const {
        return {states_.data() + step * n_particles_, n_particles_};
    }
    std::span<const double> terminal_states() const { return states_at(n_steps_); }
    std::vector<double> particle_path(std::size_t particle) const;

    double mean0(std::size_t step) const { return mean0_[step]; }
    double mean1(std::size_t step) const { return mean1_[step]; }
    std::span<const double> mean0() const { return mean0_; }
    std::span<const double> mean1() const { return mean1_; }

    const NoiseGrid& noise() const { return *noise_; }
    std::shared_ptr<const NoiseGrid> noise_ptr() const { return noise_; }

private:
    friend PathBundle simulate_system(const ModelSpec&, std::span<const double>, std::size_t,
                                      std::shared_ptr<const NoiseGrid>);
    PathBundle() = default;

    std::size_t n_particles_ = 0;
    std::size_t n_steps_ = 0;
    double horizon_ = 0.0;
    double step_size_ = 0.0;
    std::vector<double> states_; // step-major: [k * N + i], k = 0..L
    std::vector<double> mean0_;  // <g0, mu_k>, length L+1
    std::vector<double> mean1_;  // <g1, mu_k>, length L+1
    std::shared_ptr<const NoiseGrid> noise_;
};

/// Per-step interaction means extracted from a coupled run; decouples a
/// single particle's dynamics from the ensemble.
struct FrozenFlow {
    std::vector<double> mean0; // length L+1
    std::vector<double> mean1;
};

/// Explicit Euler-Maruyama propagation of the coupled N-particle system.
/// Deterministic for fixed inputs regardless of worker count. Throws
/// std::invalid_argument on dimension mismatch and NumericalError when a
/// non-finite state appears (reported with its step index).
PathBundle simulate_system(const ModelSpec& spec, std::span<const double> xi,
                           std::size_t n_steps, std::shared_ptr<const NoiseGrid> noise);

FrozenFlow extract_frozen_flow(const PathBundle& path);

/// Euler recursion of a single particle against a frozen flow; returns the
/// full state sequence (length L+1).
std::vector<double> simulate_decoupled(const ModelSpec& spec, const FrozenFlow& flow, double x0,
                                       std::span<const double> noise_path);

} // namespace mkv

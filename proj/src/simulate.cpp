#include "mkv/simulate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mkv/errors.hpp"
#include "mkv/reduce.hpp"

namespace mkv {

namespace {

double interaction_mean(const FunctionFamily& g, std::span<const double> states) {
    if (g.is_zero()) return 0.0;
    return pairwise_sum_of(states.size(), [&](std::size_t i) { return g.value(states[i]); }) /
           static_cast<double>(states.size());
}

} // namespace

std::vector<double> PathBundle::particle_path(std::size_t particle) const {
    std::vector<double> path(n_steps_ + 1);
    for (std::size_t k = 0; k <= n_steps_; ++k) path[k] = state(particle, k);
    return path;
}

PathBundle simulate_system(const ModelSpec& spec, std::span<const double> xi,
                           std::size_t n_steps, std::shared_ptr<const NoiseGrid> noise) {
    const std::size_t n = xi.size();
    if (!noise) throw std::invalid_argument("simulate_system: missing noise grid");
    if (noise->n_particles() != n || noise->n_steps() != n_steps)
        throw std::invalid_argument("simulate_system: noise grid dimensions do not match");
    const double h = spec.horizon() / static_cast<double>(n_steps);
    if (std::fabs(noise->step_size() - h) > 1e-12 * std::max(1.0, h))
        throw std::invalid_argument("simulate_system: noise step size inconsistent with horizon");

    PathBundle out;
    out.n_particles_ = n;
    out.n_steps_ = n_steps;
    out.horizon_ = spec.horizon();
    out.step_size_ = noise->step_size();
    out.states_.resize(n * (n_steps + 1));
    out.mean0_.resize(n_steps + 1);
    out.mean1_.resize(n_steps + 1);
    out.noise_ = std::move(noise);

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(xi[i])) throw NumericalError("simulate_system: non-finite initial atom");
        out.states_[i] = xi[i];
    }

    const double hs = out.step_size_;
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const double* cur = out.states_.data() + k * n;
        out.mean0_[k] = interaction_mean(spec.drift_g(), {cur, n});
        out.mean1_[k] = interaction_mean(spec.diffusion_g(), {cur, n});
        if (k == n_steps) break;
        const double m0 = out.mean0_[k];
        const double m1 = out.mean1_[k];
        double* next = out.states_.data() + (k + 1) * n;
        const double* db = out.noise_->step_row(k).data();
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = detail::euler_step(spec, cur[i], m0, m1, hs, db[i]);
            finite &= std::isfinite(next[i]);
        }
        if (!finite)
            throw NumericalError("simulate_system: non-finite state at step " +
                                 std::to_string(k + 1));
    }
    return out;
}

FrozenFlow extract_frozen_flow(const PathBundle& path) {
    FrozenFlow flow;
    flow.mean0.assign(path.mean0().begin(), path.mean0().end());
    flow.mean1.assign(path.mean1().begin(), path.mean1().end());
    return flow;
}

std::vector<double> simulate_decoupled(const ModelSpec& spec, const FrozenFlow& flow, double x0,
                                       std::span<const double> noise_path) {
    const std::size_t n_steps = noise_path.size();
    if (flow.mean0.size() != n_steps + 1 || flow.mean1.size() != n_steps + 1)
        throw std::invalid_argument("simulate_decoupled: flow/noise length mismatch");
    const double h = spec.horizon() / static_cast<double>(n_steps);
    std::vector<double> path(n_steps + 1);
    path[0] = x0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        path[k + 1] =
            detail::euler_step(spec, path[k], flow.mean0[k], flow.mean1[k], h, noise_path[k]);
        if (!std::isfinite(path[k + 1]))
            throw NumericalError("simulate_decoupled: non-finite state at step " +
                                 std::to_string(k + 1));
    }
    return path;
}

} // namespace mkv

#include "mkv/tangent.hpp"

#include <cmath>
#include <stdexcept>

#include "mkv/reduce.hpp"

namespace mkv {

StepLinearization StepLinearization::at_step(const ModelSpec& spec, const PathBundle& path,
                                             std::size_t step) {
    const std::size_t n = path.n_particles();
    const double h = path.step_size();
    const double m0 = path.mean0(step);
    const double m1 = path.mean1(step);
    const auto states = path.states_at(step);
    const auto db = path.noise().step_row(step);

    StepLinearization lin;
    lin.diag.resize(n);
    lin.mean0_load.resize(n);
    lin.mean1_load.resize(n);
    lin.weight0.resize(n);
    lin.weight1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = states[i];
        lin.diag[i] = 1.0 + spec.drift().dx(x, m0) * h + spec.diffusion().dx(x, m1) * db[i];
        lin.mean0_load[i] = spec.drift().dm(x) * h;
        lin.mean1_load[i] = spec.diffusion().dm(x) * db[i];
        lin.weight0[i] = spec.drift_g().deriv(x);
        lin.weight1[i] = spec.diffusion_g().deriv(x);
    }
    return lin;
}

void StepLinearization::apply_forward(std::span<double> v) const {
    const std::size_t n = v.size();
    const double s0 = dot(weight0, v) / static_cast<double>(n);
    const double s1 = dot(weight1, v) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = diag[i] * v[i] + mean0_load[i] * s0 + mean1_load[i] * s1;
}

void StepLinearization::apply_transpose(std::span<double> w) const {
    const std::size_t n = w.size();
    const double t0 = dot(mean0_load, w) / static_cast<double>(n);
    const double t1 = dot(mean1_load, w) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
        w[j] = diag[j] * w[j] + weight0[j] * t0 + weight1[j] * t1;
}

std::vector<double> push_tangent(const ModelSpec& spec, const PathBundle& path,
                                 std::span<const double> eta) {
    if (eta.size() != path.n_particles())
        throw std::invalid_argument("push_tangent: direction length mismatch");
    std::vector<double> v(eta.begin(), eta.end());
    for (std::size_t k = 0; k < path.n_steps(); ++k)
        StepLinearization::at_step(spec, path, k).apply_forward(v);
    return v;
}

std::vector<double> pull_adjoint(const ModelSpec& spec, const PathBundle& path,
                                 std::span<const double> w) {
    if (w.size() != path.n_particles())
        throw std::invalid_argument("pull_adjoint: covector length mismatch");
    std::vector<double> z(w.begin(), w.end());
    for (std::size_t k = path.n_steps(); k-- > 0;)
        StepLinearization::at_step(spec, path, k).apply_transpose(z);
    return z;
}

std::vector<double> DenseJacobian::apply(std::span<const double> v) const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        out[i] = pairwise_sum_of(n_, [&](std::size_t j) { return at(i, j) * v[j]; });
    return out;
}

std::vector<double> DenseJacobian::apply_transpose(std::span<const double> w) const {
    std::vector<double> out(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = dot(column(j), w);
    return out;
}

DenseJacobian dense_jacobian(const ModelSpec& spec, const PathBundle& path) {
    const std::size_t n = path.n_particles();
    if (n > kDenseJacobianGuard)
        throw std::invalid_argument("dense_jacobian: N exceeds the dense guard (512)");
    DenseJacobian jac(n);
    for (std::size_t j = 0; j < n; ++j) jac.at(j, j) = 1.0;
    for (std::size_t k = 0; k < path.n_steps(); ++k) {
        const auto lin = StepLinearization::at_step(spec, path, k);
        for (std::size_t j = 0; j < n; ++j) lin.apply_forward(jac.column(j));
    }
    return jac;
}

double tangent_frozen(const ModelSpec& spec, const FrozenFlow& flow,
                      std::span<const double> decoupled_path,
                      std::span<const double> noise_path) {
    const std::size_t n_steps = noise_path.size();
    if (decoupled_path.size() != n_steps + 1 || flow.mean0.size() != n_steps + 1)
        throw std::invalid_argument("tangent_frozen: length mismatch");
    const double h = spec.horizon() / static_cast<double>(n_steps);
    double grad = 1.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double x = decoupled_path[k];
        grad *= 1.0 + spec.drift().dx(x, flow.mean0[k]) * h +
                spec.diffusion().dx(x, flow.mean1[k]) * noise_path[k];
    }
    return grad;
}

DecompositionReport decomposition_check(const ModelSpec& spec, std::span<const double> xi,
                                        std::size_t n_steps, std::uint64_t seed) {
    const std::size_t n = xi.size();
    if (n > kDenseJacobianGuard)
        throw std::invalid_argument("decomposition_check: N exceeds the dense guard (512)");
    const double h = spec.horizon() / static_cast<double>(n_steps);
    auto noise = std::make_shared<NoiseGrid>(seed, 0, n, n_steps, h);
    const PathBundle path = simulate_system(spec, xi, n_steps, noise);
    const FrozenFlow flow = extract_frozen_flow(path);

    DecompositionReport report;
    report.n_particles = n;
    report.jacobian = dense_jacobian(spec, path);
    report.frozen_tangent.resize(n);
    report.diag_gap.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto noise_row = path.noise().particle_row(i);
        const auto state_row = path.particle_path(i);
        report.frozen_tangent[i] = tangent_frozen(spec, flow, state_row, noise_row);
        report.diag_gap[i] = std::fabs(report.jacobian.at(i, i) - report.frozen_tangent[i]);
        report.max_diag_gap = std::max(report.max_diag_gap, report.diag_gap[i]);
    }
    return report;
}

} // namespace mkv

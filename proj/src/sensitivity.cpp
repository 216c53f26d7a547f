#include "mkv/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mkv/errors.hpp"
#include "mkv/reduce.hpp"

namespace mkv {

std::vector<double> AdjointField::replica_mean() const {
    const std::size_t n = n_particles();
    std::vector<double> bar(n);
    for (std::size_t i = 0; i < n; ++i)
        bar[i] = pairwise_sum_of(n_replicas_, [&](std::size_t r) { return pulls_[r * n + i]; }) /
                 static_cast<double>(n_replicas_);
    return bar;
}

double AdjointField::mean_norm_stderr() const {
    const std::size_t n = n_particles();
    const std::size_t r_count = n_replicas_;
    if (r_count < 2) return 0.0;
    const auto bar = replica_mean();
    const double norm = norm_n(bar);
    if (!(norm > 0.0)) return 0.0;
    // Var(||bar||_N^2) ~ sum_i (2 bar_i / N)^2 se_i^2 with se_i^2 the
    // replica variance of atom i divided by R.
    const double weighted = pairwise_sum_of(n, [&](std::size_t i) {
        const double var_i = pairwise_sum_of(r_count, [&](std::size_t r) {
            const double d = pulls_[r * n + i] - bar[i];
            return d * d;
        }) / static_cast<double>(r_count - 1);
        return bar[i] * bar[i] * var_i;
    }) / static_cast<double>(r_count);
    return std::sqrt(weighted) / (static_cast<double>(n) * norm);
}

std::vector<double> terminal_gradient(const Criterion& c, const PathBundle& path) {
    return criterion_lgrad(c, path.terminal_states());
}

AdjointField estimate_zeta(const ModelSpec& spec, const Criterion& c,
                           std::span<const double> xi, std::size_t n_steps,
                           std::size_t n_replicas, std::uint64_t seed, unsigned workers) {
    if (n_replicas < 2) throw std::invalid_argument("estimate_zeta: need at least 2 replicas");
    const double h = spec.horizon() / static_cast<double>(n_steps);
    AdjointField field(std::vector<double>(xi.begin(), xi.end()), n_steps, n_replicas, seed);
    parallel_for(n_replicas, workers, [&](std::size_t r) {
        auto noise = std::make_shared<NoiseGrid>(seed, static_cast<std::uint32_t>(r), xi.size(),
                                                 n_steps, h);
        const PathBundle path = simulate_system(spec, xi, n_steps, std::move(noise));
        const auto grad = terminal_gradient(c, path);
        const auto zeta = pull_adjoint(spec, path, grad);
        std::copy(zeta.begin(), zeta.end(), field.pull(r).begin());
    });
    return field;
}

SensitivityReport sensitivity_norm(const AdjointField& field) {
    const std::size_t r_count = field.n_replicas();
    if (r_count < 2) throw std::invalid_argument("sensitivity_norm: need at least 2 replicas");

    SensitivityReport report;
    report.n_particles = field.n_particles();
    report.n_steps = field.n_steps();
    report.n_replicas = r_count;
    report.seed = field.seed();

    report.replica_norms.resize(r_count);
    for (std::size_t r = 0; r < r_count; ++r) report.replica_norms[r] = norm_n(field.pull(r));

    const auto bar = field.replica_mean();
    report.s_naive = norm_n(bar);

    // Cross-replica U-statistic for ||E[zeta|xi]||_N^2: enumerate unordered
    // pairs lexicographically, then sort by value so the aggregate is
    // invariant under replica permutations.
    std::vector<double> products;
    products.reserve(r_count * (r_count - 1) / 2);
    for (std::size_t r = 0; r < r_count; ++r)
        for (std::size_t s = r + 1; s < r_count; ++s)
            products.push_back(dot_n(field.pull(r), field.pull(s)));
    std::sort(products.begin(), products.end());
    const double m = static_cast<double>(products.size());
    const double s2 = pairwise_sum(products) / m;
    if (products.size() > 1) {
        const double var = pairwise_sum_of(products.size(), [&](std::size_t i) {
            const double d = products[i] - s2;
            return d * d;
        }) / (m - 1.0);
        report.s2_stderr = std::sqrt(var / m);
    }
    if (s2 < 0.0) {
        report.clipped = true;
        report.s_debiased = 0.0;
    } else {
        report.s_debiased = std::sqrt(s2);
    }
    report.s_stderr = (report.s_debiased > 0.0) ? report.s2_stderr / (2.0 * report.s_debiased)
                                                : std::sqrt(report.s2_stderr);

    report.direction.assign(bar.size(), 0.0);
    if (report.s_naive > 0.0)
        for (std::size_t i = 0; i < bar.size(); ++i) report.direction[i] = bar[i] / report.s_naive;
    return report;
}

std::vector<double> worst_case_direction(const AdjointField& field) {
    auto bar = field.replica_mean();
    const double norm = norm_n(bar);
    const double se = field.mean_norm_stderr();
    if (!(norm > 10.0 * se))
        throw FlatCriterionError("worst_case_direction: ||zeta_bar||_N is not statistically "
                                 "resolved from zero (flat criterion)");
    for (double& v : bar) v /= norm;
    return bar;
}

} // namespace mkv

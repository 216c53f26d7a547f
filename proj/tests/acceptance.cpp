// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. argv[1] must point at the CLI binary (used by the determinism
// criterion).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mkv/errors.hpp"
#include "mkv/run.hpp"
#include "support.hpp"

using namespace mkv;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", index, name, detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1. mean-reversion sensitivity vs the closed form, averaged over 10 seeds
void criterion_ou_sensitivity() {
    const double target = 2.0 * std::exp(-2.0) * 0.5; // 0.13534
    const ModelSpec spec = mkvtest::ou_spec(1.0, 0.2);
    const auto xi = sample_initial(InitialLaw::gaussian(0.0, 0.5), 4096, 0);
    double acc = 0.0;
    double first_run_seconds = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto field = estimate_zeta(spec, Criterion::variance(), xi, 256, 64, seed);
        acc += sensitivity_norm(field).s_debiased;
        if (seed == 1) first_run_seconds = seconds_since(t0);
    }
    const double mean_s = acc / 10.0;
    const double rel = std::fabs(mean_s - target) / target;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "mean s_debiased %.6f vs %.6f, rel %.4f (tol 0.03); single run %.2f s (< 30)",
                  mean_s, target, rel, first_run_seconds);
    report(1, "ou-sensitivity", rel <= 0.03 && first_run_seconds < 30.0, buf);
}

// 2. terminal variance of the same configuration
void criterion_ou_variance() {
    const double target = std::exp(-2.0) * 0.25 + 0.02 * (1.0 - std::exp(-2.0)); // 0.05113
    const ModelSpec spec = mkvtest::ou_spec(1.0, 0.2);
    const auto xi = sample_initial(InitialLaw::gaussian(0.0, 0.5), 4096, 0);
    const NoiseSet noise = NoiseSet::make(1, 64, 4096, 256, spec.horizon() / 256.0);
    const double phi = phi_hat(spec, Criterion::variance(), xi, 256, noise);
    const double rel = std::fabs(phi - target) / target;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "phi_hat %.6f vs %.6f, rel %.4f (tol 0.05)", phi, target, rel);
    report(2, "ou-terminal-variance", rel <= 0.05, buf);
}

// 3. frozen dynamics with the identity mean criterion: sensitivity exactly 1
void criterion_degenerate_identity() {
    const ModelSpec spec = mkvtest::frozen_spec();
    const auto xi = sample_initial(InitialLaw::gaussian(0.0, 0.5), 64, 0);
    const auto field = estimate_zeta(
        spec, Criterion::linear_mean(FunctionFamily::identity()), xi, 8, 2, 3);
    const auto report_s = sensitivity_norm(field);
    const double err = std::fabs(report_s.s_debiased - 1.0);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "|s - 1| = %.3e (tol 1e-10)", err);
    report(3, "degenerate-identity", err <= 1e-10, buf);
}

// 4. duality of push and pull over random draws
void criterion_duality() {
    const auto t0 = std::chrono::steady_clock::now();
    mkvtest::Draw d(404);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const ModelSpec spec = mkvtest::random_spec(d);
        const std::size_t n = 4 + d.index(60), l = 4 + d.index(28);
        const auto xi = d.normal_vector(n);
        const auto path = simulate_system(spec, xi, l, mkvtest::make_noise(spec, n, l, trial));
        const auto eta = d.normal_vector(n);
        const auto w = d.normal_vector(n);
        const double lhs = dot_n(push_tangent(spec, path, eta), w);
        const double rhs = dot_n(eta, pull_adjoint(spec, path, w));
        worst = std::max(worst,
                         std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1e-12}));
    }
    const double secs = seconds_since(t0);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "worst rel gap %.3e (tol 1e-10), %.2f s (< 5)", worst, secs);
    report(4, "duality", worst <= 1e-10 && secs < 5.0, buf);
}

// 5. tangent push vs common-noise central differences
void criterion_finite_difference() {
    mkvtest::Draw d(505);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const ModelSpec spec = mkvtest::random_spec(d);
        const std::size_t n = 8 + d.index(56), l = 8 + d.index(56);
        const auto xi = d.normal_vector(n);
        const auto noise = mkvtest::make_noise(spec, n, l, 7000 + trial);
        const auto path = simulate_system(spec, xi, l, noise);
        auto eta = d.normal_vector(n);
        const double scale = norm_n(eta);
        for (auto& e : eta) e /= scale;
        const double eps = 1e-5;
        std::vector<double> up(n), dn(n);
        for (std::size_t i = 0; i < n; ++i) {
            up[i] = xi[i] + eps * eta[i];
            dn[i] = xi[i] - eps * eta[i];
        }
        const auto pu = simulate_system(spec, up, l, noise);
        const auto pd = simulate_system(spec, dn, l, noise);
        const auto v = push_tangent(spec, path, eta);
        std::vector<double> diff(n);
        for (std::size_t i = 0; i < n; ++i)
            diff[i] = (pu.state(i, l) - pd.state(i, l)) / (2.0 * eps) - v[i];
        worst = std::max(worst, norm_n(diff) / std::max(norm_n(v), 1e-6));
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "worst rel error %.3e (tol 1e-4)", worst);
    report(5, "finite-difference-tangent", worst <= 1e-4, buf);
}

// 6. two independent code paths agree on a model with no closed form
void criterion_two_path_agreement() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec spec(
        {FunctionFamily::affine(0.0, -1.0), FunctionFamily::constant(1.0)},
        FunctionFamily::identity(),
        {FunctionFamily::tanh_saturated(0.2, 0.05, 1.0), FunctionFamily::constant(0.0)},
        FunctionFamily::constant(0.0), 1.0);
    const std::size_t n = 2048, l = 96, r = 16;
    const std::uint64_t seed = 11;
    const auto xi = sample_initial(InitialLaw::gaussian(0.0, 1.0), n, 0);

    const auto field = estimate_zeta(spec, Criterion::variance(), xi, l, r, seed);
    const auto rep = sensitivity_norm(field);
    const auto eta_star = worst_case_direction(field);
    const NoiseSet noise = NoiseSet::make(seed, r, n, l, spec.horizon() / static_cast<double>(l));
    const std::vector<double> radii{0.2, 0.1, 0.05};
    const auto curve = push_curve(spec, Criterion::variance(), xi, eta_star, radii, l, noise);

    std::vector<double> slope_pga;
    for (const double rad : radii) {
        const auto pga =
            pga_maximize(spec, Criterion::variance(), xi, rad, l, noise, 20, 0.0);
        slope_pga.push_back((pga.phi_value - curve.phi_at_zero) / rad);
    }

    const double gap = std::fabs(slope_pga.back() - rep.s_debiased);
    bool monotone = true;
    for (std::size_t k = 1; k < radii.size(); ++k) {
        const double e_prev = std::fabs(slope_pga[k - 1] - rep.s_debiased);
        const double e_here = std::fabs(slope_pga[k] - rep.s_debiased);
        monotone = monotone && e_here <= e_prev + 2.0 * curve.slope_stderr[k];
    }
    const double secs = seconds_since(t0);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "s_debiased %.5f, pga slopes {%.5f, %.5f, %.5f}, gap %.4f (tol %.4f), "
                  "monotone %s, %.1f s (< 180)",
                  rep.s_debiased, slope_pga[0], slope_pga[1], slope_pga[2], gap,
                  0.05 * rep.s_debiased, monotone ? "yes" : "no", secs);
    report(6, "estimator-validator-agreement", gap <= 0.05 * rep.s_debiased && monotone && secs < 180.0, buf);
}

// 7. the diagonal self-interaction gap scales like 1/N
void criterion_decomposition_scaling() {
    const ModelSpec spec(
        {FunctionFamily::affine(0.0, -1.0), FunctionFamily::constant(1.0)},
        FunctionFamily::identity(),
        {FunctionFamily::tanh_saturated(0.2, 0.05, 1.0), FunctionFamily::constant(0.0)},
        FunctionFamily::constant(0.0), 1.0);
    const InitialLaw law = InitialLaw::gaussian(0.0, 0.5, SamplingMode::Iid);
    double gap64 = 0.0, gap128 = 0.0;
    for (int s = 0; s < 30; ++s) {
        gap64 += decomposition_check(spec, sample_initial(law, 64, 60 + s), 32, 60 + s)
                     .max_diag_gap;
        gap128 += decomposition_check(spec, sample_initial(law, 128, 60 + s), 32, 60 + s)
                      .max_diag_gap;
    }
    const double factor = gap64 / gap128;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "halving factor %.3f (need 1.5..2.5)", factor);
    report(7, "decomposition-scaling", factor >= 1.5 && factor <= 2.5, buf);
}

// 8. tangent mean preservation for the constant-volatility model
void criterion_mean_identity() {
    const ModelSpec spec = mkvtest::ou_spec(1.0, 0.2);
    const std::size_t n = 1024, l = 128;
    const auto xi = sample_initial(InitialLaw::gaussian(0.0, 0.5), n, 0);
    const auto path = simulate_system(spec, xi, l, mkvtest::make_noise(spec, n, l, 8));
    mkvtest::Draw d(808);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto eta = d.normal_vector(n);
        const auto v = push_tangent(spec, path, eta);
        worst = std::max(worst,
                         std::fabs(mean(v) - mean(eta)) / std::max(1.0, norm_n(eta)));
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "worst |mean(push) - mean(eta)| %.3e (tol 1e-12)", worst);
    report(8, "mean-identity", worst <= 1e-12, buf);
}

// 9. CLI artifacts are byte-identical across worker counts
void criterion_determinism(const char* cli_path) {
    if (cli_path == nullptr) {
        report(9, "determinism", false, "missing CLI path argument");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "mkv-acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "ou.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "model.drift = mean_reversion 1\n"
               "model.diffusion = constant 0.2\n"
               "criterion.kind = variance\n"
               "law.kind = gaussian 0 0.5\n"
               "numerics.n_particles = 1024\n"
               "numerics.n_steps = 128\n"
               "numerics.replicas = 16\n";
    }
    auto run = [&](int workers) {
        std::ostringstream cmd;
        cmd << '"' << cli_path << '"' << " sensitivity --config " << cfg_path.string()
            << " --seed 7 --workers " << workers << " --out " << dir.string()
            << " > /dev/null 2>&1";
        const int status = std::system(cmd.str().c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    const fs::path artifact = dir / "sensitivity-7.json";
    bool ok = run(1);
    const std::string first = ok ? slurp(artifact) : "";
    ok = ok && run(4);
    const std::string second = ok ? slurp(artifact) : "";
    const bool pass = ok && !first.empty() && first == second;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "workers 1 vs 4: %s (%zu bytes)",
                  pass ? "byte-identical" : "mismatch or run failure", first.size());
    report(9, "determinism", pass, buf);
    fs::remove_all(dir);
}

} // namespace

int main(int argc, char** argv) {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_ou_sensitivity();
    criterion_ou_variance();
    criterion_degenerate_identity();
    criterion_duality();
    criterion_finite_difference();
    criterion_two_path_agreement();
    criterion_decomposition_scaling();
    criterion_mean_identity();
    criterion_determinism(argc > 1 ? argv[1] : nullptr);
    std::printf("%d/9 criteria passed in %.1f s\n", 9 - g_failures, seconds_since(t0));
    return g_failures;
}

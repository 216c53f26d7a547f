#include "mkv/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mkv/errors.hpp"
#include "mkv/reduce.hpp"

namespace mkv {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path artifact_path(const RunConfig& cfg, const std::string& command, const char* ext) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / (command + "-" + std::to_string(cfg.seed) + ext);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

json sensitivity_json(const RunConfig& cfg, const SensitivityReport& report) {
    json j;
    j["s_debiased"] = report.s_debiased;
    j["s_naive"] = report.s_naive;
    j["s_stderr"] = report.s_stderr;
    j["direction"] = report.direction;
    j["n"] = report.n_particles;
    j["l"] = report.n_steps;
    j["r_replicas"] = report.n_replicas;
    j["seed"] = report.seed;
    j["model_echo"] = cfg.canonical_text();
    return j;
}

SensitivityReport sensitivity_pass(const RunConfig& cfg, unsigned workers) {
    const ModelSpec spec = cfg.model();
    const auto xi = sample_initial(cfg.law, cfg.n_particles, cfg.seed);
    const auto field =
        estimate_zeta(spec, cfg.criterion, xi, cfg.n_steps, cfg.replicas, cfg.seed, workers);
    return sensitivity_norm(field);
}

/// Structural check that the config is the mean-reversion model with
/// constant volatility and variance criterion; returns the closed-form
/// inputs or throws ConfigError.
OuOracle require_ou(const RunConfig& cfg) {
    const auto& drift = cfg.drift;
    const bool drift_ok = drift.p.kind == FamilyKind::Affine && drift.p.p0 == 0.0 &&
                          drift.p.p1 < 0.0 && drift.q.kind == FamilyKind::Constant &&
                          std::fabs(drift.q.p0 + drift.p.p1) <=
                              1e-12 * std::max(1.0, std::fabs(drift.q.p0));
    const bool g_ok = cfg.drift_g.kind == FamilyKind::Identity ||
                      (cfg.drift_g.kind == FamilyKind::Affine && cfg.drift_g.p0 == 0.0 &&
                       cfg.drift_g.p1 == 1.0);
    const bool diff_ok =
        cfg.diffusion.p.kind == FamilyKind::Constant && cfg.diffusion.q.is_zero();
    const bool crit_ok = cfg.criterion.kind == CriterionKind::Variance;
    if (!(drift_ok && g_ok && diff_ok && crit_ok))
        throw ConfigError("oracle: no closed form for this configuration (need mean-reversion "
                          "drift, constant diffusion, variance criterion)");
    return OuOracle{-drift.p.p1, cfg.diffusion.p.p0, cfg.horizon, cfg.law.variance()};
}

} // namespace

std::string sensitivity_report_json(const RunConfig& cfg, unsigned workers) {
    return sensitivity_json(cfg, sensitivity_pass(cfg, workers)).dump(2) + "\n";
}

int run_simulate(const RunConfig& cfg, unsigned workers, std::ostream& log) {
    (void)workers;
    const ModelSpec spec = cfg.model();
    const auto xi = sample_initial(cfg.law, cfg.n_particles, cfg.seed);
    const double h = cfg.horizon / static_cast<double>(cfg.n_steps);
    auto noise = std::make_shared<NoiseGrid>(cfg.seed, 0, cfg.n_particles, cfg.n_steps, h);
    const PathBundle path = simulate_system(spec, xi, cfg.n_steps, std::move(noise));

    const auto terminal = path.terminal_states();
    json j;
    j["terminal_mean"] = mean(terminal);
    j["terminal_variance"] = criterion_value(Criterion::variance(), terminal);
    j["terminal_min"] = *std::min_element(terminal.begin(), terminal.end());
    j["terminal_max"] = *std::max_element(terminal.begin(), terminal.end());
    j["criterion_value"] = criterion_value(cfg.criterion, terminal);
    j["n"] = cfg.n_particles;
    j["l"] = cfg.n_steps;
    j["seed"] = cfg.seed;
    j["model_echo"] = cfg.canonical_text();
    if (cfg.write_json) {
        const auto out = artifact_path(cfg, "simulate", ".json");
        write_text(out, j.dump(2) + "\n");
        log << "wrote " << out.string() << "\n";
    }

    if (cfg.write_paths) {
        const auto out = artifact_path(cfg, "simulate", ".bin");
        std::ofstream bin(out, std::ios::binary);
        const std::int64_t n = static_cast<std::int64_t>(cfg.n_particles);
        const std::int64_t l = static_cast<std::int64_t>(cfg.n_steps);
        const std::int64_t seed = static_cast<std::int64_t>(cfg.seed);
        bin.write(reinterpret_cast<const char*>(&n), sizeof n);
        bin.write(reinterpret_cast<const char*>(&l), sizeof l);
        bin.write(reinterpret_cast<const char*>(&cfg.horizon), sizeof cfg.horizon);
        bin.write(reinterpret_cast<const char*>(&seed), sizeof seed);
        for (std::size_t i = 0; i < cfg.n_particles; ++i) {
            const auto row = path.particle_path(i);
            bin.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(double)));
        }
        log << "wrote " << out.string() << "\n";
    }

    log << "terminal mean " << format_double(j["terminal_mean"].get<double>()) << ", variance "
        << format_double(j["terminal_variance"].get<double>()) << "\n";
    return kExitOk;
}

int run_sensitivity(const RunConfig& cfg, unsigned workers, std::ostream& log) {
    const auto report = sensitivity_pass(cfg, workers);
    if (report.clipped)
        log << "warning: debiased squared norm was negative and clipped to zero\n";
    if (cfg.write_json) {
        const auto out = artifact_path(cfg, "sensitivity", ".json");
        write_text(out, sensitivity_json(cfg, report).dump(2) + "\n");
        log << "wrote " << out.string() << "\n";
    }
    log << "s_debiased " << format_double(report.s_debiased) << ", s_naive "
        << format_double(report.s_naive) << ", stderr " << format_double(report.s_stderr) << "\n";
    return kExitOk;
}

int run_validate(const RunConfig& cfg, unsigned workers, std::ostream& log) {
    const ModelSpec spec = cfg.model();
    const auto xi = sample_initial(cfg.law, cfg.n_particles, cfg.seed);
    const auto field =
        estimate_zeta(spec, cfg.criterion, xi, cfg.n_steps, cfg.replicas, cfg.seed, workers);
    const auto report = sensitivity_norm(field);
    const auto eta_star = worst_case_direction(field); // throws FlatCriterionError when flat

    const double h = cfg.horizon / static_cast<double>(cfg.n_steps);
    const NoiseSet noise = NoiseSet::make(cfg.seed, cfg.replicas, cfg.n_particles, cfg.n_steps, h);
    DroCurve curve =
        push_curve(spec, cfg.criterion, xi, eta_star, cfg.radii, cfg.n_steps, noise, workers);
    std::vector<double> shifted(xi.size());
    for (std::size_t k = 0; k < curve.radii.size(); ++k) {
        const double r = curve.radii[k];
        const auto pga = pga_maximize(spec, cfg.criterion, xi, r, cfg.n_steps, noise,
                                      cfg.pga_iters, cfg.pga_step0, workers);
        curve.phi_pga.push_back(pga.phi_value);
        curve.slope_pga.push_back((pga.phi_value - curve.phi_at_zero) / r);
    }

    if (cfg.write_csv) {
        std::string text;
        std::istringstream echo(cfg.canonical_text());
        for (std::string line; std::getline(echo, line);) text += "# " + line + "\n";
        text += "r,phi_push,phi_pga,slope_push,slope_pga,stderr\n";
        for (std::size_t k = 0; k < curve.radii.size(); ++k) {
            text += format_double(curve.radii[k]) + "," + format_double(curve.phi_push[k]) + "," +
                    format_double(curve.phi_pga[k]) + "," + format_double(curve.slope_push[k]) +
                    "," + format_double(curve.slope_pga[k]) + "," +
                    format_double(curve.slope_stderr[k]) + "\n";
        }
        const auto out = artifact_path(cfg, "validate", ".csv");
        write_text(out, text);
        log << "wrote " << out.string() << "\n";
    }

    const std::size_t last = curve.radii.size() - 1;
    const double slope = curve.slope_pga[last];
    const double target = report.s_debiased;
    const double gap = std::fabs(slope - target);
    const bool pass = gap <= cfg.slope_tol * std::fabs(target);
    log << "s_debiased " << format_double(target) << "\n";
    for (std::size_t k = 0; k < curve.radii.size(); ++k)
        log << "r = " << format_double(curve.radii[k]) << ": slope_push "
            << format_double(curve.slope_push[k]) << ", slope_pga "
            << format_double(curve.slope_pga[k]) << "\n";
    log << (pass ? "PASS" : "FAIL") << ": |slope_pga(r=" << format_double(curve.radii[last])
        << ") - s_debiased| = " << format_double(gap) << " vs tolerance "
        << format_double(cfg.slope_tol) << " * " << format_double(std::fabs(target)) << "\n";
    return pass ? kExitOk : kExitStatistical;
}

int run_oracle(const RunConfig& cfg, unsigned workers, std::ostream& log) {
    const OuOracle oracle = require_ou(cfg);
    const OuOracleValues values = ou_oracle(oracle);

    const auto report = sensitivity_pass(cfg, workers);
    const ModelSpec spec = cfg.model();
    const auto xi = sample_initial(cfg.law, cfg.n_particles, cfg.seed);
    const double h = cfg.horizon / static_cast<double>(cfg.n_steps);
    const NoiseSet noise = NoiseSet::make(cfg.seed, cfg.replicas, cfg.n_particles, cfg.n_steps, h);
    const double phi = phi_hat(spec, cfg.criterion, xi, cfg.n_steps, noise, workers);

    const double rel_s = std::fabs(report.s_debiased - values.s_star) / values.s_star;
    const double rel_var = std::fabs(phi - values.var_terminal) / values.var_terminal;
    log << "var_T (closed form) " << format_double(values.var_terminal) << ", phi_hat "
        << format_double(phi) << ", rel err " << format_double(rel_var) << "\n";
    log << "s_star (closed form) " << format_double(values.s_star) << ", s_debiased "
        << format_double(report.s_debiased) << ", rel err " << format_double(rel_s) << "\n";

    if (cfg.write_json) {
        json j;
        j["var_t_oracle"] = values.var_terminal;
        j["s_star_oracle"] = values.s_star;
        j["phi_hat"] = phi;
        j["s_debiased"] = report.s_debiased;
        j["rel_err_var"] = rel_var;
        j["rel_err_s"] = rel_s;
        j["model_echo"] = cfg.canonical_text();
        const auto out = artifact_path(cfg, "oracle", ".json");
        write_text(out, j.dump(2) + "\n");
        log << "wrote " << out.string() << "\n";
    }
    return kExitOk;
}

int run_command(const std::string& command, const RunConfig& cfg, unsigned workers,
                std::ostream& log) {
    try {
        if (command == "simulate") return run_simulate(cfg, workers, log);
        if (command == "sensitivity") return run_sensitivity(cfg, workers, log);
        if (command == "validate") return run_validate(cfg, workers, log);
        if (command == "oracle") return run_oracle(cfg, workers, log);
        log << "error: unknown command '" << command << "'\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        log << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const FlatCriterionError& e) {
        log << "statistical error: " << e.what() << "\n";
        return kExitStatistical;
    }
}

} // namespace mkv

#include "mkv/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

std::string trim(const std::string& s) {
    const auto lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return "";
    const auto hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream stream(s);
    std::string tok;
    while (stream >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& key, const std::string& tok) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': expected a finite number, got '" + tok + "'");
    }
}

std::uint64_t parse_count(const std::string& key, const std::string& tok) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(tok, &used);
        if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "': expected a non-negative integer, got '" +
                          tok + "'");
    }
}

FunctionFamily parse_family(const std::string& key, const std::vector<std::string>& toks,
                            std::size_t offset = 0) {
    if (toks.size() <= offset) throw ConfigError("config: key '" + key + "': missing family");
    const std::string& kind = toks[offset];
    const std::size_t params = toks.size() - offset - 1;
    auto arg = [&](std::size_t i) { return parse_double(key, toks[offset + 1 + i]); };
    if (kind == "constant" && params == 1) return FunctionFamily::constant(arg(0));
    if (kind == "affine" && params == 2) return FunctionFamily::affine(arg(0), arg(1));
    if (kind == "tanh_saturated" && params == 3)
        return FunctionFamily::tanh_saturated(arg(0), arg(1), arg(2));
    if (kind == "square" && params == 0) return FunctionFamily::square();
    if (kind == "identity" && params == 0) return FunctionFamily::identity();
    throw ConfigError("config: key '" + key + "': bad family spec '" + kind +
                      "' (constant c | affine a b | tanh_saturated c0 c1 s | square | identity)");
}

} // namespace

ModelSpec RunConfig::model() const {
    return ModelSpec(drift, drift_g, diffusion, diffusion_g, horizon);
}

std::string RunConfig::canonical_text() const {
    std::map<std::string, std::string> lines;
    lines["model.drift"] = "additive";
    lines["model.drift_p"] = drift.p.describe();
    lines["model.drift_q"] = drift.q.describe();
    lines["model.drift_g"] = drift_g.describe();
    lines["model.diffusion"] = "additive";
    lines["model.diffusion_p"] = diffusion.p.describe();
    lines["model.diffusion_q"] = diffusion.q.describe();
    lines["model.diffusion_g"] = diffusion_g.describe();

    switch (criterion.kind) {
        case CriterionKind::Variance: lines["criterion.kind"] = "variance"; break;
        case CriterionKind::LinearMean:
            lines["criterion.kind"] = "linear_mean";
            lines["criterion.f"] = criterion.f.describe();
            break;
        case CriterionKind::Composed:
            lines["criterion.kind"] = "composed";
            lines["criterion.f"] = criterion.f.describe();
            lines["criterion.psi"] = criterion.psi.describe();
            break;
    }

    switch (law.kind) {
        case LawKind::Gaussian:
            lines["law.kind"] = "gaussian " + format_double(law.a) + " " + format_double(law.b);
            break;
        case LawKind::Uniform:
            lines["law.kind"] = "uniform " + format_double(law.a) + " " + format_double(law.b);
            break;
        case LawKind::TwoPoint:
            lines["law.kind"] = "two_point " + format_double(law.a) + " " +
                                format_double(law.b) + " " + format_double(law.p);
            break;
    }
    lines["law.sampling"] =
        law.sampling == SamplingMode::Iid ? "iid" : "quantile_stratified";

    lines["numerics.n_particles"] = std::to_string(n_particles);
    lines["numerics.n_steps"] = std::to_string(n_steps);
    lines["numerics.horizon"] = format_double(horizon);
    lines["numerics.replicas"] = std::to_string(replicas);
    lines["numerics.seed"] = std::to_string(seed);

    std::string radii_text;
    for (std::size_t i = 0; i < radii.size(); ++i)
        radii_text += (i ? " " : "") + format_double(radii[i]);
    lines["validate.radii"] = radii_text;
    lines["validate.pga_iters"] = std::to_string(pga_iters);
    lines["validate.pga_step0"] = format_double(pga_step0);
    lines["validate.slope_tol"] = format_double(slope_tol);

    lines["output.directory"] = out_dir;
    std::string formats;
    if (write_json) formats += "json";
    if (write_csv) formats += std::string(formats.empty() ? "" : " ") + "csv";
    if (write_paths) formats += std::string(formats.empty() ? "" : " ") + "paths";
    lines["output.formats"] = formats.empty() ? "none" : formats;

    std::string out;
    for (const auto& [key, value] : lines) out += key + " = " + value + "\n";
    return out;
}

RunConfig parse_config(const std::string& text) {
    // Pass 1: collect raw assignments.
    std::map<std::string, std::string> raw;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": expected 'section.key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty() || key.find('.') == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) + ": bad key '" + key +
                              "'");
        if (raw.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
        raw.emplace(key, value);
    }

    RunConfig cfg;
    auto take = [&](const std::string& key) -> std::string* {
        auto it = raw.find(key);
        if (it == raw.end()) return nullptr;
        return &it->second;
    };
    std::vector<std::string> consumed;
    auto consume = [&](const std::string& key) -> std::string* {
        auto* v = take(key);
        if (v) consumed.push_back(key);
        return v;
    };

    // --- model (required) ---
    bool drift_shorthand = false;
    if (auto* v = consume("model.drift")) {
        const auto toks = tokens(*v);
        if (toks.empty()) throw ConfigError("config: key 'model.drift': empty value");
        if (toks[0] == "mean_reversion") {
            if (toks.size() != 2)
                throw ConfigError("config: key 'model.drift': mean_reversion takes one rate");
            const double a = parse_double("model.drift", toks[1]);
            cfg.drift = {FunctionFamily::affine(0.0, -a), FunctionFamily::constant(a)};
            cfg.drift_g = FunctionFamily::identity();
            drift_shorthand = true;
        } else if (toks[0] == "additive") {
            auto* p = consume("model.drift_p");
            auto* q = consume("model.drift_q");
            if (!p || !q)
                throw ConfigError(
                    "config: model.drift = additive requires model.drift_p and model.drift_q");
            cfg.drift = {parse_family("model.drift_p", tokens(*p)),
                         parse_family("model.drift_q", tokens(*q))};
        } else {
            cfg.drift = {parse_family("model.drift", toks), FunctionFamily::constant(0.0)};
        }
    } else {
        throw ConfigError("config: missing required key 'model.drift'");
    }
    if (!drift_shorthand && (take("model.drift_p") || take("model.drift_q")) &&
        std::find(consumed.begin(), consumed.end(), "model.drift_p") == consumed.end() &&
        std::find(consumed.begin(), consumed.end(), "model.drift_q") == consumed.end())
        throw ConfigError("config: model.drift_p/q are only valid with model.drift = additive");
    if (drift_shorthand && (take("model.drift_p") || take("model.drift_q")))
        throw ConfigError("config: model.drift_p/q conflict with the mean_reversion shorthand");
    if (auto* v = consume("model.drift_g")) cfg.drift_g = parse_family("model.drift_g", tokens(*v));

    if (auto* v = consume("model.diffusion")) {
        const auto toks = tokens(*v);
        if (toks.empty()) throw ConfigError("config: key 'model.diffusion': empty value");
        if (toks[0] == "additive") {
            auto* p = consume("model.diffusion_p");
            auto* q = consume("model.diffusion_q");
            if (!p || !q)
                throw ConfigError("config: model.diffusion = additive requires "
                                  "model.diffusion_p and model.diffusion_q");
            cfg.diffusion = {parse_family("model.diffusion_p", tokens(*p)),
                             parse_family("model.diffusion_q", tokens(*q))};
        } else {
            cfg.diffusion = {parse_family("model.diffusion", toks), FunctionFamily::constant(0.0)};
        }
    } else {
        throw ConfigError("config: missing required key 'model.diffusion'");
    }
    if ((take("model.diffusion_p") || take("model.diffusion_q")) &&
        std::find(consumed.begin(), consumed.end(), "model.diffusion_p") == consumed.end())
        throw ConfigError(
            "config: model.diffusion_p/q are only valid with model.diffusion = additive");
    if (auto* v = consume("model.diffusion_g"))
        cfg.diffusion_g = parse_family("model.diffusion_g", tokens(*v));

    // --- criterion (required) ---
    if (auto* v = consume("criterion.kind")) {
        const std::string kind = trim(*v);
        auto* f = consume("criterion.f");
        auto* psi = consume("criterion.psi");
        if (kind == "variance") {
            if (f || psi)
                throw ConfigError("config: criterion.f/psi are not used by the variance kind");
            cfg.criterion = Criterion::variance();
        } else if (kind == "linear_mean") {
            if (!f) throw ConfigError("config: criterion.kind = linear_mean requires criterion.f");
            if (psi) throw ConfigError("config: criterion.psi is not used by linear_mean");
            cfg.criterion = Criterion::linear_mean(parse_family("criterion.f", tokens(*f)));
        } else if (kind == "composed") {
            if (!f || !psi)
                throw ConfigError(
                    "config: criterion.kind = composed requires criterion.f and criterion.psi");
            try {
                cfg.criterion = Criterion::composed(parse_family("criterion.psi", tokens(*psi)),
                                                    parse_family("criterion.f", tokens(*f)));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: criterion: ") + e.what());
            }
        } else {
            throw ConfigError("config: key 'criterion.kind': unknown kind '" + kind + "'");
        }
    } else {
        throw ConfigError("config: missing required key 'criterion.kind'");
    }

    // --- law ---
    if (auto* v = consume("law.kind")) {
        const auto toks = tokens(*v);
        auto arg = [&](std::size_t i) { return parse_double("law.kind", toks[i]); };
        try {
            if (!toks.empty() && toks[0] == "gaussian" && toks.size() == 3)
                cfg.law = InitialLaw::gaussian(arg(1), arg(2));
            else if (!toks.empty() && toks[0] == "uniform" && toks.size() == 3)
                cfg.law = InitialLaw::uniform(arg(1), arg(2));
            else if (!toks.empty() && toks[0] == "two_point" && toks.size() == 4)
                cfg.law = InitialLaw::two_point(arg(1), arg(2), arg(3));
            else
                throw ConfigError("config: key 'law.kind': expected 'gaussian mean std', "
                                  "'uniform lo hi', or 'two_point x1 x2 p'");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: key 'law.kind': ") + e.what());
        }
    }
    if (auto* v = consume("law.sampling")) {
        const std::string mode = trim(*v);
        if (mode == "iid") cfg.law.sampling = SamplingMode::Iid;
        else if (mode == "quantile_stratified") cfg.law.sampling = SamplingMode::QuantileStratified;
        else throw ConfigError("config: key 'law.sampling': unknown mode '" + mode + "'");
    }

    // --- numerics ---
    if (auto* v = consume("numerics.n_particles")) {
        cfg.n_particles = parse_count("numerics.n_particles", trim(*v));
        if (cfg.n_particles < 2)
            throw ConfigError("config: key 'numerics.n_particles': need at least 2");
    }
    if (auto* v = consume("numerics.n_steps")) {
        cfg.n_steps = parse_count("numerics.n_steps", trim(*v));
        if (cfg.n_steps < 1) throw ConfigError("config: key 'numerics.n_steps': need at least 1");
    }
    if (auto* v = consume("numerics.horizon")) {
        cfg.horizon = parse_double("numerics.horizon", trim(*v));
        if (!(cfg.horizon > 0.0))
            throw ConfigError("config: key 'numerics.horizon': must be positive");
    }
    if (auto* v = consume("numerics.replicas")) {
        cfg.replicas = parse_count("numerics.replicas", trim(*v));
        if (cfg.replicas < 2)
            throw ConfigError("config: key 'numerics.replicas': need at least 2");
    }
    if (auto* v = consume("numerics.seed")) cfg.seed = parse_count("numerics.seed", trim(*v));

    // --- validate ---
    if (auto* v = consume("validate.radii")) {
        const auto toks = tokens(*v);
        if (toks.empty()) throw ConfigError("config: key 'validate.radii': empty list");
        cfg.radii.clear();
        for (const auto& tok : toks) {
            const double r = parse_double("validate.radii", tok);
            if (!(r > 0.0)) throw ConfigError("config: key 'validate.radii': radii must be > 0");
            cfg.radii.push_back(r);
        }
        std::sort(cfg.radii.rbegin(), cfg.radii.rend());
    }
    if (auto* v = consume("validate.pga_iters")) {
        cfg.pga_iters = static_cast<int>(parse_count("validate.pga_iters", trim(*v)));
        if (cfg.pga_iters < 1)
            throw ConfigError("config: key 'validate.pga_iters': need at least 1");
    }
    if (auto* v = consume("validate.pga_step0"))
        cfg.pga_step0 = parse_double("validate.pga_step0", trim(*v));
    if (auto* v = consume("validate.slope_tol")) {
        cfg.slope_tol = parse_double("validate.slope_tol", trim(*v));
        if (!(cfg.slope_tol > 0.0))
            throw ConfigError("config: key 'validate.slope_tol': must be positive");
    }

    // --- output ---
    if (auto* v = consume("output.directory")) cfg.out_dir = trim(*v);
    if (auto* v = consume("output.formats")) {
        cfg.write_json = cfg.write_csv = cfg.write_paths = false;
        for (const auto& tok : tokens(*v)) {
            if (tok == "json") cfg.write_json = true;
            else if (tok == "csv") cfg.write_csv = true;
            else if (tok == "paths") cfg.write_paths = true;
            else if (tok == "none") continue;
            else throw ConfigError("config: key 'output.formats': unknown format '" + tok + "'");
        }
    }

    // Anything not consumed is an unknown key.
    std::sort(consumed.begin(), consumed.end());
    for (const auto& [key, value] : raw)
        if (!std::binary_search(consumed.begin(), consumed.end(), key))
            throw ConfigError("config: unknown key '" + key + "'");

    // Construct once so coefficient-family violations surface as ConfigError.
    try {
        cfg.model();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

} // namespace mkv

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mkv/format.hpp"
#include "mkv/model.hpp"

namespace mkv {

/// Fully resolved run configuration. Parsed from the flat
/// `section.key = value` document described in the README; every field has
/// a documented default except the model and criterion blocks.
struct RunConfig {
    // model
    BivariateMap drift;
    FunctionFamily drift_g = FunctionFamily::identity();
    BivariateMap diffusion;
    FunctionFamily diffusion_g = FunctionFamily::identity();

    // criterion
    Criterion criterion;

    // law
    InitialLaw law = InitialLaw::gaussian(0.0, 0.5);

    // numerics
    std::size_t n_particles = 4096;
    std::size_t n_steps = 256;
    double horizon = 1.0;
    std::size_t replicas = 64;
    std::uint64_t seed = 1;

    // validate
    std::vector<double> radii{0.2, 0.1, 0.05, 0.02};
    int pga_iters = 40;
    double pga_step0 = 0.0; // <= 0 selects r/4
    double slope_tol = 0.05;

    // output
    std::string out_dir = ".";
    bool write_json = true;
    bool write_csv = true;
    bool write_paths = false;

    /// Validated coefficient model for the configured horizon.
    ModelSpec model() const;

    /// Canonical flat-format echo of the resolved configuration; reparsing
    /// it reproduces this config exactly.
    std::string canonical_text() const;
};

/// Parses the flat-table format. Unknown keys, duplicate keys, missing
/// required blocks, and invariant violations raise ConfigError naming the
/// offending key.
RunConfig parse_config(const std::string& text);

} // namespace mkv

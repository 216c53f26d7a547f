#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mkv/errors.hpp"
#include "mkv/run.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    unsigned workers = 0;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "run configuration file")->required();
    cmd->add_option("--seed", opt.seed, "override numerics.seed")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", opt.out_dir, "override output.directory");
    cmd->add_option("--workers", opt.workers, "cap on concurrent workers (results unchanged)");
}

unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : std::min(hw, 8u);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"particle engine for mean-field dynamics with worst-case "
                 "initial-law sensitivity"};
    app.require_subcommand(1);

    CliOptions opt;
    const char* commands[] = {"simulate", "sensitivity", "validate", "oracle"};
    for (const char* name : commands) add_common(app.add_subcommand(name), opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mkv::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        std::ifstream in(opt.config_path);
        if (!in) {
            std::cerr << "config error: cannot read '" << opt.config_path << "'\n";
            return mkv::kExitConfig;
        }
        std::ostringstream text;
        text << in.rdbuf();
        mkv::RunConfig cfg = mkv::parse_config(text.str());
        if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
        if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
        const unsigned workers = opt.workers > 0 ? opt.workers : default_workers();
        return mkv::run_command(command, cfg, workers, std::cout);
    } catch (const mkv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return mkv::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

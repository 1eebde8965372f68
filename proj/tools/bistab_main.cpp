// bistab: command-line front end for the experiment runner.
//
//   bistab run <config-file> [--out DIR] [--seed N] [--no-plots] [--quiet]
//   bistab preset <name>     [--out DIR] [--seed N] [--no-plots] [--quiet]
//   bistab validate <config-file>
//
// Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
// 3 acceptance-check failure in preset mode. BISTAB_OUT overrides the
// configured output directory; --out overrides both.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bistab/config.hpp"
#include "bistab/errors.hpp"
#include "bistab/runner.hpp"

namespace {

struct Overrides {
    std::string out;
    std::optional<std::uint64_t> seed;
    bool no_plots = false;
    bool quiet = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "seed for initial data and observability samples");
    cmd->add_flag("--no-plots", o.no_plots, "skip SVG plots");
    cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

void apply(bistab::ExperimentConfig& cfg, const Overrides& o) {
    if (const char* env = std::getenv("BISTAB_OUT"); env && *env) cfg.out_dir = env;
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) {
        cfg.initial_seed = *o.seed;
        cfg.obs_seed = *o.seed;
    }
    if (o.no_plots) cfg.emit_plots = false;
}

int config_failure(const std::exception& e) {
    std::cerr << bistab::error_json("config", e.what()).dump() << "\n";
    return bistab::exit_config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback stabilization lab for bilinear systems on spectral truncations"};
    app.require_subcommand(1);

    Overrides run_opts, preset_opts;
    std::string run_file, preset_name, validate_file;

    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    run_cmd->add_option("config", run_file, "config file")->required();
    add_overrides(run_cmd, run_opts);

    auto* preset_cmd = app.add_subcommand("preset", "run a named preset bundle with acceptance checks");
    preset_cmd->add_option("name", preset_name, "preset name")
        ->required()
        ->check(CLI::IsMember(bistab::preset_names()));
    add_overrides(preset_cmd, preset_opts);

    auto* validate_cmd = app.add_subcommand("validate", "parse a config and print the effective values");
    validate_cmd->add_option("config", validate_file, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? bistab::exit_ok : bistab::exit_config;
    }

    if (*validate_cmd) {
        try {
            std::cout << bistab::serialize_config(bistab::load_config(validate_file));
            return bistab::exit_ok;
        } catch (const bistab::ConfigError& e) {
            return config_failure(e);
        }
    }

    bistab::ExperimentConfig cfg;
    const Overrides* o = nullptr;
    if (*run_cmd) {
        try {
            cfg = bistab::load_config(run_file);
        } catch (const bistab::ConfigError& e) {
            return config_failure(e);
        }
        o = &run_opts;
    } else {
        cfg.mode = bistab::Mode::preset;
        cfg.preset = preset_name;
        cfg.out_dir = "bistab_out/" + preset_name;
        cfg.svg_timestamp = false;
        o = &preset_opts;
    }
    apply(cfg, *o);
    return bistab::run_guarded(cfg, o->quiet ? nullptr : &std::cout, std::cerr);
}

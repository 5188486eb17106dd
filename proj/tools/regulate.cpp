// regulate: run adaptive set-point regulation experiments on the benchmark plants.
//
//   regulate run --config <path> --out <dir> [--seed <int>]
//   regulate verify --config <path> --out <dir>
//   regulate check-excitation --config <path>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "adreg/experiment.hpp"

namespace {

std::optional<adreg::ExperimentConfig> load_or_report(const std::string& path) {
    try {
        return adreg::load_config(path);
    } catch (const adreg::ConfigError& e) {
        std::cerr << "regulate: " << e.what() << '\n';
        return std::nullopt;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive set-point regulation of discrete-time nonlinear plants"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run the configured regulator and write logs");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (defaults to the config's output_dir)");
    run->add_option("--seed", seed, "Override the config seed");

    auto* verify = app.add_subcommand("verify", "Replay logged inputs and compare states");
    verify->add_option("--config", config_path, "Experiment config (JSON)")->required();
    verify->add_option("--out", out_dir, "Directory holding trajectory.csv")->required();

    auto* check = app.add_subcommand("check-excitation",
                                     "Rank and identifiability report for the excitation signal");
    check->add_option("--config", config_path, "Experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    auto config = load_or_report(config_path);
    if (!config) return adreg::exit_code::kInfeasible;
    if (seed) config->seed = *seed;

    try {
        if (*run) {
            const std::filesystem::path dir = out_dir.empty() ? config->output_dir : out_dir;
            const int code = adreg::run_experiment(*config, dir);
            std::ifstream summary(dir / "summary.jsonl");
            std::cout << summary.rdbuf();
            return code;
        }
        if (*verify) {
            const bool ok = adreg::replay_verify(std::filesystem::path(out_dir) / "trajectory.csv", *config);
            std::cout << (ok ? "replay: match\n" : "replay: MISMATCH\n");
            return ok ? adreg::exit_code::kTerminated : adreg::exit_code::kFailed;
        }
        return adreg::check_excitation(*config, std::cout);
    } catch (const adreg::ReplayError& e) {
        std::cerr << "regulate: " << e.what() << '\n';
        return adreg::exit_code::kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "regulate: " << e.what() << '\n';
        return adreg::exit_code::kInfeasible;
    }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adreg/models.hpp"
#include "adreg/regulator.hpp"

namespace adreg {

enum class Algorithm { Exact, Inexact };

/// One regulation run. Field names mirror the JSON keys of the config file;
/// see README.md for the schema and defaults.
struct ExperimentConfig {
    std::string model;
    Vector theta_true;
    Vector x0;
    Algorithm algorithm = Algorithm::Exact;

    double beta = 0.5;
    double mu0 = 1.0;
    double kappa0 = 1.0;
    double eps_fin = 1e-3;
    double tol_exact = 1e-10;

    SynthesisBounds bounds;
    std::optional<InputSequence> excitation;
    std::uint64_t seed = 0;
    int max_blocks = 50;
    int max_inner_retries = 60;
    std::string output_dir = "out";

    int estimator_max_iters = 100;
    int estimator_multistart_grid = 3;
    int synthesis_max_iters = 100;
    int synthesis_multistart_count = 4;
    int inclusion_probe_count = 8;
    double inclusion_safety = 1.5;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// All validation failures of one config, each prefixed by its field path.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(std::vector<std::string> issues);
    [[nodiscard]] const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The excitation actually used: the override, or the model's default.
InputSequence effective_excitation(const ExperimentConfig& config, const BenchmarkSpec& spec);

/// Process exit codes of `regulate`.
namespace exit_code {
inline constexpr int kTerminated = 0;
inline constexpr int kFailed = 1;
inline constexpr int kCapExceeded = 2;
inline constexpr int kInfeasible = 3;
}  // namespace exit_code

/// Runs the configured regulator and writes trajectory.csv, blocks.csv and
/// summary.jsonl into `out_dir`. Logs are written for failed runs too.
int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Runs the configured regulator without touching the filesystem.
RunOutcome run_configured(const ExperimentConfig& config);

/// Writes the two CSV logs for `outcome`.
void write_trajectory_csv(std::ostream& os, const RunOutcome& outcome, const PlantModel& model);
void write_blocks_csv(std::ostream& os, const RunOutcome& outcome, const PlantModel& model);

class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Re-simulates the logged inputs on the true plant from the config's x0;
/// true iff every logged state matches within 1e-12 (relative to max(1, |x|)).
/// Throws ReplayError for missing or malformed logs.
bool replay_verify(const std::filesystem::path& trajectory_path, const ExperimentConfig& config);

/// Prints an excitation/identifiability report as JSON. Returns 0 when the
/// excitation passes the rank check everywhere sampled, 3 otherwise.
int check_excitation(const ExperimentConfig& config, std::ostream& os);

/// "%.17g" formatting used for every real in the logs.
std::string format_real(double v);

}  // namespace adreg

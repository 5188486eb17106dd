#include "adreg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adreg {

using nlohmann::json;

ValidationError::ValidationError(std::vector<std::string> issues)
    : ConfigError([&] {
          std::string msg = "invalid config:";
          for (const auto& i : issues) msg += "\n  " + i;
          return msg;
      }()),
      issues_(std::move(issues)) {}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

const std::set<std::string> kTopLevelKeys = {
    "model",     "theta_true", "x0",         "algorithm",  "beta",
    "mu0",       "kappa0",     "eps_fin",    "tol_exact",  "bounds",
    "excitation", "seed",      "max_blocks", "max_inner_retries",
    "output_dir", "estimator", "synthesis",  "inclusion"};

class Reader {
public:
    explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

    void number(const json& obj, const std::string& key, const std::string& path, double& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            issues_.push_back(path + ": expected a number");
            return;
        }
        out = v.get<double>();
    }

    template <typename Int>
    void integer(const json& obj, const std::string& key, const std::string& path, Int& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            issues_.push_back(path + ": expected an integer");
            return;
        }
        out = v.get<Int>();
    }

    bool vector(const json& obj, const std::string& key, const std::string& path, Vector& out,
                bool required) {
        if (!obj.contains(key)) {
            if (required) issues_.push_back(path + ": required field missing");
            return false;
        }
        const json& v = obj.at(key);
        if (v.is_number()) {
            out = Vector::Constant(1, v.get<double>());
            return true;
        }
        if (!v.is_array() || v.empty()) {
            issues_.push_back(path + ": expected a nonempty array of numbers");
            return false;
        }
        out.resize(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                issues_.push_back(path + "[" + std::to_string(i) + "]: expected a number");
                return false;
            }
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        }
        return true;
    }

    const json* object(const json& obj, const std::string& key, const std::set<std::string>& keys) {
        if (!obj.contains(key)) return nullptr;
        const json& v = obj.at(key);
        if (!v.is_object()) {
            issues_.push_back(key + ": expected an object");
            return nullptr;
        }
        for (const auto& [k, _] : v.items()) {
            if (!keys.count(k)) issues_.push_back(key + "." + k + ": unknown field");
        }
        return &v;
    }

private:
    std::vector<std::string>& issues_;
};

std::string describe_box(const ParamBox& box) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        os << (i ? " x " : "") << "[" << box.lo[i] << ", " << box.hi[i] << "]";
    }
    return os.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("config root must be a JSON object");

    std::vector<std::string> issues;
    Reader rd(issues);
    ExperimentConfig cfg;

    for (const auto& [k, _] : root.items()) {
        if (!kTopLevelKeys.count(k)) issues.push_back(k + ": unknown field");
    }

    std::optional<BenchmarkSpec> spec;
    if (!root.contains("model")) {
        issues.push_back("model: required field missing");
    } else if (!root["model"].is_string()) {
        issues.push_back("model: expected a string");
    } else {
        cfg.model = root["model"].get<std::string>();
        try {
            spec = get_model(cfg.model);
        } catch (const UnknownModel&) {
            std::string known;
            for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
            issues.push_back("model: unknown model '" + cfg.model + "' (known: " + known + ")");
        }
    }

    if (!root.contains("algorithm")) {
        issues.push_back("algorithm: required field missing");
    } else if (root["algorithm"] == "exact") {
        cfg.algorithm = Algorithm::Exact;
    } else if (root["algorithm"] == "inexact") {
        cfg.algorithm = Algorithm::Inexact;
    } else {
        issues.push_back("algorithm: must be \"exact\" or \"inexact\"");
    }

    const bool have_theta = rd.vector(root, "theta_true", "theta_true", cfg.theta_true, true);
    const bool have_x0 = rd.vector(root, "x0", "x0", cfg.x0, true);

    rd.number(root, "beta", "beta", cfg.beta);
    rd.number(root, "mu0", "mu0", cfg.mu0);
    rd.number(root, "kappa0", "kappa0", cfg.kappa0);
    rd.number(root, "eps_fin", "eps_fin", cfg.eps_fin);
    rd.number(root, "tol_exact", "tol_exact", cfg.tol_exact);
    rd.integer(root, "seed", "seed", cfg.seed);
    rd.integer(root, "max_blocks", "max_blocks", cfg.max_blocks);
    rd.integer(root, "max_inner_retries", "max_inner_retries", cfg.max_inner_retries);
    if (root.contains("output_dir")) {
        if (root["output_dir"].is_string()) {
            cfg.output_dir = root["output_dir"].get<std::string>();
        } else {
            issues.push_back("output_dir: expected a string");
        }
    }

    if (spec) cfg.bounds = spec->default_bounds;
    if (const json* b = rd.object(root, "bounds", {"n_max", "rho_max"})) {
        rd.integer(*b, "n_max", "bounds.n_max", cfg.bounds.n_max);
        rd.number(*b, "rho_max", "bounds.rho_max", cfg.bounds.rho_max);
    }
    if (const json* e = rd.object(root, "estimator", {"max_iters", "multistart_grid"})) {
        rd.integer(*e, "max_iters", "estimator.max_iters", cfg.estimator_max_iters);
        rd.integer(*e, "multistart_grid", "estimator.multistart_grid", cfg.estimator_multistart_grid);
    }
    if (const json* s = rd.object(root, "synthesis", {"max_iters", "multistart_count"})) {
        rd.integer(*s, "max_iters", "synthesis.max_iters", cfg.synthesis_max_iters);
        rd.integer(*s, "multistart_count", "synthesis.multistart_count",
                   cfg.synthesis_multistart_count);
    }
    if (const json* i = rd.object(root, "inclusion", {"probe_count", "safety"})) {
        rd.integer(*i, "probe_count", "inclusion.probe_count", cfg.inclusion_probe_count);
        rd.number(*i, "safety", "inclusion.safety", cfg.inclusion_safety);
    }

    if (root.contains("excitation")) {
        const json& ex = root["excitation"];
        if (!ex.is_array() || ex.empty()) {
            issues.push_back("excitation: expected a nonempty array of input vectors");
        } else {
            InputSequence seq;
            for (std::size_t t = 0; t < ex.size(); ++t) {
                Vector u;
                json wrapper = {{"u", ex[t]}};
                if (!rd.vector(wrapper, "u", "excitation[" + std::to_string(t) + "]", u, true)) break;
                if (spec && u.size() != spec->model.input_dim) {
                    issues.push_back("excitation[" + std::to_string(t) + "]: expected " +
                                     std::to_string(spec->model.input_dim) + " components");
                }
                seq.values.push_back(std::move(u));
            }
            cfg.excitation = std::move(seq);
        }
    }

    if (spec) {
        const PlantModel& m = spec->model;
        if (have_theta) {
            if (cfg.theta_true.size() != m.param_dim) {
                issues.push_back("theta_true: expected " + std::to_string(m.param_dim) + " components");
            } else if (!m.param_box.contains(cfg.theta_true)) {
                issues.push_back("theta_true: outside the parameter box " + describe_box(m.param_box) +
                                 " of " + cfg.model);
            }
        }
        if (have_x0 && cfg.x0.size() != m.state_dim) {
            issues.push_back("x0: expected " + std::to_string(m.state_dim) + " components");
        }
    }

    if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) issues.push_back("beta: must satisfy 0<β<1");
    if (!(cfg.mu0 > 0.0)) issues.push_back("mu0: must be positive");
    if (!(cfg.kappa0 > 0.0)) issues.push_back("kappa0: must be positive");
    if (!(cfg.eps_fin > 0.0)) issues.push_back("eps_fin: must be positive");
    if (!(cfg.tol_exact > 0.0)) issues.push_back("tol_exact: must be positive");
    if (cfg.bounds.n_max < 1) issues.push_back("bounds.n_max: must be >= 1");
    if (!(cfg.bounds.rho_max > 0.0)) issues.push_back("bounds.rho_max: must be positive");
    if (cfg.max_blocks < 0) issues.push_back("max_blocks: must be >= 0");
    if (cfg.max_inner_retries < 0) issues.push_back("max_inner_retries: must be >= 0");
    if (cfg.estimator_max_iters < 0) issues.push_back("estimator.max_iters: must be >= 0");
    if (cfg.estimator_multistart_grid < 0) issues.push_back("estimator.multistart_grid: must be >= 0");
    if (cfg.synthesis_max_iters < 0) issues.push_back("synthesis.max_iters: must be >= 0");
    if (cfg.synthesis_multistart_count < 1) issues.push_back("synthesis.multistart_count: must be >= 1");
    if (cfg.inclusion_probe_count < 0) issues.push_back("inclusion.probe_count: must be >= 0");
    if (!(cfg.inclusion_safety > 0.0)) issues.push_back("inclusion.safety: must be positive");

    if (!issues.empty()) throw ValidationError(std::move(issues));
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

InputSequence effective_excitation(const ExperimentConfig& config, const BenchmarkSpec& spec) {
    return config.excitation ? *config.excitation : spec.default_excitation;
}

RunOutcome run_configured(const ExperimentConfig& config) {
    const BenchmarkSpec spec = get_model(config.model);
    const InputSequence u_exc = effective_excitation(config, spec);
    const BoundsFn bounds = constant_bounds(config.bounds);

    if (config.algorithm == Algorithm::Exact) {
        ExactRunOptions opt;
        opt.tol_exact = config.tol_exact;
        opt.max_blocks = config.max_blocks;
        opt.estimator.max_iters = config.estimator_max_iters;
        opt.estimator.multistart_grid = config.estimator_multistart_grid;
        opt.synthesis.max_iters = config.synthesis_max_iters;
        opt.synthesis.multistart_count = config.synthesis_multistart_count;
        opt.synthesis.seed = config.seed;
        return run_exact(spec.model, config.theta_true, config.x0, u_exc, bounds, opt);
    }

    InexactRunOptions opt;
    opt.max_blocks = config.max_blocks;
    opt.max_inner_retries = config.max_inner_retries;
    opt.estimator.max_iters = config.estimator_max_iters;
    opt.estimator.multistart_grid = config.estimator_multistart_grid;
    opt.synthesis.max_iters = config.synthesis_max_iters;
    opt.synthesis.multistart_count = config.synthesis_multistart_count;
    opt.synthesis.seed = config.seed;
    opt.inclusion.probe_count = config.inclusion_probe_count;
    opt.inclusion.safety = config.inclusion_safety;
    opt.inclusion.seed = config.seed;
    const RegulatorSchedule schedule{config.beta, config.mu0, config.kappa0, config.eps_fin};
    return run_inexact(spec.model, config.theta_true, config.x0, u_exc, schedule, bounds, opt);
}

void write_trajectory_csv(std::ostream& os, const RunOutcome& outcome, const PlantModel& model) {
    os << "t";
    for (Eigen::Index i = 1; i <= model.state_dim; ++i) os << ",x_" << i;
    for (Eigen::Index i = 1; i <= model.input_dim; ++i) os << ",u_" << i;
    os << ",block_index\n";

    // Block 0 is the excitation phase.
    std::vector<int> owner(outcome.inputs.size(), 0);
    for (const auto& b : outcome.blocks) {
        for (long t = b.t_start; t < b.t_start + b.horizon; ++t) {
            owner[static_cast<std::size_t>(t)] = b.k;
        }
    }
    for (std::size_t t = 0; t < outcome.trajectory.size(); ++t) {
        os << t;
        for (Eigen::Index i = 0; i < model.state_dim; ++i) {
            os << ',' << format_real(outcome.trajectory[t][i]);
        }
        const bool has_input = t < outcome.inputs.size();
        for (Eigen::Index i = 0; i < model.input_dim; ++i) {
            os << ',';
            if (has_input) os << format_real(outcome.inputs[t][i]);
        }
        os << ',';
        if (has_input) os << owner[t];
        os << '\n';
    }
}

void write_blocks_csv(std::ostream& os, const RunOutcome& outcome, const PlantModel& model) {
    os << "k,T_k";
    for (Eigen::Index i = 1; i <= model.param_dim; ++i) os << ",theta_" << i;
    os << ",mu_k,kappa_k,N_k,estimate_residual,inclusion_retries\n";
    for (const auto& b : outcome.blocks) {
        os << b.k << ',' << b.t_start;
        for (Eigen::Index i = 0; i < b.theta.size(); ++i) os << ',' << format_real(b.theta[i]);
        os << ',' << (b.mu ? format_real(*b.mu) : "");
        os << ',' << (b.kappa ? format_real(*b.kappa) : "");
        os << ',' << b.horizon << ',' << format_real(b.estimate_residual) << ','
           << b.inclusion_retries << '\n';
    }
}

namespace {

int exit_code_for(RunStatus status) {
    if (status == RunStatus::Terminated) return exit_code::kTerminated;
    if (is_cap_exceeded(status)) return exit_code::kCapExceeded;
    return exit_code::kInfeasible;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

std::string summary_line(const ExperimentConfig& config, const RunOutcome* outcome,
                         const std::string& status, const std::string& message, double wall_time) {
    std::ostringstream os;
    os << "{\"model\":" << json(config.model).dump() << ",\"algorithm\":\""
       << (config.algorithm == Algorithm::Exact ? "exact" : "inexact") << "\""
       << ",\"seed\":" << config.seed << ",\"status\":\"" << status << "\""
       << ",\"terminated\":" << (outcome && outcome->terminated() ? "true" : "false")
       << ",\"blocks\":" << (outcome ? outcome->blocks.size() : 0)
       << ",\"final_error\":" << (outcome ? format_real(outcome->final_error) : "null")
       << ",\"wall_time\":" << format_real(wall_time)
       << ",\"message\":" << json(message).dump() << ",\"warnings\":"
       << json(outcome ? outcome->warnings : std::vector<std::string>{}).dump() << "}\n";
    return os.str();
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    RunOutcome outcome;
    try {
        outcome = run_configured(config);
    } catch (const std::exception& e) {
        write_file(out_dir / "trajectory.csv", "");
        write_file(out_dir / "blocks.csv", "");
        write_file(out_dir / "summary.jsonl",
                   summary_line(config, nullptr, "error", e.what(), elapsed()));
        return exit_code::kInfeasible;
    }

    const PlantModel model = get_model(config.model).model;
    std::ostringstream traj;
    write_trajectory_csv(traj, outcome, model);
    std::ostringstream blocks;
    write_blocks_csv(blocks, outcome, model);
    write_file(out_dir / "trajectory.csv", traj.str());
    write_file(out_dir / "blocks.csv", blocks.str());
    write_file(out_dir / "summary.jsonl",
               summary_line(config, &outcome, to_string(outcome.status), outcome.message, elapsed()));
    return exit_code_for(outcome.status);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_real(const std::string& s, std::size_t row) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) {
        throw ReplayError("trajectory row " + std::to_string(row) + ": malformed number '" + s + "'");
    }
    return v;
}

}  // namespace

bool replay_verify(const std::filesystem::path& trajectory_path, const ExperimentConfig& config) {
    std::ifstream in(trajectory_path);
    if (!in) throw ReplayError("cannot open '" + trajectory_path.string() + "'");
    const PlantModel model = get_model(config.model).model;
    const auto n = static_cast<std::size_t>(model.state_dim);
    const auto nu = static_cast<std::size_t>(model.input_dim);
    const std::size_t width = 2 + n + nu;

    std::string line;
    if (!std::getline(in, line)) throw ReplayError("trajectory log is empty");
    if (split_csv(line).size() != width) throw ReplayError("trajectory header has wrong width");

    std::vector<Vector> states;
    std::vector<Vector> inputs;
    bool saw_final = false;
    for (std::size_t row = 0; std::getline(in, line); ++row) {
        if (saw_final) throw ReplayError("trajectory has rows after the final state");
        const auto cells = split_csv(line);
        if (cells.size() != width) {
            throw ReplayError("trajectory row " + std::to_string(row) + " has wrong width");
        }
        if (cells[0] != std::to_string(row)) {
            throw ReplayError("trajectory row " + std::to_string(row) + " has a non-consecutive t");
        }
        Vector x(model.state_dim);
        for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = parse_real(cells[1 + i], row);
        states.push_back(std::move(x));
        if (cells[1 + n].empty()) {
            saw_final = true;
            continue;
        }
        Vector u(model.input_dim);
        for (std::size_t i = 0; i < nu; ++i) {
            u[static_cast<Eigen::Index>(i)] = parse_real(cells[1 + n + i], row);
        }
        inputs.push_back(std::move(u));
    }
    if (states.empty() || !saw_final) throw ReplayError("trajectory log is truncated");

    auto close = [](const Vector& a, const Vector& b) {
        return ((a - b).array().abs() <= 1e-12 * b.array().abs().max(1.0)).all();
    };
    if (!close(states.front(), config.x0)) return false;
    InputSequence seq;
    seq.values = std::move(inputs);
    const StateSequence replayed = simulate(model, config.x0, seq, config.theta_true);
    for (std::size_t t = 0; t < states.size(); ++t) {
        if (!close(states[t], replayed[t])) return false;
    }
    return true;
}

int check_excitation(const ExperimentConfig& config, std::ostream& os) {
    const BenchmarkSpec spec = get_model(config.model);
    const PlantModel& model = spec.model;
    const InputSequence u_exc = effective_excitation(config, spec);

    std::vector<ExcitationSample> samples{{config.x0, config.theta_true}};
    for (const Vector& theta : box_grid(model.param_box, 3)) samples.push_back({config.x0, theta});
    const ExcitationReport rank = excitation_rank_check(model, u_exc, samples);
    const IdentifiabilityReport margin = identifiability_margin(model, config.x0, u_exc, 5);

    ObservationHistory history;
    history.x0 = config.x0;
    const StateSequence traj = simulate(model, config.x0, u_exc, config.theta_true);
    for (std::size_t t = 0; t < u_exc.size(); ++t) history.record(u_exc[t], traj[t + 1]);
    const std::optional<Vector> recovered = oracle_parameter(spec, history);

    auto to_json = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json report = json::object();
    report["model"] = config.model;
    report["excitation_length"] = u_exc.size();
    report["rank_check"] = {
        {"pass", rank.pass},
        {"min_singular_value", rank.min_singular_value},
        {"samples", samples.size()},
        {"ranks", rank.ranks},
        {"worst_sample",
         {{"x0", to_json(samples[rank.worst_sample].x0)},
          {"theta", to_json(samples[rank.worst_sample].theta)}}}};
    report["identifiability"] = {{"c_g1_hat", margin.c_g1_hat},
                                 {"eps_g1_hat", margin.eps_g1_hat},
                                 {"samples_used", margin.samples_used}};
    if (recovered) {
        report["oracle_parameter"] = to_json(*recovered);
    } else {
        report["oracle_parameter"] = "unidentifiable";
    }
    report["pass"] = rank.pass;
    os << report.dump(2) << '\n';
    return rank.pass ? exit_code::kTerminated : exit_code::kInfeasible;
}

}  // namespace adreg

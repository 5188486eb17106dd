#include "adreg/regulator.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace adreg {

void RegulatorSchedule::validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw ContractViolation("schedule: require 0<beta<1");
    if (!(mu > 0.0)) throw ContractViolation("schedule: mu must be positive");
    if (!(kappa > 0.0)) throw ContractViolation("schedule: kappa must be positive");
    if (!(eps_fin > 0.0)) throw ContractViolation("schedule: eps_fin must be positive");
}

std::pair<double, double> schedule_step(double mu_prev, double kappa_prev, double beta) {
    if (!(mu_prev > 0.0) || !(kappa_prev > 0.0) || !(beta > 0.0 && beta < 1.0)) {
        throw ContractViolation("schedule_step: require mu, kappa > 0 and 0<beta<1");
    }
    return {beta * mu_prev, kappa_prev / beta};
}

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Terminated: return "terminated";
        case RunStatus::MaxBlocksExceeded: return "max_blocks_exceeded";
        case RunStatus::MaxInnerRetriesExceeded: return "max_inner_retries_exceeded";
        case RunStatus::EstimatorNotConverged: return "estimator_not_converged";
        case RunStatus::SynthesisInfeasible: return "synthesis_infeasible";
    }
    return "unknown";
}

bool inclusion_check(const PlantModel& model, const ObservationHistory& history,
                     const Vector& theta_k, const ControlPlan& plan, double radius, double bound,
                     const InclusionOptions& options) {
    if (!(radius >= 0.0)) throw ContractViolation("inclusion_check: radius must be nonnegative");
    if (!(bound > 0.0)) throw ContractViolation("inclusion_check: bound must be positive");
    if (options.probe_count < 0) throw ContractViolation("inclusion_check: negative probe count");
    if (radius == 0.0) return true;

    const InputSequence& hist = history.applied_inputs;
    const Vector nominal = terminal_map(model, history.x0, hist, plan.block, theta_k);
    auto sensitivity = [&](const Vector& theta) {
        const Matrix jac =
            jacobian_terminal_theta(model, history.x0, hist, plan.block, theta, options.fd_step);
        return singular_values(jac)[0];
    };

    double lipschitz = sensitivity(theta_k);
    bool probes_inside = true;

    std::seed_seq seeds{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32)};
    std::mt19937_64 rng(seeds);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto dim = static_cast<double>(model.param_dim);
    for (int i = 0; i < options.probe_count; ++i) {
        Vector dir(model.param_dim);
        for (Eigen::Index j = 0; j < dir.size(); ++j) dir[j] = normal(rng);
        const double len = dir.norm();
        if (len == 0.0) continue;
        const double rad = radius * std::pow(uniform(rng), 1.0 / dim);
        // Projection onto the box cannot move the point away from theta_k, which is in the box.
        const Vector probe = model.param_box.project(theta_k + (rad / len) * dir);
        lipschitz = std::max(lipschitz, sensitivity(probe));
        const Vector image = terminal_map(model, history.x0, hist, plan.block, probe);
        if (!((image - nominal).norm() < bound)) probes_inside = false;
    }
    return probes_inside && lipschitz * radius * options.safety <= bound;
}

namespace {

struct RunContext {
    const PlantModel& model;
    const Vector& theta_true;
    ObservationHistory history;
    RunOutcome outcome;
};

RunContext start_run(const PlantModel& model, const Vector& theta_true, const Vector& x0,
                     const InputSequence& u_exc, double rank_tol) {
    model.validate();
    if (theta_true.size() != model.param_dim) {
        throw ContractViolation("run: true parameter has wrong dimension");
    }
    if (x0.size() != model.state_dim) throw ContractViolation("run: x0 has wrong dimension");
    if (u_exc.empty()) throw ContractViolation("run: excitation signal must be nonempty");

    RunContext ctx{model, theta_true, {}, {}};
    const ExcitationReport exc =
        excitation_rank_check(model, u_exc, {{x0, theta_true}}, rank_tol);
    if (!exc.pass) {
        std::ostringstream msg;
        msg << "excitation rank " << exc.ranks.front() << " < " << model.param_dim
            << " at (x0, theta_true); identification may be ambiguous";
        ctx.outcome.warnings.push_back(msg.str());
    }

    ctx.history.x0 = x0;
    ctx.outcome.trajectory.values.push_back(x0);
    for (const auto& u : u_exc.values) {
        Vector next = step(model, ctx.outcome.trajectory.back(), u, theta_true);
        ctx.history.record(u, next);
        ctx.outcome.inputs.values.push_back(u);
        ctx.outcome.trajectory.values.push_back(std::move(next));
    }
    ctx.outcome.excitation_length = static_cast<long>(u_exc.size());
    return ctx;
}

void apply_block(RunContext& ctx, const InputSequence& block) {
    for (const auto& u : block.values) {
        Vector next = step(ctx.model, ctx.outcome.trajectory.back(), u, ctx.theta_true);
        ctx.history.record(u, next);
        ctx.outcome.inputs.values.push_back(u);
        ctx.outcome.trajectory.values.push_back(std::move(next));
    }
}

double distance_to_target(const RunContext& ctx) {
    return (ctx.outcome.trajectory.back() - ctx.model.target).norm();
}

RunOutcome finish(RunContext& ctx, RunStatus status, std::string message = {}) {
    ctx.outcome.status = status;
    ctx.outcome.message = std::move(message);
    ctx.outcome.final_error = distance_to_target(ctx);
    return std::move(ctx.outcome);
}

std::string block_context(int k, const std::string& what) {
    std::ostringstream msg;
    msg << "block " << k << ": " << what;
    return msg.str();
}

}  // namespace

RunOutcome run_exact(const PlantModel& model, const Vector& theta_true, const Vector& x0,
                     const InputSequence& u_exc, const BoundsFn& bounds_fn,
                     const ExactRunOptions& options) {
    if (!(options.tol_exact > 0.0)) throw ContractViolation("run_exact: tol_exact must be positive");
    if (options.max_blocks < 0) throw ContractViolation("run_exact: max_blocks must be >= 0");
    RunContext ctx = start_run(model, theta_true, x0, u_exc, options.rank_tol);

    EstimatorOptions est_opt = options.estimator;
    est_opt.tol = options.tol_exact;
    SynthesisOptions syn_opt = options.synthesis;
    syn_opt.tol = options.tol_exact;

    Vector theta_prev = model.param_box.center();
    for (int k = 1;; ++k) {
        if (distance_to_target(ctx) <= options.tol_exact) return finish(ctx, RunStatus::Terminated);
        if (static_cast<int>(ctx.outcome.blocks.size()) >= options.max_blocks) {
            return finish(ctx, RunStatus::MaxBlocksExceeded,
                          block_context(k, "block cap reached before the target"));
        }

        BlockRecord rec;
        rec.k = k;
        rec.t_start = static_cast<long>(ctx.history.length());
        try {
            const EstimateResult est = estimate(model, ctx.history, theta_prev, est_opt);
            rec.theta = est.theta;
            rec.estimate_residual = est.residual;
            rec.estimate_start = est.start_index;
        } catch (const NotConverged& e) {
            return finish(ctx, RunStatus::EstimatorNotConverged, block_context(k, e.what()));
        }

        ControlPlan plan;
        try {
            plan = synthesize(model, ctx.history, rec.theta, bounds_fn(ctx.history.current_state()),
                              syn_opt);
        } catch (const Infeasible& e) {
            return finish(ctx, RunStatus::SynthesisInfeasible, block_context(k, e.what()));
        }

        rec.first_segment_residual =
            residual_norm(model, ctx.history.prefix(static_cast<std::size_t>(ctx.outcome.excitation_length)),
                          rec.theta);
        rec.horizon = plan.horizon;
        rec.block = plan.block;
        rec.predicted_terminal_error = plan.predicted_terminal_error;
        apply_block(ctx, plan.block);
        rec.x_end = ctx.outcome.trajectory.back();
        theta_prev = rec.theta;
        ctx.outcome.blocks.push_back(std::move(rec));
    }
}

RunOutcome run_inexact(const PlantModel& model, const Vector& theta_true, const Vector& x0,
                       const InputSequence& u_exc, const RegulatorSchedule& schedule0,
                       const BoundsFn& bounds_fn, const InexactRunOptions& options) {
    schedule0.validate();
    if (options.max_blocks < 0) throw ContractViolation("run_inexact: max_blocks must be >= 0");
    if (options.max_inner_retries < 0) {
        throw ContractViolation("run_inexact: max_inner_retries must be >= 0");
    }
    RunContext ctx = start_run(model, theta_true, x0, u_exc, options.rank_tol);
    const double beta = schedule0.beta;
    const double half_eps = 0.5 * schedule0.eps_fin;

    double mu_prev = schedule0.mu;
    double kappa_prev = schedule0.kappa;
    Vector theta_prev = model.param_box.center();
    for (int k = 1;; ++k) {
        if (distance_to_target(ctx) < schedule0.eps_fin) return finish(ctx, RunStatus::Terminated);
        if (static_cast<int>(ctx.outcome.blocks.size()) >= options.max_blocks) {
            return finish(ctx, RunStatus::MaxBlocksExceeded,
                          block_context(k, "block cap reached before the target"));
        }

        auto [mu, kappa] = schedule_step(mu_prev, kappa_prev, beta);
        const SynthesisBounds bounds = bounds_fn(ctx.history.current_state());

        BlockRecord rec;
        rec.k = k;
        rec.t_start = static_cast<long>(ctx.history.length());
        ControlPlan plan;
        Vector theta_guess = theta_prev;
        for (int retries = 0;; ++retries) {
            if (retries > options.max_inner_retries) {
                std::ostringstream msg;
                msg << "inclusion check still failing after " << options.max_inner_retries
                    << " retries (mu=" << mu << ")";
                return finish(ctx, RunStatus::MaxInnerRetriesExceeded, block_context(k, msg.str()));
            }

            EstimatorOptions est_opt = options.estimator;
            est_opt.tol = mu;
            EstimateResult est;
            try {
                est = estimate(model, ctx.history, theta_guess, est_opt);
            } catch (const NotConverged& e) {
                return finish(ctx, RunStatus::EstimatorNotConverged, block_context(k, e.what()));
            }
            if (!(est.residual < mu)) {
                return finish(ctx, RunStatus::EstimatorNotConverged,
                              block_context(k, "residual not strictly below mu"));
            }
            theta_guess = est.theta;

            SynthesisOptions syn_opt = options.synthesis;
            syn_opt.tol = half_eps;
            try {
                plan = synthesize(model, ctx.history, est.theta, bounds, syn_opt);
            } catch (const Infeasible& e) {
                return finish(ctx, RunStatus::SynthesisInfeasible, block_context(k, e.what()));
            }

            InclusionOptions inc_opt = options.inclusion;
            inc_opt.seed = options.inclusion.seed ^ (static_cast<std::uint64_t>(k) << 32) ^
                           static_cast<std::uint64_t>(retries);
            if (inclusion_check(model, ctx.history, est.theta, plan, kappa * mu, half_eps, inc_opt)) {
                rec.theta = est.theta;
                rec.estimate_residual = est.residual;
                rec.estimate_start = est.start_index;
                rec.inclusion_retries = retries;
                break;
            }
            mu = beta * mu;
        }

        rec.mu = mu;
        rec.kappa = kappa;
        rec.first_segment_residual =
            residual_norm(model, ctx.history.prefix(static_cast<std::size_t>(ctx.outcome.excitation_length)),
                          rec.theta);
        rec.horizon = plan.horizon;
        rec.block = plan.block;
        rec.predicted_terminal_error = plan.predicted_terminal_error;
        apply_block(ctx, plan.block);
        rec.x_end = ctx.outcome.trajectory.back();

        theta_prev = rec.theta;
        mu_prev = mu;
        kappa_prev = kappa;
        ctx.outcome.blocks.push_back(std::move(rec));
    }
}

}  // namespace adreg

#include "adreg/synthesis.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace adreg {

void SynthesisBounds::validate() const {
    if (n_max < 1) throw ContractViolation("SynthesisBounds: n_max must be >= 1");
    if (!(rho_max > 0.0)) throw ContractViolation("SynthesisBounds: rho_max must be positive");
}

BoundsFn constant_bounds(SynthesisBounds bounds) {
    bounds.validate();
    return [bounds](const Vector&) { return bounds; };
}

namespace {

struct BlockSolve {
    Vector z;
    double error = 0.0;
};

// Damped Gauss-Newton on z -> phi(N, x; z, theta) - x*, iterates clipped to [-rho, rho].
BlockSolve solve_block(const PlantModel& model, const Vector& x, const Vector& theta, Vector z,
                       double rho, long start_time, const SynthesisOptions& opt) {
    const Eigen::Index nu = model.input_dim;
    auto terminal_error = [&](const Vector& zz) -> Vector {
        return simulate(model, x, unflatten(zz, nu, start_time), theta).back() - model.target;
    };
    auto clip = [rho](const Vector& zz) -> Vector { return zz.cwiseMax(-rho).cwiseMin(rho); };

    z = clip(z);
    Vector r = terminal_error(z);
    double err = r.norm();
    for (int it = 0; it < opt.max_iters; ++it) {
        if (err == 0.0) break;
        const bool within_tol = err < opt.tol;
        if (within_tol && !opt.polish) break;

        const Matrix jac = jacobian_input(model, x, unflatten(z, nu, start_time), theta, opt.fd_step);
        const Vector delta = -jac.completeOrthogonalDecomposition().solve(r);
        if (!delta.allFinite() || delta.squaredNorm() == 0.0) break;

        bool accepted = false;
        Vector cand;
        Vector cand_r;
        double cand_err = 0.0;
        double alpha = 1.0;
        for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
            cand = clip(z + alpha * delta);
            if (cand == z) break;
            cand_r = terminal_error(cand);
            cand_err = cand_r.norm();
            if (cand_err < err) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const bool slow = cand_err > 0.5 * err;
        z = std::move(cand);
        r = std::move(cand_r);
        err = cand_err;
        if (within_tol && slow) break;
    }
    return {std::move(z), err};
}

}  // namespace

std::optional<ControlPlan> synthesize_at_horizon(const PlantModel& model,
                                                 const ObservationHistory& history,
                                                 const Vector& theta, const SynthesisBounds& bounds,
                                                 int horizon, const SynthesisOptions& options) {
    if (!(options.tol > 0.0)) throw ContractViolation("synthesize: tol must be positive");
    if (horizon < 1) throw ContractViolation("synthesize: horizon must be >= 1");
    if (options.multistart_count < 1) {
        throw ContractViolation("synthesize: multistart_count must be >= 1");
    }
    bounds.validate();
    history.check_consistent(model);
    if (theta.size() != model.param_dim) {
        throw ContractViolation("synthesize: parameter has wrong dimension");
    }

    // phi(T_k + N, 0, x0) = phi(N, T_k, phi(T_k, 0, x0)) evaluated along the same
    // sequence of transition calls, so starting from the predicted x(T_k) is exact.
    const Vector predicted_now =
        simulate(model, history.x0, history.applied_inputs, theta).back();
    const long t_start = static_cast<long>(history.length());
    const Eigen::Index width = model.input_dim * horizon;

    std::seed_seq seeds{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(horizon)};
    std::mt19937_64 rng(seeds);
    std::uniform_real_distribution<double> dist(-bounds.rho_max, bounds.rho_max);

    std::optional<BlockSolve> best;
    int best_index = 0;
    for (int s = 0; s < options.multistart_count; ++s) {
        Vector z0 = Vector::Zero(width);
        if (s > 0) {
            for (Eigen::Index i = 0; i < width; ++i) z0[i] = dist(rng);
        }
        BlockSolve sol = solve_block(model, predicted_now, theta, std::move(z0), bounds.rho_max,
                                     t_start, options);
        if (!(sol.error < options.tol)) continue;
        if (!best || sol.z.norm() < best->z.norm()) {
            best = std::move(sol);
            best_index = s;
        }
    }
    if (!best) return std::nullopt;

    ControlPlan plan;
    plan.horizon = horizon;
    plan.block = unflatten(best->z, model.input_dim, t_start);
    plan.start_index = best_index;
    plan.predicted_terminal_error =
        (terminal_map(model, history.x0, history.applied_inputs, plan.block, theta) - model.target)
            .norm();
    return plan;
}

ControlPlan synthesize(const PlantModel& model, const ObservationHistory& history,
                       const Vector& theta, const SynthesisBounds& bounds,
                       const SynthesisOptions& options) {
    bounds.validate();
    for (int n = 1; n <= bounds.n_max; ++n) {
        if (auto plan = synthesize_at_horizon(model, history, theta, bounds, n, options)) {
            return *std::move(plan);
        }
    }
    std::ostringstream msg;
    msg << "synthesize: no block with horizon <= " << bounds.n_max << " and amplitude <= "
        << bounds.rho_max << " reaches terminal error " << options.tol;
    throw Infeasible(msg.str());
}

Vector verify_plan(const PlantModel& model, const ObservationHistory& history,
                   const Vector& theta, const ControlPlan& plan) {
    return terminal_map(model, history.x0, history.applied_inputs, plan.block, theta);
}

FeasibilityReport feasibility_probe(const PlantModel& model, const Vector& x,
                                    const SynthesisBounds& bounds,
                                    const std::vector<Vector>& theta_samples,
                                    const SynthesisOptions& options) {
    if (theta_samples.empty()) throw ContractViolation("feasibility_probe: no parameter samples");
    ObservationHistory start;
    start.x0 = x;
    FeasibilityReport report;
    for (const Vector& theta : theta_samples) {
        if (!model.param_box.contains(theta)) {
            throw ContractViolation("feasibility_probe: sample outside the parameter box");
        }
        try {
            ControlPlan plan = synthesize(model, start, theta, bounds, options);
            report.worst_case_n = std::max(report.worst_case_n, plan.horizon);
            for (const auto& u : plan.block.values) {
                report.worst_case_input_norm =
                    std::max(report.worst_case_input_norm, u.lpNorm<Eigen::Infinity>());
            }
            report.plans.emplace_back(std::move(plan));
        } catch (const Infeasible&) {
            report.all_reachable = false;
            report.plans.emplace_back(std::nullopt);
        }
    }
    return report;
}

}  // namespace adreg

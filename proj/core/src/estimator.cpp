#include "adreg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace adreg {

const Vector& ObservationHistory::current_state() const {
    return observed_states.empty() ? x0 : observed_states.back();
}

void ObservationHistory::record(const Vector& u, const Vector& x_next) {
    if (applied_inputs.empty()) {
        applied_inputs.start_time = 0;
        observed_states.start_time = 1;
    }
    applied_inputs.values.push_back(u);
    observed_states.values.push_back(x_next);
}

ObservationHistory ObservationHistory::prefix(std::size_t steps) const {
    if (steps > length()) throw ContractViolation("ObservationHistory::prefix: too many steps");
    ObservationHistory out;
    out.x0 = x0;
    out.applied_inputs.start_time = applied_inputs.start_time;
    out.observed_states.start_time = observed_states.start_time;
    const auto n = static_cast<std::ptrdiff_t>(steps);
    out.applied_inputs.values.assign(applied_inputs.values.begin(), applied_inputs.values.begin() + n);
    out.observed_states.values.assign(observed_states.values.begin(),
                                      observed_states.values.begin() + n);
    return out;
}

void ObservationHistory::check_consistent(const PlantModel& model) const {
    if (x0.size() != model.state_dim) {
        throw ContractViolation("ObservationHistory: x0 has wrong dimension");
    }
    if (applied_inputs.size() != observed_states.size()) {
        throw ContractViolation("ObservationHistory: inputs and observed states differ in length");
    }
    for (const auto& u : applied_inputs.values) {
        if (u.size() != model.input_dim) {
            throw ContractViolation("ObservationHistory: input has wrong dimension");
        }
    }
    for (const auto& x : observed_states.values) {
        if (x.size() != model.state_dim) {
            throw ContractViolation("ObservationHistory: state has wrong dimension");
        }
    }
}

Vector residual_vector(const PlantModel& model, const ObservationHistory& history,
                       const Vector& theta) {
    return stacked_map(model, history.x0, history.applied_inputs, theta) -
           history.observed_states.flatten();
}

double residual_norm(const PlantModel& model, const ObservationHistory& history,
                     const Vector& theta) {
    if (history.empty()) throw ContractViolation("residual_norm: empty history");
    history.check_consistent(model);
    return residual_vector(model, history, theta).norm();
}

std::vector<Vector> box_grid(const ParamBox& box, int per_axis) {
    if (per_axis < 1) throw ContractViolation("box_grid: need at least one point per axis");
    const Eigen::Index dim = box.dim();
    std::vector<Vector> points;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
        Vector p(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const int j = idx[static_cast<std::size_t>(i)];
            p[i] = per_axis == 1 ? 0.5 * (box.lo[i] + box.hi[i])
                                 : box.lo[i] + (box.hi[i] - box.lo[i]) * j / (per_axis - 1);
        }
        points.push_back(std::move(p));
        Eigen::Index axis = dim - 1;
        while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == per_axis) {
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return points;
}

namespace {

bool lexicographically_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool better(const EstimateResult& a, const EstimateResult& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    return lexicographically_less(a.theta, b.theta);
}

EstimateResult gauss_newton(const PlantModel& model, const ObservationHistory& history,
                            const Vector& start, const EstimatorOptions& opt) {
    const ParamBox& box = model.param_box;
    EstimateResult out;
    out.theta = box.project(start);
    Vector r = residual_vector(model, history, out.theta);
    out.residual = r.norm();

    while (out.iterations < opt.max_iters) {
        if (out.residual == 0.0) break;
        const bool within_tol = out.residual <= opt.tol;
        if (within_tol && !opt.polish) break;

        const Matrix jac = jacobian_theta(model, history.x0, history.applied_inputs, out.theta,
                                          opt.fd_step);
        const Vector delta = -jac.completeOrthogonalDecomposition().solve(r);
        if (!delta.allFinite() || delta.squaredNorm() == 0.0) break;

        bool accepted = false;
        Vector cand_theta;
        Vector cand_r;
        double cand_res = 0.0;
        double alpha = 1.0;
        for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
            cand_theta = box.project(out.theta + alpha * delta);
            if (cand_theta == out.theta) break;
            cand_r = residual_vector(model, history, cand_theta);
            cand_res = cand_r.norm();
            if (cand_res < out.residual) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const bool slow = cand_res > 0.5 * out.residual;
        out.theta = std::move(cand_theta);
        r = std::move(cand_r);
        out.residual = cand_res;
        ++out.iterations;
        // Polishing stops once a step no longer halves the residual.
        if (within_tol && slow) break;
    }
    out.converged = out.residual <= opt.tol;
    return out;
}

}  // namespace

EstimateResult estimate(const PlantModel& model, const ObservationHistory& history,
                        const Vector& theta_init, const EstimatorOptions& options) {
    if (!(options.tol > 0.0)) throw ContractViolation("estimate: tol must be positive");
    if (options.max_iters < 0) throw ContractViolation("estimate: max_iters must be nonnegative");
    if (theta_init.size() != model.param_dim) {
        throw ContractViolation("estimate: initial parameter has wrong dimension");
    }
    if (!model.param_box.contains(theta_init)) {
        throw ContractViolation("estimate: initial parameter lies outside the parameter box");
    }
    history.check_consistent(model);

    EstimateResult best = gauss_newton(model, history, theta_init, options);
    if (!best.converged && options.multistart_grid > 0) {
        const auto grid = box_grid(model.param_box, options.multistart_grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EstimateResult candidate = gauss_newton(model, history, grid[i], options);
            candidate.start_index = static_cast<int>(i) + 1;
            if (better(candidate, best)) best = std::move(candidate);
        }
    }
    if (!best.converged) {
        std::ostringstream msg;
        msg << "estimate: best residual " << best.residual << " exceeds tolerance " << options.tol;
        throw NotConverged(msg.str(), best);
    }
    return best;
}

IdentifiabilityReport identifiability_margin(const PlantModel& model, const Vector& x0,
                                             const InputSequence& u_exc, int grid,
                                             double fd_step) {
    if (grid < 2) throw ContractViolation("identifiability_margin: grid must be >= 2 per axis");
    IdentifiabilityReport report;
    report.c_g1_hat = std::numeric_limits<double>::infinity();
    for (const Vector& theta : box_grid(model.param_box, grid)) {
        const Vector sv = singular_values(jacobian_theta(model, x0, u_exc, theta, fd_step));
        const double smin = sv.size() < model.param_dim ? 0.0 : sv[model.param_dim - 1];
        if (smin < report.c_g1_hat) {
            report.c_g1_hat = smin;
            report.worst_theta = theta;
        }
        ++report.samples_used;
    }

    report.eps_g1_hat = std::numeric_limits<double>::infinity();
    const Vector width = model.param_box.hi - model.param_box.lo;
    for (Eigen::Index i = 0; i < width.size(); ++i) {
        if (width[i] > 0.0) report.eps_g1_hat = std::min(report.eps_g1_hat, 0.5 * width[i] / (grid - 1));
    }
    return report;
}

}  // namespace adreg

#include "adreg/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace adreg {

ParamBox::ParamBox(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size()) {
        throw ContractViolation("ParamBox: bound vectors differ in length");
    }
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (!(lo[i] <= hi[i])) {
            std::ostringstream msg;
            msg << "ParamBox: lo[" << i << "]=" << lo[i] << " exceeds hi[" << i << "]=" << hi[i];
            throw ContractViolation(msg.str());
        }
    }
}

bool ParamBox::contains(const Vector& theta) const {
    if (theta.size() != lo.size()) return false;
    return ((theta.array() >= lo.array()) && (theta.array() <= hi.array())).all();
}

Vector ParamBox::project(const Vector& theta) const {
    return theta.cwiseMax(lo).cwiseMin(hi);
}

Vector Sequence::flatten() const {
    if (values.empty()) return Vector(0);
    const Eigen::Index width = values.front().size();
    Vector out(width * static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.segment(static_cast<Eigen::Index>(i) * width, width) = values[i];
    }
    return out;
}

void Sequence::append(const Sequence& tail) {
    if (values.empty()) {
        if (tail.empty()) return;
        start_time = tail.start_time;
    }
    values.insert(values.end(), tail.values.begin(), tail.values.end());
}

Sequence unflatten(const Vector& flat, Eigen::Index width, long start_time) {
    if (width <= 0 || flat.size() % width != 0) {
        throw ContractViolation("unflatten: length is not a multiple of the chunk width");
    }
    Sequence out;
    out.start_time = start_time;
    const Eigen::Index count = flat.size() / width;
    out.values.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) out.values.emplace_back(flat.segment(i * width, width));
    return out;
}

InputSequence concat(const InputSequence& a, const InputSequence& b) {
    InputSequence out = a;
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    return out;
}

void PlantModel::validate() const {
    if (state_dim <= 0 || input_dim <= 0 || param_dim <= 0) {
        throw ContractViolation("PlantModel '" + name + "': dimensions must be positive");
    }
    if (!transition) throw ContractViolation("PlantModel '" + name + "': missing transition");
    if (param_box.dim() != param_dim) {
        throw ContractViolation("PlantModel '" + name + "': parameter box has wrong dimension");
    }
    if (target.size() != state_dim) {
        throw ContractViolation("PlantModel '" + name + "': target has wrong dimension");
    }
}

namespace {

void require_dim(const Vector& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        std::ostringstream msg;
        msg << what << ": expected dimension " << n << ", got " << v.size();
        throw ContractViolation(msg.str());
    }
}

void require_inputs(const PlantModel& model, const InputSequence& u, const char* what) {
    for (const auto& ui : u.values) require_dim(ui, model.input_dim, what);
}

// Stencil nodes for coordinate value `v` with optional bounds.
struct Stencil {
    double lo_node;
    double hi_node;
    bool lo_is_center;
    bool hi_is_center;
};

Stencil make_stencil(double v, double fd_step, double lo, double hi) {
    const double h = fd_step * std::max(1.0, std::abs(v));
    const double up = v + h;
    const double down = v - h;
    const bool up_ok = up <= hi;
    const bool down_ok = down >= lo;
    if ((up_ok && down_ok) || (!up_ok && !down_ok)) return {down, up, false, false};
    if (up_ok) return {v, up, true, false};
    return {down, v, false, true};
}

// Column-wise finite differences of `fn` around `point`, stencils clipped to [lo, hi].
template <typename Fn>
Matrix fd_jacobian(Fn&& fn, const Vector& point, const Vector& lo, const Vector& hi,
                   double fd_step) {
    if (!(fd_step > 0.0)) throw ContractViolation("finite-difference step must be positive");
    const Vector center_value = fn(point);
    Matrix jac(center_value.size(), point.size());
    Vector probe = point;
    for (Eigen::Index j = 0; j < point.size(); ++j) {
        const Stencil s = make_stencil(point[j], fd_step, lo[j], hi[j]);
        probe[j] = s.lo_node;
        const Vector f_lo = s.lo_is_center ? center_value : fn(probe);
        probe[j] = s.hi_node;
        const Vector f_hi = s.hi_is_center ? center_value : fn(probe);
        probe[j] = point[j];
        jac.col(j) = (f_hi - f_lo) / (s.hi_node - s.lo_node);
    }
    return jac;
}

}  // namespace

Vector step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& theta) {
    require_dim(x, model.state_dim, "step: state");
    require_dim(u, model.input_dim, "step: input");
    require_dim(theta, model.param_dim, "step: parameter");
    Vector next = model.transition(x, u, theta);
    require_dim(next, model.state_dim, "step: transition output");
    return next;
}

StateSequence simulate(const PlantModel& model, const Vector& x0, const InputSequence& u_seq,
                       const Vector& theta) {
    require_dim(x0, model.state_dim, "simulate: initial state");
    require_dim(theta, model.param_dim, "simulate: parameter");
    require_inputs(model, u_seq, "simulate: input");
    StateSequence out;
    out.start_time = u_seq.start_time;
    out.values.reserve(u_seq.size() + 1);
    out.values.push_back(x0);
    for (const auto& u : u_seq.values) {
        Vector next = model.transition(out.values.back(), u, theta);
        require_dim(next, model.state_dim, "simulate: transition output");
        out.values.push_back(std::move(next));
    }
    return out;
}

Vector stacked_map(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                   const Vector& theta) {
    const StateSequence traj = simulate(model, x0, u_hist, theta);
    const Eigen::Index n = model.state_dim;
    Vector out(n * static_cast<Eigen::Index>(u_hist.size()));
    for (std::size_t t = 1; t < traj.size(); ++t) {
        out.segment(static_cast<Eigen::Index>(t - 1) * n, n) = traj[t];
    }
    return out;
}

Vector terminal_map(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                    const InputSequence& block, const Vector& theta) {
    return simulate(model, x0, concat(u_hist, block), theta).back();
}

Matrix jacobian_theta(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                      const Vector& theta, double fd_step) {
    require_dim(theta, model.param_dim, "jacobian_theta: parameter");
    return fd_jacobian([&](const Vector& p) { return stacked_map(model, x0, u_hist, p); }, theta,
                       model.param_box.lo, model.param_box.hi, fd_step);
}

Matrix jacobian_terminal_theta(const PlantModel& model, const Vector& x0,
                               const InputSequence& u_hist, const InputSequence& block,
                               const Vector& theta, double fd_step) {
    require_dim(theta, model.param_dim, "jacobian_terminal_theta: parameter");
    const InputSequence full = concat(u_hist, block);
    return fd_jacobian([&](const Vector& p) { return simulate(model, x0, full, p).back(); }, theta,
                       model.param_box.lo, model.param_box.hi, fd_step);
}

Matrix jacobian_input(const PlantModel& model, const Vector& x, const InputSequence& block,
                      const Vector& theta, double fd_step) {
    if (block.empty()) throw ContractViolation("jacobian_input: block must be nonempty");
    require_inputs(model, block, "jacobian_input: input");
    const Vector flat = block.flatten();
    const Vector unbounded = Vector::Constant(flat.size(), std::numeric_limits<double>::infinity());
    return fd_jacobian(
        [&](const Vector& z) {
            return simulate(model, x, unflatten(z, model.input_dim, block.start_time), theta).back();
        },
        flat, -unbounded, unbounded, fd_step);
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector(0);
    return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

int numeric_rank(const Matrix& m, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw ContractViolation("numeric_rank: rel_tol must lie in (0, 1)");
    }
    const Vector sv = singular_values(m);
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    const double threshold = rel_tol * sv[0];
    return static_cast<int>((sv.array() > threshold).count());
}

ExcitationReport excitation_rank_check(const PlantModel& model, const InputSequence& u_exc,
                                       const std::vector<ExcitationSample>& samples,
                                       double rel_tol) {
    if (samples.empty()) throw ContractViolation("excitation_rank_check: no samples");
    ExcitationReport report;
    report.pass = true;
    report.min_singular_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Matrix jac = jacobian_theta(model, samples[i].x0, u_exc, samples[i].theta);
        const int rank = numeric_rank(jac, rel_tol);
        report.ranks.push_back(rank);
        const Vector sv = singular_values(jac);
        // A short (n*N < n_theta) Jacobian has fewer singular values than columns.
        const double smin = sv.size() < model.param_dim ? 0.0 : sv[model.param_dim - 1];
        if (smin < report.min_singular_value) {
            report.min_singular_value = smin;
            report.worst_sample = i;
        }
        if (rank != model.param_dim) report.pass = false;
    }
    return report;
}

bool controllability_rank_check(const PlantModel& model, const Vector& x, const Vector& theta,
                                const InputSequence& block, double rel_tol) {
    return numeric_rank(jacobian_input(model, x, block, theta), rel_tol) == model.state_dim;
}

}  // namespace adreg

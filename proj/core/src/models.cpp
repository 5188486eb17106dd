#include "adreg/models.hpp"

#include <cmath>

namespace adreg {

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

InputSequence inputs(std::initializer_list<std::initializer_list<double>> rows) {
    InputSequence seq;
    for (const auto& r : rows) seq.values.push_back(vec(r));
    return seq;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

// x(t+1) = theta * x + u
BenchmarkSpec scalar_linear() {
    BenchmarkSpec spec;
    spec.name = "scalar_linear";
    auto& m = spec.model;
    m.name = spec.name;
    m.state_dim = m.input_dim = m.param_dim = 1;
    m.transition = [](const Vector& x, const Vector& u, const Vector& th) -> Vector {
        return vec({th[0] * x[0] + u[0]});
    };
    m.param_box = ParamBox(vec({0.5}), vec({2.0}));
    m.target = vec({0.0});
    spec.default_x0 = vec({1.0});
    spec.default_excitation = inputs({{0.5}});
    spec.default_bounds = {3, 10.0};

    auto& o = spec.oracle;
    o.minimal_horizon = 1;
    o.partials = [](const Vector& x, const Vector&, const Vector& th) {
        return StepPartials{scalar(th[0]), scalar(1.0), scalar(x[0])};
    };
    o.offset = [](const Vector&, const Vector& u) -> Vector { return u; };
    o.regressor = [](const Vector& x, const Vector&) { return scalar(x[0]); };
    const Vector target = m.target;
    o.deadbeat = [target](const Vector& x, const Vector& th) {
        return inputs({{target[0] - th[0] * x[0]}});
    };
    return spec;
}

// x(t+1) = (x2 + u1, theta1 * x1 + theta2 * x2 + u2)
BenchmarkSpec affine_2d() {
    BenchmarkSpec spec;
    spec.name = "affine_2d";
    auto& m = spec.model;
    m.name = spec.name;
    m.state_dim = m.input_dim = m.param_dim = 2;
    m.transition = [](const Vector& x, const Vector& u, const Vector& th) -> Vector {
        return vec({x[1] + u[0], th[0] * x[0] + th[1] * x[1] + u[1]});
    };
    m.param_box = ParamBox(vec({0.25, 0.25}), vec({1.0, 1.0}));
    m.target = vec({0.0, 0.0});
    spec.default_x0 = vec({1.0, 0.0});
    spec.default_excitation = inputs({{1.0, 0.0}, {0.0, 0.0}});
    spec.default_bounds = {3, 10.0};

    auto& o = spec.oracle;
    o.minimal_horizon = 1;
    o.partials = [](const Vector& x, const Vector&, const Vector& th) {
        StepPartials p;
        p.dx = Matrix{{0.0, 1.0}, {th[0], th[1]}};
        p.du = Matrix::Identity(2, 2);
        p.dtheta = Matrix{{0.0, 0.0}, {x[0], x[1]}};
        return p;
    };
    o.offset = [](const Vector& x, const Vector& u) -> Vector { return vec({x[1] + u[0], u[1]}); };
    o.regressor = [](const Vector& x, const Vector&) { return Matrix{{0.0, 0.0}, {x[0], x[1]}}; };
    const Vector target = m.target;
    o.deadbeat = [target](const Vector& x, const Vector& th) {
        return inputs({{target[0] - x[1], target[1] - th[0] * x[0] - th[1] * x[1]}});
    };
    return spec;
}

// x(t+1) = theta1 * x + (1 + theta2 * x) * u
BenchmarkSpec bilinear_scalar() {
    BenchmarkSpec spec;
    spec.name = "bilinear_scalar";
    auto& m = spec.model;
    m.name = spec.name;
    m.state_dim = m.input_dim = 1;
    m.param_dim = 2;
    m.transition = [](const Vector& x, const Vector& u, const Vector& th) -> Vector {
        return vec({th[0] * x[0] + (1.0 + th[1] * x[0]) * u[0]});
    };
    m.param_box = ParamBox(vec({0.5, 0.0}), vec({1.0, 0.4}));
    m.target = vec({0.0});
    spec.default_x0 = vec({1.0});
    spec.default_excitation = inputs({{1.0}, {0.0}});
    spec.default_bounds = {3, 10.0};

    auto& o = spec.oracle;
    o.minimal_horizon = 1;
    o.partials = [](const Vector& x, const Vector& u, const Vector& th) {
        StepPartials p;
        p.dx = scalar(th[0] + th[1] * u[0]);
        p.du = scalar(1.0 + th[1] * x[0]);
        p.dtheta = Matrix{{x[0], x[0] * u[0]}};
        return p;
    };
    o.offset = [](const Vector&, const Vector& u) -> Vector { return u; };
    o.regressor = [](const Vector& x, const Vector& u) { return Matrix{{x[0], x[0] * u[0]}}; };
    const Vector target = m.target;
    o.deadbeat = [target](const Vector& x, const Vector& th) {
        const double gain = 1.0 + th[1] * x[0];
        if (gain == 0.0) throw SingularInput("bilinear_scalar: 1 + theta2 * x vanishes");
        return inputs({{(target[0] - th[0] * x[0]) / gain}});
    };
    return spec;
}

}  // namespace

std::vector<std::string> model_names() { return {"scalar_linear", "affine_2d", "bilinear_scalar"}; }

BenchmarkSpec get_model(const std::string& name) {
    if (name == "scalar_linear") return scalar_linear();
    if (name == "affine_2d") return affine_2d();
    if (name == "bilinear_scalar") return bilinear_scalar();
    throw UnknownModel("unknown model '" + name + "'");
}

std::pair<int, InputSequence> oracle_deadbeat(const BenchmarkSpec& spec, const Vector& x,
                                              const Vector& theta) {
    InputSequence block = spec.oracle.deadbeat(x, theta);
    return {static_cast<int>(block.size()), std::move(block)};
}

std::optional<Vector> oracle_parameter(const BenchmarkSpec& spec,
                                       const ObservationHistory& history) {
    history.check_consistent(spec.model);
    const Eigen::Index n = spec.model.state_dim;
    const Eigen::Index p = spec.model.param_dim;
    const auto steps = static_cast<Eigen::Index>(history.length());
    Matrix a(n * steps, p);
    Vector b(n * steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const Vector& x = t == 0 ? history.x0 : history.observed_states[i - 1];
        const Vector& u = history.applied_inputs[i];
        a.middleRows(t * n, n) = spec.oracle.regressor(x, u);
        b.segment(t * n, n) = history.observed_states[i] - spec.oracle.offset(x, u);
    }
    if (steps == 0 || numeric_rank(a, 1e-12) < p) return std::nullopt;
    return Vector(a.colPivHouseholderQr().solve(b));
}

Matrix oracle_jacobian_theta(const BenchmarkSpec& spec, const Vector& x0,
                             const InputSequence& u_hist, const Vector& theta) {
    const Eigen::Index n = spec.model.state_dim;
    const auto steps = static_cast<Eigen::Index>(u_hist.size());
    Matrix out(n * steps, spec.model.param_dim);
    Matrix sens = Matrix::Zero(n, spec.model.param_dim);
    Vector x = x0;
    for (Eigen::Index t = 0; t < steps; ++t) {
        const Vector& u = u_hist[static_cast<std::size_t>(t)];
        const StepPartials d = spec.oracle.partials(x, u, theta);
        sens = d.dx * sens + d.dtheta;
        out.middleRows(t * n, n) = sens;
        x = spec.model.transition(x, u, theta);
    }
    return out;
}

Matrix oracle_jacobian_input(const BenchmarkSpec& spec, const Vector& x,
                             const InputSequence& block, const Vector& theta) {
    const Eigen::Index n = spec.model.state_dim;
    const Eigen::Index nu = spec.model.input_dim;
    const auto steps = static_cast<Eigen::Index>(block.size());
    std::vector<StepPartials> partials;
    Vector state = x;
    for (const auto& u : block.values) {
        partials.push_back(spec.oracle.partials(state, u, theta));
        state = spec.model.transition(state, u, theta);
    }
    Matrix out(n, nu * steps);
    Matrix downstream = Matrix::Identity(n, n);
    for (Eigen::Index j = steps - 1; j >= 0; --j) {
        const StepPartials& d = partials[static_cast<std::size_t>(j)];
        out.middleCols(j * nu, nu) = downstream * d.du;
        downstream = downstream * d.dx;
    }
    return out;
}

}  // namespace adreg

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adreg/estimator.hpp"
#include "adreg/plant.hpp"
#include "adreg/synthesis.hpp"

namespace adreg {

class UnknownModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Analytic partial derivatives of one transition at (x, u, theta).
struct StepPartials {
    Matrix dx;
    Matrix du;
    Matrix dtheta;
};

/// Closed-form knowledge about a benchmark plant. All three shipped plants are
/// affine in theta: f(x, u, theta) = offset(x, u) + regressor(x, u) * theta.
struct BenchmarkOracle {
    int minimal_horizon = 1;
    std::function<StepPartials(const Vector& x, const Vector& u, const Vector& theta)> partials;
    std::function<Vector(const Vector& x, const Vector& u)> offset;
    std::function<Matrix(const Vector& x, const Vector& u)> regressor;
    /// Minimal-horizon block reaching the target exactly; throws SingularInput.
    std::function<InputSequence(const Vector& x, const Vector& theta)> deadbeat;
};

struct BenchmarkSpec {
    std::string name;
    PlantModel model;
    Vector default_x0;
    InputSequence default_excitation;
    SynthesisBounds default_bounds;
    BenchmarkOracle oracle;
};

/// Registered names: scalar_linear, affine_2d, bilinear_scalar.
std::vector<std::string> model_names();

/// Throws UnknownModel for unregistered names.
BenchmarkSpec get_model(const std::string& name);

/// Minimal-horizon deadbeat control (N, block) from `x` under `theta`.
std::pair<int, InputSequence> oracle_deadbeat(const BenchmarkSpec& spec, const Vector& x,
                                              const Vector& theta);

/// Recovers theta by solving the transitions' linear regression exactly;
/// nullopt when the regressor stack is rank deficient (unidentifiable data).
std::optional<Vector> oracle_parameter(const BenchmarkSpec& spec,
                                       const ObservationHistory& history);

/// d g_k / d theta by forward sensitivity recursion S_{t+1} = f_x S_t + f_theta.
Matrix oracle_jacobian_theta(const BenchmarkSpec& spec, const Vector& x0,
                             const InputSequence& u_hist, const Vector& theta);

/// d x(N) / d u[0, N-1] by the backward product of state Jacobians.
Matrix oracle_jacobian_input(const BenchmarkSpec& spec, const Vector& x, const InputSequence& block,
                             const Vector& theta);

}  // namespace adreg

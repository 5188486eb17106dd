#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "adreg/estimator.hpp"
#include "adreg/plant.hpp"

namespace adreg {

/// Horizon cap and per-coordinate input amplitude cap for one control block.
struct SynthesisBounds {
    int n_max = 1;
    double rho_max = 1.0;

    void validate() const;
};

/// State-dependent bounds N_{x}, rho_{x}. Most callers use constant_bounds().
using BoundsFn = std::function<SynthesisBounds(const Vector& x)>;

BoundsFn constant_bounds(SynthesisBounds bounds);

struct ControlPlan {
    int horizon = 0;
    InputSequence block;
    double predicted_terminal_error = 0.0;
    /// Index of the winning start: 0 is the zero block, i >= 1 a seeded random block.
    int start_index = 0;
};

struct SynthesisOptions {
    double tol = 1e-10;
    int max_iters = 100;
    int multistart_count = 4;
    std::uint64_t seed = 0;
    /// Keep iterating after reaching `tol` while the error still shrinks.
    bool polish = false;
    double fd_step = kDefaultFdStep;
};

class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Searches horizons N = 1..bounds.n_max for a block that drives the state
/// predicted under `theta` (re-simulated from x(0) through the recorded
/// history) to the target with terminal error below `tol`.
///
/// For each N a box-constrained damped Gauss-Newton runs from the zero block
/// and from multistart_count - 1 seeded uniform random blocks. The first N
/// with a successful start wins; among its successful starts the block with
/// the smallest 2-norm is returned. Throws Infeasible if no N succeeds.
ControlPlan synthesize(const PlantModel& model, const ObservationHistory& history,
                       const Vector& theta, const SynthesisBounds& bounds,
                       const SynthesisOptions& options);

/// The per-horizon search used by synthesize(); nullopt when no start succeeds.
std::optional<ControlPlan> synthesize_at_horizon(const PlantModel& model,
                                                 const ObservationHistory& history,
                                                 const Vector& theta, const SynthesisBounds& bounds,
                                                 int horizon, const SynthesisOptions& options);

/// Terminal state of the plan re-simulated from x(0) under `theta`.
Vector verify_plan(const PlantModel& model, const ObservationHistory& history,
                   const Vector& theta, const ControlPlan& plan);

struct FeasibilityReport {
    int worst_case_n = 0;
    double worst_case_input_norm = 0.0;
    bool all_reachable = true;
    std::vector<std::optional<ControlPlan>> plans;
};

/// Runs synthesize from `x` (with no history) for each parameter sample and
/// reports the largest horizon and largest input amplitude |u_i| used.
FeasibilityReport feasibility_probe(const PlantModel& model, const Vector& x,
                                    const SynthesisBounds& bounds,
                                    const std::vector<Vector>& theta_samples,
                                    const SynthesisOptions& options);

}  // namespace adreg

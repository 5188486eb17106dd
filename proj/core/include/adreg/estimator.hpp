#pragma once

#include <stdexcept>

#include "adreg/plant.hpp"

namespace adreg {

/// Known initial state, the inputs applied over 0..T_k-1 and the states
/// measured on the true plant over 1..T_k. Grows append-only, one block at a time.
struct ObservationHistory {
    Vector x0;
    InputSequence applied_inputs;
    StateSequence observed_states;

    [[nodiscard]] std::size_t length() const { return applied_inputs.size(); }
    [[nodiscard]] bool empty() const { return applied_inputs.empty(); }

    /// Most recent measured state (x0 while nothing has been applied).
    [[nodiscard]] const Vector& current_state() const;

    /// Records one applied input and the state it produced.
    void record(const Vector& u, const Vector& x_next);

    /// The first `steps` transitions of this history.
    [[nodiscard]] ObservationHistory prefix(std::size_t steps) const;

    void check_consistent(const PlantModel& model) const;
};

struct EstimateResult {
    Vector theta;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Index of the start that produced `theta`: 0 is the caller's initial
    /// guess, i >= 1 is grid point i-1.
    int start_index = 0;
};

struct EstimatorOptions {
    double tol = 1e-10;
    int max_iters = 100;
    int multistart_grid = 3;
    /// Keep iterating after reaching `tol` while the residual still shrinks.
    bool polish = false;
    double fd_step = kDefaultFdStep;
};

/// Thrown when no start reaches the requested tolerance; carries the best attempt.
class NotConverged : public std::runtime_error {
public:
    NotConverged(const std::string& what, EstimateResult best)
        : std::runtime_error(what), best_(std::move(best)) {}
    [[nodiscard]] const EstimateResult& best() const { return best_; }

private:
    EstimateResult best_;
};

/// g_k(theta) - observed, stacked.
Vector residual_vector(const PlantModel& model, const ObservationHistory& history,
                       const Vector& theta);

double residual_norm(const PlantModel& model, const ObservationHistory& history,
                     const Vector& theta);

/// Projected damped Gauss-Newton on the output-matching residual.
///
/// The run from `theta_init` is tried first. If it stalls above `tol`, the
/// solver restarts from every point of a uniform grid over the parameter box
/// (`multistart_grid` points per axis) and keeps the smallest residual, ties
/// going to the lexicographically smallest parameter. Iterates are projected
/// onto the box after every step, so the returned parameter is always admissible.
///
/// Throws NotConverged if the best residual still exceeds `tol`.
EstimateResult estimate(const PlantModel& model, const ObservationHistory& history,
                        const Vector& theta_init, const EstimatorOptions& options);

struct IdentifiabilityReport {
    double c_g1_hat = 0.0;
    double eps_g1_hat = 0.0;
    int samples_used = 0;
    Vector worst_theta;
};

/// Sampled injectivity margin of g_1: the minimum over a box grid of the
/// smallest singular value of d g_1 / d theta. eps_g1_hat is half the
/// smallest grid spacing, a heuristic locality radius.
IdentifiabilityReport identifiability_margin(const PlantModel& model, const Vector& x0,
                                             const InputSequence& u_exc, int grid,
                                             double fd_step = kDefaultFdStep);

/// Uniform grid over the box, `per_axis` points per coordinate (box centre for 1),
/// enumerated with the first coordinate varying slowest.
std::vector<Vector> box_grid(const ParamBox& box, int per_axis);

}  // namespace adreg

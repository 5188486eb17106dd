#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adreg/estimator.hpp"
#include "adreg/plant.hpp"
#include "adreg/synthesis.hpp"

namespace adreg {

/// Tolerance schedule state (beta, mu_k, kappa_k, eps_fin) of the inexact regulator.
struct RegulatorSchedule {
    double beta = 0.5;
    double mu = 1.0;
    double kappa = 1.0;
    double eps_fin = 1e-3;

    void validate() const;
};

/// Returns (beta * mu_prev, kappa_prev / beta).
std::pair<double, double> schedule_step(double mu_prev, double kappa_prev, double beta);

struct InclusionOptions {
    int probe_count = 8;
    double safety = 1.5;
    std::uint64_t seed = 0;
    double fd_step = kDefaultFdStep;
};

/// Conservative test of h_k(B(theta_k, r) ∩ box) ⊂ B(h_k(theta_k), b).
///
/// The spectral norm of d h_k / d theta is evaluated at theta_k and at
/// `probe_count` seeded points of the ball intersected with the parameter box;
/// with L the largest of these, the test passes iff L * r * safety <= b and every
/// probe maps strictly inside B(h_k(theta_k), b). r == 0 always passes.
bool inclusion_check(const PlantModel& model, const ObservationHistory& history,
                     const Vector& theta_k, const ControlPlan& plan, double radius, double bound,
                     const InclusionOptions& options);

struct BlockRecord {
    int k = 0;
    long t_start = 0;
    Vector theta;
    std::optional<double> mu;
    std::optional<double> kappa;
    int horizon = 0;
    InputSequence block;
    Vector x_end;
    double estimate_residual = 0.0;
    /// Residual of the estimate on the excitation segment g_1 only.
    double first_segment_residual = 0.0;
    double predicted_terminal_error = 0.0;
    int inclusion_retries = 0;
    int estimate_start = 0;
};

enum class RunStatus {
    Terminated,
    MaxBlocksExceeded,
    MaxInnerRetriesExceeded,
    EstimatorNotConverged,
    SynthesisInfeasible,
};

const char* to_string(RunStatus status);

/// Cap-type failures (as opposed to solver failures).
inline bool is_cap_exceeded(RunStatus s) {
    return s == RunStatus::MaxBlocksExceeded || s == RunStatus::MaxInnerRetriesExceeded;
}

struct RunOutcome {
    RunStatus status = RunStatus::Terminated;
    std::string message;
    std::vector<BlockRecord> blocks;
    StateSequence trajectory;
    InputSequence inputs;
    /// Excitation length N_0 (= T_1).
    long excitation_length = 0;
    double final_error = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] bool terminated() const { return status == RunStatus::Terminated; }
};

struct ExactRunOptions {
    double tol_exact = 1e-10;
    int max_blocks = 50;
    EstimatorOptions estimator{.tol = 1e-10, .max_iters = 100, .multistart_grid = 3, .polish = true};
    SynthesisOptions synthesis{.tol = 1e-10, .max_iters = 100, .multistart_count = 4, .seed = 0,
                               .polish = true};
    double rank_tol = kDefaultRankTol;
};

/// Regulation with (numerically) exact identification and synthesis.
///
/// Applies `u_exc` to the true plant, then per block: stop if
/// |x(T_k) - x*| <= tol_exact; otherwise estimate theta_k from the whole history
/// (warm-started at theta_{k-1}), synthesize a block driving the theta_k
/// prediction to x*, apply it open-loop to the true plant and record it.
/// Solver tolerances are forced to tol_exact.
RunOutcome run_exact(const PlantModel& model, const Vector& theta_true, const Vector& x0,
                     const InputSequence& u_exc, const BoundsFn& bounds_fn,
                     const ExactRunOptions& options);

struct InexactRunOptions {
    int max_blocks = 50;
    int max_inner_retries = 60;
    EstimatorOptions estimator{.tol = 1.0, .max_iters = 100, .multistart_grid = 3, .polish = false};
    SynthesisOptions synthesis{.tol = 1.0, .max_iters = 100, .multistart_count = 4, .seed = 0,
                               .polish = false};
    InclusionOptions inclusion;
    double rank_tol = kDefaultRankTol;
};

/// Regulation with inexact solves and the mu/kappa tolerance schedule.
///
/// Per block: stop if |x(T_k) - x*| < eps_fin; otherwise advance the schedule,
/// then repeat {estimate to residual < mu; synthesize to predicted error
/// < eps_fin/2 within bounds_fn(x(T_k)); inclusion check with radius kappa_k*mu
/// and bound eps_fin/2}, shrinking mu by beta after each failed inclusion check.
/// The estimator and synthesis tolerances in `options` are overridden per block.
RunOutcome run_inexact(const PlantModel& model, const Vector& theta_true, const Vector& x0,
                       const InputSequence& u_exc, const RegulatorSchedule& schedule0,
                       const BoundsFn& bounds_fn, const InexactRunOptions& options);

}  // namespace adreg

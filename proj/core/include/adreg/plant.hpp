#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adreg/types.hpp"

namespace adreg {

/// Parametric discrete-time plant x(t+1) = f(x(t), u(t), theta) together with
/// its admissible parameter box and the set-point to regulate to.
///
/// `transition` must be a deterministic total map; every routine in this
/// library calls it with vectors of the declared dimensions only.
struct PlantModel {
    using Transition = std::function<Vector(const Vector& x, const Vector& u, const Vector& theta)>;

    std::string name;
    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index param_dim = 0;
    Transition transition;
    ParamBox param_box;
    Vector target;

    /// Throws ContractViolation if dimensions, box or target are inconsistent.
    void validate() const;
};

/// Default finite-difference step; scaled by max(1, |coordinate|).
inline constexpr double kDefaultFdStep = 1e-6;
/// Default relative singular-value threshold for numeric rank decisions.
inline constexpr double kDefaultRankTol = 1e-8;

Vector step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& theta);

/// Iterates `step`; returns x(t0)..x(t0+len(u_seq)) with t0 = u_seq.start_time.
StateSequence simulate(const PlantModel& model, const Vector& x0, const InputSequence& u_seq,
                       const Vector& theta);

/// g_k(theta): simulated states x(1)..x(T_k) under the recorded inputs, stacked.
Vector stacked_map(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                   const Vector& theta);

/// h_k(theta): state at T_k + N_k obtained by re-simulating from x(0) through
/// the recorded history followed by `block`.
Vector terminal_map(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                    const InputSequence& block, const Vector& theta);

/// d g_k / d theta by central differences; coordinates where the symmetric
/// stencil would leave the parameter box fall back to a one-sided stencil.
Matrix jacobian_theta(const PlantModel& model, const Vector& x0, const InputSequence& u_hist,
                      const Vector& theta, double fd_step = kDefaultFdStep);

/// d h_k / d theta, same stencil rules as jacobian_theta.
Matrix jacobian_terminal_theta(const PlantModel& model, const Vector& x0,
                               const InputSequence& u_hist, const InputSequence& block,
                               const Vector& theta, double fd_step = kDefaultFdStep);

/// Sensitivity of the terminal state reached from `x` to the block inputs (n x n_u*N).
Matrix jacobian_input(const PlantModel& model, const Vector& x, const InputSequence& block,
                      const Vector& theta, double fd_step = kDefaultFdStep);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& m);

/// Number of singular values strictly above rel_tol * sigma_max; 0 for the zero matrix.
int numeric_rank(const Matrix& m, double rel_tol = kDefaultRankTol);

/// One (x0, theta) point at which an excitation signal is examined.
struct ExcitationSample {
    Vector x0;
    Vector theta;
};

struct ExcitationReport {
    bool pass = false;
    std::size_t worst_sample = 0;
    double min_singular_value = 0.0;
    std::vector<int> ranks;
};

/// Checks rank d X[1,N] / d theta == n_theta at every sample.
ExcitationReport excitation_rank_check(const PlantModel& model, const InputSequence& u_exc,
                                       const std::vector<ExcitationSample>& samples,
                                       double rel_tol = kDefaultRankTol);

/// True iff rank d phi(N, x; u, theta) / d u == n along `block`.
bool controllability_rank_check(const PlantModel& model, const Vector& x, const Vector& theta,
                                const InputSequence& block, double rel_tol = kDefaultRankTol);

}  // namespace adreg

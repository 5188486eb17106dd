#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace adreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when arguments violate an operation's dimensional or range contract.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Axis-aligned closed box [lo_i, hi_i] used as the admissible parameter set.
struct ParamBox {
    Vector lo;
    Vector hi;

    ParamBox() = default;
    ParamBox(Vector lower, Vector upper);

    [[nodiscard]] Eigen::Index dim() const { return lo.size(); }
    [[nodiscard]] bool contains(const Vector& theta) const;
    [[nodiscard]] Vector project(const Vector& theta) const;
    [[nodiscard]] Vector center() const { return 0.5 * (lo + hi); }
};

/// A time-indexed run of equally sized vectors, x(t0)..x(t1) or u(t0)..u(t1).
struct Sequence {
    long start_time = 0;
    std::vector<Vector> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool empty() const { return values.empty(); }
    [[nodiscard]] const Vector& operator[](std::size_t i) const { return values[i]; }
    [[nodiscard]] const Vector& back() const { return values.back(); }
    [[nodiscard]] long end_time() const { return start_time + static_cast<long>(values.size()) - 1; }

    /// Stacks the entries into one column vector.
    [[nodiscard]] Vector flatten() const;

    /// Appends `tail`, which must start right after this sequence ends.
    void append(const Sequence& tail);
};

using StateSequence = Sequence;
using InputSequence = Sequence;

/// Splits a flat vector into `count` consecutive chunks of `width`.
Sequence unflatten(const Vector& flat, Eigen::Index width, long start_time = 0);

/// Concatenation u_a ++ u_b; `b` is re-timed to follow `a`.
InputSequence concat(const InputSequence& a, const InputSequence& b);

}  // namespace adreg

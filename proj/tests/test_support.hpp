#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "adreg/estimator.hpp"
#include "adreg/models.hpp"
#include "adreg/plant.hpp"

namespace adreg::testing {

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

inline InputSequence seq(std::initializer_list<std::initializer_list<double>> rows,
                         long start_time = 0) {
    InputSequence s;
    s.start_time = start_time;
    for (const auto& r : rows) s.values.push_back(vec(r));
    return s;
}

/// Noise-free observation history generated by the true plant.
inline ObservationHistory observe(const PlantModel& model, const Vector& x0, const InputSequence& u,
                                  const Vector& theta_true) {
    ObservationHistory h;
    h.x0 = x0;
    const StateSequence traj = simulate(model, x0, u, theta_true);
    for (std::size_t t = 0; t < u.size(); ++t) h.record(u[t], traj[t + 1]);
    return h;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    Vector uniform_vec(Eigen::Index n, double lo, double hi) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    Vector in_box(const ParamBox& box) {
        Vector v(box.dim());
        for (Eigen::Index i = 0; i < box.dim(); ++i) v[i] = uniform(box.lo[i], box.hi[i]);
        return v;
    }

    InputSequence inputs(Eigen::Index width, std::size_t length, double amp) {
        InputSequence s;
        for (std::size_t t = 0; t < length; ++t) s.values.push_back(uniform_vec(width, -amp, amp));
        return s;
    }

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// max |a - b| / max(1, max |b|)
inline double rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace adreg::testing

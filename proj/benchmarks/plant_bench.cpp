#include <benchmark/benchmark.h>

#include "adreg/estimator.hpp"
#include "adreg/models.hpp"
#include "adreg/synthesis.hpp"

namespace {

using namespace adreg;

InputSequence ramp(Eigen::Index width, long length) {
    InputSequence u;
    for (long t = 0; t < length; ++t) u.values.push_back(Vector::Constant(width, 0.1 * static_cast<double>(t % 7) - 0.3));
    return u;
}

void BM_Simulate(benchmark::State& state) {
    const BenchmarkSpec spec = get_model("affine_2d");
    const InputSequence u = ramp(2, state.range(0));
    const Vector theta = spec.model.param_box.center();
    for (auto _ : state) benchmark::DoNotOptimize(simulate(spec.model, spec.default_x0, u, theta));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(8)->Arg(64)->Arg(512);

void BM_JacobianTheta(benchmark::State& state) {
    const BenchmarkSpec spec = get_model("bilinear_scalar");
    const InputSequence u = ramp(1, state.range(0));
    const Vector theta = spec.model.param_box.center();
    for (auto _ : state) benchmark::DoNotOptimize(jacobian_theta(spec.model, spec.default_x0, u, theta));
}
BENCHMARK(BM_JacobianTheta)->Arg(2)->Arg(16)->Arg(64);

// Analytic sensitivities for comparison with the finite-difference path above.
void BM_OracleJacobianTheta(benchmark::State& state) {
    const BenchmarkSpec spec = get_model("bilinear_scalar");
    const InputSequence u = ramp(1, state.range(0));
    const Vector theta = spec.model.param_box.center();
    for (auto _ : state) benchmark::DoNotOptimize(oracle_jacobian_theta(spec, spec.default_x0, u, theta));
}
BENCHMARK(BM_OracleJacobianTheta)->Arg(2)->Arg(16)->Arg(64);

void BM_Estimate(benchmark::State& state) {
    const BenchmarkSpec spec = get_model("affine_2d");
    const Vector truth{{0.6, 0.45}};
    ObservationHistory h;
    h.x0 = spec.default_x0;
    const StateSequence traj = simulate(spec.model, h.x0, spec.default_excitation, truth);
    for (std::size_t t = 0; t < spec.default_excitation.size(); ++t) h.record(spec.default_excitation[t], traj[t + 1]);
    for (auto _ : state) benchmark::DoNotOptimize(estimate(spec.model, h, spec.model.param_box.center(), {}));
}
BENCHMARK(BM_Estimate);

void BM_Synthesize(benchmark::State& state) {
    const BenchmarkSpec spec = get_model("scalar_linear");
    ObservationHistory h;
    h.x0 = Vector::Constant(1, 1.0);
    // One step would need |u| = 0.9, so this searches horizons 1 and 2.
    const SynthesisBounds bounds{3, 0.5};
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(spec.model, h, Vector::Constant(1, 0.9), bounds, {}));
}
BENCHMARK(BM_Synthesize);

}  // namespace

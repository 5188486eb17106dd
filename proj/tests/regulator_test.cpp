#include <gtest/gtest.h>

#include "adreg/models.hpp"
#include "adreg/regulator.hpp"
#include "test_support.hpp"

namespace adreg {
namespace {

using testing::Gen;
using testing::observe;
using testing::seq;
using testing::vec;

const BenchmarkSpec kScalarSpec = get_model("scalar_linear");
const BenchmarkSpec kAffineSpec = get_model("affine_2d");
const BenchmarkSpec kBilinearSpec = get_model("bilinear_scalar");

TEST(ScheduleStep, TwoStepExamples) {
    EXPECT_EQ(schedule_step(1.0, 1.0, 0.5), std::make_pair(0.5, 2.0));
    EXPECT_EQ(schedule_step(0.5, 2.0, 0.5), std::make_pair(0.25, 4.0));
    const auto [mu, kappa] = schedule_step(0.5, 2.0, 0.5);
    EXPECT_EQ(mu * kappa, 1.0 * 1.0);
    EXPECT_THROW(schedule_step(1.0, 1.0, 1.0), ContractViolation);
    EXPECT_THROW(schedule_step(0.0, 1.0, 0.5), ContractViolation);
}

ControlPlan one_step_plan(double u) {
    ControlPlan plan;
    plan.horizon = 1;
    plan.block = seq({{u}});
    return plan;
}

TEST(InclusionCheck, ZeroRadiusAlwaysPasses) {
    ObservationHistory h;
    h.x0 = vec({2});
    EXPECT_TRUE(inclusion_check(kScalarSpec.model, h, vec({1.0}), one_step_plan(-2.0), 0.0, 1e-12, {}));
}

TEST(InclusionCheck, AffineSlopeThreshold) {
    // No history, x0 = 2: h(theta) = 2 theta + u, slope s = 2; passes iff 1.5 * 2 * r <= b.
    ObservationHistory h;
    h.x0 = vec({2});
    const ControlPlan plan = one_step_plan(-2.0);
    const double r = 0.1;
    EXPECT_TRUE(inclusion_check(kScalarSpec.model, h, vec({1.0}), plan, r, 0.31, {}));
    EXPECT_FALSE(inclusion_check(kScalarSpec.model, h, vec({1.0}), plan, r, 0.29, {}));
    // Safety factor is the only thing separating these two.
    EXPECT_TRUE(inclusion_check(kScalarSpec.model, h, vec({1.0}), plan, r, 0.29, {.safety = 1.0}));
}

TEST(InclusionCheck, HugeBoundPasses) {
    Gen gen(7);
    for (int i = 0; i < 10; ++i) {
        const ObservationHistory h = observe(kBilinearSpec.model, vec({1}), gen.inputs(1, 3, 1.0),
                                             vec({0.8, 0.3}));
        const Vector theta = gen.in_box(kBilinearSpec.model.param_box);
        EXPECT_TRUE(inclusion_check(kBilinearSpec.model, h, theta, one_step_plan(gen.uniform(-1, 1)), 0.5,
                                    1e6, {.seed = static_cast<std::uint64_t>(i)}));
    }
}

void expect_common_invariants(const RunOutcome& out, const PlantModel& model, const Vector& theta_true,
                              const Vector& x0) {
    // T-bookkeeping
    long t = out.excitation_length;
    for (const auto& b : out.blocks) {
        EXPECT_EQ(b.t_start, t);
        t += b.horizon;
        EXPECT_EQ(b.block.size(), static_cast<std::size_t>(b.horizon));
    }
    EXPECT_EQ(out.trajectory.size(), static_cast<std::size_t>(t) + 1);
    EXPECT_EQ(out.inputs.size(), static_cast<std::size_t>(t));
    // Closed-loop replay is exact.
    const StateSequence replay = simulate(model, x0, out.inputs, theta_true);
    ASSERT_EQ(replay.size(), out.trajectory.size());
    for (std::size_t i = 0; i < replay.size(); ++i) EXPECT_EQ(replay[i], out.trajectory[i]);
    EXPECT_EQ(out.final_error, (out.trajectory.back() - model.target).norm());
}

TEST(RunExact, ScalarHandTrace) {
    const PlantModel& m = kScalarSpec.model;
    const RunOutcome out = run_exact(m, vec({0.8}), vec({1}), seq({{0.5}}), constant_bounds({3, 10.0}), {});
    ASSERT_TRUE(out.terminated()) << out.message;
    ASSERT_EQ(out.blocks.size(), 1u);
    const BlockRecord& b = out.blocks[0];
    EXPECT_EQ(b.k, 1);
    EXPECT_EQ(b.t_start, 1);
    EXPECT_NEAR(b.theta[0], 0.8, 1e-10);
    EXPECT_EQ(b.horizon, 1);
    EXPECT_NEAR(b.block[0][0], -1.04, 1e-9);
    EXPECT_NEAR(out.trajectory[1][0], 1.3, 1e-15);
    EXPECT_LE(std::abs(out.trajectory[2][0]), 1e-10);
    EXPECT_LE(out.final_error, 1e-10);
    EXPECT_FALSE(b.mu.has_value());
    expect_common_invariants(out, m, vec({0.8}), vec({1}));
}

TEST(RunExact, ExcitationResidueAlreadyAtTarget) {
    const RunOutcome out =
        run_exact(kScalarSpec.model, vec({0.8}), vec({0}), seq({{0}}), constant_bounds({3, 10.0}), {});
    EXPECT_TRUE(out.terminated());
    EXPECT_TRUE(out.blocks.empty());
    EXPECT_EQ(out.trajectory.size(), 2u);
    EXPECT_FALSE(out.warnings.empty());  // zero sensitivity at x0 = 0
}

TEST(RunExact, Affine2dTerminatesQuickly) {
    const PlantModel& m = kAffineSpec.model;
    const Vector truth = vec({0.5, 0.25});
    const RunOutcome out = run_exact(m, truth, vec({1, 0}), kAffineSpec.default_excitation,
                                     constant_bounds(kAffineSpec.default_bounds), {});
    ASSERT_TRUE(out.terminated()) << out.message;
    EXPECT_LE(out.blocks.size(), 2u);
    EXPECT_LE(out.final_error, 1e-9);
    expect_common_invariants(out, m, truth, vec({1, 0}));
}

TEST(RunExact, ExactEstimateCorollary) {
    Gen gen(61);
    for (const auto& name : model_names()) {
        const BenchmarkSpec spec = get_model(name);
        for (int trial = 0; trial < 5; ++trial) {
            const Vector truth = gen.in_box(spec.model.param_box);
            const ExactRunOptions opt;
            const RunOutcome out = run_exact(spec.model, truth, spec.default_x0, spec.default_excitation,
                                             constant_bounds(spec.default_bounds), opt);
            ASSERT_TRUE(out.terminated()) << name << ": " << out.message;
            for (const auto& b : out.blocks) {
                if ((b.theta - truth).norm() <= 1e-12) {
                    EXPECT_LE((b.x_end - spec.model.target).norm(), opt.tol_exact) << name;
                }
            }
            expect_common_invariants(out, spec.model, truth, spec.default_x0);
        }
    }
}

TEST(RunExact, BlockCapReported) {
    const RunOutcome out = run_exact(kScalarSpec.model, vec({0.8}), vec({1}), seq({{0.5}}),
                                     constant_bounds({3, 10.0}), {.max_blocks = 0});
    EXPECT_EQ(out.status, RunStatus::MaxBlocksExceeded);
    EXPECT_TRUE(out.blocks.empty());
    EXPECT_TRUE(is_cap_exceeded(out.status));
}

TEST(RunExact, InfeasibleSynthesisReportedWithContext) {
    const RunOutcome out = run_exact(kScalarSpec.model, vec({2.0}), vec({1}), seq({{0.5}}),
                                     constant_bounds({1, 0.1}), {});
    EXPECT_EQ(out.status, RunStatus::SynthesisInfeasible);
    EXPECT_NE(out.message.find("block 1"), std::string::npos);
}

const RegulatorSchedule kSchedule{.beta = 0.5, .mu = 1.0, .kappa = 1.0, .eps_fin = 1e-3};

void expect_inexact_invariants(const RunOutcome& out, const RegulatorSchedule& s,
                               const SynthesisBounds& bounds) {
    double mu_prev = s.mu;
    double kappa_prev = s.kappa;
    for (const auto& b : out.blocks) {
        ASSERT_TRUE(b.mu && b.kappa);
        EXPECT_EQ(*b.kappa, kappa_prev / s.beta);
        double expected_mu = s.beta * mu_prev;
        for (int i = 0; i < b.inclusion_retries; ++i) expected_mu *= s.beta;
        EXPECT_EQ(*b.mu, expected_mu);
        EXPECT_LE(*b.mu, s.beta * mu_prev);
        if (b.inclusion_retries == 0) EXPECT_EQ(*b.mu, s.beta * mu_prev);
        else EXPECT_LT(*b.mu, s.beta * mu_prev);
        EXPECT_LT(b.estimate_residual, *b.mu);
        EXPECT_LT(b.predicted_terminal_error, 0.5 * s.eps_fin);
        EXPECT_LE(b.horizon, bounds.n_max);
        for (const auto& u : b.block.values) EXPECT_LE(u.cwiseAbs().maxCoeff(), bounds.rho_max);
        mu_prev = *b.mu;
        kappa_prev = *b.kappa;
    }
}

TEST(RunInexact, ScalarEndToEnd) {
    const PlantModel& m = kScalarSpec.model;
    const SynthesisBounds bounds{3, 10.0};
    const RunOutcome out =
        run_inexact(m, vec({0.8}), vec({1}), seq({{0.5}}), kSchedule, constant_bounds(bounds), {});
    ASSERT_TRUE(out.terminated()) << out.message;
    EXPECT_LT(out.final_error, 1e-3);
    EXPECT_GE(out.blocks.size(), 1u);
    EXPECT_LE(out.blocks.size(), 3u);
    // Applied first block vs. deadbeat input for the true parameter from the measured x(1).
    const auto [n, oracle_u] = oracle_deadbeat(kScalarSpec, out.trajectory[1], vec({0.8}));
    EXPECT_EQ(out.blocks[0].horizon, n);
    EXPECT_LT(std::abs(out.blocks[0].block[0][0] - oracle_u[0][0]), 1e-3);
    expect_inexact_invariants(out, kSchedule, bounds);
    expect_common_invariants(out, m, vec({0.8}), vec({1}));
}

TEST(RunInexact, LargeToleranceStopsAfterExcitation) {
    RegulatorSchedule s = kSchedule;
    s.eps_fin = 2.0;  // |x(1)| = 1.3
    const RunOutcome out =
        run_inexact(kScalarSpec.model, vec({0.8}), vec({1}), seq({{0.5}}), s, constant_bounds({3, 10.0}), {});
    EXPECT_TRUE(out.terminated());
    EXPECT_TRUE(out.blocks.empty());
}

TEST(RunInexact, AllBenchmarksTerminateWithScheduleInvariants) {
    Gen gen(71);
    for (const auto& name : model_names()) {
        const BenchmarkSpec spec = get_model(name);
        for (int trial = 0; trial < 3; ++trial) {
            const Vector truth = gen.in_box(spec.model.param_box);
            const RunOutcome out = run_inexact(spec.model, truth, spec.default_x0, spec.default_excitation,
                                               kSchedule, constant_bounds(spec.default_bounds),
                                               {.synthesis = {.seed = 3}});
            ASSERT_TRUE(out.terminated()) << name << ": " << out.message;
            EXPECT_LT(out.final_error, kSchedule.eps_fin);
            expect_inexact_invariants(out, kSchedule, spec.default_bounds);
            expect_common_invariants(out, spec.model, truth, spec.default_x0);
        }
    }
}

TEST(RunInexact, InnerRetryCapReported) {
    const RunOutcome out = run_inexact(kScalarSpec.model, vec({0.8}), vec({1}), seq({{0.5}}), kSchedule,
                                       constant_bounds({3, 10.0}), {.max_inner_retries = 0});
    EXPECT_EQ(out.status, RunStatus::MaxInnerRetriesExceeded);
    EXPECT_TRUE(is_cap_exceeded(out.status));
}

TEST(RunInexact, Deterministic) {
    const auto run = [] {
        return run_inexact(kBilinearSpec.model, vec({0.8, 0.3}), vec({1}), kBilinearSpec.default_excitation,
                           kSchedule, constant_bounds(kBilinearSpec.default_bounds), {});
    };
    const RunOutcome a = run();
    const RunOutcome b = run();
    ASSERT_EQ(a.inputs.size(), b.inputs.size());
    for (std::size_t i = 0; i < a.inputs.size(); ++i) EXPECT_EQ(a.inputs[i], b.inputs[i]);
}

TEST(RunInexact, RejectsInvalidSchedule) {
    RegulatorSchedule s = kSchedule;
    s.beta = 1.0;
    EXPECT_THROW(run_inexact(kScalarSpec.model, vec({0.8}), vec({1}), seq({{0.5}}), s,
                             constant_bounds({3, 10.0}), {}),
                 ContractViolation);
}

}  // namespace
}  // namespace adreg

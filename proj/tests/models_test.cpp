#include <gtest/gtest.h>

#include "adreg/models.hpp"
#include "test_support.hpp"

namespace adreg {
namespace {

using testing::Gen;
using testing::observe;
using testing::rel_err;
using testing::seq;
using testing::vec;

TEST(GetModel, Registry) {
    const BenchmarkSpec s = get_model("scalar_linear");
    EXPECT_EQ(s.model.param_dim, 1);
    EXPECT_EQ(s.model.param_box.lo[0], 0.5);
    EXPECT_EQ(s.model.param_box.hi[0], 2.0);

    const BenchmarkSpec a = get_model("affine_2d");
    EXPECT_EQ(a.model.state_dim, 2);
    EXPECT_EQ(a.model.input_dim, 2);
    const Vector next = step(a.model, vec({1, 1}), vec({0, 0}), vec({0.5, 0.25}));
    EXPECT_EQ(next, vec({1, 0.75}));

    const BenchmarkSpec b = get_model("bilinear_scalar");
    EXPECT_EQ(b.model.param_box.lo, vec({0.5, 0.0}));
    EXPECT_EQ(b.model.param_box.hi, vec({1.0, 0.4}));

    EXPECT_THROW(get_model("unknown"), UnknownModel);
    for (const auto& name : model_names()) EXPECT_NO_THROW(get_model(name).model.validate());
}

TEST(OracleDeadbeat, ClosedForms) {
    const auto [n1, u1] = oracle_deadbeat(get_model("scalar_linear"), vec({1.3}), vec({0.8}));
    EXPECT_EQ(n1, 1);
    EXPECT_NEAR(u1[0][0], -1.04, 1e-15);

    const auto [n2, u2] = oracle_deadbeat(get_model("bilinear_scalar"), vec({1}), vec({0.8, 0.3}));
    EXPECT_EQ(n2, 1);
    EXPECT_NEAR(u2[0][0], -0.8 / 1.3, 1e-15);

    const BenchmarkSpec affine = get_model("affine_2d");
    const auto [n3, u3] = oracle_deadbeat(affine, vec({1, 1}), vec({0.5, 0.25}));
    EXPECT_EQ(n3, affine.oracle.minimal_horizon);
    EXPECT_LE(simulate(affine.model, vec({1, 1}), u3, vec({0.5, 0.25})).back().norm(), 1e-12);
}

TEST(OracleDeadbeat, BilinearSingularInput) {
    EXPECT_THROW(oracle_deadbeat(get_model("bilinear_scalar"), vec({-2.5}), vec({0.8, 0.4})),
                 SingularInput);
}

TEST(OracleParameter, HandCases) {
    const BenchmarkSpec s = get_model("scalar_linear");
    ObservationHistory h;
    h.x0 = vec({2});
    h.record(vec({0}), vec({1.6}));
    const auto theta = oracle_parameter(s, h);
    ASSERT_TRUE(theta.has_value());
    EXPECT_NEAR((*theta)[0], 0.8, 1e-15);

    ObservationHistory zero;
    zero.x0 = vec({0});
    zero.record(vec({0}), vec({0}));
    EXPECT_FALSE(oracle_parameter(s, zero).has_value());

    const BenchmarkSpec a = get_model("affine_2d");
    const Vector truth = vec({0.6, 0.45});
    const auto rec = oracle_parameter(a, observe(a.model, vec({1, 0}), a.default_excitation, truth));
    ASSERT_TRUE(rec.has_value());
    EXPECT_LE((*rec - truth).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DefaultExcitation, PassesRankCheckFromDefaultState) {
    for (const auto& name : model_names()) {
        const BenchmarkSpec spec = get_model(name);
        std::vector<ExcitationSample> samples;
        for (const Vector& th : box_grid(spec.model.param_box, 4)) samples.push_back({spec.default_x0, th});
        EXPECT_TRUE(excitation_rank_check(spec.model, spec.default_excitation, samples).pass) << name;
    }
}

// The oracle/pipeline agreement invariant over 100 random points per model.
TEST(OracleAgreement, AnalyticJacobiansMatchNumericPipeline) {
    Gen gen(101);
    for (const auto& name : model_names()) {
        const BenchmarkSpec spec = get_model(name);
        const PlantModel& m = spec.model;
        for (int i = 0; i < 100; ++i) {
            const Vector x0 = gen.uniform_vec(m.state_dim, -2, 2);
            const Vector theta = gen.in_box(m.param_box);
            const InputSequence u = gen.inputs(m.input_dim, 3, 1.0);
            EXPECT_LE(rel_err(jacobian_theta(m, x0, u, theta), oracle_jacobian_theta(spec, x0, u, theta)),
                      1e-8)
                << name;
            EXPECT_LE(rel_err(jacobian_input(m, x0, u, theta), oracle_jacobian_input(spec, x0, u, theta)),
                      1e-8)
                << name;
        }
    }
}

TEST(OracleAgreement, ControllabilityOnSampledGrid) {
    for (const auto& name : model_names()) {
        const BenchmarkSpec spec = get_model(name);
        const PlantModel& m = spec.model;
        for (const Vector& th : box_grid(m.param_box, 3)) {
            for (double x1 : {-2.0, -0.5, 0.0, 1.0, 2.0}) {
                Vector x = Vector::Constant(m.state_dim, x1);
                if (name == "bilinear_scalar" && 1.0 + th[1] * x1 == 0.0) continue;
                const InputSequence block = spec.oracle.deadbeat(x, th);
                EXPECT_TRUE(controllability_rank_check(m, x, th, block)) << name;
            }
        }
    }
}

}  // namespace
}  // namespace adreg

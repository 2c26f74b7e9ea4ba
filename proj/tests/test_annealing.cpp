#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "asmc/annealing.hpp"
#include "asmc/constants.hpp"

using namespace asmc;

TEST(Schedule, ReciprocalsOneToFour) {
    const auto s = geometric_schedule(1.0, 0.25, 4);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_DOUBLE_EQ(s[0], 1.0);
    EXPECT_DOUBLE_EQ(s[1], 0.5);
    EXPECT_DOUBLE_EQ(s[2], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(s[3], 0.25);
}

TEST(Schedule, ThreeLevels) {
    const auto s = geometric_schedule(1.0, 0.5, 3);
    EXPECT_DOUBLE_EQ(s[1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s[2], 0.5);
}

TEST(Schedule, EndpointsOnly) {
    const auto s = geometric_schedule(1.0, 0.5, 2);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], 1.0);
    EXPECT_EQ(s[1], 0.5);
}

TEST(Schedule, InverseTemperaturesLinearAndDecreasing) {
    const auto s = geometric_schedule(2.0, 0.01, 37);
    EXPECT_EQ(s.initial(), 2.0);
    EXPECT_EQ(s.final(), 0.01);
    const double step = (1.0 / 0.01 - 0.5) / 36.0;
    EXPECT_NEAR(s.inverse_step(), step, 1e-12);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        EXPECT_GT(s[k], s[k + 1]);
        EXPECT_NEAR(1.0 / s[k + 1] - 1.0 / s[k], step, 1e-9);
    }
}

TEST(Schedule, RejectsInvalid) {
    EXPECT_THROW(geometric_schedule(1.0, 1.0, 3), ArgumentError);
    EXPECT_THROW(geometric_schedule(1.0, 0.0, 3), ArgumentError);
    EXPECT_THROW(geometric_schedule(1.0, 0.5, 1), ArgumentError);
}

TEST(Constants, UnitCase) {
    const auto b = constants_bundle(2, 1.0, 0.0);
    EXPECT_EQ(*b.C_beta, 1.0);
    EXPECT_EQ(*b.C_T, 24.0);
    EXPECT_EQ(*b.C_N, 144.0);
}

TEST(Constants, NoVariationMeansUnitBeta) {
    for (double cr : {1.0, 1.7, 5.0, 40.0}) EXPECT_EQ(*constants_bundle(3, cr, 0.0).C_beta, 1.0);
}

TEST(Constants, Arithmetic) {
    const auto b = constants_bundle(2, 2.0, 0.25);
    const double e = std::numbers::e;
    EXPECT_NEAR(*b.C_beta, e, 1e-15);
    EXPECT_NEAR(*b.C_T, 16.0 * (2.0 * e + 1.0), 1e-12);
    EXPECT_NEAR(*b.C_N, 4.0 * (2.0 * e + 1.0) * (2.0 * e + 1.0) * 9.0, 1e-10);
    EXPECT_THROW(constants_bundle(2, 0.5, 0.0), ArgumentError);
    EXPECT_THROW(constants_bundle(0, 1.0, 0.0), ArgumentError);
    EXPECT_THROW(constants_bundle(2, 1.0, -1.0), ArgumentError);
}

TEST(PlanLocal, PaperScale) {
    const auto b = constants_bundle(2, 1.0, 0.0);  // C_T = 24, C_N = 144
    const auto p = plan_local(0.1, 1.0, 0.1, 1.0, b, 0.5);
    EXPECT_EQ(p.M, 10u);
    EXPECT_EQ(p.N, 1440000u);
    EXPECT_EQ(p.T, std::ceil(std::log(0.1 / 48.0) / std::log(0.5)));
    EXPECT_EQ(p.T, 9.0);
}

TEST(PlanLocal, PowersOfTwo) {
    ConstantsBundle b;
    b.C_T = 2.0;
    b.C_N = 1.0;
    const auto p = plan_local(0.25, 1.0, 0.5, 1.0, b, 0.5);
    EXPECT_EQ(p.M, 2u);
    EXPECT_EQ(p.N, 64u);
    EXPECT_EQ(p.T, 4.0);
}

TEST(PlanLocal, RejectsIncompleteBundle) {
    ConstantsBundle b;
    b.C_T = 2.0;
    EXPECT_THROW(plan_local(0.1, 1.0, 0.5, 1.0, b, 0.5), ArgumentError);
    b.C_N = 1.0;
    EXPECT_THROW(plan_local(0.1, 1.0, 0.5, 1.0, b, 1.0), ArgumentError);
}

TEST(PlanLangevin, PlugIn) {
    const auto p = plan_langevin(0.1, 1.0, 0.2, 1.0, 1.0, 1.0, 1.0);
    EXPECT_EQ(p.M, 5u);
    EXPECT_EQ(p.N, 2500u);
    EXPECT_NEAR(p.T, 25.0 + std::log(10.0) + 5.0, 1e-12);
    EXPECT_NEAR(p.T, 32.30, 0.01);
}

TEST(PlanLangevin, LevelsMatchOneOverEta) {
    for (double eta : {0.5, 0.3, 0.2, 0.125, 0.07, 0.01}) {
        const auto p = plan_langevin(0.1, 1.0, eta, 1.0, 1.0, 1.0, 1.0);
        EXPECT_EQ(p.M, static_cast<std::size_t>(std::ceil(1.0 / eta - 1e-9))) << eta;
    }
    EXPECT_THROW(plan_langevin(0.1, 1.0, 0.2, 1.0, 0.9, 1.0, 1.0), ArgumentError);
}

TEST(PlanLocal, StepNeverExceedsNu) {
    const auto b = constants_bundle(2, 1.0, 0.0);
    for (double nu : {0.1, 0.5, 1.0, 3.0})
        for (double eta : {0.5, 0.1, 0.03}) {
            const auto p = plan_local(0.1, nu, eta, 1.0, b, 0.5);
            const auto s = geometric_schedule(1.0, eta, p.M);
            EXPECT_LE(s.inverse_step(), nu * (1 + 1e-12));
            EXPECT_GE(static_cast<double>(p.M), std::ceil(1.0 / (nu * eta) - 1e-9));
        }
}

TEST(MixingTime, PowersOfTwo) {
    EXPECT_EQ(mixing_time_bound(0.5, 0.25), 3u);
    EXPECT_EQ(mixing_time_bound(0.5, 0.5), 2u);
    EXPECT_THROW(mixing_time_bound(1.0, 0.5), ArgumentError);
}

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "asmc/resampler.hpp"
#include "test_support.hpp"

using namespace asmc;

TEST(Weights, ConstantEnergyGivesUniform) {
    auto c = asmc_test::constant_energy(1, 3.0);
    const std::vector<double> pos{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto w = inter_level_log_weights(pos, 1, c, 1.0, 0.5);
    for (double p : w.probabilities()) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(Weights, TwoPointNormalization) {
    // U(x) = x; dbeta = 1/0.5 - 1 = 1, so positions 0 and ln 3 give l = (0, -ln 3).
    EnergyModel lin(
        DomainSpec::euclidean(1), [](std::span<const double> x) { return x[0]; },
        [](std::span<const double>, std::span<double> g) { g[0] = 1.0; });
    const std::vector<double> pos{0.0, std::log(3.0)};
    const auto w = inter_level_log_weights(pos, 1, lin, 1.0, 0.5);
    EXPECT_NEAR(w.probabilities()[0], 0.75, 1e-15);
    EXPECT_NEAR(w.probabilities()[1], 0.25, 1e-15);
}

TEST(Weights, ShiftInvariant) {
    auto a = asmc_test::quadratic(1, 1.0, 0.0);
    auto b = asmc_test::quadratic(1, 1.0, 1234.5);
    const std::vector<double> pos{-2.0, -0.5, 0.0, 1.0, 3.0};
    const auto wa = inter_level_log_weights(pos, 1, a, 0.7, 0.2);
    const auto wb = inter_level_log_weights(pos, 1, b, 0.7, 0.2);
    for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_NEAR(wa.probabilities()[i], wb.probabilities()[i], 1e-11);
}

TEST(Weights, Degenerate) {
    EXPECT_THROW(WeightVector({std::nan(""), 0.0}), DegenerateWeightsError);
    const double ninf = -std::numeric_limits<double>::infinity();
    EXPECT_THROW(WeightVector({ninf, ninf}), DegenerateWeightsError);
    EXPECT_THROW(WeightVector({}), ArgumentError);
    // Extreme but finite log weights stay well defined.
    const WeightVector w({-1e300, 0.0, -800.0});
    EXPECT_EQ(w.probabilities()[1], 1.0);
}

TEST(Alias, SingleCell) {
    const std::vector<double> p{1.0};
    const auto t = build_alias(p);
    Stream rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(t.draw(rng), 0u);
}

TEST(Alias, TwoCellReconstructionExact) {
    const std::vector<double> p{0.25, 0.75};
    const auto r = build_alias(p).implied_probabilities();
    EXPECT_EQ(r[0], 0.25);
    EXPECT_EQ(r[1], 0.75);
}

TEST(Alias, RandomReconstruction) {
    std::mt19937_64 gen(4);
    std::exponential_distribution<double> e(1.0);
    for (std::size_t n : {10u, 1000u, 4097u}) {
        std::vector<double> w(n);
        for (double& v : w) v = e(gen);
        w[n / 3] = 0.0;
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& v : w) v /= s;
        const auto r = build_alias(w).implied_probabilities();
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(r[i] - w[i]));
        EXPECT_LT(err, 1e-12) << n;
        EXPECT_EQ(r[n / 3], 0.0);
    }
    EXPECT_THROW(build_alias(std::vector<double>{0.0, 0.0}), ArgumentError);
}

TEST(Alias, BuildTimeIsLinear) {
    auto build_seconds = [](std::size_t n) {
        std::mt19937_64 gen(n);
        std::exponential_distribution<double> e(1.0);
        std::vector<double> w(n);
        for (double& v : w) v = e(gen);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto t = build_alias(w);
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            best = std::min(best, s);
            EXPECT_EQ(t.size(), n);
        }
        return best;
    };
    const double ratio = build_seconds(1000000) / build_seconds(100000);
    EXPECT_LE(ratio, 20.0);
}

TEST(Resample, ConcentratedWeight) {
    const std::vector<double> pos{1.0, 2.0, 3.0, 4.0};
    const double ninf = -std::numeric_limits<double>::infinity();
    const WeightVector w({ninf, ninf, 0.0, ninf});
    Stream rng(2);
    for (double v : resample(pos, 1, w, rng)) EXPECT_EQ(v, 3.0);
}

TEST(Resample, BinomialCounts) {
    const std::size_t n = 100000;
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<double>(i % 2);
    // Even indices carry 1/4 of the total weight, odd indices 3/4.
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = i % 2 ? std::log(3.0) : 0.0;
    Stream rng(3);
    const auto out = resample(pos, 1, WeightVector(l), rng);
    const double ones = std::accumulate(out.begin(), out.end(), 0.0);
    const double sd = std::sqrt(n * 0.75 * 0.25);
    EXPECT_NEAR(ones, 0.75 * n, 4.0 * sd);
}

TEST(Resample, ConditionalMeanIdentity) {
    // Fixed ten-particle ensemble; the resampled average of h is an unbiased
    // estimate of sum_i p_i h(x_i) with variance Var_p(h)/N.
    const std::vector<double> pos{-2.0, -1.0, -0.5, 0.0, 0.3, 0.8, 1.1, 1.5, 2.2, 3.0};
    const std::vector<double> l{0.1, -0.4, 0.9, -2.0, 0.0, 0.5, -1.0, 1.3, -0.2, 0.4};
    const WeightVector w(l);
    auto h = [](double x) { return x * x + std::sin(x); };
    double target = 0.0, second = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        target += w.probabilities()[i] * h(pos[i]);
        second += w.probabilities()[i] * h(pos[i]) * h(pos[i]);
    }
    const double var_one = (second - target * target) / 10.0;
    const std::size_t reps = 10000;
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        Stream rng(99, StreamPurpose::test, 0, r);
        const auto out = resample(pos, 1, w, rng);
        double a = 0.0;
        for (double x : out) a += h(x);
        sum += a / 10.0;
    }
    const double se = std::sqrt(var_one / reps);
    EXPECT_NEAR(sum / reps, target, 4.0 * se);
}

TEST(Resample, MultiDimensionalRowsStayIntact) {
    const std::vector<double> pos{0.0, 10.0, 1.0, 11.0, 2.0, 12.0};
    Stream rng(5);
    const auto out = resample(pos, 2, WeightVector({0.0, 0.0, 0.0}), rng);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out[2 * i + 1] - out[2 * i], 10.0);
}

TEST(Ess, KnownValues) {
    EXPECT_NEAR(effective_sample_size(WeightVector({0.0, 0.0, 0.0, 0.0})), 4.0, 1e-14);
    const double ninf = -std::numeric_limits<double>::infinity();
    EXPECT_EQ(effective_sample_size(WeightVector({ninf, 0.0, ninf})), 1.0);
    EXPECT_NEAR(effective_sample_size(WeightVector({std::log(3.0), 0.0})), 1.6, 1e-14);
}

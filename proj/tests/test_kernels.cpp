#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "asmc/kernels.hpp"
#include "asmc/stats.hpp"
#include "test_support.hpp"

using namespace asmc;

TEST(LangevinStep, PureDrift) {
    auto q = asmc_test::quadratic(2);
    const std::vector<double> x{1.0, -2.0}, xi{0.0, 0.0};
    const auto y = langevin_step(x, q, 1.0, 0.1, xi);
    EXPECT_DOUBLE_EQ(y[0], 0.9);
    EXPECT_DOUBLE_EQ(y[1], -1.8);
}

TEST(LangevinStep, TorusWrap) {
    EnergyModel flat(
        DomainSpec::torus(1), [](std::span<const double>) { return 0.0; },
        [](std::span<const double>, std::span<double> g) { g[0] = 0.0; });
    // noise scale sqrt(2 * eps * dt) = 0.2 with eps = 0.5, dt = 0.04
    const std::vector<double> x{0.9}, xi{1.0};
    const auto y = langevin_step(x, flat, 0.5, 0.04, xi);
    EXPECT_NEAR(y[0], 0.1, 1e-12);
}

TEST(LangevinStep, NonFiniteGradientIsError) {
    EnergyModel bad(
        DomainSpec::euclidean(1), [](std::span<const double>) { return 0.0; },
        [](std::span<const double>, std::span<double> g) { g[0] = std::nan(""); });
    const std::vector<double> x{0.0}, xi{0.0};
    EXPECT_THROW(langevin_step(x, bad, 1.0, 0.01, xi), EvaluationError);
}

TEST(LangevinRun, OrnsteinUhlenbeckVariance) {
    // Stationary variance of dX = -X dt + sqrt(2 eps) dW is eps; the
    // Euler-Maruyama chain has eps / (1 - dt/2).
    auto q = asmc_test::quadratic(1);
    const double eps = 0.5, dt = 0.001;
    const auto kernel = LangevinKernel{LangevinConfig{dt}, 1};
    Stream rng(3);
    std::vector<double> x{0.0};
    kernel.advance(q, x, eps, rng, 5000, 0, 0);
    double s = 0.0, s2 = 0.0;
    const std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) {
        kernel.advance(q, x, eps, rng, 1, 0, 0);
        s += x[0];
        s2 += x[0] * x[0];
    }
    const double var = s2 / n - (s / n) * (s / n);
    EXPECT_NEAR(var, eps, 0.05 * eps);
}

TEST(LangevinRun, StepCountAndDeterminism) {
    EXPECT_EQ(LangevinKernel::for_time(0.1, 0.2).steps, 2u);
    EXPECT_EQ(LangevinKernel::for_time(0.1, 0.25).steps, 3u);
    EXPECT_EQ(LangevinKernel::for_time(0.001, 0.5).steps, 500u);
    auto q = asmc_test::quadratic(2);
    const std::vector<double> x0{0.3, 0.4};
    Stream a(77), b(77);
    const auto ya = langevin_run(x0, q, 1.0, 0.2, 0.1, a);
    const auto yb = langevin_run(x0, q, 1.0, 0.2, 0.1, b);
    EXPECT_EQ(ya, yb);
    // Exactly two steps consumed: the next normal from each stream coincides
    // with the fifth draw of a fresh stream.
    Stream fresh(77);
    for (int i = 0; i < 4; ++i) fresh.normal();
    EXPECT_EQ(a.normal(), fresh.normal());
}

TEST(LangevinRun, BlockAdvanceEqualsSerial) {
    const auto mix = asmc_test::planar_mixture();
    const LangevinKernel k{LangevinConfig{0.001}, 1};
    std::vector<double> xs{-1.0, 0.0, 1.0, 0.1, 0.2, 0.3, 0.0, -0.5, 0.7, 0.7};
    std::vector<double> ref = xs;
    std::vector<Stream> rs, rs2;
    for (std::size_t i = 0; i < 5; ++i) {
        rs.emplace_back(9, StreamPurpose::test, 0, i);
        rs2.emplace_back(9, StreamPurpose::test, 0, i);
    }
    langevin_advance_block(k, mix, xs, 1.0, std::span<Stream>(rs), 300, 0, 0);
    for (std::size_t i = 0; i < 5; ++i)
        k.advance(mix, std::span<double>(ref.data() + 2 * i, 2), 1.0, rs2[i], 300, 0, static_cast<long>(i));
    EXPECT_EQ(xs, ref);
}

TEST(LangevinRun, MixtureLawIsPreserved) {
    // Exact draws from the mixture stay distributed as the mixture after a
    // long Langevin run; a single long chain would hardly ever cross wells.
    const auto mix = asmc_test::planar_mixture();
    const LangevinKernel k{LangevinConfig{0.001}, 2000};
    Stream rng(21);
    const std::size_t n = 20000;
    std::vector<double> x(2), xs;
    for (std::size_t i = 0; i < n; ++i) {
        mix.sample(1.0, rng, x);
        k.advance(mix, x, 1.0, rng, 2000, 0, 0);
        xs.push_back(x[0]);
    }
    auto cdf = [](double v) {
        return 0.7 * asmc_test::Phi((v + 1.0) / 0.3) + 0.3 * asmc_test::Phi((v - 1.0) / std::sqrt(0.02));
    };
    EXPECT_LT(stats::ks_statistic(xs, cdf), 1.63 / std::sqrt(double(n)) + 0.003);
}

namespace {

LocalModelSpec six_state_spec(const FiniteEnergy& t, double chi) {
    return finite_local_model(t, [chi](double) { return chi; });
}

}  // namespace

TEST(LocalStep, SingleDomainIsGibbs) {
    const FiniteEnergy t({0.0, 0.3, 1.0, 0.2}, {0, 0, 0, 0});
    const auto spec = six_state_spec(t, 0.8);
    const auto pi = t.gibbs(0.5);
    Stream rng(1);
    std::vector<double> counts(4, 0.0);
    const int n = 100000;
    std::vector<double> x{2.0};
    for (int i = 0; i < n; ++i) {
        const auto y = local_step(std::vector<double>{2.0}, 0.5, spec, rng);
        counts[static_cast<std::size_t>(y[0])] += 1.0;
    }
    std::vector<double> expected(4);
    for (std::size_t s = 0; s < 4; ++s) expected[s] = n * pi[s];
    EXPECT_GT(asmc_test::chi_square_p(counts, expected), 1e-3);
}

TEST(LocalStep, ZeroChiForgetsStart) {
    const auto t = asmc_test::six_state();
    const auto spec = six_state_spec(t, 0.0);
    const auto pi = t.gibbs(0.4);
    for (double start : {0.0, 5.0}) {
        Stream rng(static_cast<std::uint64_t>(start) + 10);
        std::vector<double> counts(6, 0.0);
        const int n = 60000;
        for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(local_step(std::vector<double>{start}, 0.4, spec, rng)[0])] += 1;
        std::vector<double> expected(6);
        for (std::size_t s = 0; s < 6; ++s) expected[s] = n * pi[s];
        EXPECT_GT(asmc_test::chi_square_p(counts, expected), 1e-3) << start;
    }
}

// Independent transition probability for the six-state model, written out
// entry by entry.
static double six_state_p(const FiniteEnergy& t, double chi, double eps, std::size_t x, std::size_t y) {
    double z = 0.0, zj = 0.0;
    for (std::size_t s = 0; s < 6; ++s) {
        const double w = std::exp(-t.energies()[s] / eps);
        z += w;
        if (t.membership()[s] == t.membership()[y]) zj += w;
    }
    const double wy = std::exp(-t.energies()[y] / eps);
    const bool same = t.membership()[x] == t.membership()[y];
    return (1.0 - chi) * wy / z + (same ? chi * wy / zj : 0.0);
}

TEST(LocalStep, OneStepFrequenciesMatchTransitionRow) {
    const auto t = asmc_test::six_state();
    const double chi = 0.6, eps = 0.3;
    const auto spec = six_state_spec(t, chi);
    for (std::size_t x0 : {0u, 4u}) {
        Stream rng(100 + x0);
        std::vector<double> counts(6, 0.0);
        const int n = 100000;
        for (int i = 0; i < n; ++i)
            counts[static_cast<std::size_t>(local_step(std::vector<double>{static_cast<double>(x0)}, eps, spec, rng)[0])] += 1;
        std::vector<double> expected(6);
        for (std::size_t y = 0; y < 6; ++y) expected[y] = n * six_state_p(t, chi, eps, x0, y);
        EXPECT_GT(asmc_test::chi_square_p(counts, expected), 1e-3) << x0;
    }
}

TEST(LocalModel, TransitionMatrixMatchesEntrywiseFormula) {
    const auto t = asmc_test::six_state();
    const auto P = local_transition_matrix(t, 0.35, 0.7);
    for (std::size_t x = 0; x < 6; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < 6; ++y) {
            EXPECT_NEAR(P[x][y], six_state_p(t, 0.35, 0.7, x, y), 1e-15);
            row += P[x][y];
        }
        EXPECT_NEAR(row, 1.0, 1e-14);
    }
}

TEST(LocalModel, NStepWeights) {
    const auto t = asmc_test::six_state();
    const auto spec = six_state_spec(t, 0.5);
    const auto one = local_n_step_density(spec, 0.3, 1);
    EXPECT_EQ(one.global_weight, 0.5);
    EXPECT_EQ(one.stay_weight, 0.5);
    const auto three = local_n_step_density(spec, 0.3, 3);
    EXPECT_EQ(three.global_weight, 0.875);
    EXPECT_EQ(three.stay_weight, 0.125);
}

TEST(LocalModel, ClosedFormMatchesMatrixPower) {
    const auto t = asmc_test::six_state();
    const auto spec = six_state_spec(t, 0.7);
    for (std::size_t n : {1u, 2u, 5u, 17u}) {
        const auto r = local_n_step_density(t, spec, 0.25, n);
        EXPECT_LT(r.matrix_power_deviation, 1e-10);
        // Matrix power computed here by repeated multiplication.
        auto P = local_transition_matrix(t, 0.7, 0.25);
        auto acc = P;
        for (std::size_t i = 1; i < n; ++i) acc = matrix_multiply(acc, P);
        for (std::size_t x = 0; x < 6; ++x)
            for (std::size_t y = 0; y < 6; ++y) EXPECT_NEAR((*r.matrix)[x][y], acc[x][y], 1e-12);
    }
}

TEST(LocalModel, MixingTimeBoundReachesDelta) {
    const auto t = asmc_test::six_state();
    for (double chi : {0.3, 0.5, 0.9, 0.99})
        for (double delta : {0.25, 0.1, 0.01}) {
            const std::size_t n = mixing_time_bound(chi, delta);
            const auto P = matrix_power(local_transition_matrix(t, chi, 0.4), n);
            EXPECT_LE(worst_case_tv(P, t.gibbs(0.4)), delta) << chi << " " << delta;
        }
}

TEST(LocalModel, InvalidChiRejected) {
    const auto t = asmc_test::six_state();
    const auto spec = six_state_spec(t, 1.0);
    Stream rng(0);
    EXPECT_THROW(local_step(std::vector<double>{0.0}, 0.5, spec, rng), InvariantError);
}

TEST(LocalModel, ArrheniusChi) {
    const ArrheniusChi chi{2.0, 1.5};
    EXPECT_NEAR(chi(0.5), std::exp(-2.0 * std::exp(-3.0)), 1e-15);
    EXPECT_GT(chi(0.1), chi(1.0));
}

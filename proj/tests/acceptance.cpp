// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "asmc/annealing.hpp"
#include "asmc/config.hpp"
#include "asmc/diagnostics.hpp"
#include "asmc/driver.hpp"
#include "asmc/experiments.hpp"
#include "asmc/kernels.hpp"
#include "asmc/resampler.hpp"
#include "asmc/targets.hpp"

using namespace asmc;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
    std::printf("criterion %-3s %s  %s\n", id.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

RunContext context() {
    RunContext ctx;
    ctx.threads = std::max(1u, std::thread::hardware_concurrency());
    return ctx;
}

ExperimentOutput run(const std::string& name, const Json& user, const RunContext& ctx = context()) {
    return run_experiment(ExperimentConfig::resolve(name, user), ctx);
}

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++cells;
    }
    const boost::math::chi_squared dist(static_cast<double>(cells - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& tag) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        if (l.rfind(tag + ",", 0) != 0) continue;
        std::vector<std::string> cells;
        std::istringstream ls(l);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (l.back() == ',') cells.emplace_back();
        out.push_back(cells);
    }
    return out;
}

void criterion_1() {
    const auto out = run("fig3_2d", Json{{"replicates", 100}});
    const auto& s = out.summary;
    const double mean = s.at("asmc_final_mean"), ref = s.at("reference");
    const bool ok = std::abs(mean - 0.69970) <= 0.015 && s.at("asmc_q25") <= ref && ref <= s.at("asmc_q75");
    report("1", ok,
           fmt("mean %.5f vs 0.69970, reference %.5f in [%.5f, %.5f]", mean, ref, s.at("asmc_q25"), s.at("asmc_q75")));
    const double ratio = s.at("lmc_mean_abs_error") / s.at("asmc_mean_abs_error");
    report("1b", ratio >= 3.0,
           fmt("LMC |err| %.4f, ASMC |err| %.4f, ratio %.2f", s.at("lmc_mean_abs_error"), s.at("asmc_mean_abs_error"),
               ratio));
}

void criterion_2() {
    const auto out = run("sweep_n", Json{{"replicates", 50}});
    const double slope = out.summary.at("slope_mean_abs_error");
    report("2", slope >= -0.65 && slope <= -0.35, fmt("log-log slope of mean |error| vs N: %.3f", slope));
}

void criterion_3() {
    const auto out = run("local_model_theorem", Json{{"replicates", 200}});
    const double rms = out.summary.at("rms_error"), bound = out.summary.at("bound");
    report("3", rms <= bound,
           fmt("RMS error %.3g <= %.3g with M=%.0f, N=%.0f", rms, bound, out.summary.at("M"), out.summary.at("N")));
}

void criterion_4() {
    // Resampled average versus the weighted mean, over 1e4 resampling draws.
    const std::vector<double> pos{-2.0, -1.0, -0.5, 0.0, 0.3, 0.8, 1.1, 1.5, 2.2, 3.0};
    const WeightVector w({0.1, -0.4, 0.9, -2.0, 0.0, 0.5, -1.0, 1.3, -0.2, 0.4});
    auto h = [](double x) { return std::cos(x) + 0.5 * x; };
    double target = 0.0, second = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        target += w.probabilities()[i] * h(pos[i]);
        second += w.probabilities()[i] * h(pos[i]) * h(pos[i]);
    }
    const std::size_t reps = 10000;
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        Stream rng(123, StreamPurpose::test, 1, r);
        const auto out = resample(pos, 1, w, rng);
        double a = 0.0;
        for (double x : out) a += h(x);
        sum += a / static_cast<double>(pos.size());
    }
    const double se = std::sqrt((second - target * target) / pos.size() / reps);
    const double z = std::abs(sum / reps - target) / se;

    std::mt19937_64 gen(8);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(5000);
    for (double& v : p) v = e(gen);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    const auto implied = build_alias(p).implied_probabilities();
    double alias_err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) alias_err = std::max(alias_err, std::abs(implied[i] - p[i]));

    auto build_seconds = [&](std::size_t n) {
        std::vector<double> q(n);
        for (double& v : q) v = e(gen);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto t = build_alias(q);
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (t.size() != n) best = 1e300;
        }
        return best;
    };
    const double ratio = build_seconds(1000000) / build_seconds(100000);
    report("4", z <= 4.0 && alias_err < 1e-12 && ratio <= 20.0,
           fmt("identity z %.2f, alias reconstruction error %.2e, build time ratio 1e6/1e5 %.1f", z, alias_err, ratio));
}

void criterion_5() {
    const FiniteEnergy t({0.0, 0.5, 1.0, 0.0, 0.5, 1.0}, {0, 0, 0, 1, 1, 1});
    const double chi = 0.6, eps = 0.3;
    const auto spec = finite_local_model(t, [chi](double) { return chi; });
    const std::size_t draws = 100000, n_steps = 4;
    double p_min = 1.0;
    for (std::size_t n : {std::size_t{1}, n_steps}) {
        const auto P = local_transition_matrix(t, chi, eps, n);
        for (std::size_t x0 : {0u, 4u}) {
            Stream rng(500 + 10 * n + x0);
            std::vector<double> counts(6, 0.0), expected(6);
            for (std::size_t i = 0; i < draws; ++i) {
                std::vector<double> x{static_cast<double>(x0)};
                for (std::size_t s = 0; s < n; ++s) local_step_inplace(x, eps, spec, rng);
                counts[static_cast<std::size_t>(x[0])] += 1.0;
            }
            for (std::size_t y = 0; y < 6; ++y) expected[y] = draws * P[x0][y];
            p_min = std::min(p_min, chi_square_p(counts, expected));
        }
    }
    double tv_worst = 0.0, delta_at_worst = 0.0;
    bool tv_ok = true;
    for (double c : {0.3, 0.6, 0.9, 0.99})
        for (double delta : {0.25, 0.1, 0.01}) {
            const auto P = matrix_power(local_transition_matrix(t, c, eps), mixing_time_bound(c, delta));
            const double tv = worst_case_tv(P, t.gibbs(eps));
            tv_ok = tv_ok && tv <= delta;
            if (tv / delta > tv_worst / std::max(delta_at_worst, 1e-300)) {
                tv_worst = tv;
                delta_at_worst = delta;
            }
        }
    report("5", p_min > 0.001 && tv_ok,
           fmt("smallest chi-square p %.4f; worst TV at bound %.3g (delta %.3g)", p_min, tv_worst, delta_at_worst));
}

void criterion_6() {
    std::vector<std::pair<std::string, QuadratureMeasure>> measures;
    {
        QuadratureMeasure q;
        q.nodes = {0.0, 1.0, 2.0, 3.0};
        q.energy = {1.5, 1.5, 1.5, 1.5};
        q.weights = {0.25, 0.25, 0.25, 0.25};
        measures.emplace_back("constant", q);
    }
    measures.emplace_back("gaussian_1d", tabulate_function_1d([](double x) { return 0.5 * x * x; }, -12.0, 12.0, 20000));
    const GaussianMixtureEnergy mix({0.7, 0.3}, {{-1.0, 0.0}, {1.0, 0.0}}, {{0.09, 0.04}, {0.02, 0.18}});
    measures.emplace_back("mixture_2d", tabulate_grid(mix, 256, Box{-5.0, 5.0}));

    bool ok = true;
    double min_gap = 1e300;
    std::size_t checks = 0;
    for (const auto& [name, q] : measures)
        for (double eta1 : {1.0, 2.0})
            for (double frac : {0.5, 0.2, 0.05})
                for (std::size_t M : {2u, 5u, 20u, 100u}) {
                    const auto sched = geometric_schedule(eta1, frac * eta1, M);
                    const double bound =
                        cr_bound(q.affine(q.min_energy(), 1.0 / eta1), eta1 * sched.inverse_step()).value;
                    const double emp = cr_empirical(q, sched).value;
                    ok = ok && bound >= emp * (1.0 - 1e-12);
                    min_gap = std::min(min_gap, bound - emp);
                    ++checks;
                }

    std::size_t identities = 0;
    bool exact = true;
    for (const char* target : {"double_well", "finite", "mixture_1d"}) {
        const auto out = run("constants_report", Json{{"target", target}});
        for (const auto& r : csv_rows(out.csv, "bundle")) {
            if (r.size() < 4 || r[3].empty()) continue;
            exact = exact && r[2] == r[3];
            ++identities;
        }
    }
    report("6", ok && exact && identities == 9,
           fmt("%.0f bound/empirical comparisons, smallest gap %.3g; %.0f bundle identities exact", double(checks),
               min_gap, double(identities)) +
               (exact ? "" : " (mismatch)"));
}

void criterion_7() {
    const auto out = run("sweep_mt", Json::object());
    const auto& s = out.summary;
    const double a = s.at("best_interior_ratio_to_smallest"), b = s.at("best_interior_ratio_to_largest");
    report("7", a < 0.7 && b < 0.7,
           fmt("best interior M=%.0f, ratio to M_min %.3f, ratio to M_max %.3f", s.at("best_interior_M"), a, b));
}

void criterion_8() {
    const std::vector<std::pair<std::string, Json>> cases = {
        {"fig3_2d", {{"N", 200}, {"M", 3}, {"steps_per_level", 40}, {"checkpoint_every", 20}, {"replicates", 4}}},
        {"sweep_n", {{"n_values", {50, 200}}, {"M", 3}, {"steps_per_level", 40}, {"replicates", 4}}},
        {"sweep_mt", {{"N", 100}, {"budget", 40}, {"m_values", {1, 4, 40}}, {"replicates", 3}}},
        {"local_model_theorem", {{"replicates", 5}, {"runner", "particles"}, {"N_override", 300}}},
        {"constants_report", Json::object()},
        {"baseline_compare", {{"N", 200}, {"M", 3}, {"steps_per_level", 40}, {"replicates", 3}}},
    };
    bool ok = true;
    std::string bad;
    for (const auto& [name, user] : cases) {
        RunContext one, many;
        many.threads = 4;
        const auto a = run(name, user, one).csv, b = run(name, user, one).csv, c = run(name, user, many).csv;
        if (a != b || a != c || a.empty()) {
            ok = false;
            bad += " " + name;
        }
    }
    report("8", ok, ok ? std::string("CSV bytes identical across repeated runs and 1 vs 4 threads for all experiments")
                       : "differs:" + bad);
}

void criterion_9() {
    const auto out = run("constants_report", Json{{"target", "double_well"}, {"C", 0.0}});
    const double clbv = out.summary.at("C_LBV");

    const DoubleWellTorusEnergy u(1, 1.0, 1.0);
    const auto sched = geometric_schedule(1.0, 0.1, 10);
    const LangevinKernel kernel{LangevinConfig{0.001}, 200};
    const std::size_t reps = 20;
    std::vector<double> fractions;
    for (std::size_t r = 0; r < reps; ++r) {
        AsmcOptions opt;
        opt.N = 2000;
        opt.seed = 900 + r;
        opt.threads = context().threads;
        opt.initial_sampler = [](std::size_t, Stream& rng, std::span<double> x) { x[0] = rng.uniform(); };
        const auto res = run_asmc(u, sched, kernel, opt);
        fractions.push_back(
            mass_fractions(res.ensemble, [&](std::span<const double> x) { return u.classify(x); }, 2)[1]);
    }
    const double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / reps;
    double ss = 0.0;
    for (double f : fractions) ss += (f - mean) * (f - mean);
    const double se = std::sqrt(ss / (reps - 1) / reps);
    report("9", clbv <= 1e-8 && std::abs(mean - 0.5) <= 4.0 * se,
           fmt("C_LBV %.2e; second-well mass %.4f +- %.4f over %.0f runs", clbv, mean, se, double(reps)));
}

void criterion_10() {
    const auto out = run("constants_report", Json{{"separable_dims", {2, 10, 50}}});
    const double spread = out.summary.at("separable_spread");
    report("10", spread <= 2.0, fmt("max/min of the ratio bound over d in {2, 10, 50}: %.3f", spread));
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> all = {
        {"1", criterion_1}, {"2", criterion_2}, {"3", criterion_3}, {"4", criterion_4},  {"5", criterion_5},
        {"6", criterion_6}, {"7", criterion_7}, {"8", criterion_8}, {"9", criterion_9}, {"10", criterion_10},
    };
    for (const auto& [id, check] : all) {
        try {
            check();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

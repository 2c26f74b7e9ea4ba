#ifndef ASMC_EXPERIMENTS_HPP
#define ASMC_EXPERIMENTS_HPP

// The batch experiments behind the command line tool. Each command takes a
// resolved config and returns the CSV text plus a few summary numbers that the
// acceptance checks read.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "asmc/annealing.hpp"
#include "asmc/baselines.hpp"
#include "asmc/config.hpp"
#include "asmc/constants.hpp"
#include "asmc/csv.hpp"
#include "asmc/diagnostics.hpp"
#include "asmc/driver.hpp"
#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/random.hpp"
#include "asmc/stats.hpp"
#include "asmc/targets.hpp"

namespace asmc {

struct ExperimentOutput {
    std::string csv;
    std::map<std::string, double> summary;
    std::vector<std::string> warnings;
};

// A run stopped on a numerical failure; csv holds the partial output ending in
// a failure row.
class NumericAbort : public Error {
public:
    NumericAbort(std::string csv, const std::string& what) : Error(what), csv_(std::move(csv)) {}
    const std::string& csv() const noexcept { return csv_; }

private:
    std::string csv_;
};

struct RunContext {
    unsigned threads = 1;
    std::ostream* log = nullptr;  // progress lines, if set
};

namespace detail {

inline constexpr const char* schema_version = "v1";

inline std::string schema_name(const std::string& experiment) {
    return std::string("asmc.") + experiment + "." + schema_version;
}

inline CsvWriter start_csv(const ExperimentConfig& cfg, std::vector<std::string> columns) {
    CsvWriter w(schema_name(cfg.name()), std::move(columns));
    w.comment("experiment " + cfg.name());
    w.comment("seed " + std::to_string(cfg.seed()));
    w.comment("config " + cfg.echo());
    return w;
}

inline bool is_numeric_failure(const Error& e) {
    return dynamic_cast<const DegenerateWeightsError*>(&e) || dynamic_cast<const PropagationError*>(&e) ||
           dynamic_cast<const EvaluationError*>(&e) || dynamic_cast<const InvariantError*>(&e);
}

// Runs body(); numeric failures become a failure row and a NumericAbort.
template <class Body>
void guarded(CsvWriter& w, Body&& body) {
    try {
        body();
    } catch (const NumericAbort&) {
        throw;
    } catch (const Error& e) {
        if (!is_numeric_failure(e)) throw;
        w.failure(e.what());
        throw NumericAbort(w.text(), e.what());
    }
}

inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t group, std::uint64_t r) {
    return derive_seed(seed, StreamPurpose::replicate, group, r);
}

inline void progress(const RunContext& ctx, const std::string& line) {
    if (ctx.log) *ctx.log << line << std::endl;
}

inline std::vector<double> number_list(const ExperimentConfig& cfg, const std::string& key) {
    const Json& v = cfg.values().at(key);
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("config key '" + key + "' must be a list of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::vector<std::size_t> count_list(const ExperimentConfig& cfg, const std::string& key) {
    const Json& v = cfg.values().at(key);
    std::vector<std::size_t> out;
    for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<long long>() < 0) throw ConfigError("config key '" + key + "' must be a list of non-negative integers");
        out.push_back(x.get<std::size_t>());
    }
    return out;
}

inline std::vector<std::vector<double>> matrix_of(const ExperimentConfig& cfg, const std::string& key) {
    const Json& v = cfg.values().at(key);
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
        if (!row.is_array()) throw ConfigError("config key '" + key + "' must be a list of lists");
        std::vector<double> r;
        for (const auto& x : row) {
            if (!x.is_number()) throw ConfigError("config key '" + key + "' must hold numbers");
            r.push_back(x.get<double>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

template <class Fn>
auto as_config_error(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    } catch (const UnsupportedError& e) {
        throw ConfigError(e.what());
    }
}

// Mixture target U = eta V of V = -log(sum a_i G_i); the Gibbs law of U at
// temperature eta is the mixture itself.
struct MixtureProblem {
    GaussianMixtureEnergy mixture;
    AffineEnergy<GaussianMixtureEnergy> energy;
    double eta = 0.2;
    double eta1 = 1.0;
    HalfSpaceClassifier split;
    double reference = 0.0;  // mixture mass of {x[axis] < threshold}

    double h(std::span<const double> x) const { return x[split.axis] < split.threshold ? 1.0 : 0.0; }
};

inline MixtureProblem mixture_problem(GaussianMixtureEnergy mixture, const ExperimentConfig& cfg) {
    const double eta = cfg.get<double>("eta");
    const double eta1 = cfg.get<double>("eta1");
    if (!(eta > 0.0) || !(eta1 >= eta)) throw ConfigError("need 0 < eta <= eta1");
    const auto axis = cfg.get<std::size_t>("h_axis");
    if (axis >= mixture.dim()) throw ConfigError("h_axis exceeds the mixture dimension");
    const double thr = cfg.get<double>("h_threshold");
    const double ref = reference_halfplane_mass(mixture, axis, thr, 1.0);
    AffineEnergy<GaussianMixtureEnergy> energy(mixture, 0.0, eta);
    return MixtureProblem{std::move(mixture), std::move(energy), eta, eta1, HalfSpaceClassifier{axis, thr}, ref};
}

inline MixtureProblem planar_problem(const ExperimentConfig& cfg) {
    return as_config_error([&] {
        GaussianMixtureEnergy mix(number_list(cfg, "weights"), matrix_of(cfg, "means"), matrix_of(cfg, "variances"));
        return mixture_problem(std::move(mix), cfg);
    });
}

// Means -e1 and e1 in `dim` dimensions, isotropic variances.
inline MixtureProblem isotropic_problem(const ExperimentConfig& cfg) {
    return as_config_error([&] {
        const auto d = cfg.get<std::size_t>("dim");
        if (d < 1) throw ConfigError("dim must be >= 1");
        const auto w = number_list(cfg, "weights");
        const auto v = number_list(cfg, "iso_variances");
        if (w.size() != 2 || v.size() != 2) throw ConfigError("isotropic mixture needs exactly 2 weights and variances");
        std::vector<double> m1(d, 0.0), m2(d, 0.0);
        m1[0] = -1.0;
        m2[0] = 1.0;
        return mixture_problem(GaussianMixtureEnergy::isotropic(w, {m1, m2}, v), cfg);
    });
}

// Initial points: "gaussian" draws N(0, init_scale^2 I); "minimizer" starts
// every particle at the global minimizer of U.
inline void apply_init(const ExperimentConfig& cfg, AsmcOptions& opt) {
    const auto kind = cfg.get<std::string>("init");
    if (kind == "gaussian") {
        const double s = cfg.get<double>("init_scale");
        if (!(s > 0.0)) throw ConfigError("init_scale must be positive");
        opt.initial_sampler = [s](std::size_t, Stream& rng, std::span<double> x) {
            for (double& v : x) v = s * rng.normal();
        };
    } else if (kind != "minimizer") {
        throw ConfigError("init must be 'gaussian' or 'minimizer'");
    }
}

inline AnnealingSchedule ladder(double eta1, double eta, std::size_t M) {
    if (M == 1) return AnnealingSchedule::single(eta);
    return geometric_schedule(eta1, eta, M);
}

inline std::size_t positive(const ExperimentConfig& cfg, const std::string& key, std::size_t min = 1) {
    const auto v = cfg.get<std::size_t>(key);
    if (v < min) throw ConfigError("config key '" + key + "' must be >= " + std::to_string(min));
    return v;
}

struct Band {
    double mean = 0.0, q25 = 0.0, q75 = 0.0, mean_abs_error = 0.0;
};

inline Band band(const std::vector<double>& v, double reference) {
    Band b;
    b.mean = stats::mean(v);
    b.q25 = stats::quantile(v, 0.25);
    b.q75 = stats::quantile(v, 0.75);
    double a = 0.0;
    for (double x : v) a += std::abs(x - reference);
    b.mean_abs_error = a / static_cast<double>(v.size());
    return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fig3_2d: ASMC and LMC traces of E[h] on the planar mixture
// ---------------------------------------------------------------------------

inline ExperimentOutput cmd_fig3_2d(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const auto prob = planar_problem(cfg);
    const auto N = positive(cfg, "N", 2);
    const auto M = positive(cfg, "M");
    const auto T = positive(cfg, "steps_per_level");
    const auto R = positive(cfg, "replicates");
    const auto every = positive(cfg, "checkpoint_every");
    const double dt = cfg.get<double>("dt");
    const bool with_lmc = cfg.get<bool>("lmc");
    const auto grid = cfg.get<std::size_t>("quadrature_grid");
    if (T % every != 0) throw ConfigError("steps_per_level must be a multiple of checkpoint_every");
    if (M >= 2 && !(prob.eta < prob.eta1)) throw ConfigError("need eta < eta1 when M >= 2");
    const auto schedule = as_config_error([&] { return ladder(prob.eta1, prob.eta, M); });
    const auto kernel = as_config_error([&] {
        LangevinConfig c{dt};
        c.validate();
        return LangevinKernel{c, T};
    });

    const std::size_t per_level = T / every;
    const std::size_t points = 1 + M * per_level;  // step 0, then every checkpoint
    std::vector<std::vector<double>> asmc_tr(points), lmc_tr(points);

    // Quadrature reference at each level temperature (planar targets only).
    std::vector<std::optional<double>> level_ref(M);
    if (prob.mixture.dim() <= 2 && grid > 0) {
        if (grid < 64) throw ConfigError("quadrature_grid must be 0 or >= 64");
        for (std::size_t k = 0; k < M; ++k)
            level_ref[k] = quadrature_integral_2d(
                               prob.energy, [&](std::span<const double> x) { return prob.h(x); }, schedule[k], grid,
                               Box{-5.0, 5.0})
                               .value;
    }

    CsvWriter w = start_csv(cfg, {"row", "step", "level", "eta", "level_reference", "reference", "asmc_mean",
                                  "asmc_q25", "asmc_q75", "asmc_mean_abs_error", "lmc_mean", "lmc_q25", "lmc_q75",
                                  "lmc_mean_abs_error"});
    std::size_t done = 0;
    guarded(w, [&] {
        for (std::size_t r = 0; r < R; ++r) {
            AsmcOptions opt;
            opt.N = N;
            opt.seed = replicate_seed(cfg.seed(), 0, r);
            opt.threads = ctx.threads;
            apply_init(cfg, opt);
            opt.checkpoint_every = every;
            std::vector<double> trace(points);
            opt.on_checkpoint = [&](std::size_t k, std::size_t s, const Ensemble& ens) {
                trace[(k - 1) * per_level + s / every] = estimate(ens, [&](auto x) { return prob.h(x); });
            };
            // Step 0 is the initial ensemble, shared with LMC.
            trace[0] = estimate(detail::initial_ensemble(prob.energy, opt), [&](auto x) { return prob.h(x); });
            run_asmc(prob.energy, schedule, kernel, opt);
            for (std::size_t j = 0; j < points; ++j) asmc_tr[j].push_back(trace[j]);

            if (with_lmc) {
                LmcOptions lo;
                lo.N = N;
                lo.steps = M * T;
                lo.dt = dt;
                lo.seed = opt.seed;
                lo.threads = ctx.threads;
                lo.initial_sampler = opt.initial_sampler;
                lo.checkpoint_every = every;
                auto l = run_lmc(prob.energy, prob.eta, lo, [&](auto x) { return prob.h(x); });
                for (std::size_t j = 0; j < points; ++j) lmc_tr[j].push_back(l.trace[j].estimate);
            }
            ++done;
            progress(ctx, "fig3_2d replicate " + std::to_string(r + 1) + "/" + std::to_string(R));
        }
    });

    ExperimentOutput out;
    for (std::size_t j = 0; j < points; ++j) {
        const std::size_t k = j == 0 ? 0 : (j - 1) / per_level;
        const std::size_t step = j == 0 ? 0 : k * T + ((j - 1) % per_level + 1) * every;
        const Band a = band(asmc_tr[j], prob.reference);
        std::vector<CsvCell> row = {std::string("trace"),
                                    static_cast<std::uint64_t>(step),
                                    static_cast<std::uint64_t>(k + 1),
                                    schedule[k],
                                    j == 0 || !level_ref[k] ? CsvCell{} : CsvCell{*level_ref[k]},
                                    prob.reference,
                                    a.mean,
                                    a.q25,
                                    a.q75,
                                    a.mean_abs_error};
        if (with_lmc) {
            const Band l = band(lmc_tr[j], prob.reference);
            row.insert(row.end(), {l.mean, l.q25, l.q75, l.mean_abs_error});
            if (j + 1 == points) {
                out.summary["lmc_final_mean"] = l.mean;
                out.summary["lmc_mean_abs_error"] = l.mean_abs_error;
            }
        } else {
            row.insert(row.end(), {CsvCell{}, CsvCell{}, CsvCell{}, CsvCell{}});
        }
        w.row(row);
        if (j + 1 == points) {
            out.summary["asmc_final_mean"] = a.mean;
            out.summary["asmc_q25"] = a.q25;
            out.summary["asmc_q75"] = a.q75;
            out.summary["asmc_mean_abs_error"] = a.mean_abs_error;
        }
    }
    out.summary["reference"] = prob.reference;
    out.summary["replicates"] = static_cast<double>(done);
    out.csv = w.text();
    return out;
}

// ---------------------------------------------------------------------------
// sweep_n: error against particle count
// ---------------------------------------------------------------------------

inline ExperimentOutput cmd_sweep_n(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const auto prob = planar_problem(cfg);
    const auto M = positive(cfg, "M");
    const auto T = positive(cfg, "steps_per_level");
    const auto R = positive(cfg, "replicates", 2);
    const auto ns = count_list(cfg, "n_values");
    if (ns.empty()) throw ConfigError("n_values must not be empty");
    for (auto n : ns)
        if (n < 2) throw ConfigError("every N in n_values must be >= 2");
    if (M >= 2 && !(prob.eta < prob.eta1)) throw ConfigError("need eta < eta1 when M >= 2");
    const auto schedule = as_config_error([&] { return ladder(prob.eta1, prob.eta, M); });
    const auto kernel = as_config_error([&] {
        LangevinConfig c{cfg.get<double>("dt")};
        c.validate();
        return LangevinKernel{c, T};
    });

    CsvWriter w = start_csv(cfg, {"row", "N", "replicates", "mean_abs_error", "sd_error", "rms_error",
                                  "mean_estimate", "mean_error"});
    // Errors pooled by N; repeated N values add replicates to the same key.
    std::map<std::size_t, std::vector<double>> errors;
    guarded(w, [&] {
        for (std::size_t i = 0; i < ns.size(); ++i) {
            for (std::size_t r = 0; r < R; ++r) {
                AsmcOptions opt;
                opt.N = ns[i];
                opt.seed = replicate_seed(cfg.seed(), i, r);
                opt.threads = ctx.threads;
                apply_init(cfg, opt);
                const auto res = run_asmc(prob.energy, schedule, kernel, opt);
                errors[ns[i]].push_back(estimate(res.ensemble, [&](auto x) { return prob.h(x); }) - prob.reference);
            }
            progress(ctx, "sweep_n N=" + std::to_string(ns[i]) + " done");
        }
    });

    ExperimentOutput out;
    std::vector<double> lx, lmae, lsd, lrms;
    for (const auto& [n, e] : errors) {
        double abs_sum = 0.0, sq = 0.0;
        for (double v : e) {
            abs_sum += std::abs(v);
            sq += v * v;
        }
        const double r = static_cast<double>(e.size());
        const double mae = abs_sum / r, sd = stats::stddev(e), rms = std::sqrt(sq / r), me = stats::mean(e);
        w.row({std::string("n"), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(e.size()), mae, sd, rms,
               prob.reference + me, me});
        out.summary["mean_abs_error_N" + std::to_string(n)] = mae;
        lx.push_back(std::log(static_cast<double>(n)));
        lmae.push_back(std::log(mae));
        lsd.push_back(std::log(sd));
        lrms.push_back(std::log(rms));
    }
    if (errors.size() >= 2) {
        const double s_mae = stats::ols_slope(lx, lmae);
        const double s_sd = stats::ols_slope(lx, lsd);
        const double s_rms = stats::ols_slope(lx, lrms);
        w.row({std::string("slope"), CsvCell{}, CsvCell{}, s_mae, s_sd, s_rms, CsvCell{}, CsvCell{}});
        out.summary["slope_mean_abs_error"] = s_mae;
        out.summary["slope_sd_error"] = s_sd;
    }
    out.summary["reference"] = prob.reference;
    out.csv = w.text();
    return out;
}

// ---------------------------------------------------------------------------
// sweep_mt: levels against steps per level at a fixed budget M*T
// ---------------------------------------------------------------------------

// A run with M levels propagates for T steps at each of eta_1..eta_M and then
// resamples once more into eta, so M = 1 is propagation at eta_1 followed by
// importance resampling to eta.
inline ExperimentOutput cmd_sweep_mt(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const auto prob = isotropic_problem(cfg);
    const auto N = positive(cfg, "N", 2);
    const auto R = positive(cfg, "replicates", 2);
    const auto budget = positive(cfg, "budget");
    auto ms = count_list(cfg, "m_values");
    if (ms.empty()) throw ConfigError("m_values must not be empty");
    std::sort(ms.begin(), ms.end());
    if (std::adjacent_find(ms.begin(), ms.end()) != ms.end()) throw ConfigError("m_values must be distinct");
    for (auto m : ms)
        if (m == 0 || budget % m != 0)
            throw ConfigError("every M must be positive and divide the budget " + std::to_string(budget));
    if (!(prob.eta < prob.eta1)) throw ConfigError("need eta < eta1");
    const double dt = cfg.get<double>("dt");
    as_config_error([&] {
        LangevinConfig{dt}.validate();
        return 0;
    });

    CsvWriter w = start_csv(cfg, {"row", "M", "T", "MT", "replicates", "mean_abs_error", "sd_error",
                                  "q25_abs_error", "median_abs_error", "q75_abs_error", "mean_estimate",
                                  "ratio_to_smallest_m", "ratio_to_largest_m"});
    std::vector<std::vector<double>> est(ms.size());
    guarded(w, [&] {
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const std::size_t M = ms[i], T = budget / M;
            const auto schedule = geometric_schedule(prob.eta1, prob.eta, M + 1);
            const LangevinKernel kernel{LangevinConfig{dt}, T};
            for (std::size_t r = 0; r < R; ++r) {
                AsmcOptions opt;
                opt.N = N;
                opt.seed = replicate_seed(cfg.seed(), i, r);
                opt.threads = ctx.threads;
                opt.propagate_final = false;
                apply_init(cfg, opt);
                const auto res = run_asmc(prob.energy, schedule, kernel, opt);
                est[i].push_back(estimate(res.ensemble, [&](auto x) { return prob.h(x); }));
            }
            progress(ctx, "sweep_mt M=" + std::to_string(M) + " done");
        }
    });

    ExperimentOutput out;
    std::vector<double> mae(ms.size());
    std::vector<std::vector<double>> abs_err(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        for (double v : est[i]) abs_err[i].push_back(std::abs(v - prob.reference));
        mae[i] = stats::mean(abs_err[i]);
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::vector<double> signed_err;
        for (double v : est[i]) signed_err.push_back(v - prob.reference);
        w.row({std::string("m"), static_cast<std::uint64_t>(ms[i]), static_cast<std::uint64_t>(budget / ms[i]),
               static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(R), mae[i], stats::stddev(signed_err),
               stats::quantile(abs_err[i], 0.25), stats::quantile(abs_err[i], 0.5), stats::quantile(abs_err[i], 0.75),
               stats::mean(est[i]), mae[i] / mae.front(), mae[i] / mae.back()});
        out.summary["mean_abs_error_M" + std::to_string(ms[i])] = mae[i];
    }
    // Best interior M and whether it beats both ends by the factor 0.7.
    if (ms.size() >= 3) {
        std::size_t best = 1;
        for (std::size_t i = 1; i + 1 < ms.size(); ++i)
            if (mae[i] < mae[best]) best = i;
        out.summary["best_interior_M"] = static_cast<double>(ms[best]);
        out.summary["best_interior_ratio_to_smallest"] = mae[best] / mae.front();
        out.summary["best_interior_ratio_to_largest"] = mae[best] / mae.back();
        w.comment("best interior M " + std::to_string(ms[best]));
    }
    out.summary["reference"] = prob.reference;
    out.csv = w.text();
    return out;
}

// ---------------------------------------------------------------------------
// local_model_theorem: planned (M, N, T) on a finite space, error against delta
// ---------------------------------------------------------------------------

namespace detail {

struct FiniteProblem {
    FiniteEnergy target;
    std::vector<double> h;  // indicator of h_states
};

inline FiniteProblem finite_problem(const ExperimentConfig& cfg, bool with_h) {
    return as_config_error([&] {
        const auto e = number_list(cfg, "energies");
        const auto m = count_list(cfg, "membership");
        FiniteEnergy target(e, m);
        std::vector<double> h(target.size(), 0.0);
        if (with_h) {
            for (auto s : count_list(cfg, "h_states")) {
                if (s >= target.size()) throw ConfigError("h_states refers to a state beyond the state space");
                h[s] = 1.0;
            }
        }
        return FiniteProblem{std::move(target), std::move(h)};
    });
}

// C_r bound on the counting measure of a finite space for a given schedule.
inline double finite_cr_bound(const FiniteEnergy& target, const AnnealingSchedule& schedule, double eta1) {
    const auto q = tabulate_finite(target).affine(*target.known_inf(), 1.0 / eta1);
    return std::max(1.0, cr_bound(q, eta1 * schedule.inverse_step()).value);
}

}  // namespace detail

inline ExperimentOutput cmd_local_model_theorem(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const auto prob = finite_problem(cfg, true);
    const auto& target = prob.target;
    const double delta = cfg.get<double>("delta"), nu = cfg.get<double>("nu");
    const double eta = cfg.get<double>("eta"), eta1 = cfg.get<double>("eta1");
    const ArrheniusChi chi{cfg.get<double>("chi_A"), cfg.get<double>("chi_gamma")};
    const auto R = positive(cfg, "replicates", 2);
    const auto runner = cfg.get<std::string>("runner");
    if (runner != "occupancy" && runner != "particles") throw ConfigError("runner must be 'occupancy' or 'particles'");
    if (!(chi.A > 0.0) || !(chi.gamma > 0.0)) throw ConfigError("chi_A and chi_gamma must be positive");

    // Constants, then the plan.
    const std::size_t M = as_config_error([&] { return detail::plan_levels(nu, eta, eta1); });
    const auto schedule = as_config_error([&] { return geometric_schedule(eta1, eta, M); });
    const double C_r = finite_cr_bound(target, schedule, eta1);
    const auto clbv = compute_clbv([&](double e) { return target.masses(e); }, eta, eta1);
    const double C_lbv = target.well_count() == 1 ? 0.0 : clbv.value;
    const auto bundle = constants_bundle(target.well_count(), C_r, C_lbv);
    const auto plan = as_config_error([&] { return plan_local(delta, nu, eta, eta1, bundle, chi(eta1)); });
    const auto N_override = cfg.get<std::size_t>("N_override");
    const std::size_t N = N_override > 0 ? N_override : plan.N;
    const auto T = static_cast<std::size_t>(plan.T);

    const auto pi = target.gibbs(eta);
    double reference = 0.0, hmax = 0.0, hmin = 1.0;
    for (std::size_t s = 0; s < target.size(); ++s) {
        reference += pi[s] * prob.h[s];
        hmax = std::max(hmax, prob.h[s]);
        hmin = std::min(hmin, prob.h[s]);
    }
    const double osc = hmax - hmin;

    CsvWriter w = start_csv(cfg, {"section", "key", "value"});
    w.comment("runner " + runner);
    auto kv = [&](const char* section, const std::string& key, CsvCell v) {
        w.row({std::string(section), key, std::move(v)});
    };
    kv("plan", "M", static_cast<std::uint64_t>(plan.M));
    kv("plan", "N", static_cast<std::uint64_t>(N));
    kv("plan", "N_planned", static_cast<std::uint64_t>(plan.N));
    kv("plan", "T", static_cast<std::uint64_t>(T));
    kv("plan", "chi_eta1", chi(eta1));
    kv("constant", "J", static_cast<std::uint64_t>(bundle.J));
    kv("constant", "C_r", C_r);
    kv("constant", "C_LBV", C_lbv);
    kv("constant", "C_beta", *bundle.C_beta);
    kv("constant", "C_T", *bundle.C_T);
    kv("constant", "C_N", *bundle.C_N);
    kv("target", "reference", reference);
    kv("target", "h_osc", osc);

    const auto spec = finite_local_model(target, chi);
    const LocalKernel kernel{&spec, T};
    std::vector<double> errs;
    guarded(w, [&] {
        for (std::size_t r = 0; r < R; ++r) {
            const auto seed = replicate_seed(cfg.seed(), 0, r);
            double est;
            if (runner == "occupancy") {
                est = run_asmc_occupancy(target, schedule, chi, T, N, seed).estimate(prob.h);
            } else {
                AsmcOptions opt;
                opt.N = N;
                opt.seed = seed;
                opt.threads = ctx.threads;
                const auto res = run_asmc(target, schedule, kernel, opt);
                est = estimate(res.ensemble, [&](std::span<const double> x) { return prob.h[FiniteEnergy::state_of(x)]; });
            }
            errs.push_back(est - reference);
            kv("replicate", std::to_string(r), est);
        }
    });
    double sq = 0.0, ab = 0.0;
    for (double e : errs) {
        sq += e * e;
        ab += std::abs(e);
    }
    const double rms = std::sqrt(sq / static_cast<double>(errs.size()));
    const double bound = delta * osc;
    kv("summary", "rms_error", rms);
    kv("summary", "mean_abs_error", ab / static_cast<double>(errs.size()));
    kv("summary", "bound", bound);
    kv("summary", "within_bound", static_cast<std::uint64_t>(rms <= bound ? 1 : 0));
    progress(ctx, "local_model_theorem done");

    ExperimentOutput out;
    out.summary = {{"rms_error", rms},        {"bound", bound},   {"M", double(plan.M)}, {"N", double(N)},
                   {"T", double(T)},          {"C_r", C_r},       {"C_LBV", C_lbv},      {"reference", reference},
                   {"h_osc", osc},            {"C_N", *bundle.C_N}, {"C_T", *bundle.C_T}};
    out.csv = w.text();
    return out;
}

// ---------------------------------------------------------------------------
// constants_report: s_c curve, C_r bound and empirical value, C_LBV, bundle,
// plan, separable-energy table
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> grid_masses(const QuadratureMeasure& q, const std::vector<std::size_t>& cls,
                                       std::size_t wells, double eps) {
    const double umin = q.min_energy();
    std::vector<double> m(wells, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double p = q.weights[i] * std::exp(-(q.energy[i] - umin) / eps);
        m[cls[i]] += p;
        z += p;
    }
    for (double& v : m) v /= z;
    return m;
}

struct TabulatedTarget {
    QuadratureMeasure measure;
    std::vector<std::size_t> classes;
    std::size_t wells = 1;
};

inline TabulatedTarget tabulate_target(const ExperimentConfig& cfg) {
    return as_config_error([&] {
        const auto kind = cfg.get<std::string>("target");
        const auto n = positive(cfg, "grid_n", 2);
        TabulatedTarget t;
        if (kind == "double_well") {
            const DoubleWellTorusEnergy u(cfg.get<std::size_t>("dim"), cfg.get<double>("A"), cfg.get<double>("B"),
                                          cfg.get<double>("C"));
            t.measure = tabulate_grid(u, n);
            t.wells = u.well_count();
            for (std::size_t i = 0; i < t.measure.size(); ++i) t.classes.push_back(u.classify(t.measure.node(i)));
        } else if (kind == "finite") {
            const auto p = finite_problem(cfg, false);
            t.measure = tabulate_finite(p.target);
            t.wells = p.target.well_count();
            t.classes = p.target.membership();
        } else if (kind == "mixture_1d") {
            const auto w = number_list(cfg, "weights"), mu = number_list(cfg, "means"), v = number_list(cfg, "variances");
            std::vector<std::vector<double>> means, vars;
            double span = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i) {
                means.push_back({mu[i]});
                vars.push_back({i < v.size() ? v[i] : 0.0});
                span = std::max(span, std::abs(mu[i]) + 12.0 * std::sqrt(std::max(0.0, vars.back()[0])));
            }
            const GaussianMixtureEnergy mix(w, means, vars);
            const HalfSpaceClassifier split{0, cfg.get<double>("split")};
            t.measure = tabulate_grid(mix, n, Box{-span, span});
            t.wells = 2;
            for (std::size_t i = 0; i < t.measure.size(); ++i) t.classes.push_back(split.classify(t.measure.node(i)));
        } else {
            throw ConfigError("target must be 'double_well', 'finite' or 'mixture_1d'");
        }
        return t;
    });
}

}  // namespace detail

inline ExperimentOutput cmd_constants_report(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const double eta = cfg.get<double>("eta"), eta1 = cfg.get<double>("eta1");
    const double nu = cfg.get<double>("nu"), delta = cfg.get<double>("delta");
    const ArrheniusChi chi{cfg.get<double>("chi_A"), cfg.get<double>("chi_gamma")};
    const auto sc_points = positive(cfg, "sc_points", 2);
    const auto tab = tabulate_target(cfg);
    const std::size_t M = as_config_error([&] { return detail::plan_levels(nu, eta, eta1); });
    const auto schedule = as_config_error([&] { return geometric_schedule(eta1, eta, M); });
    const double nu_eff = eta1 * schedule.inverse_step();
    const auto u0 = tab.measure.affine(tab.measure.min_energy(), 1.0 / eta1);

    CsvWriter w = start_csv(cfg, {"section", "key", "value", "check"});
    ExperimentOutput out;
    auto kv = [&](const char* section, CsvCell key, CsvCell v, CsvCell check = {}) {
        w.row({std::string(section), std::move(key), std::move(v), std::move(check)});
    };
    guarded(w, [&] {
        kv("schedule", std::string("M"), static_cast<std::uint64_t>(M));
        kv("schedule", std::string("nu_effective"), nu_eff);

        const double umax = u0.max_energy();
        if (umax > 0.0) {
            for (std::size_t i = 0; i < sc_points; ++i) {
                const double c = 0.1 * std::pow(10.0 * umax / 0.1, double(i) / double(sc_points - 1));
                try {
                    kv("sc", c, compute_sc(u0, c));
                } catch (const Error&) {
                    kv("sc", c, CsvCell{});
                }
            }
        }
        CrBoundOptions copt;
        copt.points = sc_points;
        const auto crb = cr_bound(u0, nu_eff, copt);
        const double C_r = std::max(1.0, crb.value);
        const auto cre = cr_empirical(tab.measure, schedule);
        kv("cr", std::string("bound"), crb.value);
        kv("cr", std::string("argmin_c"), crb.argmin_c);
        kv("cr", std::string("empirical"), cre.value);
        kv("cr", std::string("bound_minus_empirical"), crb.value - cre.value);
        out.summary["C_r_bound"] = crb.value;
        out.summary["C_r_empirical"] = cre.value;

        double C_lbv = 0.0;
        if (tab.wells > 1) {
            const auto clbv = compute_clbv(
                [&](double e) { return grid_masses(tab.measure, tab.classes, tab.wells, e); }, eta, eta1);
            C_lbv = clbv.value;
            kv("clbv", std::string("value"), clbv.value);
            kv("clbv", std::string("coarse"), clbv.coarse);
            kv("clbv", std::string("extrapolated"), clbv.extrapolated);
            kv("clbv", std::string("flagged"), static_cast<std::uint64_t>(clbv.flagged ? 1 : 0));
        } else {
            kv("clbv", std::string("value"), 0.0);
        }
        out.summary["C_LBV"] = C_lbv;

        const auto b = constants_bundle(tab.wells, C_r, C_lbv);
        const double J = static_cast<double>(tab.wells);
        const double beta_check = std::exp(2.0 * C_r * C_lbv);
        kv("bundle", std::string("J"), static_cast<std::uint64_t>(tab.wells));
        kv("bundle", std::string("C_r"), C_r);
        kv("bundle", std::string("C_beta"), *b.C_beta, beta_check);
        kv("bundle", std::string("C_T"), *b.C_T, 4.0 * J * C_r * (2.0 * beta_check + 1.0));
        kv("bundle", std::string("C_N"), *b.C_N,
           J * J * ((2.0 * beta_check + 1.0) * (2.0 * beta_check + 1.0)) * ((1.0 + C_r) * (1.0 + C_r)));
        out.summary["C_beta"] = *b.C_beta;
        out.summary["C_T"] = *b.C_T;
        out.summary["C_N"] = *b.C_N;

        const auto plan = as_config_error([&] { return plan_local(delta, nu, eta, eta1, b, chi(eta1)); });
        kv("plan", std::string("M"), static_cast<std::uint64_t>(plan.M));
        kv("plan", std::string("N"), static_cast<std::uint64_t>(plan.N));
        kv("plan", std::string("T"), plan.T);

        // Separable energies: 1D double-well marginal times a convex part.
        const auto dims = count_list(cfg, "separable_dims");
        if (!dims.empty()) {
            const DoubleWellTorusEnergy marginal(1, cfg.get<double>("separable_A"), 0.0, 0.0);
            const auto mq = tabulate_grid(marginal, positive(cfg, "grid_n", 2));
            const auto mq0 = mq.affine(mq.min_energy(), 1.0);
            const ConvexPart convex{cfg.get<double>("alpha0"), cfg.get<double>("k0"), cfg.get<double>("alpha_b"),
                                    cfg.get<double>("alpha_u")};
            const auto table = as_config_error([&] { return cr_separable_check(mq0, convex, dims); });
            for (const auto& r : table.rows) kv("separable", static_cast<std::uint64_t>(r.d), r.bound);
            for (auto d : table.skipped) kv("separable_skipped", static_cast<std::uint64_t>(d), CsvCell{});
            if (!table.rows.empty()) kv("separable_spread", std::string("max_over_min"), table.spread);
            out.summary["separable_spread"] = table.spread;
        }
    });
    progress(ctx, "constants_report done");
    out.csv = w.text();
    return out;
}

// ---------------------------------------------------------------------------
// baseline_compare: ASMC, LMC and rejection on the planar mixture
// ---------------------------------------------------------------------------

inline ExperimentOutput cmd_baseline_compare(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using namespace detail;
    const auto prob = planar_problem(cfg);
    const auto N = positive(cfg, "N", 2);
    const auto M = positive(cfg, "M");
    const auto T = positive(cfg, "steps_per_level");
    const auto R = positive(cfg, "replicates", 2);
    const auto budget = positive(cfg, "rejection_budget");
    const double dt = cfg.get<double>("dt");
    const double burn_time = cfg.get<double>("burn_in_time"), burn_dt = cfg.get<double>("burn_in_dt");
    if (M >= 2 && !(prob.eta < prob.eta1)) throw ConfigError("need eta < eta1 when M >= 2");
    const auto schedule = as_config_error([&] { return ladder(prob.eta1, prob.eta, M); });
    const auto kernel = as_config_error([&] {
        LangevinConfig c{dt};
        c.validate();
        return LangevinKernel{c, T};
    });
    const auto burn = as_config_error([&] { return LangevinKernel::for_time(burn_dt, burn_time); });
    const auto start = global_minimizer(prob.energy);
    const auto proposal = langevin_burn_in_proposal(prob.energy, prob.eta1, start, burn_dt, burn_time);
    const double u_min = prob.energy.value(start);
    auto h = [&](std::span<const double> x) { return prob.h(x); };

    CsvWriter w = start_csv(cfg, {"row", "method", "replicates", "cost_gradient_evals", "mean_estimate",
                                  "mean_abs_error", "sd_estimate", "q25_estimate", "q75_estimate", "acceptance_rate",
                                  "reference"});
    std::vector<double> a, l, rj, acc;
    guarded(w, [&] {
        for (std::size_t r = 0; r < R; ++r) {
            AsmcOptions opt;
            opt.N = N;
            opt.seed = replicate_seed(cfg.seed(), 0, r);
            opt.threads = ctx.threads;
            apply_init(cfg, opt);
            a.push_back(estimate(run_asmc(prob.energy, schedule, kernel, opt).ensemble, h));

            LmcOptions lo;
            lo.N = N;
            lo.steps = M * T;
            lo.dt = dt;
            lo.seed = opt.seed;
            lo.threads = ctx.threads;
            lo.initial_sampler = opt.initial_sampler;
            l.push_back(run_lmc(prob.energy, prob.eta, lo, h).trace.back().estimate);

            const auto rej = run_rejection(prob.energy, prob.eta, prob.eta1, proposal, budget,
                                           replicate_seed(cfg.seed(), 1, r), u_min, ctx.threads);
            acc.push_back(rej.acceptance_rate);
            if (rej.accepted > 0) {
                double s = 0.0;
                for (std::size_t i = 0; i < rej.size(); ++i) s += h(rej.sample(i));
                rj.push_back(s / static_cast<double>(rej.size()));
            }
            progress(ctx, "baseline_compare replicate " + std::to_string(r + 1) + "/" + std::to_string(R));
        }
    });

    ExperimentOutput out;
    auto emit = [&](const char* method, const std::vector<double>& v, double cost, CsvCell acceptance) {
        if (v.empty()) {
            w.row({std::string("method"), std::string(method), std::uint64_t{0}, cost, CsvCell{}, CsvCell{}, CsvCell{},
                   CsvCell{}, CsvCell{}, acceptance, prob.reference});
            out.warnings.push_back(std::string(method) + ": no estimates");
            return;
        }
        const Band b = band(v, prob.reference);
        w.row({std::string("method"), std::string(method), static_cast<std::uint64_t>(v.size()), cost, b.mean,
               b.mean_abs_error, stats::stddev(v), b.q25, b.q75, acceptance, prob.reference});
        out.summary[std::string(method) + "_mean_abs_error"] = b.mean_abs_error;
    };
    const double grad_evals = static_cast<double>(N) * static_cast<double>(M * T);
    emit("asmc", a, grad_evals, CsvCell{});
    emit("lmc", l, grad_evals, CsvCell{});
    emit("rejection", rj, static_cast<double>(budget) * static_cast<double>(burn.steps), stats::mean(acc));
    if (rj.size() < R)
        w.comment("rejection produced no accepted sample in " + std::to_string(R - rj.size()) + " replicate(s)");
    out.summary["reference"] = prob.reference;
    out.csv = w.text();
    return out;
}

// Dispatch by experiment name.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    const auto& n = cfg.name();
    if (n == "fig3_2d") return cmd_fig3_2d(cfg, ctx);
    if (n == "sweep_n") return cmd_sweep_n(cfg, ctx);
    if (n == "sweep_mt") return cmd_sweep_mt(cfg, ctx);
    if (n == "local_model_theorem") return cmd_local_model_theorem(cfg, ctx);
    if (n == "constants_report") return cmd_constants_report(cfg, ctx);
    if (n == "baseline_compare") return cmd_baseline_compare(cfg, ctx);
    throw ConfigError("unknown experiment '" + n + "'");
}

}  // namespace asmc

#endif  // ASMC_EXPERIMENTS_HPP

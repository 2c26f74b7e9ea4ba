#ifndef ASMC_DRIVER_HPP
#define ASMC_DRIVER_HPP

// Annealed sequential Monte Carlo: propagate for T at eta_k, reweight by
// pi~_{k+1}/pi~_k, resample, repeat; then propagate at eta_M and return.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "asmc/annealing.hpp"
#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/parallel.hpp"
#include "asmc/random.hpp"
#include "asmc/resampler.hpp"
#include "asmc/targets.hpp"

namespace asmc {

struct Ensemble {
    std::size_t level = 0;  // 1-based level the positions belong to
    std::size_t dim = 1;
    std::vector<double> positions;    // particle-major, N * dim
    std::vector<double> log_weights;  // empty: equally weighted
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return dim ? positions.size() / dim : 0; }
    std::span<const double> particle(std::size_t i) const { return {positions.data() + i * dim, dim}; }
    std::span<double> particle(std::size_t i) { return {positions.data() + i * dim, dim}; }
};

struct LevelRow {
    std::size_t k = 0;  // 1-based
    double eta = 0.0;
    std::optional<double> ess;             // of the weights towards level k+1
    std::optional<double> max_log_weight;  // idem
    bool resampled = false;
    std::vector<double> mass_fractions;  // after propagation at level k
    double wall_seconds = 0.0;
};

struct RunReport {
    std::vector<LevelRow> rows;
    std::size_t kernel_invocations = 0;
    std::size_t resample_invocations = 0;
};

struct AsmcResult {
    Ensemble ensemble;
    RunReport report;
};

struct AsmcOptions {
    std::size_t N = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    // Initial points: `initial_points` holds either one point (copied to every
    // particle) or N points. If empty and `initial_sampler` is unset, every
    // particle starts at the global minimizer of U.
    std::vector<double> initial_points;
    std::function<void(std::size_t i, Stream&, std::span<double>)> initial_sampler;

    // Domain classifier for per-level mass fractions; unset -> single domain.
    std::function<std::size_t(std::span<const double>)> classify;
    std::size_t wells = 1;

    // Resample only when ESS/N < threshold. Unset: resample at every level.
    std::optional<double> ess_threshold;

    // false: the last level only receives the resampled ensemble and is not
    // propagated, so a two-level schedule is propagation at eta_1 followed by
    // importance resampling to eta_2.
    bool propagate_final = true;

    // Called every `checkpoint_every` propagation steps with
    // (level k 1-based, step within level, positions); 0 disables.
    std::size_t checkpoint_every = 0;
    std::function<void(std::size_t, std::size_t, const Ensemble&)> on_checkpoint;
    std::function<void(const LevelRow&)> on_level;
};

template <class E>
concept HasArgminState = requires(const E& e) {
    { e.argmin() } -> std::convertible_to<std::size_t>;
};

// Global minimizer of U: the lowest-energy state on finite spaces, otherwise the
// best local descent from the model's start points.
template <Energy E>
std::vector<double> global_minimizer(const E& model) {
    if constexpr (HasArgminState<E>) {
        return {static_cast<double>(model.argmin())};
    } else if constexpr (HasDescentStarts<E>) {
        return find_global_minimum(model, model.descent_starts()).point;
    } else {
        throw ArgumentError("model has no way to locate its global minimizer; supply initial points");
    }
}

namespace detail {

template <Energy E>
Ensemble initial_ensemble(const E& model, const AsmcOptions& opt) {
    const std::size_t d = model.domain().dim;
    Ensemble ens;
    ens.level = 1;
    ens.dim = d;
    ens.seed = opt.seed;
    ens.positions.resize(opt.N * d);
    if (opt.initial_sampler) {
        for (std::size_t i = 0; i < opt.N; ++i) {
            Stream rng(opt.seed, StreamPurpose::initialize, 0, i);
            opt.initial_sampler(i, rng, ens.particle(i));
        }
    } else {
        std::vector<double> pts = opt.initial_points.empty() ? global_minimizer(model) : opt.initial_points;
        if (pts.size() == d) {
            for (std::size_t i = 0; i < opt.N; ++i) std::copy(pts.begin(), pts.end(), ens.particle(i).begin());
        } else if (pts.size() == opt.N * d) {
            ens.positions = std::move(pts);
        } else {
            throw ArgumentError("initial points must hold one point or N points");
        }
    }
    for (std::size_t i = 0; i < opt.N; ++i) {
        model.domain().wrap(ens.particle(i));
        if (!model.domain().contains(ens.particle(i)))
            throw ArgumentError("initial point " + std::to_string(i) + " is outside the domain");
    }
    return ens;
}

inline std::vector<double> mass_fractions_of(const Ensemble& ens, const AsmcOptions& opt) {
    std::vector<double> m(std::max<std::size_t>(opt.wells, 1), 0.0);
    const std::size_t n = ens.size();
    if (!opt.classify) {
        m[0] = 1.0;
        return m;
    }
    double total = 0.0;
    std::vector<double> w(n, 1.0);
    if (!ens.log_weights.empty()) {
        WeightVector wv(ens.log_weights);
        w = wv.probabilities();
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = opt.classify(ens.particle(i));
        if (j >= m.size()) throw ArgumentError("classifier returned an out-of-range domain index");
        m[j] += w[i];
        total += w[i];
    }
    for (double& v : m) v /= total;
    return m;
}

// Particles per lockstep block for kernels that support block advancement.
inline constexpr std::size_t propagation_block = 4;

template <Energy E, class Kernel>
void advance_range(const E& model, const Kernel& kernel, Ensemble& ens, double eps, std::span<Stream> rngs,
                   std::size_t first, std::size_t n, std::size_t k) {
    if constexpr (std::is_same_v<Kernel, LangevinKernel>) {
        langevin_advance_block(kernel, model, std::span<double>(ens.positions).subspan(first * ens.dim, rngs.size() * ens.dim),
                               eps, rngs, n, static_cast<long>(k + 1), static_cast<long>(first));
    } else {
        for (std::size_t p = 0; p < rngs.size(); ++p)
            kernel.advance(model, ens.particle(first + p), eps, rngs[p], n, static_cast<long>(k + 1),
                           static_cast<long>(first + p));
    }
}

// One stream per particle slot for the whole run, keyed (seed, propagate, 0, i).
// Slot i keeps drawing from the same stream at every level, whichever particle
// resampling put there.
inline std::vector<Stream> slot_streams(std::uint64_t seed, std::size_t n) {
    std::vector<Stream> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) streams.emplace_back(seed, StreamPurpose::propagate, 0, i);
    return streams;
}

template <Energy E, class Kernel>
void propagate_level(const E& model, const Kernel& kernel, Ensemble& ens, double eps, std::size_t k,
                     std::vector<Stream>& streams, const AsmcOptions& opt) {
    const std::size_t n = ens.size();
    const std::size_t steps = kernel.steps_per_level();
    const std::size_t B = propagation_block;
    const std::size_t blocks = (n + B - 1) / B;
    const bool checkpoints = opt.checkpoint_every > 0 && opt.on_checkpoint;
    const std::size_t every = checkpoints ? opt.checkpoint_every : std::max<std::size_t>(steps, 1);
    std::size_t done = 0;
    while (done < steps) {
        const std::size_t chunk = std::min(every, steps - done);
        parallel_for(blocks, opt.threads, [&](std::size_t blk) {
            const std::size_t first = blk * B;
            const std::size_t cnt = std::min(B, n - first);
            advance_range(model, kernel, ens, eps, std::span<Stream>(streams).subspan(first, cnt), first, chunk, k);
            for (std::size_t i = first; i < first + cnt; ++i)
                for (double v : ens.particle(i))
                    if (!std::isfinite(v))
                        throw PropagationError("particle " + std::to_string(i) + " became non-finite at level " +
                                                   std::to_string(k + 1),
                                               static_cast<long>(k + 1), static_cast<long>(i));
        });
        done += chunk;
        if (checkpoints) opt.on_checkpoint(k + 1, done, ens);
    }
}

}  // namespace detail

// Runs ASMC over `schedule` with the given kernel. Deterministic given opt.seed
// and independent of opt.threads.
template <Energy E, class Kernel>
AsmcResult run_asmc(const E& model, const AnnealingSchedule& schedule, const Kernel& kernel,
                    const AsmcOptions& opt) {
    const std::size_t M = schedule.size();
    if (M < 1) throw ArgumentError("schedule is empty");
    if (opt.N < 1 || (M >= 2 && opt.N < 2)) throw ArgumentError("need N >= 2 particles when M >= 2");
    if (opt.ess_threshold && !(*opt.ess_threshold > 0.0 && *opt.ess_threshold <= 1.0))
        throw ArgumentError("ESS threshold must lie in (0, 1]");

    AsmcResult out;
    out.ensemble = detail::initial_ensemble(model, opt);
    auto& ens = out.ensemble;
    const std::size_t d = ens.dim;
    const double N = static_cast<double>(opt.N);
    std::vector<Stream> streams = detail::slot_streams(opt.seed, opt.N);

    for (std::size_t k = 0; k < M; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        ens.level = k + 1;
        LevelRow row;
        row.k = k + 1;
        row.eta = schedule[k];

        if (k + 1 < M || opt.propagate_final) {
            detail::propagate_level(model, kernel, ens, schedule[k], k, streams, opt);
            ++out.report.kernel_invocations;
        }
        row.mass_fractions = detail::mass_fractions_of(ens, opt);

        if (k + 1 < M) {
            WeightVector w = [&] {
                try {
                    auto inc = inter_level_log_weights(std::span<const double>(ens.positions), d, model, schedule[k],
                                                       schedule[k + 1]);
                    if (ens.log_weights.empty()) return inc;
                    std::vector<double> l = inc.log_weights();
                    for (std::size_t i = 0; i < l.size(); ++i) l[i] += ens.log_weights[i];
                    return WeightVector(std::move(l));
                } catch (const DegenerateWeightsError& e) {
                    throw DegenerateWeightsError(std::string(e.what()) + " at level " + std::to_string(k + 1),
                                                 static_cast<long>(k + 1));
                }
            }();
            row.ess = std::clamp(effective_sample_size(w), 1.0, N);
            row.max_log_weight = w.max_log_weight();
            if (!opt.ess_threshold || *row.ess / N < *opt.ess_threshold) {
                Stream rng(opt.seed, StreamPurpose::resample, k, 0);
                ens.positions = resample(std::span<const double>(ens.positions), d, w, rng);
                ens.log_weights.clear();
                row.resampled = true;
                ++out.report.resample_invocations;
            } else {
                ens.log_weights = w.log_weights();
            }
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opt.on_level) opt.on_level(row);
        out.report.rows.push_back(std::move(row));
    }
    return out;
}

// (1/N) sum h(x_i), or the self-normalized weighted average when weights are carried.
template <class H>
double estimate(const Ensemble& ens, H&& h) {
    const std::size_t n = ens.size();
    if (n == 0) throw ArgumentError("empty ensemble");
    if (ens.log_weights.empty()) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += h(ens.particle(i));
        return s / static_cast<double>(n);
    }
    WeightVector w(ens.log_weights);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w.probabilities()[i] * h(ens.particle(i));
    return s;
}

// Occupancy-count form of ASMC for the local model on a finite state space.
// Particles are exchangeable and move independently, so the vector of state
// counts after T steps is a sum of multinomials with rows of P^T, and resampling
// is one multinomial over states. Same law as run_asmc with LocalKernel at a
// cost independent of N.
struct OccupancyResult {
    std::vector<std::uint64_t> counts;
    RunReport report;

    double estimate(std::span<const double> h) const {
        double s = 0.0, n = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            s += static_cast<double>(counts[i]) * h[i];
            n += static_cast<double>(counts[i]);
        }
        return s / n;
    }
};

namespace detail {

// Multinomial(n, p) by sequential conditional binomials.
inline void add_multinomial(std::uint64_t n, std::span<const double> p, Stream& rng, std::vector<std::uint64_t>& out) {
    double rest = 1.0;
    for (std::size_t i = 0; i < p.size() && n > 0; ++i) {
        if (i + 1 == p.size() || rest <= 0.0) {
            out[i] += n;
            return;
        }
        const double q = std::clamp(p[i] / rest, 0.0, 1.0);
        const std::uint64_t c = q >= 1.0 ? n : std::binomial_distribution<std::uint64_t>(n, q)(rng.engine());
        out[i] += c;
        n -= c;
        rest -= p[i];
    }
}

}  // namespace detail

inline OccupancyResult run_asmc_occupancy(const FiniteEnergy& target, const AnnealingSchedule& schedule,
                                          const std::function<double(double)>& chi, std::size_t steps,
                                          std::size_t N, std::uint64_t seed,
                                          std::optional<std::size_t> initial_state = std::nullopt) {
    const std::size_t S = target.size();
    const std::size_t M = schedule.size();
    if (N < 1 || (M >= 2 && N < 2)) throw ArgumentError("need N >= 2 particles when M >= 2");
    if (steps < 1) throw ArgumentError("need at least one step per level");
    OccupancyResult out;
    out.counts.assign(S, 0);
    out.counts.at(initial_state.value_or(target.argmin())) = N;
    for (std::size_t k = 0; k < M; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const double eps = schedule[k];
        const double c = chi(eps);
        if (!(c >= 0.0 && c < 1.0)) throw InvariantError("chi(eps) must lie in [0, 1)");
        const Matrix P = local_transition_matrix(target, c, eps, steps);
        Stream rng(seed, StreamPurpose::propagate, k, 0);
        std::vector<std::uint64_t> next(S, 0);
        for (std::size_t s = 0; s < S; ++s)
            if (out.counts[s] > 0) detail::add_multinomial(out.counts[s], P[s], rng, next);
        out.counts = std::move(next);
        ++out.report.kernel_invocations;

        LevelRow row;
        row.k = k + 1;
        row.eta = eps;
        row.mass_fractions.assign(target.well_count(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            row.mass_fractions[target.membership()[s]] += static_cast<double>(out.counts[s]) / static_cast<double>(N);

        if (k + 1 < M) {
            const double dbeta = 1.0 / schedule[k + 1] - 1.0 / eps;
            std::vector<double> l(S, -std::numeric_limits<double>::infinity());
            for (std::size_t s = 0; s < S; ++s)
                if (out.counts[s] > 0)
                    l[s] = std::log(static_cast<double>(out.counts[s])) - dbeta * target.energies()[s];
            WeightVector w(std::move(l));
            double sum_sq = 0.0;  // ESS of the per-particle weights
            for (std::size_t s = 0; s < S; ++s)
                if (out.counts[s] > 0)
                    sum_sq += w.probabilities()[s] * w.probabilities()[s] / static_cast<double>(out.counts[s]);
            row.ess = std::clamp(1.0 / sum_sq, 1.0, static_cast<double>(N));
            double max_l = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < S; ++s)
                if (out.counts[s] > 0) max_l = std::max(max_l, -dbeta * target.energies()[s]);
            row.max_log_weight = max_l;
            Stream rr(seed, StreamPurpose::resample, k, 0);
            std::vector<std::uint64_t> res(S, 0);
            detail::add_multinomial(N, w.probabilities(), rr, res);
            out.counts = std::move(res);
            row.resampled = true;
            ++out.report.resample_invocations;
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.report.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace asmc

#endif  // ASMC_DRIVER_HPP

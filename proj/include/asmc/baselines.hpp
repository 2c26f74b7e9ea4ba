#ifndef ASMC_BASELINES_HPP
#define ASMC_BASELINES_HPP

// Reference samplers for comparison with ASMC: independent Langevin chains at
// the target temperature, and rejection from a higher-temperature proposal.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asmc/driver.hpp"
#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/parallel.hpp"
#include "asmc/random.hpp"
#include "asmc/targets.hpp"

namespace asmc {

enum class BaselineKind { lmc, rejection };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::lmc;
    std::size_t N = 1000;         // chains (lmc) or proposals (rejection)
    std::size_t steps = 1000;     // lmc steps per chain
    double dt = 0.001;            // lmc
    double eta1 = 1.0;            // rejection proposal temperature

    void validate() const {
        if (N == 0) throw ConfigError("baseline budget N must be positive");
        if (kind == BaselineKind::lmc) {
            LangevinConfig{dt}.validate();
        } else if (!(eta1 > 0.0)) {
            throw ConfigError("proposal temperature must be positive");
        }
    }
};

struct TracePoint {
    std::size_t step = 0;
    double estimate = 0.0;
};

struct LmcResult {
    Ensemble samples;
    std::vector<TracePoint> trace;  // estimate of h every checkpoint, step 0 included
};

struct LmcOptions {
    std::size_t N = 1000;
    std::size_t steps = 1000;
    double dt = 0.001;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<double> initial_points;  // one point or N points; empty: global minimizer
    std::function<void(std::size_t i, Stream&, std::span<double>)> initial_sampler;
    std::size_t checkpoint_every = 0;  // 0: trace holds the start and the end only
};

// N independent Euler-Maruyama chains at temperature eta. Chain i draws from
// stream (seed, propagate, 0, i), so with the same seed and initial points the
// chains coincide with a single-level ASMC run; the initial draw uses the same
// streams as the driver.
template <Energy E, class H>
LmcResult run_lmc(const E& model, double eta, const LmcOptions& opt, H&& h) {
    if (!(eta > 0.0)) throw ArgumentError("temperature must be positive");
    if (opt.N == 0) throw ArgumentError("need at least one chain");
    LangevinConfig cfg{opt.dt};
    cfg.validate();

    AsmcOptions init;
    init.N = opt.N;
    init.seed = opt.seed;
    init.initial_points = opt.initial_points;
    init.initial_sampler = opt.initial_sampler;
    LmcResult out;
    out.samples = detail::initial_ensemble(model, init);
    auto& ens = out.samples;
    out.trace.push_back({0, estimate(ens, h)});
    if (opt.steps == 0) return out;

    const LangevinKernel kernel{cfg, opt.steps};
    const std::size_t n = ens.size();
    std::vector<Stream> streams = detail::slot_streams(opt.seed, n);
    const std::size_t B = detail::propagation_block;
    const std::size_t blocks = (n + B - 1) / B;
    const std::size_t every = opt.checkpoint_every == 0 ? opt.steps : opt.checkpoint_every;
    std::size_t done = 0;
    while (done < opt.steps) {
        const std::size_t chunk = std::min(every, opt.steps - done);
        detail::parallel_for(blocks, opt.threads, [&](std::size_t blk) {
            const std::size_t first = blk * B;
            const std::size_t cnt = std::min(B, n - first);
            detail::advance_range(model, kernel, ens, eta, std::span<Stream>(streams).subspan(first, cnt), first,
                                  chunk, 0);
        });
        done += chunk;
        for (double v : ens.positions)
            if (!std::isfinite(v)) throw PropagationError("Langevin chain became non-finite", 1, -1);
        out.trace.push_back({done, estimate(ens, h)});
    }
    return out;
}

struct RejectionResult {
    std::size_t dim = 1;
    std::vector<double> samples;  // accepted points, point-major
    std::size_t proposed = 0;
    std::size_t accepted = 0;
    double acceptance_rate = 0.0;
    std::optional<std::string> warning;

    std::size_t size() const noexcept { return dim ? samples.size() / dim : 0; }
    std::span<const double> sample(std::size_t i) const { return {samples.data() + i * dim, dim}; }
};

using ProposalSampler = std::function<void(Stream&, std::span<double>)>;

// Dominated rejection: propose from pi_eta1, accept with probability
// exp(-(1/eta - 1/eta1)(U(x) - U_min)), whose supremum is 1. Proposal i uses
// stream (seed, proposal, 0, i) so the accepted set is thread-independent.
template <Energy E>
RejectionResult run_rejection(const E& model, double eta, double eta1, const ProposalSampler& proposal,
                              std::size_t budget, std::uint64_t seed, std::optional<double> u_min = std::nullopt,
                              unsigned threads = 1) {
    if (!(eta > 0.0) || !(eta1 >= eta)) throw ArgumentError("need 0 < eta <= eta1");
    if (budget == 0) throw ArgumentError("proposal budget must be positive");
    if (!proposal) throw ArgumentError("proposal sampler is required");
    const double umin = u_min ? *u_min : [&] {
        if constexpr (HasKnownInf<E>) {
            if (auto v = model.known_inf()) return *v;
        }
        return model.value(global_minimizer(model));
    }();
    const double dbeta = 1.0 / eta - 1.0 / eta1;
    const std::size_t d = model.domain().dim;

    std::vector<double> draws(budget * d);
    std::vector<char> keep(budget, 0);
    detail::parallel_for(budget, threads, [&](std::size_t i) {
        Stream rng(seed, StreamPurpose::proposal, 0, i);
        std::span<double> x(draws.data() + i * d, d);
        proposal(rng, x);
        const double u = model.value(x);
        if (std::isnan(u)) throw EvaluationError("energy is NaN at x = " + format_point(x));
        if (u < umin - 1e-9 * std::max(1.0, std::abs(umin)))
            throw InvariantError("proposal found U below the supplied minimum at x = " + format_point(x));
        const double log_a = -dbeta * std::max(0.0, u - umin);
        keep[i] = std::log(rng.uniform()) < log_a ? 1 : 0;
    });

    RejectionResult out;
    out.dim = d;
    out.proposed = budget;
    for (std::size_t i = 0; i < budget; ++i) {
        if (!keep[i]) continue;
        out.samples.insert(out.samples.end(), draws.begin() + static_cast<std::ptrdiff_t>(i * d),
                           draws.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        ++out.accepted;
    }
    out.acceptance_rate = static_cast<double>(out.accepted) / static_cast<double>(budget);
    if (out.accepted == 0)
        out.warning = "no proposal accepted in a budget of " + std::to_string(budget) + "; output is empty";
    return out;
}

// Proposal from pi_eta1 by Langevin burn-in: each draw starts at `start` and
// runs for `burn_in_time` at eta1.
template <Energy E>
ProposalSampler langevin_burn_in_proposal(const E& model, double eta1, std::vector<double> start, double dt,
                                          double burn_in_time = 50.0) {
    LangevinKernel kernel = LangevinKernel::for_time(dt, burn_in_time);
    return [&model, eta1, start = std::move(start), kernel](Stream& rng, std::span<double> out) {
        std::copy(start.begin(), start.end(), out.begin());
        kernel.advance(model, out, eta1, rng, kernel.steps, -1, -1);
    };
}

// Proposal from pi_eta1 by the model's exact sampler.
template <Energy E>
    requires ExactSampler<E>
ProposalSampler exact_proposal(const E& model, double eta1) {
    return [&model, eta1](Stream& rng, std::span<double> out) { model.sample(eta1, rng, out); };
}

}  // namespace asmc

#endif  // ASMC_BASELINES_HPP

#ifndef ASMC_KERNELS_HPP
#define ASMC_KERNELS_HPP

// Markov kernels whose stationary law is the Gibbs measure at temperature eps:
// Euler-Maruyama overdamped Langevin dynamics and the idealized local mixing model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asmc/annealing.hpp"
#include "asmc/errors.hpp"
#include "asmc/random.hpp"
#include "asmc/targets.hpp"

namespace asmc {

using Matrix = std::vector<std::vector<double>>;

struct LangevinConfig {
    double dt = 0.05;

    void validate() const {
        if (!(dt > 0.0)) throw ArgumentError("Langevin dt must be positive");
        if (dt > 0.1) throw ArgumentError("Langevin dt must be <= 0.1");
    }
    double steps_per_unit() const noexcept { return 1.0 / dt; }
    double noise_scale(double eps) const noexcept { return std::sqrt(2.0 * eps * dt); }

    // ceil(total_time / dt), ignoring roundoff in the quotient (0.5/0.001 -> 500).
    std::size_t steps_for(double total_time) const {
        if (!(total_time > 0.0)) throw ArgumentError("total time must be positive");
        const double r = total_time / dt;
        const double n = std::round(r);
        if (std::abs(r - n) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(n);
        return static_cast<std::size_t>(std::ceil(r));
    }
};

namespace detail {

// One Euler-Maruyama step in place; g is scratch of size d. Returns false if the
// gradient is not finite.
template <Energy E>
bool langevin_update(const E& model, std::span<double> x, double eps, double dt, std::span<const double> xi,
                     std::span<double> g) {
    model.gradient(x, g);
    const double s = std::sqrt(2.0 * eps * dt);
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!std::isfinite(g[j])) return false;
        x[j] += -g[j] * dt + s * xi[j];
    }
    model.domain().wrap(x);
    return true;
}

}  // namespace detail

// x' = x - grad U(x) dt + sqrt(2 eps dt) xi, wrapped into the torus cell if needed.
template <Energy E>
std::vector<double> langevin_step(std::span<const double> x, const E& model, double eps, double dt,
                                  std::span<const double> xi) {
    if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
    if (!(eps > 0.0)) throw ArgumentError("temperature must be positive");
    std::vector<double> y(x.begin(), x.end()), g(x.size());
    if (!detail::langevin_update(model, std::span<double>(y), eps, dt, xi, std::span<double>(g)))
        throw EvaluationError("gradient is not finite at x = " + format_point(x));
    return y;
}

// Overdamped Langevin propagation as a driver kernel: `steps` steps per level.
struct LangevinKernel {
    LangevinConfig config;
    std::size_t steps = 1;

    static LangevinKernel for_time(double dt, double total_time) {
        LangevinConfig c{dt};
        c.validate();
        return {c, c.steps_for(total_time)};
    }

    std::size_t steps_per_level() const noexcept { return steps; }

    // Advances one particle by n steps at temperature eps; consumes n*d normals.
    template <Energy E>
    void advance(const E& model, std::span<double> x, double eps, Stream& rng, std::size_t n, long level,
                 long particle) const {
        const std::size_t d = x.size();
        double gbuf[16], xbuf[16];
        std::vector<double> gv, xv;
        std::span<double> g, xi;
        if (d <= 16) {
            g = std::span<double>(gbuf, d);
            xi = std::span<double>(xbuf, d);
        } else {
            gv.resize(d);
            xv.resize(d);
            g = gv;
            xi = xv;
        }
        for (std::size_t s = 0; s < n; ++s) {
            rng.fill_normal(xi);
            if (!detail::langevin_update(model, x, eps, config.dt, xi, g))
                throw PropagationError("non-finite gradient for particle " + std::to_string(particle) +
                                           " at level " + std::to_string(level),
                                       level, particle);
        }
    }
};

// Advances a block of consecutive particles (rngs.size() of them, stored
// contiguously in xs) in lockstep. Each particle draws only from its own
// stream, so the result equals calling advance() on each one; interleaving
// independent chains hides the latency of the gradient evaluation.
template <Energy E>
void langevin_advance_block(const LangevinKernel& kernel, const E& model, std::span<double> xs, double eps,
                            std::span<Stream> rngs, std::size_t n, long level, long first) {
    const std::size_t b = rngs.size();
    if (b == 0) return;
    const std::size_t d = xs.size() / b;
    double gbuf[64], xbuf[64];
    std::vector<double> gv, xv;
    double* g = gbuf;
    double* xi = xbuf;
    if (b * d > 64) {
        gv.resize(b * d);
        xv.resize(b * d);
        g = gv.data();
        xi = xv.data();
    }
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t p = 0; p < b; ++p) {
            std::span<double> xip(xi + p * d, d);
            rngs[p].fill_normal(xip);
            if (!detail::langevin_update(model, xs.subspan(p * d, d), eps, kernel.config.dt, xip,
                                         std::span<double>(g + p * d, d)))
                throw PropagationError("non-finite gradient for particle " + std::to_string(first + long(p)) +
                                           " at level " + std::to_string(level),
                                       level, first + static_cast<long>(p));
        }
    }
}

// Runs ceil(total_time/dt) steps from x0 using `rng`.
template <Energy E>
std::vector<double> langevin_run(std::span<const double> x0, const E& model, double eps, double total_time,
                                 double dt, Stream& rng) {
    auto kernel = LangevinKernel::for_time(dt, total_time);
    std::vector<double> x(x0.begin(), x0.end());
    kernel.advance(model, std::span<double>(x), eps, rng, kernel.steps, -1, 0);
    return x;
}

// chi_eps = exp(-A exp(-gamma/eps)): the stay probability of the local model.
struct ArrheniusChi {
    double A = 1.0;
    double gamma = 1.0;
    double operator()(double eps) const { return std::exp(-A * std::exp(-gamma / eps)); }
};

// Idealized local mixing model on a partition Omega_1..Omega_J.
struct LocalModelSpec {
    using Sampler = std::function<void(double eps, Stream&, std::span<double> out)>;
    using ConditionalSampler = std::function<void(std::size_t j, double eps, Stream&, std::span<double> out)>;

    std::size_t J = 1;
    std::size_t dim = 1;
    std::function<std::size_t(std::span<const double>)> membership;
    std::function<double(double)> chi;
    ConditionalSampler conditional_sampler;
    Sampler global_sampler;
    std::function<std::vector<double>(double)> masses;  // may be empty

    double stay_probability(double eps) const {
        const double c = chi(eps);
        if (!(c >= 0.0 && c < 1.0)) throw InvariantError("chi(eps) must lie in [0, 1)");
        return c;
    }
};

// One step of the local model: with probability chi stay in the current domain
// and redraw from pi_eps conditioned on it, otherwise draw from pi_eps globally.
inline void local_step_inplace(std::span<double> x, double eps, const LocalModelSpec& spec, Stream& rng) {
    const double chi = spec.stay_probability(eps);
    const std::size_t j = spec.membership(x);
    if (rng.uniform() < chi) {
        spec.conditional_sampler(j, eps, rng, x);
        if (spec.membership(x) != j)
            throw InvariantError("conditional sampler for domain " + std::to_string(j) +
                                 " returned a point outside it: " + format_point(x));
    } else {
        spec.global_sampler(eps, rng, x);
    }
}

inline std::vector<double> local_step(std::span<const double> x, double eps, const LocalModelSpec& spec,
                                      Stream& rng) {
    std::vector<double> y(x.begin(), x.end());
    local_step_inplace(std::span<double>(y), eps, spec, rng);
    return y;
}

// The local model as a driver kernel: `steps` discrete steps per level.
struct LocalKernel {
    const LocalModelSpec* spec = nullptr;
    std::size_t steps = 1;

    std::size_t steps_per_level() const noexcept { return steps; }

    template <class E>
    void advance(const E&, std::span<double> x, double eps, Stream& rng, std::size_t n, long, long) const {
        for (std::size_t s = 0; s < n; ++s) local_step_inplace(x, eps, *spec, rng);
    }
};

namespace detail {

inline std::size_t draw_categorical(std::span<const double> p, Stream& rng) {
    double u = rng.uniform();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (u < p[i]) return i;
        u -= p[i];
    }
    // roundoff: return the last state with positive probability
    for (std::size_t i = p.size(); i-- > 0;)
        if (p[i] > 0.0) return i;
    return p.size() - 1;
}

}  // namespace detail

// Exact local model on a finite state space.
inline LocalModelSpec finite_local_model(const FiniteEnergy& target, std::function<double(double)> chi) {
    LocalModelSpec s;
    s.J = target.well_count();
    s.dim = 1;
    s.membership = [&target](std::span<const double> x) { return target.classify(x); };
    s.chi = std::move(chi);
    s.global_sampler = [&target](double eps, Stream& rng, std::span<double> out) {
        const auto p = target.gibbs(eps);
        out[0] = static_cast<double>(detail::draw_categorical(p, rng));
    };
    s.conditional_sampler = [&target](std::size_t j, double eps, Stream& rng, std::span<double> out) {
        auto p = target.gibbs(eps);
        double mass = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (target.membership()[i] != j) p[i] = 0.0;
            mass += p[i];
        }
        for (double& v : p) v /= mass;
        out[0] = static_cast<double>(detail::draw_categorical(p, rng));
    };
    s.masses = [&target](double eps) { return target.masses(eps); };
    return s;
}

// Local model for a Gaussian mixture split by a half-space: global draws are
// exact mixture draws, conditional draws reject against the half-space.
// Masses are computed by the caller-provided function, if any.
template <class Mixture>
LocalModelSpec mixture_local_model(const Mixture& mixture, HalfSpaceClassifier split,
                                   std::function<double(double)> chi,
                                   std::function<std::vector<double>(double)> masses = {}) {
    LocalModelSpec s;
    s.J = 2;
    s.dim = mixture.domain().dim;
    s.membership = [split](std::span<const double> x) { return split.classify(x); };
    s.chi = std::move(chi);
    s.global_sampler = [&mixture](double eps, Stream& rng, std::span<double> out) { mixture.sample(eps, rng, out); };
    s.conditional_sampler = [&mixture, split](std::size_t j, double eps, Stream& rng, std::span<double> out) {
        for (int attempt = 0; attempt < 10000000; ++attempt) {
            mixture.sample(eps, rng, out);
            if (split.classify(out) == j) return;
        }
        throw Error("half-space rejection sampler exhausted its budget");
    };
    s.masses = std::move(masses);
    return s;
}

// Dense one-step transition matrix of the local model on a finite space:
// p(x, y) = (1 - chi) pi(y) + chi 1{x, y in the same domain} pi(y) / pi(Omega_j).
inline Matrix local_transition_matrix(const FiniteEnergy& target, double chi, double eps, std::size_t n = 1) {
    const auto pi = target.gibbs(eps);
    const auto mass = target.masses(eps);
    const double stay = std::pow(chi, static_cast<double>(n));
    const std::size_t S = target.size();
    Matrix P(S, std::vector<double>(S));
    for (std::size_t x = 0; x < S; ++x)
        for (std::size_t y = 0; y < S; ++y) {
            const std::size_t jx = target.membership()[x], jy = target.membership()[y];
            P[x][y] = (1.0 - stay) * pi[y] + (jx == jy ? stay * pi[y] / mass[jy] : 0.0);
        }
    return P;
}

inline Matrix matrix_multiply(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size(), m = b.front().size(), k = b.size();
    Matrix c(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    return c;
}

inline Matrix matrix_power(const Matrix& a, std::size_t n) {
    Matrix result(a.size(), std::vector<double>(a.size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) result[i][i] = 1.0;
    Matrix base = a;
    while (n > 0) {
        if (n & 1) result = matrix_multiply(result, base);
        base = matrix_multiply(base, base);
        n >>= 1;
    }
    return result;
}

struct NStepTransition {
    double global_weight = 0.0;  // 1 - chi^n
    double stay_weight = 0.0;    // chi^n
    std::optional<Matrix> matrix;
    double matrix_power_deviation = 0.0;  // max |closed form - P^n|
};

// n-step law of the local model: weights (1 - chi^n, chi^n) on the global and
// within-domain components.
inline NStepTransition local_n_step_density(const LocalModelSpec& spec, double eps, std::size_t n) {
    if (n < 1) throw ArgumentError("n must be >= 1");
    const double chi = spec.stay_probability(eps);
    const double stay = std::pow(chi, static_cast<double>(n));
    return {1.0 - stay, stay, std::nullopt, 0.0};
}

// Finite-space variant: also materializes the matrix and checks it against the
// n-th power of the one-step matrix (1e-10).
inline NStepTransition local_n_step_density(const FiniteEnergy& target, const LocalModelSpec& spec, double eps,
                                            std::size_t n) {
    auto out = local_n_step_density(spec, eps, n);
    const double chi = spec.stay_probability(eps);
    Matrix closed = local_transition_matrix(target, chi, eps, n);
    Matrix power = matrix_power(local_transition_matrix(target, chi, eps, 1), n);
    double dev = 0.0;
    for (std::size_t i = 0; i < closed.size(); ++i)
        for (std::size_t j = 0; j < closed.size(); ++j) dev = std::max(dev, std::abs(closed[i][j] - power[i][j]));
    if (dev > 1e-10) throw InvariantError("n-step closed form disagrees with the matrix power");
    out.matrix = std::move(closed);
    out.matrix_power_deviation = dev;
    return out;
}

// max_x TV(P(x, .), pi) = (1/2) max_x sum_y |P(x,y) - pi(y)|.
inline double worst_case_tv(const Matrix& P, std::span<const double> pi) {
    double worst = 0.0;
    for (const auto& row : P) {
        double s = 0.0;
        for (std::size_t y = 0; y < row.size(); ++y) s += std::abs(row[y] - pi[y]);
        worst = std::max(worst, 0.5 * s);
    }
    return worst;
}

}  // namespace asmc

#endif  // ASMC_KERNELS_HPP

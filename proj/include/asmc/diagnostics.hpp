#ifndef ASMC_DIAGNOSTICS_HPP
#define ASMC_DIAGNOSTICS_HPP

// Monte Carlo error estimation, the computable constants of the local-model
// bound (s_c, C_r, C_LBV) and reference integrals by quadrature or closed form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "asmc/annealing.hpp"
#include "asmc/constants.hpp"
#include "asmc/driver.hpp"
#include "asmc/errors.hpp"
#include "asmc/stats.hpp"
#include "asmc/targets.hpp"

namespace asmc {

// ---------------------------------------------------------------------------
// Monte Carlo error over independent replicates
// ---------------------------------------------------------------------------

struct ErrorSummary {
    double reference = 0.0;
    std::size_t replicates = 0;  // successful runs
    std::size_t failed = 0;      // runs that threw and were excluded
    double mean_estimate = 0.0;
    double mean_error = 0.0;      // signed
    double mean_abs_error = 0.0;
    double rms_error = 0.0;       // sqrt(mean (est - ref)^2), the L2(P) error
    double std_error = 0.0;       // sample sd of the estimates
    double ci_half_width = 0.0;   // 1.96 sd / sqrt(R) around mean_estimate
    std::vector<double> estimates;
    std::vector<std::string> failures;
};

inline ErrorSummary summarize_errors(std::vector<double> estimates, double reference) {
    if (estimates.size() < 1) throw ArgumentError("no successful replicates");
    ErrorSummary s;
    s.reference = reference;
    s.replicates = estimates.size();
    double sq = 0.0, abs_sum = 0.0;
    for (double e : estimates) {
        sq += (e - reference) * (e - reference);
        abs_sum += std::abs(e - reference);
    }
    const double r = static_cast<double>(estimates.size());
    s.mean_estimate = stats::mean(estimates);
    s.mean_error = s.mean_estimate - reference;
    s.mean_abs_error = abs_sum / r;
    s.rms_error = std::sqrt(sq / r);
    s.std_error = stats::stddev(estimates);
    s.ci_half_width = 1.96 * s.std_error / std::sqrt(r);
    s.estimates = std::move(estimates);
    return s;
}

// Runs run_fn(r) for r = 0..R-1 and summarizes the error against `reference`.
// Replicates that throw are recorded and excluded.
template <class RunFn>
ErrorSummary mc_error(RunFn&& run_fn, double reference, std::size_t R) {
    if (R < 2) throw ArgumentError("need at least 2 replicates");
    std::vector<double> est;
    std::vector<std::string> failures;
    for (std::size_t r = 0; r < R; ++r) {
        try {
            est.push_back(run_fn(r));
        } catch (const std::exception& e) {
            failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
        }
    }
    if (est.empty()) throw Error("every replicate failed; first failure: " + failures.front());
    auto s = summarize_errors(std::move(est), reference);
    s.failed = failures.size();
    s.failures = std::move(failures);
    return s;
}

// ---------------------------------------------------------------------------
// Discretized measures: nodes with base weights (cell volumes or counting
// measure) and the energy at each node.
// ---------------------------------------------------------------------------

struct QuadratureMeasure {
    std::size_t dim = 1;
    std::vector<double> nodes;    // node-major, size * dim
    std::vector<double> weights;  // base measure of each node
    std::vector<double> energy;   // U at each node

    std::size_t size() const noexcept { return weights.size(); }
    std::span<const double> node(std::size_t i) const { return {nodes.data() + i * dim, dim}; }

    double min_energy() const { return *std::min_element(energy.begin(), energy.end()); }
    double max_energy() const { return *std::max_element(energy.begin(), energy.end()); }

    // Same nodes and weights with U replaced by (U - shift) * scale.
    QuadratureMeasure affine(double shift, double scale) const {
        QuadratureMeasure q = *this;
        for (double& u : q.energy) u = (u - shift) * scale;
        return q;
    }
};

struct Box {
    double lo = -1.0;
    double hi = 1.0;
};

namespace detail {

// Trapezoid weights on n intervals of [lo, hi] (n + 1 nodes), or cell
// midpoints on a torus axis. Midpoints keep nodes off basin boundaries that
// sit at rational fractions of the period.
inline void axis_rule(DomainKind kind, double lo, double hi, std::size_t n, std::vector<double>& x,
                      std::vector<double>& w) {
    x.clear();
    w.clear();
    if (kind == DomainKind::torus) {
        const double h = (hi - lo) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(lo + h * (static_cast<double>(i) + 0.5));
            w.push_back(h);
        }
        return;
    }
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        x.push_back(lo + h * static_cast<double>(i));
        w.push_back((i == 0 || i == n) ? 0.5 * h : h);
    }
}

}  // namespace detail

// Tensor-product grid over [lo, hi]^d (euclidean) or the torus cell (torus), d <= 2.
template <Energy E>
QuadratureMeasure tabulate_grid(const E& model, std::size_t n, Box box = {}) {
    const auto& dom = model.domain();
    if (dom.dim > 2) throw UnsupportedError("grid quadrature supports d <= 2");
    if (n < 2) throw ArgumentError("grid needs at least 2 intervals");
    QuadratureMeasure q;
    q.dim = dom.dim;
    std::vector<double> x0, w0, x1, w1;
    const double lo0 = dom.kind == DomainKind::torus ? 0.0 : box.lo;
    const double hi0 = dom.kind == DomainKind::torus ? dom.period[0] : box.hi;
    detail::axis_rule(dom.kind, lo0, hi0, n, x0, w0);
    if (dom.dim == 1) {
        for (std::size_t i = 0; i < x0.size(); ++i) {
            q.nodes.push_back(x0[i]);
            q.weights.push_back(w0[i]);
            q.energy.push_back(model.value(std::span<const double>(&x0[i], 1)));
        }
        return q;
    }
    const double lo1 = dom.kind == DomainKind::torus ? 0.0 : box.lo;
    const double hi1 = dom.kind == DomainKind::torus ? dom.period[1] : box.hi;
    detail::axis_rule(dom.kind, lo1, hi1, n, x1, w1);
    q.nodes.reserve(x0.size() * x1.size() * 2);
    double p[2];
    for (std::size_t i = 0; i < x0.size(); ++i)
        for (std::size_t j = 0; j < x1.size(); ++j) {
            p[0] = x0[i];
            p[1] = x1[j];
            q.nodes.push_back(p[0]);
            q.nodes.push_back(p[1]);
            q.weights.push_back(w0[i] * w1[j]);
            q.energy.push_back(model.value(std::span<const double>(p, 2)));
        }
    return q;
}

// Counting measure on a finite state space.
inline QuadratureMeasure tabulate_finite(const FiniteEnergy& target) {
    QuadratureMeasure q;
    q.dim = 1;
    for (std::size_t s = 0; s < target.size(); ++s) {
        q.nodes.push_back(static_cast<double>(s));
        q.weights.push_back(1.0);
        q.energy.push_back(target.energies()[s]);
    }
    return q;
}

// 1D energy given as a callable, trapezoid on [lo, hi].
inline QuadratureMeasure tabulate_function_1d(const std::function<double(double)>& u, double lo, double hi,
                                              std::size_t n) {
    QuadratureMeasure q;
    q.dim = 1;
    std::vector<double> x, w;
    detail::axis_rule(DomainKind::euclidean, lo, hi, n, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        q.nodes.push_back(x[i]);
        q.weights.push_back(w[i]);
        q.energy.push_back(u(x[i]));
    }
    return q;
}

// ---------------------------------------------------------------------------
// s_c and the C_r bound
// ---------------------------------------------------------------------------

// s_c = int_{U0 > c} e^{-U0} / int_{U0 <= c} e^{-U0} over the discretized measure
// of the normalized energy U0 >= 0.
inline double compute_sc(const QuadratureMeasure& u0, double c) {
    if (!(c > 0.0)) throw ArgumentError("threshold c must be positive");
    double above = 0.0, below = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i) {
        const double m = u0.weights[i] * std::exp(-u0.energy[i]);
        (u0.energy[i] > c ? above : below) += m;
    }
    if (!(below > 0.0)) throw Error("sublevel set {U0 <= c} is empty on the integration grid");
    return above / below;
}

struct CrBound {
    double value = 0.0;                 // min of (1 + s_c) e^{c nu} found
    double argmin_c = 0.0;
    std::vector<double> grid_c;         // log-spaced thresholds
    std::vector<double> grid_value;     // (1 + s_c) e^{c nu} on the grid
};

struct CrBoundOptions {
    std::optional<double> c_lo;  // default 0.1
    std::optional<double> c_hi;  // default 10 * max U0
    std::size_t points = 32;
    bool refine = true;  // Brent refinement around the grid argmin
};

// inf_{c>0} (1 + s_c) e^{c nu} over a log-spaced c grid. Every c gives a valid
// upper bound on C_r, so the reported value is one-sided whatever the grid.
inline CrBound cr_bound(const QuadratureMeasure& u0, double nu, CrBoundOptions opt = {}) {
    if (!(nu > 0.0)) throw ArgumentError("nu must be positive");
    const double umax = u0.max_energy();
    CrBound out;
    if (!(umax > 0.0)) {
        // U0 == 0 on the support: s_c = 0 for every c > 0 and the infimum is the c -> 0 limit.
        out.value = 1.0;
        out.argmin_c = 0.0;
        return out;
    }
    const double lo = opt.c_lo.value_or(0.1);
    const double hi = opt.c_hi.value_or(10.0 * umax);
    if (!(lo > 0.0) || !(hi > lo)) throw ArgumentError("invalid c range");
    auto f = [&](double c) {
        double s;
        try {
            s = compute_sc(u0, c);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
        return (1.0 + s) * std::exp(c * nu);
    };
    const std::size_t n = std::max<std::size_t>(opt.points, 2);
    out.value = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
        const double v = f(c);
        out.grid_c.push_back(c);
        out.grid_value.push_back(v);
        if (v < out.value) {
            out.value = v;
            out.argmin_c = c;
            best = i;
        }
    }
    // Beyond max U0 the tail vanishes: (1 + 0) e^{c nu} is smallest at c = max U0.
    if (umax >= lo && umax <= hi) {
        const double v = f(umax);
        if (v < out.value) {
            out.value = v;
            out.argmin_c = umax;
        }
    }
    if (opt.refine && std::isfinite(out.value)) {
        const double a = out.grid_c[best == 0 ? 0 : best - 1];
        const double b = out.grid_c[std::min(best + 1, n - 1)];
        if (b > a) {
            auto r = boost::math::tools::brent_find_minima(f, a, b, 40);
            if (r.second < out.value) {
                out.value = r.second;
                out.argmin_c = r.first;
            }
        }
    }
    return out;
}

struct CrEmpirical {
    double value = 0.0;  // max_k max_x pi_{k+1}(x) / pi_k(x)
    std::size_t argmax_level = 0;  // 1-based k
    std::size_t argmax_node = 0;
};

// Max over levels and nodes of the ratio of normalized densities, with the
// normalizers computed on the same discretized measure.
inline CrEmpirical cr_empirical(const QuadratureMeasure& u, const AnnealingSchedule& schedule) {
    if (schedule.size() < 2) throw ArgumentError("need at least two levels");
    const double umin = u.min_energy();
    auto log_z = [&](double eps) {
        double z = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) z += u.weights[i] * std::exp(-(u.energy[i] - umin) / eps);
        if (!(z > 0.0) || !std::isfinite(z)) throw Error("normalizer estimate is not positive and finite");
        return std::log(z);
    };
    CrEmpirical out;
    out.value = -std::numeric_limits<double>::infinity();
    double lz_prev = log_z(schedule[0]);
    for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
        const double lz_next = log_z(schedule[k + 1]);
        const double dbeta = 1.0 / schedule[k + 1] - 1.0 / schedule[k];
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u.weights[i] > 0.0)) continue;
            const double r = std::exp(-dbeta * (u.energy[i] - umin) + lz_prev - lz_next);
            if (r > out.value) {
                out.value = r;
                out.argmax_level = k + 1;
                out.argmax_node = i;
            }
        }
        lz_prev = lz_next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// C_LBV
// ---------------------------------------------------------------------------

struct ClbvResult {
    double value = 0.0;         // fine-grid trapezoid
    double coarse = 0.0;        // base-grid trapezoid
    double extrapolated = 0.0;  // Richardson (4 fine - coarse) / 3
    bool flagged = false;       // coarse vs fine differ by more than 10%
};

// sum_j int_eta^eta_max |d/d eps ln pi_eps(Omega_j)| d eps. Derivatives by
// central differences, trapezoid over `points` log-spaced temperatures and once
// more with the spacing halved.
inline ClbvResult compute_clbv(const std::function<std::vector<double>(double)>& masses, double eta,
                               double eta_max, std::size_t points = 64) {
    if (!(eta > 0.0) || !(eta_max > eta)) throw ArgumentError("need 0 < eta < eta_max");
    if (points < 3) throw ArgumentError("need at least 3 temperatures");
    auto integrand = [&](double e) {
        const double h = 1e-4 * e;
        const auto mp = masses(e + h);
        const auto mm = masses(e - h);
        if (mp.size() != mm.size()) throw Error("mass vector size changed with temperature");
        double s = 0.0;
        for (std::size_t j = 0; j < mp.size(); ++j) {
            if (!(mp[j] > 0.0) || !(mm[j] > 0.0)) throw Error("domain mass vanished; C_LBV is infinite");
            s += std::abs((std::log(mp[j]) - std::log(mm[j])) / (2.0 * h));
        }
        return s;
    };
    auto trapezoid = [&](std::size_t n) {
        double total = 0.0;
        double prev_e = eta, prev_f = integrand(eta);
        for (std::size_t i = 1; i < n; ++i) {
            const double e = eta * std::pow(eta_max / eta, static_cast<double>(i) / static_cast<double>(n - 1));
            const double f = integrand(e);
            total += 0.5 * (f + prev_f) * (e - prev_e);
            prev_e = e;
            prev_f = f;
        }
        return total;
    };
    ClbvResult r;
    r.coarse = trapezoid(points);
    r.value = trapezoid(2 * points - 1);
    r.extrapolated = (4.0 * r.value - r.coarse) / 3.0;
    const double scale = std::max(std::abs(r.value), std::abs(r.coarse));
    r.flagged = scale > 1e-12 && std::abs(r.value - r.coarse) > 0.1 * scale;
    return r;
}

// ---------------------------------------------------------------------------
// Reference integrals
// ---------------------------------------------------------------------------

struct QuadratureResult {
    double value = 0.0;
    double refined = 0.0;  // same rule at doubled resolution
    bool flagged = false;  // |value - refined| > 1e-3
};

// int h pi_eps over a grid (d <= 2) with pi_eps normalized on the same grid.
template <Energy E, class H>
QuadratureResult quadrature_integral_2d(const E& model, H&& h, double eps, std::size_t grid_n, Box box = {-4.0, 4.0}) {
    if (!(eps > 0.0)) throw ArgumentError("temperature must be positive");
    if (grid_n < 64) throw ArgumentError("grid_n must be >= 64");
    auto integrate = [&](std::size_t n) {
        const auto q = tabulate_grid(model, n, box);
        const double umin = q.min_energy();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double m = q.weights[i] * std::exp(-(q.energy[i] - umin) / eps);
            num += m * h(q.node(i));
            den += m;
        }
        return num / den;
    };
    QuadratureResult r;
    r.value = integrate(grid_n);
    r.refined = integrate(2 * grid_n);
    r.flagged = std::abs(r.value - r.refined) > 1e-3;
    return r;
}

// pi_eps({x : x[axis] < threshold}) for a diagonal Gaussian mixture. Closed form
// sum_i a_i Phi((t - mu_i)/sigma_i) at eps = 1; the tempered mixture is not a
// mixture, so other temperatures fall back to grid quadrature (d <= 2).
inline double reference_halfplane_mass(const GaussianMixtureEnergy& mixture, std::size_t axis, double threshold,
                                       double eps, std::size_t grid_n = 512, Box box = {-4.0, 4.0}) {
    if (axis >= mixture.dim()) throw ArgumentError("axis out of range");
    if (eps == 1.0) {
        double m = 0.0;
        for (std::size_t i = 0; i < mixture.components(); ++i)
            m += mixture.weights()[i] *
                 stats::normal_cdf((threshold - mixture.mean(i, axis)) / std::sqrt(mixture.variance(i, axis)));
        return m;
    }
    if (mixture.dim() > 2)
        throw UnsupportedError("tempered half-plane mass has no closed form; quadrature needs d <= 2");
    return quadrature_integral_2d(
               mixture,
               [&](std::span<const double> x) {
                   // a node on the cut counts half, as the trapezoid rule would for the limit
                   return x[axis] < threshold ? 1.0 : (x[axis] == threshold ? 0.5 : 0.0);
               },
               eps, grid_n, box)
        .value;
}

// Empirical measure of each domain: (1/N) sum 1{x_i in Omega_j}.
template <class Classify>
std::vector<double> mass_fractions(const Ensemble& ens, Classify&& classify, std::size_t wells) {
    std::vector<double> m(wells, 0.0);
    const std::size_t n = ens.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = classify(ens.particle(i));
        if (j >= wells) throw ArgumentError("classifier returned an out-of-range domain index");
        m[j] += 1.0;
    }
    for (double& v : m) v /= static_cast<double>(n);
    return m;
}

// ---------------------------------------------------------------------------
// Separable energies U0 = U~0(x_1..x_d~) + V0(rest), V0 ~ alpha0 |x - x0|^k0
// ---------------------------------------------------------------------------

struct ConvexPart {
    double alpha0 = 0.5;
    double k0 = 2.0;
    double alpha_b = 0.0;  // lower offset
    double alpha_u = 0.0;  // upper offset
};

// Upper bound on s_c(V0) in m dimensions from the two-sided bounds on V0:
// e^{alpha_u - alpha_b} Q(m/k0, c - alpha_u) / P(m/k0, c - alpha_u), c > alpha_u.
inline double convex_sc_bound(const ConvexPart& v, std::size_t m, double c) {
    if (!(v.k0 > 1.0)) throw UnsupportedError("convex part needs k0 > 1");
    if (m == 0) return 0.0;
    const double t = c - v.alpha_u;
    if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
    const double a = static_cast<double>(m) / v.k0;
    const double p = boost::math::gamma_p(a, t);
    if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
    return std::exp(v.alpha_u - v.alpha_b) * boost::math::gamma_q(a, t) / p;
}

struct SeparableRow {
    std::size_t d = 0;
    double nu = 0.0;
    double marginal_factor = 0.0;  // inf_c (1 + s_c(U~0)) e^{c nu}
    double convex_factor = 0.0;    // inf_c (1 + s_c(V0)) e^{c nu}
    double bound = 0.0;            // product: C_r bound at this d
    double marginal_c = 0.0;
    double convex_c = 0.0;
};

struct SeparableTable {
    std::vector<SeparableRow> rows;
    std::vector<std::size_t> skipped;  // d < k0
    double spread = 0.0;               // max bound / min bound
};

// C_r bound of a separable energy at each d, with nu = 1/d (the inverse-temperature
// step of M = ceil(d/eta) levels from eta_1 = 1). Factorizes into the marginal
// factor (quadrature) and the convex factor (incomplete gamma).
inline SeparableTable cr_separable_check(const QuadratureMeasure& marginal_u0, const ConvexPart& convex,
                                         const std::vector<std::size_t>& dims, std::size_t marginal_dim = 1) {
    if (!(convex.k0 > 1.0)) throw UnsupportedError("convex part needs k0 > 1");
    SeparableTable t;
    for (std::size_t d : dims) {
        if (static_cast<double>(d) < convex.k0 || d <= marginal_dim) {
            t.skipped.push_back(d);
            continue;
        }
        SeparableRow row;
        row.d = d;
        row.nu = 1.0 / static_cast<double>(d);
        const auto marg = cr_bound(marginal_u0, row.nu);
        row.marginal_factor = marg.value;
        row.marginal_c = marg.argmin_c;

        const std::size_t m = d - marginal_dim;
        auto f = [&](double c) { return (1.0 + convex_sc_bound(convex, m, c)) * std::exp(c * row.nu); };
        // c = alpha_u + s with s log-spaced over [1e-3, 50 (m/k0 + 1)].
        const double s_hi = 50.0 * (static_cast<double>(m) / convex.k0 + 1.0);
        double best = std::numeric_limits<double>::infinity(), best_c = 0.0;
        std::size_t best_i = 0;
        const std::size_t n = 200;
        std::vector<double> cs(n);
        for (std::size_t i = 0; i < n; ++i) {
            cs[i] = convex.alpha_u + 1e-3 * std::pow(s_hi / 1e-3, static_cast<double>(i) / static_cast<double>(n - 1));
            const double v = f(cs[i]);
            if (v < best) {
                best = v;
                best_c = cs[i];
                best_i = i;
            }
        }
        const double a = cs[best_i == 0 ? 0 : best_i - 1];
        const double b = cs[std::min(best_i + 1, n - 1)];
        if (b > a) {
            auto r = boost::math::tools::brent_find_minima(f, a, b, 40);
            if (r.second < best) {
                best = r.second;
                best_c = r.first;
            }
        }
        row.convex_factor = best;
        row.convex_c = best_c;
        row.bound = row.marginal_factor * row.convex_factor;
        t.rows.push_back(row);
    }
    if (!t.rows.empty()) {
        double lo = t.rows.front().bound, hi = lo;
        for (const auto& r : t.rows) {
            lo = std::min(lo, r.bound);
            hi = std::max(hi, r.bound);
        }
        t.spread = hi / lo;
    }
    return t;
}

}  // namespace asmc

#endif  // ASMC_DIAGNOSTICS_HPP

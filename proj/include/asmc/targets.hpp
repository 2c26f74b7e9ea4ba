#ifndef ASMC_TARGETS_HPP
#define ASMC_TARGETS_HPP

// Energy functions U, their gradients and the Gibbs densities exp(-U/eps).
//
// Positions are flat std::span<const double> of length domain().dim. Finite
// state spaces are encoded as one coordinate holding the state index.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "asmc/errors.hpp"
#include "asmc/random.hpp"

namespace asmc {

enum class DomainKind { euclidean, torus, finite };

struct DomainSpec {
    DomainKind kind = DomainKind::euclidean;
    std::size_t dim = 1;
    std::vector<double> period;  // torus only, one entry per axis
    std::size_t states = 0;      // finite only

    static DomainSpec euclidean(std::size_t d) {
        DomainSpec s{DomainKind::euclidean, d, {}, 0};
        s.validate();
        return s;
    }
    static DomainSpec torus(std::size_t d, double period = 1.0) {
        DomainSpec s{DomainKind::torus, d, std::vector<double>(d, period), 0};
        s.validate();
        return s;
    }
    static DomainSpec finite(std::size_t n) {
        DomainSpec s{DomainKind::finite, 1, {}, n};
        s.validate();
        return s;
    }

    void validate() const {
        if (dim < 1) throw ArgumentError("domain dimension must be >= 1");
        switch (kind) {
            case DomainKind::torus:
                if (period.size() != dim) throw ArgumentError("torus needs one period per axis");
                for (double p : period)
                    if (!(p > 0.0) || !std::isfinite(p)) throw ArgumentError("torus periods must be positive");
                break;
            case DomainKind::euclidean:
                if (!period.empty()) throw ArgumentError("euclidean domain carries no period");
                break;
            case DomainKind::finite:
                if (dim != 1 || states < 1) throw ArgumentError("finite domain needs dim 1 and >= 1 state");
                break;
        }
    }

    // Maps x into the fundamental cell [0, period) of a torus; no-op otherwise.
    void wrap(std::span<double> x) const noexcept {
        if (kind != DomainKind::torus) return;
        for (std::size_t j = 0; j < dim; ++j) {
            const double p = period[j];
            double v = x[j] - p * std::floor(x[j] / p);
            if (v >= p) v -= p;  // floor rounding at the upper edge
            x[j] = v;
        }
    }

    bool contains(std::span<const double> x) const noexcept {
        if (x.size() != dim) return false;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(x[j])) return false;
            if (kind == DomainKind::torus && (x[j] < 0.0 || x[j] >= period[j])) return false;
            if (kind == DomainKind::finite) {
                const double s = x[j];
                if (s < 0.0 || s >= static_cast<double>(states) || s != std::floor(s)) return false;
            }
        }
        return true;
    }
};

// Anything with a domain, an energy and its gradient.
template <class E>
concept Energy = requires(const E& e, std::span<const double> x, std::span<double> g) {
    { e.domain() } -> std::convertible_to<const DomainSpec&>;
    { e.value(x) } -> std::convertible_to<double>;
    e.gradient(x, g);
};

// Optional capabilities, detected with `if constexpr`.
template <class E>
concept HasKnownInf = requires(const E& e) {
    { e.known_inf() } -> std::convertible_to<std::optional<double>>;
};
template <class E>
concept HasDescentStarts = requires(const E& e) {
    { e.descent_starts() } -> std::convertible_to<std::vector<std::vector<double>>>;
};
template <class E>
concept ExactSampler = requires(const E& e, double eps, Stream& s, std::span<double> out) {
    e.sample(eps, s, out);
};
template <class E>
concept Classifier = requires(const E& c, std::span<const double> x) {
    { c.classify(x) } -> std::convertible_to<std::size_t>;
    { c.well_count() } -> std::convertible_to<std::size_t>;
};

inline std::string format_point(std::span<const double> x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

// log of the unnormalized Gibbs density, -U(x)/eps. Never exponentiates.
template <Energy E>
double log_unnormalized_density(const E& model, std::span<const double> x, double eps) {
    if (!(eps > 0.0)) throw ArgumentError("temperature must be positive");
    const double u = model.value(x);
    if (!std::isfinite(u)) throw EvaluationError("energy is not finite at x = " + format_point(x));
    return -u / eps;
}

// Type-erased energy for ad hoc models (tests, user callbacks).
class EnergyModel {
public:
    using ValueFn = std::function<double(std::span<const double>)>;
    using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

    EnergyModel(DomainSpec domain, ValueFn value, GradientFn gradient,
                std::optional<double> known_inf = std::nullopt,
                std::vector<std::vector<double>> starts = {})
        : domain_(std::move(domain)), value_(std::move(value)), gradient_(std::move(gradient)),
          known_inf_(known_inf), starts_(std::move(starts)) {
        domain_.validate();
    }

    // Wraps any concrete Energy.
    template <Energy E>
        requires(!std::same_as<std::remove_cvref_t<E>, EnergyModel>)
    static EnergyModel from(E e) {
        std::optional<double> inf;
        if constexpr (HasKnownInf<E>) inf = e.known_inf();
        std::vector<std::vector<double>> starts;
        if constexpr (HasDescentStarts<E>) starts = e.descent_starts();
        auto shared = std::make_shared<E>(std::move(e));
        return EnergyModel(
            shared->domain(), [shared](std::span<const double> x) { return shared->value(x); },
            [shared](std::span<const double> x, std::span<double> g) { shared->gradient(x, g); }, inf,
            std::move(starts));
    }

    const DomainSpec& domain() const noexcept { return domain_; }
    double value(std::span<const double> x) const { return value_(x); }
    void gradient(std::span<const double> x, std::span<double> g) const { gradient_(x, g); }
    std::optional<double> known_inf() const noexcept { return known_inf_; }
    std::vector<std::vector<double>> descent_starts() const { return starts_; }

private:
    DomainSpec domain_;
    ValueFn value_;
    GradientFn gradient_;
    std::optional<double> known_inf_;
    std::vector<std::vector<double>> starts_;
};

// U(x) = -log sum_i a_i G(x; mu_i, diag(var_i)).
class GaussianMixtureEnergy {
public:
    GaussianMixtureEnergy(std::vector<double> weights, std::vector<std::vector<double>> means,
                          std::vector<std::vector<double>> variances)
        : weights_(std::move(weights)) {
        const std::size_t k = weights_.size();
        if (k == 0) throw ArgumentError("mixture needs at least one component");
        if (means.size() != k || variances.size() != k)
            throw ArgumentError("mixture weights, means and variances must have equal length");
        dim_ = means.front().size();
        if (dim_ == 0) throw ArgumentError("mixture dimension must be >= 1");
        double total = 0.0;
        for (double a : weights_) {
            if (!(a > 0.0)) throw ArgumentError("mixture weights must be positive");
            total += a;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture weights must sum to 1");
        means_.reserve(k * dim_);
        inv_var_.reserve(k * dim_);
        var_.reserve(k * dim_);
        for (std::size_t i = 0; i < k; ++i) {
            if (means[i].size() != dim_ || variances[i].size() != dim_)
                throw ArgumentError("mixture component dimension mismatch");
            double log_norm = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double v = variances[i][j];
                if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("mixture variances must be positive");
                means_.push_back(means[i][j]);
                var_.push_back(v);
                inv_var_.push_back(1.0 / v);
                log_norm += -0.5 * std::log(2.0 * std::numbers::pi * v);
            }
            log_coef_.push_back(std::log(weights_[i]) + log_norm);
        }
        domain_ = DomainSpec::euclidean(dim_);
    }

    // Isotropic components: variances[i] is the scalar sigma_i^2.
    static GaussianMixtureEnergy isotropic(std::vector<double> weights,
                                           std::vector<std::vector<double>> means,
                                           const std::vector<double>& variances) {
        std::vector<std::vector<double>> v;
        for (std::size_t i = 0; i < variances.size(); ++i)
            v.emplace_back(means.at(i).size(), variances[i]);
        return GaussianMixtureEnergy(std::move(weights), std::move(means), std::move(v));
    }

    const DomainSpec& domain() const noexcept { return domain_; }
    std::size_t components() const noexcept { return weights_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double mean(std::size_t i, std::size_t j) const { return means_[i * dim_ + j]; }
    double variance(std::size_t i, std::size_t j) const { return var_[i * dim_ + j]; }

    // log(a_i G_i(x))
    double log_component(std::size_t i, std::span<const double> x) const noexcept {
        const double* mu = &means_[i * dim_];
        const double* iv = &inv_var_[i * dim_];
        double q = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double r = x[j] - mu[j];
            q += r * r * iv[j];
        }
        return log_coef_[i] - 0.5 * q;
    }

    double value(std::span<const double> x) const {
        return with_log_terms(x, [](std::span<const double> t) {
            const double m = *std::max_element(t.begin(), t.end());
            if (!std::isfinite(m)) return std::numeric_limits<double>::infinity();
            double s = 0.0;
            for (double v : t) s += std::exp(v - m);
            return -(m + std::log(s));
        });
    }

    // Responsibility-weighted sum of component gradients. This sits on the
    // Langevin hot path, so it avoids the generic log-term helper.
    void gradient(std::span<const double> x, std::span<double> g) const {
        const std::size_t k = components();
        double tbuf[16];
        std::vector<double> tvec;
        double* t = tbuf;
        if (k > 16) {
            tvec.resize(k);
            t = tvec.data();
        }
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
            t[i] = log_component(i, x);
            m = std::max(m, t[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += (t[i] = std::exp(t[i] - m));
        for (std::size_t j = 0; j < dim_; ++j) g[j] = 0.0;
        const double inv_s = 1.0 / s;
        for (std::size_t i = 0; i < k; ++i) {
            const double r = t[i] * inv_s;
            const double* mu = &means_[i * dim_];
            const double* iv = &inv_var_[i * dim_];
            for (std::size_t j = 0; j < dim_; ++j) g[j] += r * (x[j] - mu[j]) * iv[j];
        }
    }

    std::optional<double> known_inf() const noexcept { return std::nullopt; }

    std::vector<std::vector<double>> descent_starts() const {
        std::vector<std::vector<double>> s;
        for (std::size_t i = 0; i < components(); ++i)
            s.emplace_back(means_.begin() + i * dim_, means_.begin() + (i + 1) * dim_);
        return s;
    }

    // Exact draw from the Gibbs density proportional to p(x)^(1/eps), eps <= 1.
    // Proposal: mixture of N(mu_i, eps*Sigma_i) weighted by a_i * int G_i^(1/eps);
    // (sum a_i G_i)^p <= sum a_i G_i^p for p >= 1 makes it a valid envelope.
    void sample(double eps, Stream& rng, std::span<double> out) const {
        if (!(eps > 0.0) || eps > 1.0)
            throw UnsupportedError("exact mixture sampling requires 0 < eps <= 1");
        const double p = 1.0 / eps;
        const std::size_t k = components();
        std::vector<double> log_b(k);
        for (std::size_t i = 0; i < k; ++i) {
            // log int G_i^p = (1-p)/2 * sum_j log(2 pi v_ij) - d/2 log p
            double s = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) s += std::log(2.0 * std::numbers::pi * var_[i * dim_ + j]);
            log_b[i] = std::log(weights_[i]) + 0.5 * (1.0 - p) * s - 0.5 * static_cast<double>(dim_) * std::log(p);
        }
        const double mb = *std::max_element(log_b.begin(), log_b.end());
        std::vector<double> cdf(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            acc += std::exp(log_b[i] - mb);
            cdf[i] = acc;
        }
        std::vector<double> terms(k);
        for (int attempt = 0; attempt < 1000000; ++attempt) {
            const double u = rng.uniform() * acc;
            std::size_t c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (c >= k) c = k - 1;
            for (std::size_t j = 0; j < dim_; ++j)
                out[j] = means_[c * dim_ + j] + std::sqrt(eps * var_[c * dim_ + j]) * rng.normal();
            if (p == 1.0) return;
            for (std::size_t i = 0; i < k; ++i) terms[i] = log_component(i, out);
            const double m = *std::max_element(terms.begin(), terms.end());
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                s1 += std::exp(terms[i] - m);
                s2 += std::exp(std::log(weights_[i]) + p * (terms[i] - std::log(weights_[i])) - p * m);
            }
            // log ratio = p*LSE(t) - LSE(log a + p (t - log a)), both shifted by p*m
            const double log_ratio = p * std::log(s1) - std::log(s2);
            if (std::log(rng.uniform()) < log_ratio) return;
        }
        throw Error("mixture envelope sampler failed to accept");
    }

private:
    template <class Fn>
    double with_log_terms(std::span<const double> x, Fn&& fn) const {
        const std::size_t k = components();
        if (k <= 16) {
            std::array<double, 16> buf;
            for (std::size_t i = 0; i < k; ++i) buf[i] = log_component(i, x);
            return fn(std::span<const double>(buf.data(), k));
        }
        std::vector<double> buf(k);
        for (std::size_t i = 0; i < k; ++i) buf[i] = log_component(i, x);
        return fn(std::span<const double>(buf));
    }

    std::vector<double> weights_;
    std::size_t dim_ = 0;
    std::vector<double> means_, var_, inv_var_, log_coef_;
    DomainSpec domain_;
};

// Two-well energy on the unit torus T^d:
//   U(x) = A (1 - cos 4 pi x_1) + C (1 - cos 2 pi x_1) + B sum_{j>=2} (1 - cos 2 pi x_j).
// For |C| < 4A the only local minima are (0,...,0) and (1/2,0,...,0); the basin
// boundaries are the hyperplanes x_1 = s and x_1 = 1 - s, s = arccos(-C/4A)/2pi.
// C = 0 gives two wells of equal depth and shape.
class DoubleWellTorusEnergy {
public:
    DoubleWellTorusEnergy(std::size_t dim, double a, double b, double c = 0.0)
        : a_(a), b_(b), c_(c), domain_(DomainSpec::torus(dim)) {
        if (!(a > 0.0)) throw ArgumentError("well depth A must be positive");
        if (dim > 1 && !(b > 0.0)) throw ArgumentError("transverse stiffness B must be positive");
        if (!(std::abs(c) < 4.0 * a)) throw ArgumentError("asymmetry must satisfy |C| < 4A");
        saddle_ = std::acos(-c / (4.0 * a)) / (2.0 * std::numbers::pi);
    }

    const DomainSpec& domain() const noexcept { return domain_; }

    double value(std::span<const double> x) const noexcept {
        constexpr double tau = 2.0 * std::numbers::pi;
        double u = a_ * (1.0 - std::cos(2.0 * tau * x[0])) + c_ * (1.0 - std::cos(tau * x[0]));
        for (std::size_t j = 1; j < domain_.dim; ++j) u += b_ * (1.0 - std::cos(tau * x[j]));
        return u;
    }

    void gradient(std::span<const double> x, std::span<double> g) const noexcept {
        constexpr double tau = 2.0 * std::numbers::pi;
        g[0] = 2.0 * tau * a_ * std::sin(2.0 * tau * x[0]) + tau * c_ * std::sin(tau * x[0]);
        for (std::size_t j = 1; j < domain_.dim; ++j) g[j] = tau * b_ * std::sin(tau * x[j]);
    }

    std::optional<double> known_inf() const noexcept { return std::min(0.0, 2.0 * c_); }

    std::vector<std::vector<double>> minimizers() const {
        std::vector<double> m1(domain_.dim, 0.0), m2(domain_.dim, 0.0);
        m2[0] = 0.5;
        return {m1, m2};
    }
    std::vector<std::vector<double>> descent_starts() const { return minimizers(); }

    std::size_t well_count() const noexcept { return 2; }
    // 0 for the well around x_1 = 0, 1 for the well around x_1 = 1/2.
    std::size_t classify(std::span<const double> x) const noexcept {
        const double t = x[0] - std::floor(x[0]);
        return (t > saddle_ && t < 1.0 - saddle_) ? 1 : 0;
    }
    double basin_boundary() const noexcept { return saddle_; }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }

private:
    double a_, b_, c_;
    double saddle_ = 0.25;
    DomainSpec domain_;
};

// Energy on a finite state space {0, ..., n-1}; state s has energy energies[s]
// and lies in domain membership[s].
class FiniteEnergy {
public:
    FiniteEnergy(std::vector<double> energies, std::vector<std::size_t> membership)
        : energies_(std::move(energies)), membership_(std::move(membership)),
          domain_(DomainSpec::finite(energies_.size())) {
        if (membership_.empty()) membership_.assign(energies_.size(), 0);
        if (membership_.size() != energies_.size()) throw ArgumentError("membership size mismatch");
        for (double e : energies_)
            if (!std::isfinite(e)) throw ArgumentError("finite energies must be finite");
        wells_ = *std::max_element(membership_.begin(), membership_.end()) + 1;
        for (std::size_t j = 0; j < wells_; ++j)
            if (std::find(membership_.begin(), membership_.end(), j) == membership_.end())
                throw ArgumentError("every domain index below the maximum must be used");
    }

    const DomainSpec& domain() const noexcept { return domain_; }
    std::size_t size() const noexcept { return energies_.size(); }
    const std::vector<double>& energies() const noexcept { return energies_; }
    const std::vector<std::size_t>& membership() const noexcept { return membership_; }

    static std::size_t state_of(std::span<const double> x) { return static_cast<std::size_t>(x[0]); }

    double value(std::span<const double> x) const { return energies_.at(state_of(x)); }
    void gradient(std::span<const double>, std::span<double>) const {
        throw UnsupportedError("finite state spaces have no gradient");
    }
    std::optional<double> known_inf() const { return *std::min_element(energies_.begin(), energies_.end()); }

    std::size_t well_count() const noexcept { return wells_; }
    std::size_t classify(std::span<const double> x) const { return membership_.at(state_of(x)); }

    std::size_t argmin() const {
        return static_cast<std::size_t>(std::min_element(energies_.begin(), energies_.end()) - energies_.begin());
    }

    // Normalized Gibbs probabilities at temperature eps (max-shifted).
    std::vector<double> gibbs(double eps) const {
        if (!(eps > 0.0)) throw ArgumentError("temperature must be positive");
        const double umin = *std::min_element(energies_.begin(), energies_.end());
        std::vector<double> p(size());
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += (p[i] = std::exp(-(energies_[i] - umin) / eps));
        for (double& v : p) v /= s;
        return p;
    }

    std::vector<double> masses(double eps) const {
        const auto p = gibbs(eps);
        std::vector<double> m(wells_, 0.0);
        for (std::size_t i = 0; i < size(); ++i) m[membership_[i]] += p[i];
        return m;
    }

private:
    std::vector<double> energies_;
    std::vector<std::size_t> membership_;
    std::size_t wells_ = 1;
    DomainSpec domain_;
};

// U'(x) = scale * (U(x) - shift). Covers both U = eta V and U_0 = (U - inf U)/eta_1.
template <Energy E>
class AffineEnergy {
public:
    AffineEnergy(E inner, double shift, double scale) : inner_(std::move(inner)), shift_(shift), scale_(scale) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("energy scale must be positive");
        if (!std::isfinite(shift)) throw ArgumentError("energy shift must be finite");
    }

    const DomainSpec& domain() const noexcept { return inner_.domain(); }
    double value(std::span<const double> x) const { return scale_ * (inner_.value(x) - shift_); }
    void gradient(std::span<const double> x, std::span<double> g) const {
        inner_.gradient(x, g);
        for (double& v : g) v *= scale_;
    }

    std::optional<double> known_inf() const {
        if constexpr (HasKnownInf<E>) {
            if (auto v = inner_.known_inf()) return scale_ * (*v - shift_);
        }
        return std::nullopt;
    }
    std::vector<std::vector<double>> descent_starts() const {
        if constexpr (HasDescentStarts<E>) return inner_.descent_starts();
        return {};
    }

    // exp(-scale (V - shift)/eps) is the inner Gibbs law at eps/scale.
    void sample(double eps, Stream& rng, std::span<double> out) const
        requires ExactSampler<E>
    {
        inner_.sample(eps / scale_, rng, out);
    }

    std::size_t well_count() const
        requires Classifier<E>
    {
        return inner_.well_count();
    }
    std::size_t classify(std::span<const double> x) const
        requires Classifier<E>
    {
        return inner_.classify(x);
    }

    const E& inner() const noexcept { return inner_; }
    double shift() const noexcept { return shift_; }
    double scale() const noexcept { return scale_; }

private:
    E inner_;
    double shift_;
    double scale_;
};

// Two domains split by the hyperplane x[axis] = threshold: 0 below, 1 at/above.
struct HalfSpaceClassifier {
    std::size_t axis = 0;
    double threshold = 0.0;
    std::size_t well_count() const noexcept { return 2; }
    std::size_t classify(std::span<const double> x) const noexcept { return x[axis] < threshold ? 0 : 1; }
};

struct Minimum {
    std::vector<double> point;
    double value = 0.0;
    double residual_gradient = 0.0;  // Euclidean norm of the gradient at `point`
};

// Gradient descent with Armijo backtracking from one start point.
template <Energy E>
Minimum local_descent(const E& model, std::vector<double> x, std::size_t max_iter = 200000,
                      double gtol = 1e-12) {
    const auto& dom = model.domain();
    std::vector<double> g(dom.dim), trial(dom.dim);
    double u = model.value(x);
    double step = 1.0;
    double gn = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        model.gradient(x, g);
        gn = 0.0;
        for (double v : g) gn += v * v;
        gn = std::sqrt(gn);
        if (gn < gtol) break;
        step = std::min(1.0, step * 2.0);
        bool moved = false;
        while (step > 1e-18) {
            for (std::size_t j = 0; j < dom.dim; ++j) trial[j] = x[j] - step * g[j];
            dom.wrap(trial);
            const double ut = model.value(trial);
            if (ut <= u - 1e-4 * step * gn * gn) {
                x.swap(trial);
                u = ut;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    model.gradient(x, g);
    gn = 0.0;
    for (double v : g) gn += v * v;
    return {std::move(x), u, std::sqrt(gn)};
}

// Best local minimum over descents from every start point.
template <Energy E>
Minimum find_global_minimum(const E& model, const std::vector<std::vector<double>>& starts) {
    if (starts.empty()) throw ArgumentError("global minimum search needs at least one start point");
    std::optional<Minimum> best;
    for (const auto& s : starts) {
        auto m = local_descent(model, s);
        if (!best || m.value < best->value) best = std::move(m);
    }
    return *best;
}

template <Energy E>
struct NormalizedEnergy {
    AffineEnergy<E> energy;        // U_0 = (U - inf U) / eta_1
    double inf_value = 0.0;        // inf U used for the shift
    std::vector<double> argmin;    // empty when inf U was known analytically
    double residual_gradient = 0.0;
    std::vector<std::string> warnings;
};

// U_0 = (U - inf U)/eta_1. inf U is taken from known_inf() when available,
// otherwise estimated by local descent from every start point. Every probe must
// satisfy U_0 >= 0 (up to roundoff) or an InvariantError is thrown.
template <Energy E>
NormalizedEnergy<E> normalized_energy(const E& model, double eta1,
                                      const std::vector<std::vector<double>>& probes = {},
                                      std::vector<std::vector<double>> starts = {}) {
    if (!(eta1 > 0.0)) throw ArgumentError("eta1 must be positive");
    std::optional<double> inf;
    if constexpr (HasKnownInf<E>) inf = model.known_inf();
    std::vector<double> argmin;
    double residual = 0.0;
    std::vector<std::string> warnings;
    if (!inf) {
        if (starts.empty()) {
            if constexpr (HasDescentStarts<E>) starts = model.descent_starts();
        }
        if (starts.empty()) throw ArgumentError("inf U unknown and no descent start points available");
        auto m = find_global_minimum(model, starts);
        inf = m.value;
        argmin = std::move(m.point);
        residual = m.residual_gradient;
        if (residual > 1e-6) {
            std::ostringstream os;
            os << "estimated inf U has residual gradient norm " << residual;
            warnings.push_back(os.str());
        }
    }
    NormalizedEnergy<E> out{AffineEnergy<E>(model, *inf, 1.0 / eta1), *inf, std::move(argmin), residual,
                            std::move(warnings)};
    for (const auto& p : probes) {
        const double u0 = out.energy.value(p);
        if (u0 < -1e-9 * (1.0 + std::abs(*inf) / eta1))
            throw InvariantError("normalized energy is negative at x = " + format_point(p));
    }
    return out;
}

struct GradientCheckReport {
    double max_abs_error = 0.0;
    // max over probes of |fd - grad|_inf / max(|grad|_inf, 1)
    double max_rel_error = 0.0;
    std::size_t worst_probe = 0;
    bool passed = true;
};

// Central finite differences with step 1e-5 * scale against the analytic gradient.
template <Energy E>
GradientCheckReport gradient_check(const E& model, const std::vector<std::vector<double>>& probes,
                                   double scale = 1.0, double tolerance = 1e-5) {
    if (probes.empty()) throw ArgumentError("gradient check needs at least one probe");
    const std::size_t d = model.domain().dim;
    const double h = 1e-5 * scale;
    GradientCheckReport rep;
    std::vector<double> g(d), xp(d);
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto& x = probes[p];
        model.gradient(x, g);
        double err = 0.0, gmax = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            xp = x;
            xp[j] = x[j] + h;
            const double up = model.value(xp);
            xp[j] = x[j] - h;
            const double um = model.value(xp);
            const double fd = (up - um) / (2.0 * h);
            err = std::max(err, std::abs(fd - g[j]));
            gmax = std::max(gmax, std::abs(g[j]));
        }
        const double rel = err / std::max(gmax, 1.0);
        rep.max_abs_error = std::max(rep.max_abs_error, err);
        if (rel > rep.max_rel_error || !std::isfinite(rel)) {
            rep.max_rel_error = rel;
            rep.worst_probe = p;
        }
    }
    rep.passed = rep.max_rel_error <= tolerance;
    return rep;
}

}  // namespace asmc

#endif  // ASMC_TARGETS_HPP

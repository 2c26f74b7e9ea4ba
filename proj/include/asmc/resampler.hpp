#ifndef ASMC_RESAMPLER_HPP
#define ASMC_RESAMPLER_HPP

// Inter-level importance weights and multinomial resampling via Vose's alias method.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "asmc/errors.hpp"
#include "asmc/random.hpp"
#include "asmc/targets.hpp"

namespace asmc {

// Log weights and the probabilities obtained by max-shifted exponentiation.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> log_weights) : log_(std::move(log_weights)) {
        if (log_.empty()) throw ArgumentError("weight vector must be non-empty");
        max_ = -std::numeric_limits<double>::infinity();
        for (double l : log_) {
            if (std::isnan(l) || l == std::numeric_limits<double>::infinity())
                throw DegenerateWeightsError("log weight is NaN or +inf");
            max_ = std::max(max_, l);
        }
        if (max_ == -std::numeric_limits<double>::infinity())
            throw DegenerateWeightsError("all weights are zero");
        p_.resize(log_.size());
        double s = 0.0;
        for (std::size_t i = 0; i < log_.size(); ++i) s += (p_[i] = std::exp(log_[i] - max_));
        for (double& v : p_) v /= s;
    }

    std::size_t size() const noexcept { return p_.size(); }
    const std::vector<double>& log_weights() const noexcept { return log_; }
    const std::vector<double>& probabilities() const noexcept { return p_; }
    double max_log_weight() const noexcept { return max_; }

private:
    std::vector<double> log_;
    std::vector<double> p_;
    double max_ = 0.0;
};

// l_i = -(1/eta_next - 1/eta_k) U(x_i): the log of pi~_{k+1}/pi~_k at each particle.
template <Energy E>
WeightVector inter_level_log_weights(std::span<const double> positions, std::size_t dim, const E& model,
                                     double eta_k, double eta_next) {
    if (!(eta_next < eta_k)) throw ArgumentError("next temperature must be lower");
    if (!(eta_next > 0.0)) throw ArgumentError("temperature must be positive");
    const double dbeta = 1.0 / eta_next - 1.0 / eta_k;
    const std::size_t n = positions.size() / dim;
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = positions.subspan(i * dim, dim);
        const double u = model.value(x);
        if (std::isnan(u)) throw EvaluationError("energy is NaN at x = " + format_point(x));
        l[i] = u == std::numeric_limits<double>::infinity() ? -std::numeric_limits<double>::infinity() : -dbeta * u;
    }
    return WeightVector(std::move(l));
}

// Vose alias table: cell i keeps i with probability threshold[i], else alias[i].
class AliasTable {
public:
    std::size_t size() const noexcept { return threshold_.size(); }
    const std::vector<double>& thresholds() const noexcept { return threshold_; }
    const std::vector<std::size_t>& aliases() const noexcept { return alias_; }

    std::size_t draw(Stream& rng) const {
        const std::size_t i = rng.index(size());
        return rng.uniform() < threshold_[i] ? i : alias_[i];
    }

    // Sampling probability of every index implied by the table.
    std::vector<double> implied_probabilities() const {
        const double n = static_cast<double>(size());
        std::vector<double> p(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            p[i] += threshold_[i] / n;
            p[alias_[i]] += (1.0 - threshold_[i]) / n;
        }
        return p;
    }

private:
    friend AliasTable build_alias(std::span<const double> p);
    std::vector<double> threshold_;
    std::vector<std::size_t> alias_;
};

inline AliasTable build_alias(std::span<const double> p) {
    if (p.empty()) throw ArgumentError("alias table needs at least one probability");
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("probabilities must be finite and non-negative");
        total += v;
    }
    if (!(total > 0.0)) throw ArgumentError("probabilities must not all be zero");
    const std::size_t n = p.size();
    AliasTable t;
    t.threshold_.assign(n, 1.0);
    t.alias_.resize(n);
    std::vector<double> q(n);
    std::vector<std::size_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.alias_[i] = i;
        q[i] = p[i] * static_cast<double>(n) / total;
        (q[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        t.threshold_[s] = q[s];
        t.alias_[s] = l;
        q[l] -= 1.0 - q[s];
        if (q[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // Leftovers are 1 up to roundoff.
    for (std::size_t i : large) t.threshold_[i] = 1.0;
    for (std::size_t i : small) t.threshold_[i] = 1.0;
    return t;
}

// Multinomial resampling: N i.i.d. draws from p, in draw order.
inline std::vector<double> resample(std::span<const double> positions, std::size_t dim, const WeightVector& weights,
                                    Stream& rng) {
    const std::size_t n = weights.size();
    if (n == 0 || positions.size() != n * dim) throw ArgumentError("positions and weights disagree in size");
    const AliasTable table = build_alias(weights.probabilities());
    std::vector<double> out(positions.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = table.draw(rng);
        std::copy_n(positions.begin() + static_cast<std::ptrdiff_t>(src * dim), dim,
                    out.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return out;
}

// 1 / sum p_i^2, in [1, N].
inline double effective_sample_size(const WeightVector& weights) {
    double s = 0.0;
    for (double v : weights.probabilities()) s += v * v;
    return 1.0 / s;
}

}  // namespace asmc

#endif  // ASMC_RESAMPLER_HPP

#ifndef ASMC_ANNEALING_HPP
#define ASMC_ANNEALING_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "asmc/constants.hpp"
#include "asmc/errors.hpp"

namespace asmc {

// Strictly decreasing temperatures eta_1 > ... > eta_M whose reciprocals are
// linearly spaced.
class AnnealingSchedule {
public:
    // A one-level "ladder" at eta. Only meaningful for rejection comparisons.
    static AnnealingSchedule single(double eta) {
        if (!(eta > 0.0)) throw ArgumentError("temperature must be positive");
        return AnnealingSchedule({eta});
    }

    const std::vector<double>& temperatures() const noexcept { return eta_; }
    std::size_t size() const noexcept { return eta_.size(); }
    double operator[](std::size_t k) const { return eta_.at(k); }
    double initial() const noexcept { return eta_.front(); }
    double final() const noexcept { return eta_.back(); }

    // 1/eta_{k+1} - 1/eta_k; zero for a single level.
    double inverse_step() const noexcept {
        return eta_.size() < 2 ? 0.0
                               : (1.0 / eta_.back() - 1.0 / eta_.front()) / static_cast<double>(eta_.size() - 1);
    }

private:
    explicit AnnealingSchedule(std::vector<double> eta) : eta_(std::move(eta)) {}
    friend AnnealingSchedule geometric_schedule(double, double, std::size_t);

    std::vector<double> eta_;
};

// eta_k with 1/eta_k = 1/eta1 + (k-1)(1/eta - 1/eta1)/(M-1); endpoints are exact.
inline AnnealingSchedule geometric_schedule(double eta1, double eta, std::size_t M) {
    if (!(eta > 0.0)) throw ArgumentError("final temperature must be positive");
    if (!(eta < eta1)) throw ArgumentError("final temperature must be below the initial temperature");
    if (M < 2) throw ArgumentError("a geometric schedule needs M >= 2 levels");
    std::vector<double> t(M);
    const double b1 = 1.0 / eta1;
    const double step = (1.0 / eta - b1) / static_cast<double>(M - 1);
    for (std::size_t k = 0; k < M; ++k) t[k] = 1.0 / (b1 + static_cast<double>(k) * step);
    t.front() = eta1;
    t.back() = eta;
    return AnnealingSchedule(std::move(t));
}

enum class PlanMode { local_model, langevin };

inline std::string to_string(PlanMode m) { return m == PlanMode::local_model ? "local_model" : "langevin"; }

struct ParameterPlan {
    PlanMode mode = PlanMode::local_model;
    double delta = 0.0;
    double nu = 0.0;
    double eta = 0.0;
    double eta1 = 1.0;
    double alpha = 0.0;        // langevin only
    double gamma_hat_r = 1.0;  // langevin only
    std::size_t M = 0;
    std::size_t N = 0;
    double T = 0.0;  // step count in local mode, continuous time in langevin mode
    double C_T = 0.0;
    double C_N = 0.0;
};

namespace detail {

// Ceiling that ignores relative roundoff below 1e-12 so that, e.g., 4.0000000000000009 -> 4.
inline double ceil_tol(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return r;
    return std::ceil(x);
}

inline std::size_t plan_levels(double nu, double eta, double eta1) {
    // M >= ceil(1/(nu eta)) and the inverse-temperature step stays <= nu.
    const double by_count = ceil_tol(1.0 / (nu * eta));
    const double by_step = 1.0 + ceil_tol((1.0 / eta - 1.0 / eta1) / nu);
    return static_cast<std::size_t>(std::max({2.0, by_count, by_step}));
}

inline std::size_t plan_particles(double C_N, std::size_t M, double delta) {
    const double m = static_cast<double>(M);
    return static_cast<std::size_t>(ceil_tol(C_N * m * m / (delta * delta)));
}

}  // namespace detail

// ceil(ln(delta/2) / ln chi): steps after which the local model is delta-mixed in TV.
inline std::size_t mixing_time_bound(double chi, double delta) {
    if (!(chi > 0.0 && chi < 1.0)) throw ArgumentError("chi must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    return static_cast<std::size_t>(std::max(1.0, detail::ceil_tol(std::log(delta / 2.0) / std::log(chi))));
}

// Plan (M, N, T) for the local mixing model; T is the (delta/C_T)-mixing-time
// bound at eta1.
inline ParameterPlan plan_local(double delta, double nu, double eta, double eta1,
                                const ConstantsBundle& constants, double chi_at_eta1) {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    if (!(nu > 0.0)) throw ArgumentError("nu must be positive");
    if (!(eta > 0.0 && eta < eta1)) throw ArgumentError("need 0 < eta < eta1");
    if (!(chi_at_eta1 > 0.0 && chi_at_eta1 < 1.0)) throw ArgumentError("chi must lie in (0, 1)");
    if (!constants.C_N || !constants.C_T) throw ArgumentError("constants bundle lacks C_N or C_T");
    ParameterPlan p;
    p.mode = PlanMode::local_model;
    p.delta = delta;
    p.nu = nu;
    p.eta = eta;
    p.eta1 = eta1;
    p.C_T = *constants.C_T;
    p.C_N = *constants.C_N;
    p.M = detail::plan_levels(nu, eta, eta1);
    p.N = detail::plan_particles(p.C_N, p.M, delta);
    p.T = static_cast<double>(std::max<std::size_t>(
        1, static_cast<std::size_t>(detail::ceil_tol(std::log(delta / (2.0 * p.C_T)) / std::log(chi_at_eta1)))));
    return p;
}

// Plan (M, N, T) for Langevin dynamics; T is continuous time.
inline ParameterPlan plan_langevin(double delta, double nu, double eta, double alpha, double gamma_hat_r,
                                   double C_T, double C_N, double eta1 = 1.0) {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    if (!(nu > 0.0)) throw ArgumentError("nu must be positive");
    if (!(eta > 0.0 && eta < eta1)) throw ArgumentError("need 0 < eta < eta1");
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    if (!(gamma_hat_r >= 1.0)) throw ArgumentError("gamma_hat_r must be >= 1");
    if (!(C_T > 0.0) || !(C_N > 0.0)) throw ArgumentError("C_T and C_N must be positive");
    ParameterPlan p;
    p.mode = PlanMode::langevin;
    p.delta = delta;
    p.nu = nu;
    p.eta = eta;
    p.eta1 = eta1;
    p.alpha = alpha;
    p.gamma_hat_r = gamma_hat_r;
    p.C_T = C_T;
    p.C_N = C_N;
    p.M = detail::plan_levels(nu, eta, eta1);
    p.N = detail::plan_particles(C_N, p.M, delta);
    p.T = C_T * (std::pow(static_cast<double>(p.M), (1.0 + alpha) * gamma_hat_r) + std::log(1.0 / delta) +
                 1.0 / eta);
    return p;
}

}  // namespace asmc

#endif  // ASMC_ANNEALING_HPP

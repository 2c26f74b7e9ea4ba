#ifndef ASMC_CONSTANTS_HPP
#define ASMC_CONSTANTS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "asmc/errors.hpp"

namespace asmc {

// Constants controlling the local-model error bound. Entries are optional so a
// partially filled bundle can be carried around; the planner demands C_T, C_N.
struct ConstantsBundle {
    std::size_t J = 2;
    std::optional<double> C_r;
    std::optional<double> C_LBV;
    std::optional<double> C_beta;
    std::optional<double> C_T;
    std::optional<double> C_N;
    std::vector<std::string> provenance;  // one note per computed entry
};

// C_beta = exp(2 C_r C_LBV), C_T = 4 J C_r (2 C_beta + 1), C_N = J^2 (2 C_beta + 1)^2 (1 + C_r)^2.
inline ConstantsBundle constants_bundle(std::size_t J, double C_r, double C_LBV) {
    if (J < 1) throw ArgumentError("J must be >= 1");
    if (!(C_r >= 1.0)) throw ArgumentError("C_r must be >= 1");
    if (!(C_LBV >= 0.0)) throw ArgumentError("C_LBV must be >= 0");
    ConstantsBundle b;
    const double j = static_cast<double>(J);
    b.J = J;
    b.C_r = C_r;
    b.C_LBV = C_LBV;
    b.C_beta = std::exp(2.0 * C_r * C_LBV);
    b.C_T = 4.0 * j * C_r * (2.0 * *b.C_beta + 1.0);
    const double a = 2.0 * *b.C_beta + 1.0, r = 1.0 + C_r;
    b.C_N = j * j * (a * a) * (r * r);
    b.provenance = {"C_beta = exp(2 C_r C_LBV)", "C_T = 4 J C_r (2 C_beta + 1)",
                    "C_N = J^2 (2 C_beta + 1)^2 (1 + C_r)^2"};
    return b;
}

}  // namespace asmc

#endif  // ASMC_CONSTANTS_HPP

#pragma once

#include <cmath>

#include "nrr/common.hpp"

namespace nrr {

/// Welsch robust penalty: 1 - exp(-x^2 / (2 nu^2)). Monotone on [0, inf),
/// bounded above by 1.
inline double welsch(double x, double nu) {
    return 1.0 - std::exp(-(x * x) / (2.0 * nu * nu));
}

/// Same penalty evaluated from a squared argument.
inline double welsch_sq(double x2, double nu) {
    return 1.0 - std::exp(-x2 / (2.0 * nu * nu));
}

/// Gaussian weight of the quadratic bound at anchor y (squared argument):
/// exp(-y^2 / (2 nu^2)) / (2 nu^2).
inline double welsch_weight_sq(double y2, double nu) {
    const double two_nu2 = 2.0 * nu * nu;
    return std::exp(-y2 / two_nu2) / two_nu2;
}

/// Convex quadratic upper bound of the Welsch penalty, anchored at y:
/// psi(y) + (1 - psi(y)) / (2 nu^2) * (x^2 - y^2). Touches welsch(x, nu)
/// exactly at x = y and dominates it everywhere else.
inline double welsch_surrogate(double x, double y, double nu) {
    const double psi_y = welsch(y, nu);
    return psi_y + (1.0 - psi_y) / (2.0 * nu * nu) * (x * x - y * y);
}

}  // namespace nrr

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "npf/common.hpp"

namespace npf::detail {

/// Safeguarded Newton for an increasing function bracketed by [lo, hi] with
/// phi(lo) <= 0 <= phi(hi). Newton steps that leave the current bracket fall
/// back to bisection. Stops on |phi| <= ftol; if the bracket collapses to
/// adjacent floats first (the root sits between representable numbers, or the
/// target saturates the bracket), the better endpoint is returned.
template <class F, class DF>
double newton_bisect(F&& phi, DF&& dphi, double lo, double hi, double x0, double ftol,
                     int max_iter, const char* what) {
    double x = std::clamp(x0, lo, hi);
    for (int it = 0; it < max_iter; ++it) {
        const double fx = phi(x);
        if (std::abs(fx) <= ftol) return x;
        if (fx > 0.0) hi = x; else lo = x;
        if (std::nextafter(lo, hi) >= hi)
            return std::abs(phi(lo)) <= std::abs(phi(hi)) ? lo : hi;
        const double d = dphi(x);
        double xn = std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(d) && d > 0.0) xn = x - fx / d;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    if (std::abs(phi(x)) <= ftol * 1e3) return x;
    throw SolverError(std::string(what) + ": root solve did not converge");
}

} // namespace npf::detail

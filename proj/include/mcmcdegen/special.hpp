#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace mcmcdegen::normal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double pdf(double x) noexcept {
    if (std::isinf(x)) return 0.0;
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double log_pdf(double x) noexcept {
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Phi(x).
inline double cdf(double x) noexcept {
    if (x == -kInf) return 0.0;
    if (x == kInf) return 1.0;
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// 1 - Phi(x), accurate in the upper tail.
inline double ccdf(double x) noexcept { return cdf(-x); }

/// Phi^{-1}(p) for p in (0, 1).
inline double quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// x such that 1 - Phi(x) = q, accurate for tiny q.
inline double cquantile(double q) { return -quantile(q); }

/// log(1 - Phi(x)); switches to the asymptotic Mills-ratio series once erfc
/// underflows.
inline double log_ccdf(double x) noexcept {
    if (x == kInf) return -kInf;
    if (x < 30.0) return std::log(ccdf(x));
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return log_pdf(x) - std::log(x) + std::log(series);
}

/// log of the N(0,1) mass of [a, b].
inline double log_interval_mass(double a, double b) noexcept {
    if (a >= b) return -kInf;
    if (a > 0.0) {
        const double la = log_ccdf(a);
        const double lb = log_ccdf(b);
        return la + std::log1p(-std::exp(lb - la));
    }
    if (b < 0.0) return log_interval_mass(-b, -a);
    return std::log(cdf(b) - cdf(a));
}

} // namespace mcmcdegen::normal

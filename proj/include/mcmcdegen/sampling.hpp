#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace mcmcdegen {

/// Real interval with optional infinite ends. Empty intervals are rejected
/// at construction; the closed/open flags only document intent because all
/// samplers here draw from continuous laws.
struct Interval {
    double lo = -normal::kInf;
    double hi = normal::kInf;
    bool lo_closed = false;
    bool hi_closed = true;

    Interval() = default;
    Interval(double lower, double upper, bool lower_closed = false, bool upper_closed = true)
        : lo(lower), hi(upper), lo_closed(lower_closed), hi_closed(upper_closed) {
        if (!(lo < hi)) {
            throw DegenerateInputError("empty interval [" + std::to_string(lo) + ", " +
                                       std::to_string(hi) + "]");
        }
    }

    static Interval real_line() { return {}; }
    static Interval at_most(double b) { return {-normal::kInf, b, false, true}; }
    static Interval above(double a) { return {a, normal::kInf, false, false}; }

    bool contains(double x) const noexcept {
        const bool lo_ok = lo_closed ? x >= lo : x > lo;
        const bool hi_ok = hi_closed ? x <= hi : x < hi;
        // Samplers may return an endpoint after clamping; accept it.
        return (lo_ok || x == lo) && (hi_ok || x == hi);
    }
    bool finite() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }
};

inline double standard_normal(RngStream& rng) { return normal::quantile(rng.uniform()); }

namespace detail {

// Standardized draw from N(0,1) restricted to [a, b] with a >= kTailCut.
// Rejection from a truncated exponential (or a uniform for short intervals);
// works in log space so it never needs the interval mass.
inline double upper_tail_draw(double a, double b, RngStream& rng) {
    if (std::isfinite(b) && (b - a) < 1.0 / a) {
        for (;;) {
            const double x = a + rng.uniform() * (b - a);
            if (std::log(rng.uniform()) < -0.5 * (x - a) * (x + a)) return x;
        }
    }
    const double span = std::isfinite(b) ? -std::expm1(-a * (b - a)) : 1.0;
    for (;;) {
        const double x = a - std::log1p(-rng.uniform() * span) / a;
        if (x > b) continue;
        const double d = x - a;
        if (std::log(rng.uniform()) < -0.5 * d * d) return x;
    }
}

} // namespace detail

/// Standardized distance from the mean beyond which the tail sampler is used.
inline constexpr double kTailCut = 6.0;
/// Interval mass below which a draw is refused as degenerate.
inline constexpr double kMinIntervalMass = 1e-300;

/// Exact draw from N(mean, sd^2) restricted to `iv`. Inverse-CDF in the bulk,
/// exponential rejection once the interval lies beyond kTailCut sd.
/// With `check_mass` the draw is refused when the interval mass is below
/// kMinIntervalMass; callers that can tolerate that regime pass false.
inline double truncated_normal(double mean, double sd, const Interval& iv, RngStream& rng,
                               bool check_mass = true) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw PreconditionError("truncated_normal: sd must be positive");
    if (!(iv.lo < iv.hi)) throw DegenerateInputError("truncated_normal: empty interval");
    const double a = (iv.lo - mean) / sd;
    const double b = (iv.hi - mean) / sd;
    // In the bulk with a non-tiny width the mass is far above the threshold.
    const bool bulk = a < kTailCut && b > -kTailCut && (b - a) > 1e-200;
    if (check_mass && !bulk && normal::log_interval_mass(a, b) < std::log(kMinIntervalMass)) {
        throw DegenerateInputError("truncated_normal: interval mass below 1e-300");
    }

    double x;
    if (a >= kTailCut) {
        x = detail::upper_tail_draw(a, b, rng);
    } else if (b <= -kTailCut) {
        x = -detail::upper_tail_draw(-b, -a, rng);
    } else if (std::isfinite(a) && std::isfinite(b) &&
               (b - a) < 1e-9 * std::max(1.0, std::abs(a))) {
        // Density is flat to ~1e-9 relative accuracy across the interval.
        x = a + rng.uniform() * (b - a);
    } else if (a > 0.0) {
        const double qa = normal::ccdf(a);
        const double qb = normal::ccdf(b);
        x = normal::cquantile(qb + rng.uniform() * (qa - qb));
    } else {
        const double pa = normal::cdf(a);
        const double pb = normal::cdf(b);
        x = normal::quantile(pa + rng.uniform() * (pb - pa));
    }
    x = std::clamp(x, a, b);
    return mean + sd * x;
}

/// Gamma(shape, rate) draw, Marsaglia-Tsang squeeze with the usual
/// U^(1/shape) boost for shape < 1.
inline double gamma_draw(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
        throw PreconditionError("gamma_draw: shape and rate must be positive");
    }
    double boost = 1.0;
    double alpha = shape;
    if (shape < 1.0) {
        alpha = shape + 1.0;
        boost = std::pow(rng.uniform(), 1.0 / shape);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v / rate;
    }
}

/// Tabulated inverse-CDF sampler for a 1-D log density. The support is
/// scanned and zoomed until the region carrying non-negligible mass is
/// resolved by `gridsize` cells; the density is then treated as piecewise
/// linear between grid nodes.
class GridSampler {
public:
    GridSampler(const std::function<double(double)>& logdensity, const Interval& support,
                int gridsize = 4096) {
        if (gridsize < 8) throw PreconditionError("GridSampler: gridsize must be >= 8");
        gridsize_ = gridsize + (gridsize % 2);
        auto [lo, hi] = bracket(logdensity, support);
        for (int level = 0; level < 16; ++level) {
            tabulate(logdensity, lo, hi);
            const double max_ld = *std::max_element(logd_.begin(), logd_.end());
            int first = -1, last = -1;
            for (int k = 0; k <= gridsize_; ++k) {
                if (logd_[k] >= max_ld - kNegligible) {
                    if (first < 0) first = k;
                    last = k;
                }
            }
            first = std::max(first - 1, 0);
            last = std::min(last + 1, gridsize_);
            if (last - first >= gridsize_ / 8) break;
            const double new_lo = nodes_[first];
            const double new_hi = nodes_[last];
            if (!(new_lo < new_hi)) break;
            lo = new_lo;
            hi = new_hi;
        }
        build_table();
    }

    double draw(RngStream& rng) const {
        const double target = rng.uniform() * cum_.back();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
        const auto k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            (it - cum_.begin()) - 1, 0, static_cast<std::ptrdiff_t>(dens_.size()) - 2));
        const double h = nodes_[k + 1] - nodes_[k];
        const double d0 = dens_[k];
        const double d1 = dens_[k + 1];
        const double r = target - cum_[k];
        // Solve d0 t + (d1 - d0) t^2 / (2h) = r for t in [0, h].
        double t;
        const double slope = (d1 - d0) / h;
        if (std::abs(slope) * h < 1e-12 * std::max(d0, d1)) {
            t = r / std::max(d0, std::numeric_limits<double>::min());
        } else {
            const double disc = std::max(d0 * d0 + 2.0 * slope * r, 0.0);
            t = 2.0 * r / (d0 + std::sqrt(disc));
        }
        return nodes_[k] + std::clamp(t, 0.0, h);
    }

    /// Relative difference between trapezoid and Simpson masses: an O(h^2)
    /// estimate of the total-variation error of the tabulated law.
    double tv_error_bound() const noexcept { return tv_bound_; }
    double lower() const noexcept { return nodes_.front(); }
    double upper() const noexcept { return nodes_.back(); }

private:
    static constexpr double kNegligible = 40.0;

    std::pair<double, double> bracket(const std::function<double(double)>& ld,
                                      const Interval& support) const {
        if (support.finite()) return {support.lo, support.hi};
        double half = 64.0;
        for (int attempt = 0; attempt < 16; ++attempt, half *= 2.0) {
            const double lo = std::max(support.lo, -half);
            const double hi = std::min(support.hi, half);
            const double inner_max = std::max({ld(0.5 * (lo + hi)), ld(lo + 0.25 * (hi - lo)),
                                               ld(lo + 0.75 * (hi - lo))});
            const bool lo_ok = std::isfinite(support.lo) || ld(lo) < inner_max - kNegligible;
            const bool hi_ok = std::isfinite(support.hi) || ld(hi) < inner_max - kNegligible;
            if (lo_ok && hi_ok && std::isfinite(inner_max)) return {lo, hi};
        }
        throw NumericalError("GridSampler: density mass escapes the support scan");
    }

    void tabulate(const std::function<double(double)>& ld, double lo, double hi) {
        nodes_.resize(gridsize_ + 1);
        logd_.resize(gridsize_ + 1);
        for (int k = 0; k <= gridsize_; ++k) {
            nodes_[k] = lo + (hi - lo) * static_cast<double>(k) / gridsize_;
            const double v = ld(nodes_[k]);
            logd_[k] = std::isnan(v) ? -normal::kInf : v;
        }
        if (!std::isfinite(*std::max_element(logd_.begin(), logd_.end()))) {
            throw NumericalError("GridSampler: log density not finite anywhere on the grid");
        }
    }

    void build_table() {
        const double max_ld = *std::max_element(logd_.begin(), logd_.end());
        dens_.resize(logd_.size());
        for (std::size_t k = 0; k < logd_.size(); ++k) dens_[k] = std::exp(logd_[k] - max_ld);
        cum_.assign(dens_.size(), 0.0);
        double simpson = 0.0;
        for (std::size_t k = 0; k + 1 < dens_.size(); ++k) {
            const double h = nodes_[k + 1] - nodes_[k];
            cum_[k + 1] = cum_[k] + 0.5 * h * (dens_[k] + dens_[k + 1]);
        }
        for (std::size_t k = 0; k + 2 < dens_.size(); k += 2) {
            const double h = nodes_[k + 1] - nodes_[k];
            simpson += h / 3.0 * (dens_[k] + 4.0 * dens_[k + 1] + dens_[k + 2]);
        }
        if (!(cum_.back() > 0.0)) throw NumericalError("GridSampler: zero total mass");
        tv_bound_ = std::abs(cum_.back() - simpson) / cum_.back();
    }

    int gridsize_ = 0;
    std::vector<double> nodes_, logd_, dens_, cum_;
    double tv_bound_ = 0.0;
};

struct GridDraw {
    double value;
    double tv_error_bound;
};

inline GridDraw grid_inverse_cdf(const std::function<double(double)>& logdensity,
                                 const Interval& support, int gridsize, RngStream& rng) {
    const GridSampler sampler(logdensity, support, gridsize);
    return {sampler.draw(rng), sampler.tv_error_bound()};
}

} // namespace mcmcdegen

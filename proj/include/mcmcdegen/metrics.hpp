#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kernels.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "transport.hpp"

namespace mcmcdegen {

/// d(u, v) = min(|u - v|, 1), optionally after scaling differences by `scale`
/// (the localized metric uses scale = sqrt(n)).
inline double ground_distance(const VectorRef& u, const VectorRef& v, double scale = 1.0) {
    return std::min(scale * (u - v).norm(), 1.0);
}

struct EmpiricalMeasure {
    Matrix points;  // k x d
    Vector weights; // k, sums to one

    EmpiricalMeasure() = default;
    EmpiricalMeasure(Matrix pts, Vector w) : points(std::move(pts)), weights(std::move(w)) { validate(); }

    static EmpiricalMeasure uniform(Matrix pts) {
        const auto k = pts.rows();
        require(k >= 1, "empirical measure needs at least one point");
        return {std::move(pts), Vector::Constant(k, 1.0 / static_cast<double>(k))};
    }
    static EmpiricalMeasure dirac(const Vector& x) { return uniform(Matrix(x.transpose())); }

    int size() const noexcept { return static_cast<int>(points.rows()); }
    int dim() const noexcept { return static_cast<int>(points.cols()); }
    bool is_uniform() const noexcept {
        return (weights.array() == weights[0]).all();
    }

    void validate() const {
        require(points.rows() >= 1, "empirical measure needs at least one point");
        require(weights.size() == points.rows(), "empirical measure: weights and points differ in size");
        require((weights.array() >= 0).all(), "empirical measure: negative weight");
        require(std::abs(weights.sum() - 1.0) < 1e-12, "empirical measure: weights must sum to one");
        require(points.allFinite(), "empirical measure: non-finite point");
    }
};

struct BlOptions {
    int support_cap = 400;
    std::uint64_t seed = 0xB1D15;
};

struct BlResult {
    double value = 0.0;
    int resampled_points = 0; // points removed by the support cap
    std::string solver;
};

namespace detail {

inline EmpiricalMeasure cap_support(const EmpiricalMeasure& mu, int cap, RngStream& rng, int& removed) {
    if (mu.size() <= cap) return mu;
    const std::vector<double> w(mu.weights.data(), mu.weights.data() + mu.size());
    const auto idx = stats::systematic_resample(w, static_cast<std::size_t>(cap), rng.uniform());
    Matrix pts(cap, mu.dim());
    for (int k = 0; k < cap; ++k) pts.row(k) = mu.points.row(static_cast<Eigen::Index>(idx[k]));
    removed += mu.size() - cap;
    return EmpiricalMeasure::uniform(std::move(pts));
}

} // namespace detail

/// Bounded-Lipschitz distance for the truncated metric min(|u-v|, 1). The
/// metric has diameter at most one, so any 1-Lipschitz witness can be shifted
/// into [-1/2, 1/2] and the sup-norm constraint never binds; the value is the
/// optimal transport cost under the same metric, computed exactly.
inline BlResult bl_distance_detailed(const EmpiricalMeasure& mu_in, const EmpiricalMeasure& nu_in,
                                     const BlOptions& opt = {}) {
    mu_in.validate();
    nu_in.validate();
    require(mu_in.dim() == nu_in.dim(), "bl_distance: dimensions differ");
    require(opt.support_cap >= 1, "bl_distance: support cap must be positive");
    BlResult out;
    RngStream rng(opt.seed, derive_stream_id(0, {0xCA9}));
    const EmpiricalMeasure mu = detail::cap_support(mu_in, opt.support_cap, rng, out.resampled_points);
    const EmpiricalMeasure nu = detail::cap_support(nu_in, opt.support_cap, rng, out.resampled_points);

    Matrix cost(mu.size(), nu.size());
    for (int i = 0; i < mu.size(); ++i) {
        for (int j = 0; j < nu.size(); ++j) {
            cost(i, j) = ground_distance(mu.points.row(i).transpose(), nu.points.row(j).transpose());
        }
    }
    if (mu.size() == nu.size() && mu.is_uniform() && nu.is_uniform()) {
        const auto match = transport::hungarian(cost);
        std::vector<double> c(match.size());
        for (std::size_t i = 0; i < match.size(); ++i) c[i] = cost(static_cast<Eigen::Index>(i), match[i]);
        out.value = stats::pairwise_sum(c) / static_cast<double>(mu.size());
        out.solver = "assignment";
    } else {
        out.value = transport::transportation_simplex(mu.weights, nu.weights, cost).cost;
        out.solver = "transportation-simplex";
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

inline double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const BlOptions& opt = {}) {
    return bl_distance_detailed(mu, nu, opt).value;
}

/// Per-coordinate root of sum_i w_i arctan(x_i - c) = 0, by bisection.
inline Vector central_value(const EmpiricalMeasure& mu) {
    mu.validate();
    Vector out(mu.dim());
    for (int k = 0; k < mu.dim(); ++k) {
        const auto col = mu.points.col(k);
        auto h = [&](double c) {
            double s = 0.0;
            for (int i = 0; i < mu.size(); ++i) s += mu.weights[i] * std::atan(col[i] - c);
            return s;
        };
        double lo = col.minCoeff(), hi = col.maxCoeff();
        double mid = 0.5 * (lo + hi);
        for (int it = 0; it < 200 && lo < hi; ++it) {
            mid = 0.5 * (lo + hi);
            const double v = h(mid);
            if (std::abs(v) < 1e-13) break;
            if (v > 0) lo = mid;
            else hi = mid;
            if (mid == lo && mid == hi) break;
        }
        out[k] = mid;
    }
    return out;
}

inline Vector central_value(const Matrix& sample) { return central_value(EmpiricalMeasure::uniform(sample)); }

/// Replaces every transform series by sqrt(n) (E(s(i)) - theta_hat).
inline ChainTrace localize(const ChainTrace& trace, const Vector& theta_hat, int n) {
    require(n >= 1, "localize: n must be >= 1");
    ChainTrace out = trace;
    const double s = std::sqrt(static_cast<double>(n));
    for (auto& series : out.transforms) {
        require(series.values.cols() == theta_hat.size(), "localize: theta_hat dimension does not match the '" +
                                                              to_string(series.kind) + "' transform");
        series.values = (s * (series.values.rowwise() - theta_hat.transpose())).eval();
    }
    return out;
}

/// W'_m = m^-1 sum_i d(F(s(0)), F(s(i))), exact because e_1 is a Dirac mass.
inline double w_prime(const Matrix& series, double scale = 1.0) {
    require(series.rows() >= 1, "w_prime: empty series");
    std::vector<double> d(series.rows());
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        d[i] = ground_distance(series.row(0).transpose(), series.row(i).transpose(), scale);
    }
    return stats::pairwise_sum(d) / static_cast<double>(series.rows());
}

} // namespace mcmcdegen

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "errors.hpp"

namespace mcmcdegen::stats {

/// Pairwise summation in index order. The result depends only on the values
/// and their order, never on how they were produced.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> v) {
    require(!v.empty(), "mean_se: empty input");
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    if (v.size() < 2) return {mean, 0.0};
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

inline double variance(std::span<const double> v) {
    require(v.size() >= 2, "variance: need at least two values");
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    return pairwise_sum(sq) / (n - 1.0);
}

inline double lag1_autocorrelation(std::span<const double> v) {
    require(v.size() >= 3, "lag1_autocorrelation: need at least three values");
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        den += d * d;
        if (i + 1 < v.size()) num += d * (v[i + 1] - mean);
    }
    if (den == 0.0) return 1.0;
    return num / den;
}

/// Asymptotic Kolmogorov tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the Stephens small-sample correction.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == t) ++i;
        while (j < b.size() && b[j] == t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    require(!a.empty(), "ks_one_sample: empty sample");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double f = cdf(a[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

/// Indices of a systematic resample of `k` points from normalized weights.
inline std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t k,
                                                    double u01) {
    require(k >= 1 && !weights.empty(), "systematic_resample: empty input");
    std::vector<std::size_t> idx(k);
    double cum = weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double target = (static_cast<double>(i) + u01) / static_cast<double>(k);
        while (target > cum && j + 1 < weights.size()) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

} // namespace mcmcdegen::stats

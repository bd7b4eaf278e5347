#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "asymptotics.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "stats.hpp"

namespace mcmcdegen {

struct OracleResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     // worst observed error or smallest p-value
    double tolerance = 0.0;
    std::string detail;
};

namespace oracle {

inline OracleResult scale_constants_probit(double tol = 1e-8) {
    const ScaleConstants sc = scale_constants(LinkSpec{});
    const double err = std::max(std::abs(sc.K - 2.0), std::abs(sc.L));
    return {"scale constants (K, L) = (2, 0)", err < tol, err, tol,
            "K=" + std::to_string(sc.K) + " L=" + std::to_string(sc.L)};
}

/// Distance to a Dirac mass equals the mean truncated distance, on random
/// weighted measures of dimension 1 to 3.
inline OracleResult bl_dirac_identity(std::uint64_t seed, int cases = 100, double tol = 1e-9) {
    RngStream rng(seed, derive_stream_id(0, {0x0BF}));
    double worst = 0.0;
    for (int t = 0; t < cases; ++t) {
        const int d = 1 + static_cast<int>(rng.uniform() * 3.0);
        const int k = 1 + static_cast<int>(rng.uniform() * 40.0);
        Matrix pts(k, d);
        Vector w(k);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < d; ++j) pts(i, j) = 1.5 * standard_normal(rng);
            w[i] = 0.05 + rng.uniform();
        }
        w /= w.sum();
        Vector x(d);
        for (int j = 0; j < d; ++j) x[j] = 1.5 * standard_normal(rng);
        double expected = 0.0;
        for (int i = 0; i < k; ++i) expected += w[i] * std::min((pts.row(i).transpose() - x).norm(), 1.0);
        const double got = bl_distance(EmpiricalMeasure(pts, w), EmpiricalMeasure::dirac(x));
        worst = std::max(worst, std::abs(got - expected));
    }
    return {"distance to a Dirac mass", worst < tol, worst, tol, std::to_string(cases) + " random cases"};
}

/// W1 between 1-D measures as the integral of |F - G|.
inline double w1_line(const Vector& a, const Vector& wa, const Vector& b, const Vector& wb) {
    std::vector<std::pair<double, double>> ev; // (position, signed mass)
    for (Eigen::Index i = 0; i < a.size(); ++i) ev.emplace_back(a[i], wa[i]);
    for (Eigen::Index i = 0; i < b.size(); ++i) ev.emplace_back(b[i], -wb[i]);
    std::sort(ev.begin(), ev.end());
    double diff = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        diff += ev[i].second;
        total += std::abs(diff) * (ev[i + 1].first - ev[i].first);
    }
    return total;
}

/// On supports of diameter at most one the truncation is inactive and the
/// distance must equal the 1-D Wasserstein distance.
inline OracleResult bl_equals_w1(std::uint64_t seed, int cases = 100, double tol = 1e-9) {
    RngStream rng(seed, derive_stream_id(0, {0x0A1}));
    double worst = 0.0;
    for (int t = 0; t < cases; ++t) {
        const int ka = 1 + static_cast<int>(rng.uniform() * 30.0);
        const bool same = rng.uniform() < 0.5;
        const int kb = same ? ka : 1 + static_cast<int>(rng.uniform() * 30.0);
        const double shift = rng.uniform();
        Vector a(ka), b(kb), wa(ka), wb(kb);
        for (int i = 0; i < ka; ++i) a[i] = shift + rng.uniform() * (1.0 - shift);
        for (int i = 0; i < kb; ++i) b[i] = shift + rng.uniform() * (1.0 - shift);
        for (int i = 0; i < ka; ++i) wa[i] = same ? 1.0 : 0.05 + rng.uniform();
        for (int i = 0; i < kb; ++i) wb[i] = same ? 1.0 : 0.05 + rng.uniform();
        wa /= wa.sum();
        wb /= wb.sum();
        const double got = bl_distance(EmpiricalMeasure(Matrix(a), wa), EmpiricalMeasure(Matrix(b), wb));
        worst = std::max(worst, std::abs(got - w1_line(a, wa, b, wb)));
    }
    return {"distance equals W1 on short 1-D supports", worst < tol, worst, tol, std::to_string(cases) + " random cases"};
}

inline OracleResult central_value_checks(std::uint64_t seed, int cases = 100, double tol = 1e-10) {
    RngStream rng(seed, derive_stream_id(0, {0xCE7}));
    double residual = 0.0, equivariance = 0.0;
    for (int t = 0; t < cases; ++t) {
        const int k = 1 + static_cast<int>(rng.uniform() * 50.0);
        Matrix pts(k, 1);
        Vector w(k);
        for (int i = 0; i < k; ++i) {
            pts(i, 0) = 3.0 * standard_normal(rng) + (rng.uniform() < 0.2 ? 20.0 : 0.0);
            w[i] = 0.05 + rng.uniform();
        }
        w /= w.sum();
        const double c = central_value(EmpiricalMeasure(pts, w))[0];
        double h = 0.0;
        for (int i = 0; i < k; ++i) h += w[i] * std::atan(pts(i, 0) - c);
        residual = std::max(residual, std::abs(h));
        const double shift = 10.0 * standard_normal(rng);
        const Matrix moved = (pts.array() + shift).matrix();
        const double cs = central_value(EmpiricalMeasure(moved, w))[0];
        equivariance = std::max(equivariance, std::abs(cs - c - shift));
    }
    const double worst = std::max(residual, equivariance);
    return {"central value residual and translation equivariance", worst < tol, worst, tol,
            "residual=" + std::to_string(residual) + " shift=" + std::to_string(equivariance)};
}

/// Unnormalized log density of g given (z, theta), assembled from the latent
/// normal densities, the prior on g*theta, the Jacobian g^(c-2+p) and the
/// density of g implied by g^2 ~ Gamma(a0, b0).
inline double g_log_density_brute(double g, const LatentState& latent, const Theta& theta, const Dataset& data,
                                  const PriorSpec& prior, VariantId variant) {
    double l = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double eta = variant == VariantId::null_ma ? 0.0 : data.x.row(i).dot(theta.beta);
        const double u = g * (latent.z[i] + eta);
        l += std::log(g) - 0.5 * u * u;
    }
    for (Eigen::Index j = 0; j < theta.alpha.size(); ++j) {
        const double u = g * theta.alpha[j] / prior.sigma_alpha;
        l -= 0.5 * u * u;
    }
    for (Eigen::Index j = 0; j < theta.beta.size(); ++j) {
        const double u = g * theta.beta[j] / prior.sigma_beta;
        l -= 0.5 * u * u;
    }
    l += static_cast<double>(theta.dim()) * std::log(g);
    l += std::log(2.0 * g) + (prior.a0 - 1.0) * std::log(g * g) - prior.b0 * g * g;
    return l;
}

/// Gamma full conditional of g^2 against a brute-force normalization of the
/// unnormalized density of g on a grid.
inline OracleResult g_conditional_grid(std::uint64_t seed, double tol = 1e-8) {
    RngStream rng(seed, derive_stream_id(0, {0x6C0}));
    double worst = 0.0;
    int cases = 0;
    for (VariantId v : {VariantId::null_ma, VariantId::beta_ma}) {
        for (int c : {2, 3, 4}) {
            for (int n : {0, 50, 400}) {
                ModelConfig cfg;
                cfg.c = c;
                const Theta theta0 = default_theta0(c);
                Dataset data = sample_dataset(cfg, theta0, std::max(n, 1), seed + 17u * c + n);
                if (n == 0) {
                    data.x.resize(0, 1);
                    data.y.resize(0);
                }
                const double g0 = 0.7 + rng.uniform();
                const ExpandedTheta s{n == 0 ? Theta(Vector::Zero(c - 2), Vector::Zero(1)) : theta0.scaled(1.0 / g0),
                                      g0};
                const LatentState latent = n == 0 ? LatentState{Vector(), 0} : draw_latent(v, s, data, rng);
                const double shape = g_conditional_shape(data, cfg.prior);
                const double rate = g_conditional_rate(latent, s.theta, data, cfg.prior, v);
                const boost::math::gamma_distribution<double> gd(shape, 1.0 / rate);
                auto closed = [&](double g) { return 2.0 * g * boost::math::pdf(gd, g * g); };

                const double gmode = std::sqrt(std::max(shape - 0.5, 0.05) / rate);
                const double lmax = g_log_density_brute(gmode, latent, s.theta, data, cfg.prior, v);
                auto unnorm = [&](double g) {
                    return g <= 0.0 ? 0.0 : std::exp(g_log_density_brute(g, latent, s.theta, data, cfg.prior, v) - lmax);
                };
                using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
                const double width = 1.0 / std::sqrt(rate);
                const double hi = gmode + 60.0 * width;
                double Z = 0.0;
                const int pieces = 256;
                for (int k = 0; k < pieces; ++k) {
                    Z += GK::integrate(unnorm, hi * k / pieces, hi * (k + 1) / pieces, 0);
                }
                const double peak = closed(gmode);
                for (int k = 1; k <= 400; ++k) {
                    const double g = hi * k / 401.0;
                    const double ref = closed(g);
                    if (ref < 1e-8 * peak) continue;
                    worst = std::max(worst, std::abs(unnorm(g) / Z - ref) / ref);
                }
                ++cases;
            }
        }
    }
    return {"g^2 full conditional against grid normalization", worst < tol, worst, tol,
            std::to_string(cases) + " (variant, c, n) cases"};
}

// ---------------------------------------------------------------------------
// Stationarity

struct StationarityResult {
    VariantId variant = VariantId::beta;
    int c = 2, p = 1, n = 0;
    std::vector<double> ks_p; // one per coordinate of g*theta
    double min_p = 1.0;
    bool pass = false;
};

/// Posterior draws obtained with independence Metropolis-Hastings moves only,
/// so that no Gibbs kernel is involved in producing the oracle sample.
inline Matrix independent_posterior_draws(const Dataset& data, const ModelConfig& cfg, int draws, std::uint64_t seed) {
    ReferenceOptions opt;
    opt.thin = 10;
    opt.length = draws * opt.thin;
    opt.burn_in = 2000;
    opt.seed = seed;
    opt.compute_bvm = false;
    opt.split_check = false;
    opt.gibbs = false;
    return *build_reference(data, cfg, opt).sample;
}

/// Starts one kernel step from each row of `starts` (identified posterior
/// draws, expanded with g from its prior for the MA kernels) and compares every
/// g*theta marginal of the result with the independent draws in `compare`.
inline StationarityResult stationarity_check(VariantId variant, const Dataset& data, const PriorSpec& prior,
                                             const Matrix& starts, const Matrix& compare, RngStream rng,
                                             double level = 1e-3, int steps = 1) {
    require(starts.cols() == compare.cols(), "stationarity_check: column mismatch");
    StationarityResult out{variant, data.c, data.p(), data.n(), {}, 1.0, false};
    Matrix moved(starts.rows(), starts.cols());
    for (Eigen::Index i = 0; i < starts.rows(); ++i) {
        ExpandedTheta s = expand_state(variant, Theta::from_flat(starts.row(i).transpose(), data.c), prior, rng);
        for (int k = 0; k < steps; ++k) s = kernel_step(variant, s, data, prior, rng);
        moved.row(i) = s.identified().flat().transpose();
    }
    for (Eigen::Index j = 0; j < starts.cols(); ++j) {
        std::vector<double> a(moved.col(j).data(), moved.col(j).data() + moved.rows());
        std::vector<double> b(compare.col(j).data(), compare.col(j).data() + compare.rows());
        out.ks_p.push_back(stats::ks_two_sample(std::move(a), std::move(b)).p_value);
    }
    out.min_p = *std::min_element(out.ks_p.begin(), out.ks_p.end());
    out.pass = out.min_p >= level;
    return out;
}

/// Every applicable variant on (c, p) in {(2,1), (3,1), (4,1)} and n in `ns`.
inline std::vector<StationarityResult> stationarity_suite(std::uint64_t seed, const std::vector<int>& ns = {100, 400},
                                                          int draws = 2000, int threads = 1) {
    struct Job {
        int c, n;
    };
    std::vector<Job> jobs;
    for (int c : {2, 3, 4}) {
        for (int n : ns) jobs.push_back({c, n});
    }
    std::vector<std::vector<StationarityResult>> per(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), threads, [&](int k) {
        const auto [c, n] = jobs[k];
        ModelConfig cfg;
        cfg.c = c;
        const Dataset data = sample_dataset(cfg, default_theta0(c), n, dataset_seed(seed, c, 1, n, 0));
        const Matrix pool = independent_posterior_draws(data, cfg, 2 * draws, reference_seed(seed, c, 1, n, 0));
        const Matrix starts = pool.topRows(draws);
        const Matrix compare = pool.bottomRows(draws);
        for (VariantId v : kAllVariants) {
            if (is_binary(v) && c != 2) continue;
            per[k].push_back(stationarity_check(v, data, cfg.prior, starts, compare,
                                                chain_stream(seed, v, c, 1, n, 0).derive({0x57A7})));
        }
    });
    std::vector<StationarityResult> out;
    for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
    return out;
}

inline OracleResult stationarity_summary(const std::vector<StationarityResult>& rs, double level = 1e-3) {
    double worst = 1.0;
    std::string failed;
    for (const auto& r : rs) {
        worst = std::min(worst, r.min_p);
        if (!r.pass) {
            failed += " " + to_string(r.variant) + "(c=" + std::to_string(r.c) + ",n=" + std::to_string(r.n) + ")";
        }
    }
    return {"kernel stationarity (KS)", failed.empty(), worst, level,
            failed.empty() ? std::to_string(rs.size()) + " kernels" : "failed:" + failed};
}

} // namespace oracle

/// The oracle suite behind the `verify` subcommand.
inline std::vector<OracleResult> run_oracle_suite(std::uint64_t seed, bool with_stationarity = true, int threads = 1) {
    std::vector<OracleResult> out;
    out.push_back(oracle::scale_constants_probit());
    out.push_back(oracle::bl_dirac_identity(seed));
    out.push_back(oracle::bl_equals_w1(seed));
    out.push_back(oracle::central_value_checks(seed));
    out.push_back(oracle::g_conditional_grid(seed));
    if (with_stationarity) out.push_back(oracle::stationarity_summary(oracle::stationarity_suite(seed, {100}, 2000, threads)));
    return out;
}

} // namespace mcmcdegen

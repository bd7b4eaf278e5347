#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "stats.hpp"

namespace mcmcdegen {

// ---------------------------------------------------------------------------
// Reference posterior

struct ReferenceOptions {
    int length = 200000;
    int burn_in = 10000;
    int thin = 10;
    std::uint64_t seed = 0x2EFE2E;
    bool compute_bvm = true;
    bool split_check = true;
    double split_alpha = 1e-3;
    FisherOptions fisher;
    bool gibbs = true; // false: independence MH moves only
};

struct ReferenceProvenance {
    int length = 0;
    int burn_in = 0;
    int thin = 0;
    std::uint64_t seed = 0;
    std::string kernel;
    bool doubled = false;
    bool split_warning = false;
    double split_min_p = 1.0;
    double mh_acceptance = 0.0;
};

struct ReferencePosterior {
    int n = 0;
    int c = 2;
    int p = 1;
    std::shared_ptr<const Matrix> sample; // rows are identified draws g*theta
    Vector theta_hat;                     // central value of the sample
    Theta mode;                           // posterior mode used by the MH proposal
    Matrix fisher;                        // I(theta_hat), empty unless compute_bvm
    Matrix bvm_cov;                       // n^-1 I(theta_hat)^-1
    ReferenceProvenance provenance;

    int size() const noexcept { return sample ? static_cast<int>(sample->rows()) : 0; }
};

inline double log_posterior(const ModelConfig& cfg, const Theta& theta, const Dataset& data) {
    const double lp = log_prior(cfg.prior, theta);
    if (!std::isfinite(lp)) return lp;
    return lp + log_likelihood(cfg.link, theta, data);
}

namespace detail {

/// Independence proposal: multivariate t with `dof` degrees of freedom.
struct TProposal {
    Vector center;
    Matrix chol; // lower factor of the scale matrix
    Matrix chol_inv;
    double dof = 6.0;

    Vector draw(RngStream& rng) const {
        Vector e(center.size());
        for (Eigen::Index k = 0; k < e.size(); ++k) e[k] = standard_normal(rng);
        const double w = std::sqrt(dof / gamma_draw(0.5 * dof, 0.5, rng));
        return center + chol * (e * w);
    }
    double log_density(const Vector& x) const {
        const double q = (chol_inv * (x - center)).squaredNorm();
        return -0.5 * (dof + static_cast<double>(center.size())) * std::log1p(q / dof);
    }
};

inline TProposal make_proposal(const ModelConfig& cfg, const Dataset& data, const Theta& mode) {
    const int d = cfg.dim();
    Matrix H = Matrix::Zero(d, d);
    for (int i = 0; i < data.n(); ++i) {
        const auto xi = data.x.row(i).transpose();
        const double prob = cell_probability(cfg, mode, xi, data.y[i]);
        if (!(prob > 0.0)) continue;
        const Vector s = cell_gradient(cfg, mode, xi, data.y[i]) / prob;
        H.noalias() += s * s.transpose();
    }
    for (int k = 0; k < cfg.c - 2; ++k) H(k, k) += 1.0 / (cfg.prior.sigma_alpha * cfg.prior.sigma_alpha);
    for (int k = cfg.c - 2; k < d; ++k) H(k, k) += 1.0 / (cfg.prior.sigma_beta * cfg.prior.sigma_beta);
    Matrix scale = H.inverse() * (1.2 * 1.2);
    scale = 0.5 * (scale + scale.transpose());
    const Eigen::LLT<Matrix> llt(scale);
    if (llt.info() != Eigen::Success) throw NumericalError("reference: proposal scale not positive definite");
    TProposal prop;
    prop.center = mode.flat();
    prop.chol = llt.matrixL();
    prop.chol_inv = prop.chol.inverse();
    return prop;
}

inline double split_half_min_p(const Matrix& sample) {
    const Eigen::Index h = sample.rows() / 2;
    double min_p = 1.0;
    if (h < 2) return min_p;
    for (Eigen::Index k = 0; k < sample.cols(); ++k) {
        std::vector<double> a(h), b(h);
        for (Eigen::Index i = 0; i < h; ++i) {
            a[i] = sample(i, k);
            b[i] = sample(h + i, k);
        }
        min_p = std::min(min_p, stats::ks_two_sample(a, b).p_value);
    }
    return min_p;
}

} // namespace detail

/// Long reference chain for P(d theta | x, y). Each iteration refreshes g
/// from its prior, applies one beta^T x marginal-augmentation Gibbs step and
/// one independence Metropolis-Hastings move on g*theta; every move leaves
/// the posterior invariant. The MH move keeps the chain mixing for c >= 4,
/// where the cut-point ratios of every Gibbs kernel freeze as n grows.
inline ReferencePosterior build_reference(const Dataset& data, const ModelConfig& cfg,
                                          const ReferenceOptions& opt = {}) {
    data.validate();
    cfg.validate();
    require(data.c == cfg.c && data.p() == cfg.p(), "build_reference: dataset shape does not match model");
    require(opt.length >= 1 && opt.burn_in >= 0 && opt.thin >= 1, "build_reference: bad chain settings");

    ReferencePosterior ref;
    ref.n = data.n();
    ref.c = cfg.c;
    ref.p = cfg.p();
    ref.mode = fit_mle(cfg, data, &cfg.prior);
    const detail::TProposal prop = detail::make_proposal(cfg, data, ref.mode);

    auto run = [&](int length, std::uint64_t salt) {
        RngStream rng(opt.seed, derive_stream_id(0, {0x2EF, salt}));
        const int kept = length / opt.thin;
        Matrix sample(kept, cfg.dim());
        Theta ident = ref.mode;
        double lp = log_posterior(cfg, ident, data);
        long long accepted = 0;
        const long long total = static_cast<long long>(opt.burn_in) + length;
        int row = 0;
        for (long long it = 0; it < total; ++it) {
            if (opt.gibbs) {
                ExpandedTheta s = expand_state(VariantId::beta_ma, ident, cfg.prior, rng);
                s = kernel_step(VariantId::beta_ma, s, data, cfg.prior, rng);
                ident = s.identified();
                lp = log_posterior(cfg, ident, data);
            }
            const Vector prop_flat = prop.draw(rng);
            const Theta cand = Theta::from_flat(prop_flat, cfg.c);
            const double lp_cand = log_posterior(cfg, cand, data);
            if (std::isfinite(lp_cand)) {
                const double log_ratio = lp_cand - lp + prop.log_density(ident.flat()) - prop.log_density(prop_flat);
                if (std::log(rng.uniform()) < log_ratio) {
                    ident = cand;
                    lp = lp_cand;
                    ++accepted;
                }
            }
            if (it >= opt.burn_in && (it - opt.burn_in) % opt.thin == opt.thin - 1 && row < kept) {
                sample.row(row++) = ident.flat().transpose();
            }
        }
        ref.provenance.mh_acceptance = static_cast<double>(accepted) / static_cast<double>(total);
        return sample;
    };

    ref.provenance.length = opt.length;
    ref.provenance.burn_in = opt.burn_in;
    ref.provenance.thin = opt.thin;
    ref.provenance.seed = opt.seed;
    ref.provenance.kernel = opt.gibbs ? "beta-ma gibbs + independence mh" : "independence mh";
    Matrix sample = run(opt.length, 0);
    if (opt.split_check) {
        ref.provenance.split_min_p = detail::split_half_min_p(sample);
        if (ref.provenance.split_min_p < opt.split_alpha) {
            ref.provenance.doubled = true;
            ref.provenance.length = 2 * opt.length;
            sample = run(2 * opt.length, 1);
            ref.provenance.split_min_p = detail::split_half_min_p(sample);
            ref.provenance.split_warning = ref.provenance.split_min_p < opt.split_alpha;
        }
    }
    require(sample.rows() >= 1, "build_reference: chain kept no draws (length < thin)");
    ref.theta_hat = central_value(sample);
    ref.sample = std::make_shared<const Matrix>(std::move(sample));
    if (opt.compute_bvm) {
        const Theta th = Theta::from_flat(ref.theta_hat, cfg.c);
        ref.fisher = fisher_information(cfg, th, opt.fisher).value;
        ref.bvm_cov = ref.fisher.inverse() / static_cast<double>(data.n());
    }
    return ref;
}

/// KS distance of each reference marginal to its BvM normal surrogate.
inline std::vector<double> bvm_ks_distances(const ReferencePosterior& ref) {
    require(ref.bvm_cov.size() > 0, "bvm_ks_distances: reference built without the BvM surrogate");
    std::vector<double> out;
    for (Eigen::Index k = 0; k < ref.sample->cols(); ++k) {
        std::vector<double> col(ref.sample->rows());
        for (Eigen::Index i = 0; i < ref.sample->rows(); ++i) col[i] = (*ref.sample)(i, k);
        const double mu = ref.theta_hat[k];
        const double sd = std::sqrt(ref.bvm_cov(k, k));
        out.push_back(stats::ks_one_sample(col, [&](double x) { return normal::cdf((x - mu) / sd); }).statistic);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fisher blocks of the expanded and augmented models

/// Information of the observed-data model in the expanded parameter
/// (theta, g). It depends on theta only through g*theta, so with
/// D = d(g theta)/d(theta, g) = [g I | theta] it equals D^T I(g theta) D.
inline Matrix expanded_information(const Matrix& info_identified, const ExpandedTheta& s, bool with_g) {
    const int d = static_cast<int>(info_identified.rows());
    if (!with_g) return info_identified;
    Matrix D(d, d + 1);
    D.leftCols(d) = s.g * Matrix::Identity(d, d);
    D.col(d) = s.theta.flat();
    return D.transpose() * info_identified * D;
}

/// Closed form of K_M quoted for the MA variants: K / g^2 for null-MA and
/// ((g^2 K Sigma, L mu), (mu^T L, K / g^2)) for beta-MA.
inline Matrix km_matrix(VariantId variant, const ExpandedTheta& s, double K, double L, const Matrix& Sigma,
                        const Vector& mu) {
    require(is_ma(variant), "km_matrix: defined for marginal-augmentation variants");
    const double g = s.g;
    if (variant == VariantId::null_ma) return Matrix::Constant(1, 1, K / (g * g));
    const int p = static_cast<int>(Sigma.rows());
    Matrix km(p + 1, p + 1);
    km.topLeftCorner(p, p) = g * g * K * Sigma;
    km.topRightCorner(p, 1) = L * mu;
    km.bottomLeftCorner(1, p) = L * mu.transpose();
    km(p, p) = K / (g * g);
    return km;
}

/// K_M derived from the augmented density f(g(z + beta^T x)) g: the beta
/// block carries the location information E[(f'/f)^2] where the quoted form
/// has K. For probit the two differ by a factor of two.
inline Matrix augmented_information(VariantId variant, const ExpandedTheta& s, const LinkSpec& link,
                                    const CovariateSpec& cov) {
    const ScaleConstants sc = scale_constants(link);
    const double g = s.g;
    const Matrix Sigma = cov.second_moment();
    const Vector mu = cov.mean();
    const int p = cov.p;
    switch (variant) {
        case VariantId::binary_null:
        case VariantId::null: return Matrix(0, 0);
        case VariantId::null_ma: return Matrix::Constant(1, 1, sc.K / (g * g));
        case VariantId::binary_beta:
        case VariantId::beta: return sc.location_information * Sigma;
        case VariantId::beta_ma: {
            Matrix km(p + 1, p + 1);
            km.topLeftCorner(p, p) = g * g * sc.location_information * Sigma;
            km.topRightCorner(p, 1) = sc.L * mu;
            km.bottomLeftCorner(1, p) = sc.L * mu.transpose();
            km(p, p) = sc.K / (g * g);
            return km;
        }
    }
    return {};
}

struct McInformation {
    Matrix value;
    Matrix se;
    long long draws = 0;
};

/// Monte Carlo oracle for K_M: covariance of the moving-block score of the
/// augmented density, with the score taken by central finite differences of
/// log f(g(z + beta^T x)) + log g (beta^T x type) or log f(g z) + log g
/// (null type, where only g moves).
inline McInformation augmented_information_mc(VariantId variant, const ExpandedTheta& s, const ModelConfig& cfg,
                                              long long draws = 100000, std::uint64_t seed = 0xA06) {
    require(!(variant == VariantId::null || variant == VariantId::binary_null),
            "augmented_information_mc: the null variant has no moving block");
    const int p = cfg.p();
    const bool with_g = is_ma(variant);
    const bool beta_block = !is_null_type(variant);
    const int dm = (beta_block ? p : 0) + (with_g ? 1 : 0);
    const double g0 = with_g ? s.g : 1.0; // variants without the scale move live at g = 1
    const Vector b0 = s.theta.beta;
    auto logdens = [&](const Vector& x, double z, const Vector& b, double g) {
        const double u = beta_block ? g * (z + x.dot(b)) : g * z;
        return normal::log_pdf(u) + std::log(g);
    };
    RngStream rng(seed, derive_stream_id(0, {0xA06}));
    Matrix sum = Matrix::Zero(dm, dm), sumsq = Matrix::Zero(dm, dm);
    Vector x(p);
    const double h = 1e-5;
    for (long long it = 0; it < draws; ++it) {
        cfg.covariates.draw(rng, x);
        const double u = standard_normal(rng);
        const double z = beta_block ? u / g0 - x.dot(b0) : u / g0;
        Vector score(dm);
        int k = 0;
        if (beta_block) {
            for (int j = 0; j < p; ++j, ++k) {
                Vector bp = b0, bm = b0;
                bp[j] += h;
                bm[j] -= h;
                score[k] = (logdens(x, z, bp, g0) - logdens(x, z, bm, g0)) / (2 * h);
            }
        }
        if (with_g) score[k] = (logdens(x, z, b0, g0 + h) - logdens(x, z, b0, g0 - h)) / (2 * h);
        const Matrix outer = score * score.transpose();
        sum += outer;
        sumsq += outer.cwiseProduct(outer);
    }
    McInformation out;
    out.draws = draws;
    const double N = static_cast<double>(draws);
    out.value = sum / N;
    out.se = ((sumsq / N - out.value.cwiseProduct(out.value)) / N).cwiseMax(0.0).cwiseSqrt();
    return out;
}

struct FisherBlocks {
    Partition partition;
    Matrix I;    // full expanded information, ordered (alpha, beta[, g])
    Matrix I_F, I_FM, I_MF, I_M;
    Matrix K_M;
    Matrix J_M;
};

inline Matrix select(const Matrix& A, const std::vector<int>& rows, const std::vector<int>& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
    }
    return out;
}

inline Vector select(const Vector& v, const std::vector<int>& idx) {
    Vector out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

/// Index lists of the F and M blocks within the expanded flat vector
/// (alpha, beta[, g]).
inline std::pair<std::vector<int>, std::vector<int>> block_indices(VariantId variant, int c, int p) {
    Partition part = variant_partition(variant, c, p);
    std::vector<int> M = part.moving;
    if (part.g_in_m) M.push_back(c - 2 + p);
    return {part.fixed, M};
}

inline FisherBlocks fisher_blocks(VariantId variant, const ExpandedTheta& s, const Matrix& info_identified,
                                  const ModelConfig& cfg) {
    FisherBlocks fb;
    fb.partition = variant_partition(variant, cfg.c, cfg.p());
    fb.I = expanded_information(info_identified, s, is_ma(variant));
    const auto [F, M] = block_indices(variant, cfg.c, cfg.p());
    fb.I_F = select(fb.I, F, F);
    fb.I_FM = select(fb.I, F, M);
    fb.I_MF = select(fb.I, M, F);
    fb.I_M = select(fb.I, M, M);
    fb.K_M = augmented_information(variant, s, cfg.link, cfg.covariates);
    fb.J_M = fb.K_M - fb.I_M;
    return fb;
}

inline Vector expanded_flat(const ExpandedTheta& s, bool with_g) {
    Vector v(s.theta.dim() + (with_g ? 1 : 0));
    v.head(s.theta.dim()) = s.theta.flat();
    if (with_g) v[s.theta.dim()] = s.g;
    return v;
}

struct NormalApprox {
    Vector mean;
    Matrix cov;
};

/// Normal approximation of one Gibbs update of the moving block:
/// mean = hat_M + K^-1 J (v_M - hat_M) - K^-1 I_MF (v_F - hat_F),
/// cov = n^-1 K^-1 + n^-1 K^-1 J K^-1, with hat-quantities at `hat`.
/// The F-term sign follows from the Gaussian conditional mean
/// hat_M(v_F) = hat_M - I_M^-1 I_MF (v_F - hat_F).
inline NormalApprox kernel_normal_approx(VariantId variant, const ModelConfig& cfg, int n, const ExpandedTheta& hat,
                                         const Matrix& info_identified_at_hat, const ExpandedTheta& state) {
    const FisherBlocks fb = fisher_blocks(variant, hat, info_identified_at_hat, cfg);
    require(fb.K_M.size() > 0, "kernel_normal_approx: the variant has no moving block");
    const Eigen::LDLT<Matrix> K(fb.K_M);
    if (K.info() != Eigen::Success || !(K.vectorD().array() > 0).all()) {
        throw NumericalError("kernel_normal_approx: K_M is singular");
    }
    const auto [F, M] = block_indices(variant, cfg.c, cfg.p());
    const bool with_g = is_ma(variant);
    const Vector hv = expanded_flat(hat, with_g);
    const Vector sv = expanded_flat(state, with_g);
    const Vector dM = select(sv, M) - select(hv, M);
    const Vector dF = select(sv, F) - select(hv, F);
    NormalApprox out;
    out.mean = select(hv, M) + K.solve(fb.J_M * dM);
    if (!F.empty()) out.mean -= K.solve(fb.I_MF * dF);
    const Matrix Kinv = K.solve(Matrix::Identity(fb.K_M.rows(), fb.K_M.cols()));
    out.cov = (Kinv + Kinv * fb.J_M * Kinv) / static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------
// Two-observation test for the binary model

struct TwoPointTest {
    int i = 1;
    Vector z;        // support point
    double delta = 0.25;
    double p_i = 0;  // P_X(B_delta(z))
    double c_i = 0.75;
};

namespace detail {

/// Integrals of F(theta^T x) and 1 - F(theta^T x) over B_delta(z) under P_X.
inline std::pair<double, double> ball_integrals(const TwoPointTest& t, const Vector& theta, const ModelConfig& cfg,
                                                double& mass) {
    const int p = cfg.p();
    if (p == 1) {
        const double lo = std::max(0.0, t.z[0] - t.delta);
        const double hi = std::min(1.0, t.z[0] + t.delta);
        mass = std::max(hi - lo, 0.0);
        if (mass == 0.0) return {0.0, 0.0};
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        const double a = GK::integrate([&](double x) { return cfg.link.cdf(theta[0] * x); }, lo, hi, 15, 1e-13);
        const double b = GK::integrate([&](double x) { return cfg.link.ccdf(theta[0] * x); }, lo, hi, 15, 1e-13);
        return {a, b};
    }
    RngStream rng(0x7E57, derive_stream_id(0, {0xBA11}));
    Vector x(p);
    double a = 0.0, b = 0.0, m = 0.0;
    const long long N = 200000;
    for (long long k = 0; k < N; ++k) {
        cfg.covariates.draw(rng, x);
        if ((x - t.z).norm() >= t.delta) continue;
        m += 1.0;
        const double e = theta.dot(x);
        a += cfg.link.cdf(e);
        b += cfg.link.ccdf(e);
    }
    mass = m / N;
    return {a / N, b / N};
}

} // namespace detail

inline TwoPointTest make_two_point_test(const ModelConfig& cfg, const Vector& z, double delta, double c_i, int i = 1) {
    require(cfg.c == 2, "two-point test is defined for c = 2");
    require(delta > 0 && c_i > 0 && c_i < 1, "two-point test: need delta > 0 and c_i in (0, 1)");
    TwoPointTest t{i, z, delta, 0.0, c_i};
    double mass = 0.0;
    detail::ball_integrals(t, Vector::Zero(cfg.p()), cfg, mass);
    require(mass > 0.0, "two-point test: the ball carries no covariate mass");
    t.p_i = mass;
    return t;
}

/// E_theta psi = (1 - p_i^2)/2 + c_i (int_B F)^2 + c_i (int_B (1 - F))^2.
inline double two_point_test_value(const TwoPointTest& t, const Vector& theta, const ModelConfig& cfg) {
    require(cfg.c == 2 && theta.size() == cfg.p(), "two_point_test_value: needs a binary model parameter");
    double mass = 0.0;
    const auto [a, b] = detail::ball_integrals(t, theta, cfg, mass);
    if (!std::isfinite(a) || !std::isfinite(b)) throw NumericalError("two_point_test_value: quadrature failed");
    return 0.5 * (1.0 - t.p_i * t.p_i) + t.c_i * (a * a + b * b);
}

/// Limit of the test value as |theta| -> inf inside the cell where theta^T x
/// keeps one sign on the ball: (1 - p_i^2)/2 + c_i p_i^2.
inline double two_point_test_limit(const TwoPointTest& t) {
    return 0.5 * (1.0 - t.p_i * t.p_i) + t.c_i * t.p_i * t.p_i;
}

} // namespace mcmcdegen

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "special.hpp"

namespace mcmcdegen {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Link

enum class LinkKind { probit };

/// Latent error law F with density f. Only probit is implemented; the switch
/// statements are where another link would plug in.
struct LinkSpec {
    LinkKind kind = LinkKind::probit;

    double cdf(double z) const noexcept { return normal::cdf(z); }
    double ccdf(double z) const noexcept { return normal::ccdf(z); }
    double pdf(double z) const noexcept { return normal::pdf(z); }
    /// f'(z) / f(z).
    double dlogf(double z) const noexcept { return -z; }
    std::string name() const { return "probit"; }

    /// F(b) - F(a) for a <= b, evaluated on the side that avoids cancellation.
    double mass(double a, double b) const noexcept {
        if (a > 0.0) return ccdf(a) - ccdf(b);
        return cdf(b) - cdf(a);
    }
};

// ---------------------------------------------------------------------------
// Covariates and prior

enum class CovariateLaw { uniform_unit_cube };

struct CovariateSpec {
    int p = 1;
    CovariateLaw law = CovariateLaw::uniform_unit_cube;

    /// mu = E[x].
    Vector mean() const { return Vector::Constant(p, 0.5); }
    /// Sigma = E[x x^T].
    Matrix second_moment() const {
        Matrix s = Matrix::Constant(p, p, 0.25);
        s.diagonal().array() += 1.0 / 12.0;
        return s;
    }
    void draw(RngStream& rng, Eigen::Ref<Vector> out) const {
        for (int k = 0; k < p; ++k) out[k] = rng.uniform();
    }
};

/// Independent N(0, sigma_alpha^2) on each cut point (restricted to the
/// ordered cone), N(0, sigma_beta^2 I) on beta, and g^2 ~ Gamma(a0, b0)
/// (shape, rate) for the working scale of marginal augmentation.
struct PriorSpec {
    double sigma_alpha = 10.0;
    double sigma_beta = 10.0;
    double a0 = 0.5;
    double b0 = 0.5;

    void validate() const {
        require(sigma_alpha > 0 && sigma_beta > 0 && a0 > 0 && b0 > 0,
                "prior scales and Gamma parameters must be strictly positive");
    }
};

// ---------------------------------------------------------------------------
// Parameters

/// theta = (alpha^2, ..., alpha^{c-1}, beta). The implicit cut points
/// alpha^0 = -inf, alpha^1 = 0 and alpha^c = +inf are never stored.
struct Theta {
    Vector alpha;
    Vector beta;

    Theta() = default;
    Theta(Vector a, Vector b) : alpha(std::move(a)), beta(std::move(b)) {}

    int categories() const noexcept { return static_cast<int>(alpha.size()) + 2; }
    int p() const noexcept { return static_cast<int>(beta.size()); }
    int dim() const noexcept { return static_cast<int>(alpha.size() + beta.size()); }

    /// Cut point alpha^j for j in {0, ..., c}.
    double cut(int j) const noexcept {
        const int c = categories();
        if (j <= 0) return -normal::kInf;
        if (j >= c) return normal::kInf;
        if (j == 1) return 0.0;
        return alpha[j - 2];
    }

    bool is_valid() const noexcept {
        if (!alpha.allFinite() || !beta.allFinite() || beta.size() == 0) return false;
        double prev = 0.0;
        for (Eigen::Index k = 0; k < alpha.size(); ++k) {
            if (!(alpha[k] > prev)) return false;
            prev = alpha[k];
        }
        return true;
    }
    void validate() const {
        require(is_valid(), "theta violates 0 < alpha^2 < ... < alpha^{c-1} or is not finite");
    }

    Vector flat() const {
        Vector v(dim());
        v << alpha, beta;
        return v;
    }
    static Theta from_flat(const VectorRef& v, int c) {
        require(c >= 2 && v.size() >= c - 1, "from_flat: vector too short for c");
        return {v.head(c - 2), v.tail(v.size() - (c - 2))};
    }

    Theta scaled(double g) const { return {alpha * g, beta * g}; }
};

/// Marginal-augmentation state (theta, g); the reported parameter is g*theta.
struct ExpandedTheta {
    Theta theta;
    double g = 1.0;

    Theta identified() const { return theta.scaled(g); }
    bool is_valid() const noexcept { return g > 0.0 && std::isfinite(g) && theta.is_valid(); }
};

// ---------------------------------------------------------------------------
// Data

struct Dataset {
    RowMatrix x;          // n x p
    std::vector<int> y;   // labels in 1..c
    int c = 2;
    std::optional<Theta> true_theta;
    std::uint64_t seed = 0;

    int n() const noexcept { return static_cast<int>(y.size()); }
    int p() const noexcept { return static_cast<int>(x.cols()); }

    void validate() const {
        require(c >= 2, "dataset: c must be >= 2");
        require(static_cast<Eigen::Index>(y.size()) == x.rows(), "dataset: x and y sizes differ");
        for (int label : y) require(label >= 1 && label <= c, "dataset: label out of range");
        require(x.allFinite(), "dataset: covariates must be finite");
    }
};

struct ModelConfig {
    int c = 2;
    LinkSpec link;
    CovariateSpec covariates;
    PriorSpec prior;

    int p() const noexcept { return covariates.p; }
    int dim() const noexcept { return c - 2 + covariates.p; }

    void validate() const {
        require(c >= 2, "model: c must be >= 2");
        require(covariates.p >= 1, "model: p must be >= 1");
        prior.validate();
    }
    void check_theta(const Theta& theta) const {
        require(theta.categories() == c && theta.p() == p(), "theta has the wrong shape for this model");
        theta.validate();
    }
};

// ---------------------------------------------------------------------------
// Operations

/// Draws n rows x ~ P_X and y | x from the cumulative link model.
inline Dataset sample_dataset(const ModelConfig& cfg, const Theta& theta0, int n, std::uint64_t seed) {
    cfg.validate();
    cfg.check_theta(theta0);
    require(n >= 1, "sample_dataset: n must be >= 1");
    Dataset data;
    data.c = cfg.c;
    data.seed = seed;
    data.true_theta = theta0;
    data.x.resize(n, cfg.p());
    data.y.resize(n);
    RngStream rng(seed, derive_stream_id(0, {0xDA7A}));
    Vector xi(cfg.p());
    for (int i = 0; i < n; ++i) {
        cfg.covariates.draw(rng, xi);
        data.x.row(i) = xi.transpose();
        const double eta = xi.dot(theta0.beta);
        const double u = rng.uniform();
        int label = cfg.c;
        for (int j = 1; j < cfg.c; ++j) {
            if (u <= cfg.link.cdf(theta0.cut(j) + eta)) {
                label = j;
                break;
            }
        }
        data.y[i] = label;
    }
    return data;
}

/// p(xy | theta) = F(alpha^j + beta^T x) - F(alpha^{j-1} + beta^T x).
inline double cell_probability(const ModelConfig& cfg, const Theta& theta, const VectorRef& x, int j) {
    require(j >= 1 && j <= cfg.c, "cell_probability: label out of range");
    const double eta = x.dot(theta.beta);
    return cfg.link.mass(theta.cut(j - 1) + eta, theta.cut(j) + eta);
}

/// Gradient of p(xy | theta) in theta, ordered (alpha^2..alpha^{c-1}, beta).
inline Vector cell_gradient(const ModelConfig& cfg, const Theta& theta, const VectorRef& x, int j) {
    const int c = cfg.c;
    const double eta = x.dot(theta.beta);
    const double f_hi = cfg.link.pdf(theta.cut(j) + eta);
    const double f_lo = cfg.link.pdf(theta.cut(j - 1) + eta);
    Vector grad = Vector::Zero(cfg.dim());
    // d/d alpha^i: f(alpha^i + eta) (1{y = i} - 1{y = i + 1}), i = 2..c-1.
    if (j >= 2 && j <= c - 1) grad[j - 2] += f_hi;
    if (j - 1 >= 2 && j - 1 <= c - 1) grad[j - 3] -= f_lo;
    grad.tail(cfg.p()) = x * (f_hi - f_lo);
    return grad;
}

/// eta(xy | theta) = d_theta p / (2 sqrt(p)), the L2 derivative of sqrt(p).
inline Vector score_eta(const ModelConfig& cfg, const Theta& theta, const VectorRef& x, int j) {
    const double prob = cell_probability(cfg, theta, x, j);
    if (!(prob > 0.0)) throw DegenerateInputError("score_eta: cell probability vanishes");
    return cell_gradient(cfg, theta, x, j) / (2.0 * std::sqrt(prob));
}

/// Z_n = n^{-1/2} sum_i 2 eta(x^i y^i) / sqrt(p(x^i y^i)).
inline Vector normalized_score(const ModelConfig& cfg, const Theta& theta, const Dataset& data) {
    require(data.n() >= 1, "normalized_score: empty dataset");
    Vector z = Vector::Zero(cfg.dim());
    for (int i = 0; i < data.n(); ++i) {
        const auto xi = data.x.row(i).transpose();
        const double prob = cell_probability(cfg, theta, xi, data.y[i]);
        if (!(prob > 0.0)) throw DegenerateInputError("normalized_score: cell probability vanishes");
        z += cell_gradient(cfg, theta, xi, data.y[i]) / prob;
    }
    return z / std::sqrt(static_cast<double>(data.n()));
}

/// sum_y (d p)(d p)^T / p at a fixed x: the per-covariate information.
inline Matrix conditional_information(const ModelConfig& cfg, const Theta& theta, const VectorRef& x) {
    Matrix info = Matrix::Zero(cfg.dim(), cfg.dim());
    for (int j = 1; j <= cfg.c; ++j) {
        const double prob = cell_probability(cfg, theta, x, j);
        if (!(prob > 0.0)) continue;
        const Vector g = cell_gradient(cfg, theta, x, j);
        info.noalias() += g * g.transpose() / prob;
    }
    return info;
}

struct FisherInformation {
    Matrix value;
    std::string method;          // "quadrature" or "monte-carlo"
    long long mc_size = 0;
    double error_estimate = 0.0; // quadrature error bound or max MC standard error
};

struct FisherOptions {
    long long mc_size = 100000;
    std::uint64_t seed = 0x5EEDF15E;
    double quadrature_tol = 1e-12;
};

/// I(theta) = 4 int eta eta^T dnu over x ~ P_X and the counting measure on y.
/// Adaptive Gauss-Kronrod for p = 1, Monte Carlo over x for p >= 2.
inline FisherInformation fisher_information(const ModelConfig& cfg, const Theta& theta,
                                            const FisherOptions& opt = {}) {
    cfg.check_theta(theta);
    const int d = cfg.dim();
    FisherInformation out;
    out.value = Matrix::Zero(d, d);
    if (cfg.p() == 1) {
        out.method = "quadrature";
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) {
                double err = 0.0;
                const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                    [&](double t) {
                        Vector x(1);
                        x[0] = t;
                        return conditional_information(cfg, theta, x)(a, b);
                    },
                    0.0, 1.0, 15, opt.quadrature_tol, &err);
                out.value(a, b) = out.value(b, a) = v;
                out.error_estimate = std::max(out.error_estimate, err);
            }
        }
    } else {
        out.method = "monte-carlo";
        out.mc_size = opt.mc_size;
        RngStream rng(opt.seed, derive_stream_id(0, {0xF15E}));
        Matrix sum_sq = Matrix::Zero(d, d);
        Vector x(cfg.p());
        for (long long k = 0; k < opt.mc_size; ++k) {
            cfg.covariates.draw(rng, x);
            const Matrix info = conditional_information(cfg, theta, x);
            out.value += info;
            sum_sq += info.cwiseProduct(info);
        }
        const double N = static_cast<double>(opt.mc_size);
        out.value /= N;
        const Matrix var = sum_sq / N - out.value.cwiseProduct(out.value);
        out.error_estimate = std::sqrt(std::max(var.maxCoeff(), 0.0) / N);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.value);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalError("fisher_information: matrix is not positive definite");
    }
    return out;
}

struct ScaleConstants {
    double K;                    // int (1 + z f'/f)^2 f dz
    double L;                    // int f'/f (z f'/f + 1) f dz
    double location_information; // int (f'/f)^2 f dz
};

/// Link constants used by the augmented-model information. All three are
/// integrated against f(z) dz.
inline ScaleConstants scale_constants(const LinkSpec& link) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inf = std::numeric_limits<double>::infinity();
    auto integrate = [&](auto&& h) {
        double err = 0.0;
        const double v = GK::integrate(h, -inf, inf, 20, 1e-14, &err);
        if (!std::isfinite(v) || err > 1e-9) throw NumericalError("scale_constants: quadrature did not converge");
        return v;
    };
    const double K = integrate([&](double z) {
        const double t = 1.0 + z * link.dlogf(z);
        return t * t * link.pdf(z);
    });
    const double L = integrate([&](double z) {
        const double s = link.dlogf(z);
        return s * (z * s + 1.0) * link.pdf(z);
    });
    const double loc = integrate([&](double z) {
        const double s = link.dlogf(z);
        return s * s * link.pdf(z);
    });
    if (!(K > 0.0)) throw NumericalError("scale_constants: K must be positive");
    return {K, L, loc};
}

/// pi_i(x, y) = (x, 1 + 1(y > i)): the binary model for the i-th cut point.
/// Covariate rows are unchanged; the binary model they feed has covariate
/// (1, x) and parameter (alpha^i, beta), see projected_parameter and
/// with_intercept.
inline Dataset project_binary(const Dataset& data, int i) {
    require(i >= 2 && i <= data.c - 1, "project_binary: cut index must satisfy 2 <= i <= c-1");
    Dataset out;
    out.c = 2;
    out.seed = data.seed;
    out.x = data.x;
    out.y.resize(data.y.size());
    for (std::size_t k = 0; k < data.y.size(); ++k) out.y[k] = 1 + (data.y[k] > i ? 1 : 0);
    if (data.true_theta) {
        Vector b(data.true_theta->beta.size() + 1);
        b << data.true_theta->alpha[i - 2], data.true_theta->beta;
        out.true_theta = Theta(Vector(), b);
    }
    return out;
}

/// (alpha^i, beta) as a c = 2 parameter acting on (1, x).
inline Theta projected_parameter(const Theta& theta, int i) {
    require(i >= 2 && i <= theta.categories() - 1, "projected_parameter: cut index out of range");
    Vector b(theta.beta.size() + 1);
    b << theta.alpha[i - 2], theta.beta;
    return {Vector(), b};
}

/// Prepends a constant-one column to the covariates.
inline Dataset with_intercept(const Dataset& data) {
    Dataset out = data;
    out.x.resize(data.x.rows(), data.x.cols() + 1);
    out.x.col(0).setOnes();
    out.x.rightCols(data.x.cols()) = data.x;
    return out;
}

inline double log_likelihood(const LinkSpec& link, const Theta& theta, const Dataset& data) {
    double ll = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double eta = data.x.row(i).dot(theta.beta);
        const int j = data.y[i];
        const double prob = link.mass(theta.cut(j - 1) + eta, theta.cut(j) + eta);
        if (!(prob > 0.0)) return -normal::kInf;
        ll += std::log(prob);
    }
    return ll;
}

/// Log prior density of theta up to a constant; -inf outside the ordered cone.
inline double log_prior(const PriorSpec& prior, const Theta& theta) {
    if (!theta.is_valid()) return -normal::kInf;
    return -0.5 * theta.alpha.squaredNorm() / (prior.sigma_alpha * prior.sigma_alpha) -
           0.5 * theta.beta.squaredNorm() / (prior.sigma_beta * prior.sigma_beta);
}

/// Maximum likelihood estimate by BHHH iterations with step halving. With a
/// prior the log posterior is maximized instead, which exists even when a
/// category is empty.
inline Theta fit_mle(const ModelConfig& cfg, const Dataset& data, const PriorSpec* prior = nullptr,
                     int max_iter = 200) {
    data.validate();
    require(data.c == cfg.c && data.p() == cfg.p(), "fit_mle: dataset shape does not match model");
    const int d = cfg.dim();
    const int na = cfg.c - 2;
    Vector prior_prec = Vector::Zero(d);
    if (prior) {
        prior_prec.head(na).setConstant(1.0 / (prior->sigma_alpha * prior->sigma_alpha));
        prior_prec.tail(cfg.p()).setConstant(1.0 / (prior->sigma_beta * prior->sigma_beta));
    }
    auto objective = [&](const Theta& t) {
        double v = log_likelihood(cfg.link, t, data);
        if (prior) v += log_prior(*prior, t);
        return v;
    };
    Theta theta(Vector::LinSpaced(na, 1.0, static_cast<double>(na)), Vector::Zero(cfg.p()));
    double obj = objective(theta);
    for (int iter = 0; iter < max_iter; ++iter) {
        Vector grad = -prior_prec.cwiseProduct(theta.flat());
        Matrix opg = Matrix(prior_prec.asDiagonal());
        for (int i = 0; i < data.n(); ++i) {
            const auto xi = data.x.row(i).transpose();
            const double prob = cell_probability(cfg, theta, xi, data.y[i]);
            const Vector s = cell_gradient(cfg, theta, xi, data.y[i]) / prob;
            grad += s;
            opg.noalias() += s * s.transpose();
        }
        opg.diagonal().array() += 1e-8;
        const Vector step = opg.ldlt().solve(grad);
        double t = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half, t *= 0.5) {
            const Theta trial = Theta::from_flat(theta.flat() + t * step, cfg.c);
            if (!trial.is_valid()) continue;
            const double trial_obj = objective(trial);
            if (trial_obj >= obj) {
                theta = trial;
                improved = trial_obj > obj;
                obj = trial_obj;
                break;
            }
        }
        if (!improved || (t * step).norm() < 1e-10) break;
    }
    return theta;
}

} // namespace mcmcdegen

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace mcmcdegen {

// ---------------------------------------------------------------------------
// Variants and transforms

enum class VariantId { binary_null, binary_beta, null, beta, null_ma, beta_ma };

inline constexpr VariantId kAllVariants[] = {VariantId::binary_null, VariantId::binary_beta,
                                             VariantId::null,        VariantId::beta,
                                             VariantId::null_ma,     VariantId::beta_ma};

inline std::string to_string(VariantId v) {
    switch (v) {
        case VariantId::binary_null: return "binary-null";
        case VariantId::binary_beta: return "binary-beta";
        case VariantId::null: return "null";
        case VariantId::beta: return "beta";
        case VariantId::null_ma: return "null-ma";
        case VariantId::beta_ma: return "beta-ma";
    }
    return "?";
}

inline VariantId parse_variant(std::string_view s) {
    for (VariantId v : kAllVariants) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + std::string(s) + "'");
}

inline bool is_binary(VariantId v) noexcept {
    return v == VariantId::binary_null || v == VariantId::binary_beta;
}
inline bool is_ma(VariantId v) noexcept { return v == VariantId::null_ma || v == VariantId::beta_ma; }
inline bool is_null_type(VariantId v) noexcept {
    return v == VariantId::binary_null || v == VariantId::null || v == VariantId::null_ma;
}

/// Split of the expanded parameter into the block that the Gibbs scan fixes
/// (F) and the block it moves (M). Indices refer to (alpha, beta) flattened;
/// `g_in_m` marks the working scale.
struct Partition {
    std::vector<int> fixed;
    std::vector<int> moving;
    bool g_in_m = false;
};

inline Partition variant_partition(VariantId v, int c, int p) {
    Partition part;
    part.g_in_m = is_ma(v);
    const int na = c - 2;
    if (is_null_type(v)) {
        for (int k = 0; k < na + p; ++k) part.fixed.push_back(k);
    } else {
        for (int k = 0; k < na; ++k) part.fixed.push_back(k);
        for (int k = 0; k < p; ++k) part.moving.push_back(na + k);
    }
    return part;
}

enum class Transform { theta, g_theta, alpha, theta_norm, alpha_ratio };

inline std::string to_string(Transform t) {
    switch (t) {
        case Transform::theta: return "theta";
        case Transform::g_theta: return "g-theta";
        case Transform::alpha: return "alpha";
        case Transform::theta_norm: return "theta-norm";
        case Transform::alpha_ratio: return "alpha-ratio";
    }
    return "?";
}

inline Transform parse_transform(std::string_view s) {
    for (Transform t : {Transform::theta, Transform::g_theta, Transform::alpha, Transform::theta_norm,
                        Transform::alpha_ratio}) {
        if (s == to_string(t)) return t;
    }
    throw ConfigError("unknown transform '" + std::string(s) + "'");
}

inline int transform_dim(Transform t, int c, int p) {
    switch (t) {
        case Transform::theta:
        case Transform::g_theta:
        case Transform::theta_norm: return c - 2 + p;
        case Transform::alpha:
            require(c >= 3, "transform 'alpha' requires c >= 3");
            return c - 2;
        case Transform::alpha_ratio:
            require(c >= 4, "transform 'alpha-ratio' requires c >= 4 (needs alpha^3)");
            return 1;
    }
    return 0;
}

/// E(s) for one state. `theta` and `alpha` act on the working parameter,
/// `g-theta` on the identified one; the norm and ratio are scale free.
inline Vector apply_transform(Transform t, const ExpandedTheta& s) {
    const int c = s.theta.categories();
    transform_dim(t, c, s.theta.p());
    switch (t) {
        case Transform::theta: return s.theta.flat();
        case Transform::g_theta: return s.identified().flat();
        case Transform::alpha: return s.theta.alpha;
        case Transform::theta_norm: {
            const Vector v = s.theta.flat();
            return v / v.norm();
        }
        case Transform::alpha_ratio: return Vector::Constant(1, s.theta.alpha[1] / s.theta.alpha[0]);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Chain records

struct LatentState {
    Vector z;
    int flagged = 0; // draws that needed the unchecked fallback
};

struct TransformSeries {
    Transform kind;
    Matrix values; // m x dim
};

struct TraceMeta {
    int n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string dataset_ref;
    std::string init_policy;
};

struct ChainTrace {
    VariantId variant = VariantId::beta;
    int c = 2;
    int p = 1;
    std::vector<ExpandedTheta> params;
    std::vector<TransformSeries> transforms;
    TraceMeta meta;

    const Matrix& series(Transform t) const {
        for (const auto& s : transforms) {
            if (s.kind == t) return s.values;
        }
        throw PreconditionError("trace has no '" + to_string(t) + "' transform column");
    }
};

// ---------------------------------------------------------------------------
// Binary probit samplers (c = 2, p = 1)

namespace detail {

inline void require_binary(const Dataset& data) {
    require(data.c == 2 && data.p() == 1, "binary kernels need c = 2 and p = 1");
    for (int i = 0; i < data.n(); ++i) {
        require(data.x(i, 0) != 0.0, "binary null kernel: covariate x_i = 0 makes z_i/x_i undefined");
    }
}

} // namespace detail

/// Null-conditional update: z_i ~ N(0,1) on (-inf, theta x_i] or (theta x_i, inf),
/// then theta ~ N(0, sigma_beta^2) on [max_{y=1} z/x, min_{y=2} z/x).
inline double step_binary_null(double theta, const Dataset& data, const PriorSpec& prior, RngStream& rng) {
    detail::require_binary(data);
    const int n = data.n();
    Vector z(n);
    for (int i = 0; i < n; ++i) {
        const double b = theta * data.x(i, 0);
        z[i] = data.y[i] == 1 ? truncated_normal(0.0, 1.0, Interval::at_most(b), rng)
                              : truncated_normal(0.0, 1.0, Interval::above(b), rng);
    }
    double lo = -normal::kInf, hi = normal::kInf;
    for (int i = 0; i < n; ++i) {
        const double r = z[i] / data.x(i, 0);
        const bool y_low = data.y[i] == 1;
        // For x_i < 0 the inequality flips.
        if ((data.x(i, 0) > 0.0) == y_low) lo = std::max(lo, r);
        else hi = std::min(hi, r);
    }
    return truncated_normal(0.0, prior.sigma_beta, Interval(lo, hi, true, false), rng);
}

/// beta^T x-conditional update: z_i ~ N(-theta x_i, 1) on (-inf, 0] or (0, inf),
/// then theta ~ N(mu, s^2) with mu = -sum x z / (sigma^-2 + sum x^2).
inline double step_binary_beta(double theta, const Dataset& data, const PriorSpec& prior, RngStream& rng) {
    require(data.c == 2 && data.p() == 1, "binary kernels need c = 2 and p = 1");
    const int n = data.n();
    double sxz = 0.0, sxx = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = data.x(i, 0);
        const double zi = data.y[i] == 1 ? truncated_normal(-theta * x, 1.0, Interval::at_most(0.0), rng)
                                         : truncated_normal(-theta * x, 1.0, Interval::above(0.0), rng);
        sxz += x * zi;
        sxx += x * x;
    }
    const double prec = 1.0 / (prior.sigma_beta * prior.sigma_beta) + sxx;
    return -sxz / prec + standard_normal(rng) / std::sqrt(prec);
}

// ---------------------------------------------------------------------------
// Generic cumulative-link samplers

namespace detail {

inline Vector linear_predictor(const Dataset& data, const Vector& beta) { return data.x * beta; }

inline double draw_one_latent(double mean, double sd, double lo, double hi, RngStream& rng, int& flagged) {
    const Interval iv(lo, hi, false, true);
    try {
        return truncated_normal(mean, sd, iv, rng, true);
    } catch (const DegenerateInputError&) {
        ++flagged;
    }
    try {
        return truncated_normal(mean, sd, iv, rng, false);
    } catch (const Error& e) {
        throw NumericalError(std::string("draw_latent: interval mass underflow persists: ") + e.what());
    }
}

} // namespace detail

/// z | theta, g, y. beta^T x-type: z_i ~ N(-beta^T x_i, g^-2) on (alpha^{y-1}, alpha^y];
/// null-type: z_i ~ N(0, g^-2) on (alpha^{y-1} + beta^T x_i, alpha^y + beta^T x_i].
inline LatentState draw_latent(VariantId variant, const ExpandedTheta& state, const Dataset& data,
                               RngStream& rng) {
    require(state.is_valid(), "draw_latent: invalid state");
    require(is_ma(variant) || state.g == 1.0, "draw_latent: non-MA variants need g = 1");
    const Theta& th = state.theta;
    const Vector eta = detail::linear_predictor(data, th.beta);
    const double sd = 1.0 / state.g;
    LatentState out;
    out.z.resize(data.n());
    const bool null_type = is_null_type(variant);
    for (int i = 0; i < data.n(); ++i) {
        const int y = data.y[i];
        if (null_type) {
            out.z[i] = detail::draw_one_latent(0.0, sd, th.cut(y - 1) + eta[i], th.cut(y) + eta[i], rng,
                                               out.flagged);
        } else {
            out.z[i] = detail::draw_one_latent(-eta[i], sd, th.cut(y - 1), th.cut(y), rng, out.flagged);
        }
    }
    return out;
}

/// Coordinate scan over (alpha^2..alpha^{c-1}, beta_1..beta_p) given z. Each
/// coordinate has prior N(0, sigma^2 / g^2) and enters the likelihood only
/// through the constraints alpha^{y-1} + beta^T x < z <= alpha^y + beta^T x.
inline Theta update_theta_null(const LatentState& latent, const Theta& current, const Dataset& data,
                               const PriorSpec& prior, double g, RngStream& rng, int scans = 1) {
    require(scans >= 1, "update_theta_null: scans must be >= 1");
    const int n = data.n();
    const int c = data.c;
    const int p = data.p();
    const Vector& z = latent.z;
    Theta th = current;
    Vector eta = detail::linear_predictor(data, th.beta);
    const double sa = prior.sigma_alpha / g;
    const double sb = prior.sigma_beta / g;

    for (int scan = 0; scan < scans; ++scan) {
        for (int j = 2; j <= c - 1; ++j) {
            double lo = th.cut(j - 1), hi = th.cut(j + 1);
            for (int i = 0; i < n; ++i) {
                if (data.y[i] == j) lo = std::max(lo, z[i] - eta[i]);
                else if (data.y[i] == j + 1) hi = std::min(hi, z[i] - eta[i]);
            }
            th.alpha[j - 2] = truncated_normal(0.0, sa, Interval(lo, hi, true, false), rng);
        }
        for (int k = 0; k < p; ++k) {
            double lo = -normal::kInf, hi = normal::kInf;
            const double bk = th.beta[k];
            for (int i = 0; i < n; ++i) {
                const double xik = data.x(i, k);
                if (xik == 0.0) continue;
                const double r = z[i] - eta[i] + bk * xik;
                const int y = data.y[i];
                // beta_k x_ik in [r - alpha^y, r - alpha^{y-1}).
                const double a = (r - th.cut(y)) / xik;
                const double b = (r - th.cut(y - 1)) / xik;
                if (xik > 0.0) {
                    lo = std::max(lo, a);
                    hi = std::min(hi, b);
                } else {
                    lo = std::max(lo, b);
                    hi = std::min(hi, a);
                }
            }
            const double nb = truncated_normal(0.0, sb, Interval(lo, hi, true, false), rng);
            if (nb != bk) {
                for (int i = 0; i < n; ++i) eta[i] += (nb - bk) * data.x(i, k);
            }
            th.beta[k] = nb;
        }
    }
    if (!th.is_valid()) throw NumericalError("update_theta_null: ordering of cut points violated");
    return th;
}

/// Joint update given z. The alpha and beta blocks are conditionally
/// independent: alpha^j is a truncated normal on [max_{y=j} z, min_{y=j+1} z)
/// within the ordering, and beta ~ N(-A^-1 X^T z, (g^2 A)^-1) with
/// A = sigma_beta^-2 I + X^T X.
inline Theta update_theta_beta(const LatentState& latent, const Theta& current, const Dataset& data,
                               const PriorSpec& prior, double g, RngStream& rng) {
    const int n = data.n();
    const int c = data.c;
    const int p = data.p();
    const Vector& z = latent.z;
    Theta th = current;

    if (c > 2) {
        std::vector<double> zmax(c + 1, -normal::kInf), zmin(c + 1, normal::kInf);
        for (int i = 0; i < n; ++i) {
            const int y = data.y[i];
            zmax[y] = std::max(zmax[y], z[i]);
            zmin[y] = std::min(zmin[y], z[i]);
        }
        const double sa = prior.sigma_alpha / g;
        for (int j = 2; j <= c - 1; ++j) {
            const double lo = std::max(th.cut(j - 1), zmax[j]);
            const double hi = std::min(th.cut(j + 1), zmin[j + 1]);
            th.alpha[j - 2] = truncated_normal(0.0, sa, Interval(lo, hi, true, false), rng);
        }
    }

    Matrix A = data.x.transpose() * data.x;
    A.diagonal().array() += 1.0 / (prior.sigma_beta * prior.sigma_beta);
    const Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("update_theta_beta: precision not positive definite");
    const Vector mean = -llt.solve(data.x.transpose() * z);
    Vector eps(p);
    for (int k = 0; k < p; ++k) eps[k] = standard_normal(rng);
    th.beta = mean + llt.matrixU().solve(eps) / g;

    if (!th.is_valid()) throw NumericalError("update_theta_beta: ordering of cut points violated");
    return th;
}

/// Rate of the Gamma full conditional of g^2.
inline double g_conditional_rate(const LatentState& latent, const Theta& theta, const Dataset& data,
                                 const PriorSpec& prior, VariantId variant) {
    double S = 0.0;
    if (variant == VariantId::null_ma) {
        S = latent.z.squaredNorm();
    } else {
        S = (latent.z + detail::linear_predictor(data, theta.beta)).squaredNorm();
    }
    return prior.b0 + 0.5 * S + 0.5 * theta.alpha.squaredNorm() / (prior.sigma_alpha * prior.sigma_alpha) +
           0.5 * theta.beta.squaredNorm() / (prior.sigma_beta * prior.sigma_beta);
}

inline double g_conditional_shape(const Dataset& data, const PriorSpec& prior) {
    return prior.a0 + 0.5 * (data.n() + data.c - 2 + data.p());
}

/// g | z, theta for the MA kernels: g^2 ~ Gamma(shape, rate) above.
inline double update_g(const LatentState& latent, const Theta& theta, const Dataset& data,
                       const PriorSpec& prior, VariantId variant, RngStream& rng) {
    require(is_ma(variant), "update_g: only marginal-augmentation variants carry g");
    const double rate = g_conditional_rate(latent, theta, data, prior, variant);
    if (!(rate > 0.0) || !std::isfinite(rate)) throw NumericalError("update_g: nonpositive rate");
    return std::sqrt(gamma_draw(g_conditional_shape(data, prior), rate, rng));
}

/// One Gibbs step: z, then g (MA only), then theta.
inline ExpandedTheta kernel_step(VariantId variant, const ExpandedTheta& state, const Dataset& data,
                                 const PriorSpec& prior, RngStream& rng, int scans = 1) {
    if (variant == VariantId::binary_null) {
        return {Theta(Vector(), Vector::Constant(1, step_binary_null(state.theta.beta[0], data, prior, rng))),
                1.0};
    }
    if (variant == VariantId::binary_beta) {
        return {Theta(Vector(), Vector::Constant(1, step_binary_beta(state.theta.beta[0], data, prior, rng))),
                1.0};
    }
    const LatentState latent = draw_latent(variant, state, data, rng);
    ExpandedTheta next = state;
    if (is_ma(variant)) next.g = update_g(latent, state.theta, data, prior, variant, rng);
    if (is_null_type(variant)) {
        next.theta = update_theta_null(latent, state.theta, data, prior, next.g, rng, scans);
    } else {
        next.theta = update_theta_beta(latent, state.theta, data, prior, next.g, rng);
    }
    return next;
}

// ---------------------------------------------------------------------------
// Initial states and chains

/// Draw from the prior restricted to the ordered cone: the order statistics
/// of iid half-normals have exactly that law.
inline Theta draw_prior_theta(int c, int p, const PriorSpec& prior, RngStream& rng) {
    Vector a(c - 2);
    for (int k = 0; k < c - 2; ++k) a[k] = std::abs(standard_normal(rng)) * prior.sigma_alpha;
    std::sort(a.data(), a.data() + a.size());
    Vector b(p);
    for (int k = 0; k < p; ++k) b[k] = standard_normal(rng) * prior.sigma_beta;
    return {a, b};
}

inline double draw_prior_g(const PriorSpec& prior, RngStream& rng) {
    return std::sqrt(gamma_draw(prior.a0, prior.b0, rng));
}

/// Expanded stationary state from an identified draw: under the expanded
/// posterior g is independent of g*theta and follows its prior.
inline ExpandedTheta expand_state(VariantId variant, const Theta& identified, const PriorSpec& prior,
                                  RngStream& rng) {
    if (!is_ma(variant)) return {identified, 1.0};
    const double g = draw_prior_g(prior, rng);
    return {identified.scaled(1.0 / g), g};
}

struct InitPolicy {
    enum class Kind { fixed, reference_posterior, prior };
    Kind kind = Kind::fixed;
    ExpandedTheta state;                          // fixed
    std::shared_ptr<const Matrix> reference;      // rows are identified draws

    static InitPolicy fixed(ExpandedTheta s) { return {Kind::fixed, std::move(s), nullptr}; }
    static InitPolicy fixed(Theta t) { return fixed(ExpandedTheta{std::move(t), 1.0}); }
    static InitPolicy from_reference(std::shared_ptr<const Matrix> sample) {
        return {Kind::reference_posterior, {}, std::move(sample)};
    }
    static InitPolicy from_prior() { return {Kind::prior, {}, nullptr}; }

    std::string name() const {
        switch (kind) {
            case Kind::fixed: return "fixed";
            case Kind::reference_posterior: return "reference-posterior";
            case Kind::prior: return "prior";
        }
        return "?";
    }
};

inline ExpandedTheta initial_state(VariantId variant, const InitPolicy& init, int c, int p,
                                   const PriorSpec& prior, RngStream& rng) {
    switch (init.kind) {
        case InitPolicy::Kind::fixed: {
            ExpandedTheta s = init.state;
            require(s.theta.categories() == c && s.theta.p() == p, "fixed initial state has the wrong shape");
            if (!is_ma(variant)) s.g = 1.0;
            require(s.is_valid(), "fixed initial state is invalid");
            return s;
        }
        case InitPolicy::Kind::reference_posterior: {
            require(init.reference && init.reference->rows() > 0, "reference-posterior start needs a sample");
            const Matrix& ref = *init.reference;
            const auto row = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(ref.rows()));
            const Theta t = Theta::from_flat(ref.row(row).transpose(), c);
            return expand_state(variant, t, prior, rng);
        }
        case InitPolicy::Kind::prior: {
            const Theta t = draw_prior_theta(c, p, prior, rng);
            return {t, is_ma(variant) ? draw_prior_g(prior, rng) : 1.0};
        }
    }
    throw PreconditionError("unknown init policy");
}

/// Runs m - 1 kernel steps after the initial state and records all m states
/// together with the requested transforms.
inline ChainTrace run_chain(VariantId variant, const Dataset& data, const PriorSpec& prior, int m,
                            const InitPolicy& init, const std::vector<Transform>& transforms, RngStream rng,
                            int scans = 1) {
    require(m >= 1, "run_chain: m must be >= 1");
    data.validate();
    const int c = data.c;
    const int p = data.p();
    if (is_binary(variant)) require(c == 2 && p == 1, "binary variants need c = 2 and p = 1");
    ChainTrace trace;
    trace.variant = variant;
    trace.c = c;
    trace.p = p;
    trace.meta.n = data.n();
    trace.meta.m = m;
    trace.meta.seed = rng.key();
    trace.meta.stream = rng.stream_id();
    trace.meta.init_policy = init.name();
    trace.params.reserve(m);
    for (Transform t : transforms) trace.transforms.push_back({t, Matrix(m, transform_dim(t, c, p))});

    RngStream init_rng = rng.derive({0x1A17});
    RngStream step_rng = rng.derive({0x57E9});
    ExpandedTheta state = initial_state(variant, init, c, p, prior, init_rng);
    for (int i = 0; i < m; ++i) {
        if (i > 0) state = kernel_step(variant, state, data, prior, step_rng, scans);
        trace.params.push_back(state);
        for (auto& s : trace.transforms) s.values.row(i) = apply_transform(s.kind, state).transpose();
    }
    return trace;
}

} // namespace mcmcdegen

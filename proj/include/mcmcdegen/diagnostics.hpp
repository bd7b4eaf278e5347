#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "asymptotics.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace mcmcdegen {

/// Default true parameter for p = 1 cells, by category count.
inline Theta default_theta0(int c, int p = 1) {
    require(c >= 2 && p >= 1, "default_theta0: bad shape");
    const Vector alpha = Vector::LinSpaced(c - 2, 1.0, static_cast<double>(c - 2));
    const Vector beta = Vector::Constant(p, c == 2 ? 2.0 : -static_cast<double>(c - 2));
    return {alpha, beta};
}

/// Everything needed to evaluate one diagnostic cell.
struct CellSpec {
    VariantId variant = VariantId::beta;
    ModelConfig model;
    Theta theta0;
    int n = 100;
    int m = 200;
    int R = 20;
    std::uint64_t seed = 1;
    Transform transform = Transform::g_theta;
    InitPolicy::Kind init = InitPolicy::Kind::reference_posterior;
    ExpandedTheta fixed_init;
    ReferenceOptions reference{2000, 500, 5, 0, false, false, 1e-3, {}};
    int starts = 20;           // start states per replication for D_n
    bool iid_reference = false; // replace the kernel by independent posterior draws
    int threads = 1;

    void validate() const {
        model.validate();
        model.check_theta(theta0);
        require(n >= 1 && m >= 1 && R >= 1 && starts >= 1, "cell: n, m, R and starts must be positive");
        if (is_binary(variant)) require(model.c == 2 && model.p() == 1, "binary variants need c = 2 and p = 1");
    }
};

/// Seeds are derived from (master, cell coordinates, replication) and never
/// from the variant for data and references, so every variant of a cell sees
/// the same datasets and reference chains.
inline std::uint64_t dataset_seed(std::uint64_t master, int c, int p, int n, int rep) {
    return derive_stream_id(master, {0xDA7A5E7, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(p),
                                     static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}
inline std::uint64_t reference_seed(std::uint64_t master, int c, int p, int n, int rep) {
    return derive_stream_id(master, {0x2EFE2E, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(p),
                                     static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}
inline RngStream chain_stream(std::uint64_t master, VariantId v, int c, int p, int n, int rep) {
    return RngStream(master, derive_stream_id(0, {0xC4A1, static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(c),
                                                  static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n),
                                                  static_cast<std::uint64_t>(rep)}));
}

inline Dataset replication_dataset(const CellSpec& cell, int rep) {
    return sample_dataset(cell.model, cell.theta0, cell.n,
                          dataset_seed(cell.seed, cell.model.c, cell.model.p(), cell.n, rep));
}

inline ReferencePosterior replication_reference(const CellSpec& cell, const Dataset& data, int rep) {
    ReferenceOptions opt = cell.reference;
    opt.seed = reference_seed(cell.seed, cell.model.c, cell.model.p(), cell.n, rep);
    return build_reference(data, cell.model, opt);
}

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct DiagnosticsReport {
    std::string kind;
    std::string variant;
    std::string transform;
    int c = 2, p = 1, n = 0, m = 0, R = 0;
    std::uint64_t seed = 0;
    std::map<std::string, Estimate> estimates;
    std::map<std::string, std::vector<double>> per_replication;
    std::vector<Vector> theta_hat;
    std::map<std::string, std::string> notes;

    const Estimate& at(const std::string& key) const {
        const auto it = estimates.find(key);
        if (it == estimates.end()) throw PreconditionError("report has no estimate '" + key + "'");
        return it->second;
    }
};

namespace detail {

inline void fill_estimate(DiagnosticsReport& rep, const std::string& key, std::vector<double> values) {
    const auto ms = stats::mean_se(values);
    rep.estimates[key] = {ms.mean, ms.se};
    rep.per_replication[key] = std::move(values);
}

inline DiagnosticsReport report_header(const CellSpec& cell, const std::string& kind) {
    DiagnosticsReport r;
    r.kind = kind;
    r.variant = cell.iid_reference ? "iid-reference" : to_string(cell.variant);
    r.transform = to_string(cell.transform);
    r.c = cell.model.c;
    r.p = cell.model.p();
    r.n = cell.n;
    r.m = cell.m;
    r.R = cell.R;
    r.seed = cell.seed;
    return r;
}

inline InitPolicy make_init(const CellSpec& cell, const ReferencePosterior* ref) {
    switch (cell.init) {
        case InitPolicy::Kind::fixed: return InitPolicy::fixed(cell.fixed_init);
        case InitPolicy::Kind::prior: return InitPolicy::from_prior();
        case InitPolicy::Kind::reference_posterior: return InitPolicy::from_reference(ref->sample);
    }
    return {};
}

} // namespace detail

/// R'_m: expected W'_m between e_m and e_1 = delta_{s(0)}, on the original
/// scale and on the sqrt(n) localized scale. Also reports the lag-1
/// autocorrelation of the first transform coordinate.
inline DiagnosticsReport estimate_Rprime(const CellSpec& cell) {
    cell.validate();
    require(cell.m >= 2, "estimate_Rprime: m must be >= 2");
    const int R = cell.R;
    std::vector<double> raw(R), loc(R), ac(R);
    std::vector<Vector> hats(R);
    parallel_for(R, cell.threads, [&](int r) {
        const Dataset data = replication_dataset(cell, r);
        std::optional<ReferencePosterior> ref;
        if (cell.init == InitPolicy::Kind::reference_posterior) ref = replication_reference(cell, data, r);
        const ChainTrace tr = run_chain(cell.variant, data, cell.model.prior, cell.m, detail::make_init(cell, ref ? &*ref : nullptr),
                                        {cell.transform},
                                        chain_stream(cell.seed, cell.variant, cell.model.c, cell.model.p(), cell.n, r));
        const Matrix& s = tr.series(cell.transform);
        raw[r] = w_prime(s, 1.0);
        loc[r] = w_prime(s, std::sqrt(static_cast<double>(cell.n)));
        std::vector<double> first(s.rows());
        for (Eigen::Index i = 0; i < s.rows(); ++i) first[i] = s(i, 0);
        ac[r] = stats::lag1_autocorrelation(first);
        hats[r] = ref ? ref->theta_hat : fit_mle(cell.model, data, &cell.model.prior).flat();
    });
    DiagnosticsReport rep = detail::report_header(cell, "rprime");
    detail::fill_estimate(rep, "Rprime", raw);
    detail::fill_estimate(rep, "Rprime_localized", loc);
    detail::fill_estimate(rep, "lag1_autocorrelation", ac);
    rep.theta_hat = std::move(hats);
    rep.notes["init"] = InitPolicy{cell.init, {}, nullptr}.name();
    rep.notes["theta_hat"] = cell.init == InitPolicy::Kind::reference_posterior ? "reference central value"
                                                                                 : "posterior mode";
    return rep;
}

/// R_m on the localized scale: BL distance between the chain's empirical
/// measure and an equal-size sample of the reference posterior. The noise
/// floor is the BL distance between two disjoint reference subsamples of the
/// same size.
inline DiagnosticsReport estimate_R(const CellSpec& cell, int reference_size = 0) {
    cell.validate();
    const int R = cell.R;
    const int k = std::min(cell.m, 400);
    std::vector<double> risk(R), floor(R);
    std::vector<Vector> hats(R);
    parallel_for(R, cell.threads, [&](int r) {
        const Dataset data = replication_dataset(cell, r);
        CellSpec local = cell;
        if (reference_size > 0) {
            local.reference.length = reference_size * local.reference.thin;
        }
        local.reference.length = std::max(local.reference.length, 2 * k * local.reference.thin);
        const ReferencePosterior ref = replication_reference(local, data, r);
        const ChainTrace tr = run_chain(cell.variant, data, cell.model.prior, cell.m, detail::make_init(cell, &ref),
                                        {Transform::g_theta},
                                        chain_stream(cell.seed, cell.variant, cell.model.c, cell.model.p(), cell.n, r));
        const double sn = std::sqrt(static_cast<double>(cell.n));
        const Matrix loc_chain = sn * (tr.series(Transform::g_theta).rowwise() - ref.theta_hat.transpose());
        const Matrix& rs = *ref.sample;
        const Eigen::Index half = rs.rows() / 2;
        Matrix a(k, rs.cols()), b(k, rs.cols());
        for (int i = 0; i < k; ++i) {
            a.row(i) = rs.row(i * half / k);
            b.row(i) = rs.row(half + i * half / k);
        }
        const Matrix la = sn * (a.rowwise() - ref.theta_hat.transpose());
        const Matrix lb = sn * (b.rowwise() - ref.theta_hat.transpose());
        BlOptions bo;
        bo.seed = derive_stream_id(cell.seed, {0xB1, static_cast<std::uint64_t>(r)});
        risk[r] = bl_distance(EmpiricalMeasure::uniform(loc_chain), EmpiricalMeasure::uniform(la), bo);
        floor[r] = bl_distance(EmpiricalMeasure::uniform(lb), EmpiricalMeasure::uniform(la), bo);
        hats[r] = ref.theta_hat;
    });
    DiagnosticsReport rep = detail::report_header(cell, "risk");
    detail::fill_estimate(rep, "R_localized", risk);
    detail::fill_estimate(rep, "noise_floor", floor);
    rep.theta_hat = std::move(hats);
    rep.notes["support_cap"] = "400";
    return rep;
}

/// One replication of the one-step statistic: mean over `starts` stationary
/// start states of min(sqrt(n) |F(s(0)) - F(s(1))|, 1).
inline double one_step_replication(const CellSpec& cell, const Dataset& data, const ReferencePosterior& ref,
                                   RngStream rng) {
    const Matrix& rs = *ref.sample;
    require(rs.rows() >= 2, "one-step statistic: reference sample too small");
    const double sn = std::sqrt(static_cast<double>(cell.n));
    const int K = cell.starts;
    std::vector<double> d(K);
    const Eigen::Index half = rs.rows() / 2;
    for (int k = 0; k < K; ++k) {
        const Eigen::Index row = (k * half) / K;
        const Theta t0 = Theta::from_flat(rs.row(row).transpose(), cell.model.c);
        const ExpandedTheta s0 = expand_state(cell.variant, t0, cell.model.prior, rng);
        ExpandedTheta s1;
        if (cell.iid_reference) {
            const Theta t1 = Theta::from_flat(rs.row(half + row).transpose(), cell.model.c);
            s1 = expand_state(cell.variant, t1, cell.model.prior, rng);
        } else {
            s1 = kernel_step(cell.variant, s0, data, cell.model.prior, rng);
        }
        d[k] = ground_distance(apply_transform(cell.transform, s0), apply_transform(cell.transform, s1), sn);
    }
    return stats::pairwise_sum(d) / static_cast<double>(K);
}

/// D_n over R replications, each with a fresh dataset and reference chain.
/// `refs`, when given, supplies prebuilt references indexed by replication.
inline DiagnosticsReport one_step_statistic(const CellSpec& cell,
                                            const std::vector<std::shared_ptr<const ReferencePosterior>>* refs = nullptr,
                                            const std::vector<std::shared_ptr<const Dataset>>* datasets = nullptr) {
    cell.validate();
    transform_dim(cell.transform, cell.model.c, cell.model.p());
    const int R = cell.R;
    std::vector<double> D(R);
    std::vector<Vector> hats(R);
    parallel_for(R, cell.threads, [&](int r) {
        std::shared_ptr<const Dataset> data =
            datasets ? (*datasets)[r] : std::make_shared<const Dataset>(replication_dataset(cell, r));
        std::shared_ptr<const ReferencePosterior> ref =
            refs ? (*refs)[r] : std::make_shared<const ReferencePosterior>(replication_reference(cell, *data, r));
        D[r] = one_step_replication(cell, *data, *ref,
                                    chain_stream(cell.seed, cell.variant, cell.model.c, cell.model.p(), cell.n, r)
                                        .derive({cell.iid_reference ? 1u : 0u}));
        hats[r] = ref->theta_hat;
    });
    DiagnosticsReport rep = detail::report_header(cell, "one-step");
    detail::fill_estimate(rep, "D", D);
    rep.theta_hat = std::move(hats);
    rep.notes["starts_per_replication"] = std::to_string(cell.starts);
    return rep;
}

// ---------------------------------------------------------------------------
// Table 1

/// Transform used as the degeneracy witness for each Table-1 cell: the block
/// that the degeneracy argument freezes for X cells, g*theta otherwise.
inline Transform table1_transform(VariantId v, int c, int p) {
    switch (v) {
        case VariantId::binary_null:
        case VariantId::null: return Transform::theta;
        case VariantId::binary_beta: return Transform::theta;
        case VariantId::beta: return c >= 3 ? Transform::alpha : Transform::theta;
        case VariantId::null_ma: return c - 2 + p >= 2 ? Transform::theta_norm : Transform::g_theta;
        case VariantId::beta_ma: return c >= 4 ? Transform::alpha_ratio : Transform::g_theta;
    }
    return Transform::g_theta;
}

struct Table1Point {
    std::string variant;
    int c = 2;
    int n = 0;
    int R = 0;
    double D = 0.0;
    double se = 0.0;
};

struct Table1Label {
    std::string variant;
    int c = 2;
    std::string label; // "X", "O" or "inconclusive"
    double ratio = 0.0; // D at the largest n over D at the smallest n
};

struct ClassifyOptions {
    int min_replications = 50;
    double decay_ratio = 0.5;
    double se_guard = 3.0;
    double band_low = 2.0 / 3.0;
    double band_high = 1.5;
};

/// X: D_n strictly decreasing along the n-grid with D_last / D_first below
/// `decay_ratio`, the gap D_first * decay_ratio - D_last exceeding
/// `se_guard` pooled standard errors. O: every D_n / D_first inside the band.
/// Anything else is inconclusive.
inline std::vector<Table1Label> classify_table1(std::vector<Table1Point> points, const ClassifyOptions& opt = {}) {
    std::sort(points.begin(), points.end(), [](const Table1Point& a, const Table1Point& b) {
        return std::tie(a.variant, a.c, a.n) < std::tie(b.variant, b.c, b.n);
    });
    std::vector<Table1Label> out;
    for (std::size_t lo = 0; lo < points.size();) {
        std::size_t hi = lo;
        while (hi < points.size() && points[hi].variant == points[lo].variant && points[hi].c == points[lo].c) ++hi;
        require(hi - lo >= 2, "classify_table1: each cell needs at least two n values");
        for (std::size_t k = lo; k < hi; ++k) {
            if (points[k].R < opt.min_replications) {
                throw PreconditionError("classify_table1: insufficient replications (" + std::to_string(points[k].R) +
                                        " < " + std::to_string(opt.min_replications) + ")");
            }
        }
        const Table1Point& first = points[lo];
        const Table1Point& last = points[hi - 1];
        Table1Label lab{first.variant, first.c, "inconclusive", first.D > 0 ? last.D / first.D : 0.0};
        bool decreasing = true;
        for (std::size_t k = lo + 1; k < hi; ++k) decreasing = decreasing && points[k].D < points[k - 1].D;
        const double gap = opt.decay_ratio * first.D - last.D;
        const double pooled = std::sqrt(last.se * last.se + opt.decay_ratio * opt.decay_ratio * first.se * first.se);
        bool in_band = first.D > 0;
        for (std::size_t k = lo + 1; k < hi && in_band; ++k) {
            const double r = points[k].D / first.D;
            in_band = r >= opt.band_low && r <= opt.band_high;
        }
        if (decreasing && gap > opt.se_guard * pooled) lab.label = "X";
        else if (in_band) lab.label = "O";
        out.push_back(lab);
        lo = hi;
    }
    return out;
}

} // namespace mcmcdegen

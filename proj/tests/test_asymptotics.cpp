#include <gtest/gtest.h>

#include "mcmcdegen/asymptotics.hpp"
#include "mcmcdegen/diagnostics.hpp"

using namespace mcmcdegen;

namespace {

ModelConfig config(int c, int p = 1) {
    ModelConfig cfg;
    cfg.c = c;
    cfg.covariates.p = p;
    return cfg;
}

} // namespace

TEST(Information, ExpandedInformationHasScaleNullDirection) {
    const ModelConfig cfg = config(3);
    const Theta ident = default_theta0(3);
    const Matrix I = fisher_information(cfg, ident).value;
    const ExpandedTheta s{ident.scaled(1.0 / 1.7), 1.7};
    const Matrix E = expanded_information(I, s, true);
    Vector v(3);
    v << s.theta.flat(), -s.g;
    EXPECT_LT((E * v).norm(), 1e-12);
    EXPECT_EQ(expanded_information(I, s, false), I);
}

TEST(Information, AugmentedInformationMatchesScoreCovariance) {
    const ModelConfig cfg = config(3, 2);
    const ExpandedTheta s{Theta(Vector::Constant(1, 0.8), (Vector(2) << -1.0, 0.5).finished()), 1.3};
    for (VariantId v : {VariantId::beta, VariantId::null_ma, VariantId::beta_ma}) {
        const Matrix exact = augmented_information(v, s, cfg.link, cfg.covariates);
        const McInformation mc = augmented_information_mc(v, s, cfg, 200000, 9);
        ASSERT_EQ(exact.rows(), mc.value.rows()) << to_string(v);
        for (Eigen::Index i = 0; i < exact.rows(); ++i) {
            for (Eigen::Index j = 0; j < exact.cols(); ++j) {
                EXPECT_NEAR(mc.value(i, j), exact(i, j), 5.0 * mc.se(i, j) + 1e-6)
                    << to_string(v) << " (" << i << "," << j << ")";
            }
        }
    }
    EXPECT_EQ(augmented_information(VariantId::null, s, cfg.link, cfg.covariates).size(), 0);
}

TEST(Information, QuotedFormDiffersOnlyInTheBetaBlock) {
    const ModelConfig cfg = config(3, 2);
    const ExpandedTheta s{Theta(Vector::Constant(1, 0.8), (Vector(2) << -1.0, 0.5).finished()), 1.3};
    const ScaleConstants sc = scale_constants(cfg.link);
    const Matrix quoted = km_matrix(VariantId::beta_ma, s, sc.K, sc.L, cfg.covariates.second_moment(),
                                    cfg.covariates.mean());
    const Matrix derived = augmented_information(VariantId::beta_ma, s, cfg.link, cfg.covariates);
    EXPECT_NEAR((quoted.topLeftCorner(2, 2) - 2.0 * derived.topLeftCorner(2, 2)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(quoted(2, 2), derived(2, 2), 1e-12);
    EXPECT_NEAR(quoted(2, 2), 2.0 / (1.3 * 1.3), 1e-9);
    EXPECT_NEAR(km_matrix(VariantId::null_ma, s, sc.K, sc.L, Matrix(), Vector())(0, 0), 2.0 / (1.3 * 1.3), 1e-9);
}

TEST(Information, FisherBlocksPartitionTheExpandedMatrix) {
    const ModelConfig cfg = config(4);
    const Theta ident = default_theta0(4);
    const Matrix I = fisher_information(cfg, ident).value;
    const FisherBlocks fb = fisher_blocks(VariantId::beta_ma, {ident, 1.0}, I, cfg);
    EXPECT_EQ(fb.I.rows(), 4);
    EXPECT_EQ(fb.I_F.rows(), 2);
    EXPECT_EQ(fb.I_M.rows(), 2);
    EXPECT_EQ(fb.I_MF.transpose(), fb.I_FM);
    EXPECT_NEAR((fb.J_M - (fb.K_M - fb.I_M)).norm(), 0.0, 1e-15);
    // The augmented information dominates the observed one on the moving block.
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(fb.J_M).eigenvalues().minCoeff(), -1e-10);
}

TEST(KernelApprox, OneStepMeanShiftMatchesFixedBlockTerm) {
    const ModelConfig cfg = config(3);
    const int n = 1600;
    const Dataset d = sample_dataset(cfg, default_theta0(3), n, 44);
    const Theta hat = fit_mle(cfg, d, &cfg.prior);
    const Matrix I = fisher_information(cfg, hat).value;
    ExpandedTheta displaced{hat, 1.0};
    displaced.theta.alpha[0] += 3.0 / std::sqrt(static_cast<double>(n));
    const NormalApprox at_hat = kernel_normal_approx(VariantId::beta, cfg, n, {hat, 1.0}, I, {hat, 1.0});
    const NormalApprox at_disp = kernel_normal_approx(VariantId::beta, cfg, n, {hat, 1.0}, I, displaced);
    const double predicted = at_disp.mean[0] - at_hat.mean[0];

    RngStream rng(12, 12);
    const int N = 10000;
    std::vector<double> b0(N), b1(N);
    for (int k = 0; k < N; ++k) {
        b0[k] = kernel_step(VariantId::beta, {hat, 1.0}, d, cfg.prior, rng).theta.beta[0];
        b1[k] = kernel_step(VariantId::beta, displaced, d, cfg.prior, rng).theta.beta[0];
    }
    const auto m0 = stats::mean_se(b0), m1 = stats::mean_se(b1);
    const double observed = m1.mean - m0.mean;
    const double se = std::hypot(m0.se, m1.se);
    EXPECT_GT(std::abs(predicted), 10.0 * se);
    EXPECT_GT(observed * predicted, 0.0) << "sign of the fixed-block term";
    EXPECT_NEAR(observed, predicted, 0.2 * std::abs(predicted) + 4.0 * se);
    EXPECT_NEAR(std::sqrt(stats::variance(b0)), std::sqrt(at_hat.cov(0, 0)), 0.15 * std::sqrt(at_hat.cov(0, 0)));
}

TEST(KernelApprox, RejectsVariantsWithoutMovingBlock) {
    const ModelConfig cfg = config(2);
    const Theta t = default_theta0(2);
    const Matrix I = fisher_information(cfg, t).value;
    EXPECT_THROW(kernel_normal_approx(VariantId::null, cfg, 100, {t, 1.0}, I, {t, 1.0}), PreconditionError);
}

TEST(TwoPointTest, LimitAndCenterValues) {
    const ModelConfig cfg = config(2);
    const TwoPointTest t = make_two_point_test(cfg, Vector::Constant(1, 0.5), 0.25, 0.75);
    EXPECT_NEAR(t.p_i, 0.5, 1e-15);
    EXPECT_NEAR(two_point_test_limit(t), 0.375 + 0.75 * 0.25, 1e-15);
    EXPECT_NEAR(two_point_test_value(t, Vector::Constant(1, 0.0), cfg), 0.375 + 0.75 * 0.125, 1e-12);
    EXPECT_NEAR(two_point_test_value(t, Vector::Constant(1, 400.0), cfg), two_point_test_limit(t), 1e-10);
    EXPECT_NEAR(two_point_test_value(t, Vector::Constant(1, -400.0), cfg), two_point_test_limit(t), 1e-10);
    double prev = two_point_test_value(t, Vector::Constant(1, 0.0), cfg);
    for (double th : {1.0, 3.0, 10.0, 30.0}) {
        const double v = two_point_test_value(t, Vector::Constant(1, th), cfg);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_THROW(make_two_point_test(config(3), Vector::Constant(1, 0.5), 0.25, 0.75), PreconditionError);
    EXPECT_THROW(make_two_point_test(cfg, Vector::Constant(1, 3.0), 0.25, 0.75), PreconditionError);
}

TEST(Reference, DeterministicCenteredAndDocumented) {
    const ModelConfig cfg = config(3);
    const Dataset d = sample_dataset(cfg, default_theta0(3), 400, 21);
    ReferenceOptions opt{20000, 1000, 10, 5, true, true, 1e-3, {}};
    const ReferencePosterior a = build_reference(d, cfg, opt);
    const ReferencePosterior b = build_reference(d, cfg, opt);
    EXPECT_EQ(*a.sample, *b.sample);
    EXPECT_EQ(a.size(), 2000);
    EXPECT_LT((a.theta_hat - a.mode.flat()).norm(), 0.1);
    EXPECT_GT(a.provenance.mh_acceptance, 0.2);
    EXPECT_EQ(a.bvm_cov.rows(), 2);
    for (double ks : bvm_ks_distances(a)) EXPECT_LT(ks, 0.1);
    for (Eigen::Index i = 0; i < a.sample->rows(); ++i) {
        ASSERT_TRUE(Theta::from_flat(a.sample->row(i).transpose(), 3).is_valid());
    }
    EXPECT_TRUE(std::isinf(log_posterior(cfg, Theta(Vector::Constant(1, -1.0), Vector::Constant(1, 0.0)), d)));
}

TEST(Reference, GibbsAndPureMetropolisAgree) {
    const ModelConfig cfg = config(4);
    const Dataset d = sample_dataset(cfg, default_theta0(4), 200, 22);
    ReferenceOptions opt{30000, 1000, 10, 6, false, false, 1e-3, {}};
    const ReferencePosterior a = build_reference(d, cfg, opt);
    opt.gibbs = false;
    opt.seed = 7;
    const ReferencePosterior b = build_reference(d, cfg, opt);
    for (Eigen::Index k = 0; k < 3; ++k) {
        std::vector<double> x(a.sample->col(k).data(), a.sample->col(k).data() + a.size());
        std::vector<double> y(b.sample->col(k).data(), b.sample->col(k).data() + b.size());
        EXPECT_GT(stats::ks_two_sample(x, y).p_value, 1e-3) << k;
    }
}

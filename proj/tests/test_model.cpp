#include <gtest/gtest.h>

#include "mcmcdegen/diagnostics.hpp"
#include "mcmcdegen/model.hpp"

using namespace mcmcdegen;

namespace {

ModelConfig config(int c, int p = 1) {
    ModelConfig cfg;
    cfg.c = c;
    cfg.covariates.p = p;
    return cfg;
}

Theta theta_for(int c, int p = 1) { return default_theta0(c, p); }

} // namespace

TEST(Theta, CutPointsAndOrdering) {
    const Theta t(Vector::LinSpaced(2, 1.0, 2.0), Vector::Constant(1, -2.0));
    EXPECT_EQ(t.categories(), 4);
    EXPECT_TRUE(std::isinf(t.cut(0)) && t.cut(0) < 0);
    EXPECT_EQ(t.cut(1), 0.0);
    EXPECT_EQ(t.cut(2), 1.0);
    EXPECT_EQ(t.cut(3), 2.0);
    EXPECT_TRUE(std::isinf(t.cut(4)) && t.cut(4) > 0);
    EXPECT_TRUE(t.is_valid());
    EXPECT_FALSE(Theta(Vector::Constant(1, -0.5), Vector::Constant(1, 1.0)).is_valid());
    EXPECT_FALSE(Theta((Vector(2) << 2.0, 1.0).finished(), Vector::Constant(1, 1.0)).is_valid());
    EXPECT_THROW(Theta(Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)).validate(), PreconditionError);
    const Theta back = Theta::from_flat(t.flat(), 4);
    EXPECT_EQ(back.alpha, t.alpha);
    EXPECT_EQ(back.beta, t.beta);
}

TEST(Model, CellProbabilitiesSumToOne) {
    for (int c : {2, 3, 4, 6}) {
        const ModelConfig cfg = config(c, 2);
        const Theta th(Vector::LinSpaced(c - 2, 0.4, 0.4 * (c - 2)), (Vector(2) << -1.0, 0.5).finished());
        RngStream rng(1, static_cast<std::uint64_t>(c));
        for (int k = 0; k < 20; ++k) {
            Vector x(2);
            cfg.covariates.draw(rng, x);
            double s = 0.0;
            for (int j = 1; j <= c; ++j) {
                const double pj = cell_probability(cfg, th, x, j);
                EXPECT_GE(pj, 0.0);
                s += pj;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Model, CellGradientMatchesFiniteDifferences) {
    const ModelConfig cfg = config(4, 2);
    const Theta th((Vector(2) << 0.7, 1.9).finished(), (Vector(2) << -1.3, 0.4).finished());
    const Vector x = (Vector(2) << 0.3, 0.8).finished();
    for (int j = 1; j <= 4; ++j) {
        const Vector g = cell_gradient(cfg, th, x, j);
        for (int k = 0; k < th.dim(); ++k) {
            const double h = 1e-6;
            Vector up = th.flat(), dn = th.flat();
            up[k] += h;
            dn[k] -= h;
            const double fd = (cell_probability(cfg, Theta::from_flat(up, 4), x, j) -
                               cell_probability(cfg, Theta::from_flat(dn, 4), x, j)) /
                              (2 * h);
            EXPECT_NEAR(g[k], fd, 1e-8) << "j=" << j << " k=" << k;
        }
    }
}

TEST(Model, ScoreEtaIsHalfGradientOverRoot) {
    const ModelConfig cfg = config(3);
    const Theta th = theta_for(3);
    const Vector x = Vector::Constant(1, 0.6);
    for (int j = 1; j <= 3; ++j) {
        const double p = cell_probability(cfg, th, x, j);
        const Vector e = score_eta(cfg, th, x, j);
        const Vector g = cell_gradient(cfg, th, x, j);
        EXPECT_NEAR((e - g / (2 * std::sqrt(p))).norm(), 0.0, 1e-14);
    }
    const Theta extreme(Vector::Constant(1, 1.0), Vector::Constant(1, -80.0));
    EXPECT_THROW(score_eta(cfg, extreme, Vector::Constant(1, 1.0), 1), DegenerateInputError);
}

TEST(Model, ScoreHasMeanZeroAndCovarianceFisher) {
    const ModelConfig cfg = config(3);
    const Theta th = theta_for(3);
    const Matrix I = fisher_information(cfg, th).value;
    RngStream rng(8, 8);
    const int N = 200000;
    Vector mean = Vector::Zero(2);
    Matrix cov = Matrix::Zero(2, 2);
    for (int i = 0; i < N; ++i) {
        Vector x(1);
        cfg.covariates.draw(rng, x);
        const double u = rng.uniform();
        int y = 3;
        double acc = 0.0;
        for (int j = 1; j <= 3; ++j) {
            acc += cell_probability(cfg, th, x, j);
            if (u <= acc) {
                y = j;
                break;
            }
        }
        const Vector s = cell_gradient(cfg, th, x, y) / cell_probability(cfg, th, x, y);
        mean += s;
        cov += s * s.transpose();
    }
    mean /= N;
    cov /= N;
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(mean[k], 0.0, 4.0 * std::sqrt(I(k, k) / N));
    EXPECT_LT((cov - I).cwiseAbs().maxCoeff() / I.cwiseAbs().maxCoeff(), 0.02);
}

TEST(Model, FisherQuadratureAgreesWithMonteCarlo) {
    const ModelConfig cfg = config(4);
    const Theta th = theta_for(4);
    const FisherInformation q = fisher_information(cfg, th);
    EXPECT_EQ(q.method, "quadrature");
    Matrix mc = Matrix::Zero(3, 3);
    RngStream rng(2, 2);
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        Vector x(1);
        cfg.covariates.draw(rng, x);
        mc += conditional_information(cfg, th, x);
    }
    mc /= N;
    EXPECT_LT((mc - q.value).cwiseAbs().maxCoeff(), 5e-3);
    EXPECT_LT((q.value - q.value.transpose()).norm(), 1e-15);

    const ModelConfig cfg2 = config(3, 2);
    const FisherInformation m = fisher_information(cfg2, theta_for(3, 2), FisherOptions{20000, 1, 1e-12});
    EXPECT_EQ(m.method, "monte-carlo");
    EXPECT_GT(m.error_estimate, 0.0);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(m.value).eigenvalues().minCoeff(), 0.0);
}

TEST(Model, NormalizedScoreAtTruthIsApproximatelyStandardized) {
    const ModelConfig cfg = config(3);
    const Theta th = theta_for(3);
    const Matrix I = fisher_information(cfg, th).value;
    const Eigen::LLT<Matrix> llt(I);
    const int reps = 400;
    std::vector<double> q(reps);
    for (int r = 0; r < reps; ++r) {
        const Dataset d = sample_dataset(cfg, th, 300, 1000 + r);
        const Vector z = normalized_score(cfg, th, d);
        q[r] = z.dot(llt.solve(z));
    }
    // Z I^-1 Z ~ chi^2_2 with mean 2.
    const auto ms = stats::mean_se(q);
    EXPECT_NEAR(ms.mean, 2.0, 4.0 * ms.se);
}

TEST(Model, ScaleConstantsProbit) {
    const ScaleConstants sc = scale_constants(LinkSpec{});
    EXPECT_NEAR(sc.K, 2.0, 1e-8);
    EXPECT_NEAR(sc.L, 0.0, 1e-8);
    EXPECT_NEAR(sc.location_information, 1.0, 1e-8);
}

TEST(Model, SampleDatasetIsDeterministicAndMatchesProbabilities) {
    const ModelConfig cfg = config(4);
    const Theta th = theta_for(4);
    const Dataset a = sample_dataset(cfg, th, 20000, 99);
    const Dataset b = sample_dataset(cfg, th, 20000, 99);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.x, b.x);
    EXPECT_NE(sample_dataset(cfg, th, 200, 100).y, sample_dataset(cfg, th, 200, 101).y);
    std::vector<double> expected(4, 0.0);
    std::vector<int> seen(4, 0);
    for (int i = 0; i < a.n(); ++i) {
        ++seen[a.y[i] - 1];
        for (int j = 1; j <= 4; ++j) expected[j - 1] += cell_probability(cfg, th, a.x.row(i).transpose(), j);
    }
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(seen[j], expected[j], 4.0 * std::sqrt(expected[j]) + 1) << j;
    EXPECT_THROW(sample_dataset(cfg, theta_for(3), 10, 1), PreconditionError);
}

TEST(Model, ProjectionToBinaryModel) {
    const ModelConfig cfg = config(4);
    const Theta th = theta_for(4);
    const Dataset d = sample_dataset(cfg, th, 500, 5);
    const Dataset b = project_binary(d, 3);
    EXPECT_EQ(b.c, 2);
    const Theta pt = projected_parameter(th, 3);
    ASSERT_EQ(pt.beta.size(), 2);
    EXPECT_EQ(pt.beta[0], th.alpha[1]);
    const Dataset bi = with_intercept(b);
    const ModelConfig c2 = config(2, 2);
    // P(y <= 3 | x) in the original model equals P(y' = 1 | (1, x)) in the binary one.
    for (int i = 0; i < 10; ++i) {
        const Vector x = d.x.row(i).transpose();
        const double orig = cell_probability(cfg, th, x, 1) + cell_probability(cfg, th, x, 2) +
                            cell_probability(cfg, th, x, 3);
        EXPECT_NEAR(cell_probability(c2, pt, bi.x.row(i).transpose(), 1), orig, 1e-14);
        EXPECT_EQ(b.y[i], d.y[i] > 3 ? 2 : 1);
    }
    EXPECT_THROW(project_binary(d, 1), PreconditionError);
}

TEST(Model, LogLikelihoodGradientMatchesScore) {
    const ModelConfig cfg = config(3);
    const Theta th = theta_for(3);
    const Dataset d = sample_dataset(cfg, th, 200, 3);
    const Vector z = normalized_score(cfg, th, d) * std::sqrt(200.0);
    for (int k = 0; k < 2; ++k) {
        const double h = 1e-6;
        Vector up = th.flat(), dn = th.flat();
        up[k] += h;
        dn[k] -= h;
        const double fd = (log_likelihood(cfg.link, Theta::from_flat(up, 3), d) -
                           log_likelihood(cfg.link, Theta::from_flat(dn, 3), d)) /
                          (2 * h);
        EXPECT_NEAR(z[k], fd, 1e-5);
    }
    EXPECT_TRUE(std::isinf(log_prior(cfg.prior, Theta(Vector::Constant(1, -1.0), Vector::Constant(1, 0.0)))));
}

TEST(Model, MleIsStationaryAndConsistent) {
    const ModelConfig cfg = config(4);
    const Theta th = theta_for(4);
    const Dataset d = sample_dataset(cfg, th, 5000, 12);
    const Theta mle = fit_mle(cfg, d);
    EXPECT_LT(normalized_score(cfg, mle, d).norm(), 1e-6);
    const Matrix I = fisher_information(cfg, th).value;
    const Vector diff = mle.flat() - th.flat();
    // n (mle - theta)^T I (mle - theta) ~ chi^2_3; a bound at 25 fails with probability < 1e-4.
    EXPECT_LT(5000.0 * diff.dot(I * diff), 25.0);
}

TEST(Model, MapExistsWithEmptyCategory) {
    const ModelConfig cfg = config(4);
    Dataset d = sample_dataset(cfg, theta_for(4), 50, 4);
    for (int& y : d.y) y = y == 3 ? 2 : y;
    const Theta map = fit_mle(cfg, d, &cfg.prior);
    EXPECT_TRUE(map.is_valid());
}

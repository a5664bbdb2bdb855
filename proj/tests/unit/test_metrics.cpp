#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dnnsr/errors.hpp"
#include "dnnsr/metrics.hpp"

using namespace dnnsr;

TEST(Psnr, Examples) {
    Matrix x = Matrix::Identity(2, 2);
    Matrix xhat = x;
    EXPECT_TRUE(std::isinf(psnr(x, xhat)));
    xhat(0, 0) = 0.5;
    EXPECT_NEAR(psnr(x, xhat), 10.0 * std::log10(4.0 / 0.25), 1e-12);
    EXPECT_NEAR(psnr(x, xhat), 12.0412, 1e-4);
    EXPECT_NEAR(psnr(3.5 * x, 3.5 * xhat), psnr(x, xhat), 1e-12);
}

TEST(Psnr, ErrorsAndMonotonicity) {
    EXPECT_THROW(psnr(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), ShapeError);
    EXPECT_THROW(psnr(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), UndefinedMetric);
    Rng rng(1);
    const Matrix x = rng.normal_matrix(5, 5);
    const Matrix d = rng.normal_matrix(5, 5);
    double last = std::numeric_limits<double>::infinity();
    for (double s = 0.1; s < 3.0; s += 0.1) {
        const double p = psnr(x, x + s * d);
        EXPECT_LT(p, last);
        last = p;
    }
}

TEST(MseUnobserved, Examples) {
    const Matrix x = Matrix::Constant(2, 2, 2.0);
    Matrix mask = Matrix::Ones(2, 2);
    mask(1, 0) = 0.0;
    Matrix xhat = x;
    EXPECT_EQ(mse_unobserved(x, xhat, mask), 0.0);
    xhat(1, 0) = 1.0;
    EXPECT_DOUBLE_EQ(mse_unobserved(x, xhat, mask), 0.25);
    xhat(1, 0) = 0.0;
    EXPECT_DOUBLE_EQ(mse_unobserved(x, xhat, mask), 1.0);
}

TEST(MseUnobserved, IgnoresObservedAndRejectsDegenerate) {
    Rng rng(2);
    const Matrix x = rng.normal_matrix(4, 4);
    Matrix mask = Matrix::Ones(4, 4);
    mask(0, 0) = mask(2, 3) = 0.0;
    Matrix a = rng.normal_matrix(4, 4);
    Matrix b = a;
    b(1, 1) += 5.0;
    EXPECT_EQ(mse_unobserved(x, a, mask), mse_unobserved(x, b, mask));
    EXPECT_THROW(mse_unobserved(x, a, Matrix::Ones(4, 4)), UndefinedMetric);
    Matrix zero = x;
    zero(0, 0) = zero(2, 3) = 0.0;
    EXPECT_THROW(mse_unobserved(zero, a, mask), UndefinedMetric);
}

TEST(Ssim, IdentityAndConstant) {
    Rng rng(3);
    const Matrix x = rng.normal_matrix(6, 7);
    EXPECT_DOUBLE_EQ(ssim(x, x), 1.0);
    const Matrix c = Matrix::Constant(3, 3, 0.4);
    EXPECT_DOUBLE_EQ(ssim(c, c), 1.0);
}

TEST(Ssim, AnticorrelatedIsClamped) {
    Matrix x(2, 2);
    x << 1.0, 2.0, 3.0, 4.0;
    const double mu = 2.5;
    const Matrix y = (-x.array() + 2.0 * mu).matrix();
    // Population moments: var = 1.25, cov = -1.25, both means 2.5.
    const double raw = (2 * mu * mu + 0.01) * (2 * -1.25 + 0.03) / ((2 * mu * mu + 0.01) * (2.5 + 0.03));
    const SsimValue s = ssim_detail(x, y);
    EXPECT_NEAR(s.raw, raw, 1e-14);
    EXPECT_LT(s.raw, 0.0);
    EXPECT_EQ(s.value, 0.0);
}

TEST(Ssim, DirectFormula) {
    Rng rng(4);
    const Matrix x = rng.normal_matrix(4, 5);
    const Matrix y = x + 0.3 * rng.normal_matrix(4, 5);
    double mx = 0, my = 0;
    for (Index k = 0; k < 20; ++k) {
        mx += x.data()[k] / 20;
        my += y.data()[k] / 20;
    }
    double vx = 0, vy = 0, cxy = 0;
    for (Index k = 0; k < 20; ++k) {
        vx += (x.data()[k] - mx) * (x.data()[k] - mx) / 20;
        vy += (y.data()[k] - my) * (y.data()[k] - my) / 20;
        cxy += (x.data()[k] - mx) * (y.data()[k] - my) / 20;
    }
    const double expected = (2 * mx * my + 0.01) * (2 * cxy + 0.03) / ((mx * mx + my * my + 0.01) * (vx + vy + 0.03));
    EXPECT_NEAR(ssim_detail(x, y).raw, expected, 1e-12);
    EXPECT_THROW(ssim(x, Matrix::Zero(3, 3)), ShapeError);
}

TEST(Nmae, Examples) {
    Matrix pred = Matrix::Zero(2, 2);
    pred(0, 1) = 3.0;
    std::vector<Rating> one{{0, 1, 4.0}};
    EXPECT_DOUBLE_EQ(nmae(one, pred), 0.25);
    pred(0, 1) = 4.0;
    EXPECT_EQ(nmae(one, pred), 0.0);
    std::vector<Rating> two{{0, 0, 5.0}, {1, 1, 1.0}};
    pred(0, 0) = 1.0;
    pred(1, 1) = 5.0;
    EXPECT_DOUBLE_EQ(nmae(two, pred), 1.0);
    EXPECT_THROW(nmae(std::vector<Rating>{}, pred), UndefinedMetric);
}

TEST(Nmae, PermutationInvariant) {
    Rng rng(5);
    const Matrix pred = rng.uniform_matrix(5, 5, 1.0, 5.0);
    std::vector<Rating> h;
    for (Index i = 0; i < 5; ++i) h.push_back({i, (i * 3) % 5, 1.0 + static_cast<double>(i % 5)});
    const double a = nmae(h, pred);
    std::reverse(h.begin(), h.end());
    EXPECT_NEAR(nmae(h, pred), a, 1e-15);
}

TEST(Aggregate, MeanAndPopulationSd) {
    std::vector<TrialReport> r(2);
    r[0].psnr = 10.0;
    r[1].psnr = 20.0;
    r[0].mse = r[1].mse = 0.5;
    const AggregateReport a = aggregate(r);
    EXPECT_DOUBLE_EQ(a.psnr->mean, 15.0);
    EXPECT_DOUBLE_EQ(a.psnr->sd, 5.0);
    EXPECT_DOUBLE_EQ(a.mse->sd, 0.0);
    EXPECT_FALSE(a.ssim.has_value());
    EXPECT_EQ(a.trials, 2);
}

TEST(Aggregate, SingleAndFailures) {
    std::vector<TrialReport> r(3);
    r[0].psnr = 12.0;
    r[1].ok = false;
    r[2].psnr = 12.0;
    const AggregateReport a = aggregate(r);
    EXPECT_EQ(a.trials, 2);
    EXPECT_EQ(a.failures, 1);
    EXPECT_EQ(a.psnr->sd, 0.0);
    std::vector<TrialReport> bad(1);
    bad[0].ok = false;
    EXPECT_THROW(aggregate(bad), ArgumentError);
}

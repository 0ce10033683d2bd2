#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "orthoev/evd.hpp"
#include "orthoev/priors.hpp"
#include "orthoev/rng.hpp"

using namespace orthoev;
using boost::math::quadrature::gauss_kronrod;

namespace {

/// Mass of exp(log_density) over (-inf, 1): split at 0, the left half through
/// xi = -t/(1-t), the right half through t = 1/sqrt(1 - xi).
double pc_mass(const PcPriorConfig& cfg) {
    const auto dens = [&](double xi) { return std::exp(pc_log_density(xi, cfg)); };
    const auto left = [&](double t) {
        const double xi = -t / (1.0 - t);
        return dens(xi) / ((1.0 - t) * (1.0 - t));
    };
    const auto right = [&](double t) {
        const double xi = 1.0 - 1.0 / (t * t);
        return dens(xi) * 2.0 / (t * t * t);
    };
    return gauss_kronrod<double, 61>::integrate(left, 0.0, 1.0, 25, 1e-13) +
           gauss_kronrod<double, 61>::integrate(right, 1.0, std::numeric_limits<double>::infinity(), 25, 1e-13);
}

Eigen::Matrix3d fd_jacobian(const OriginalParams& p, const ModelContext& ctx) {
    Eigen::Matrix3d j;
    const double h[3] = {1e-5 * p.sigma, 1e-5 * p.sigma, 1e-5};
    for (int k = 0; k < 3; ++k) {
        double a[3] = {p.mu, p.sigma, p.xi}, b[3] = {p.mu, p.sigma, p.xi};
        a[k] += h[k];
        b[k] -= h[k];
        const auto qa = to_orthogonal({a[0], a[1], a[2]}, ctx);
        const auto qb = to_orthogonal({b[0], b[1], b[2]}, ctx);
        j(0, k) = (qa.r - qb.r) / (2 * h[k]);
        j(1, k) = (qa.nu - qb.nu) / (2 * h[k]);
        j(2, k) = (qa.xi - qb.xi) / (2 * h[k]);
    }
    return j;
}

}  // namespace

TEST(JeffreysOrthogonal, Values) {
    EXPECT_DOUBLE_EQ(log_jeffreys_orthogonal({1, 1, 0}), 0.0);
    EXPECT_NEAR(log_jeffreys_orthogonal({4, 1, 0}), std::log(2.0), 1e-15);
    EXPECT_EQ(log_jeffreys_orthogonal({1, 1, -0.5}), neg_inf);
    EXPECT_EQ(log_jeffreys_orthogonal({1, 1, -0.7}), neg_inf);
}

TEST(JeffreysOrthogonal, DivergesAtHalf) {
    double prev = -INFINITY;
    for (double e : {1e-2, 1e-4, 1e-6}) {
        const double v = log_jeffreys_orthogonal({1, 1, -0.5 + e});
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_GT(prev, 6.0);
}

TEST(JeffreysOriginal, GumbelLimit) {
    const ModelContext ctx{10.0, 1.0};
    const OriginalParams p0{12.0, 2.0, 0.0};
    const double expected = -1.5 * (ctx.u - p0.mu) / p0.sigma - 2.0 * std::log(p0.sigma);
    EXPECT_NEAR(log_jeffreys_original(p0, ctx), expected, 1e-14);
    EXPECT_NEAR(log_jeffreys_original({12.0, 2.0, 1e-7}, ctx), expected, 1e-6);
}

TEST(JeffreysOriginal, ThresholdAtLocation) {
    const ModelContext ctx{5.0, 3.0};
    for (double xi : {-0.3, 0.2, 0.8}) {
        const double expected = -2 * std::log(1.7) - std::log1p(xi) - 0.5 * std::log1p(2 * xi);
        EXPECT_NEAR(log_jeffreys_original({5.0, 1.7, xi}, ctx), expected, 1e-14);
    }
}

TEST(JeffreysOriginal, OutsideSupport) {
    EXPECT_EQ(log_jeffreys_original({0, 1, -0.25}, {10, 1}), neg_inf);
    EXPECT_EQ(log_jeffreys_original({0, -1, 0.2}, {0, 1}), neg_inf);
}

TEST(PcPrior, ValueAtZero) {
    for (double l : {0.5, 1.0, 10.0}) EXPECT_NEAR(pc_log_density(0.0, {l, false}), std::log(l / 2), 1e-15);
}

TEST(PcPrior, UnitLambdaNormalized) { EXPECT_NEAR(pc_mass({1.0, false}), 1.0, 1e-6); }

TEST(PcPrior, UnitLambdaInterval) {
    const auto [lo, hi] = pc_credible_interval(0.95, {1.0, false});
    EXPECT_NEAR(lo, -9.88, 0.02);
    EXPECT_NEAR(hi, 0.90, 0.02);
}

TEST(PcPrior, ZeroAboveOne) {
    EXPECT_EQ(pc_log_density(1.0, {1.0, false}), neg_inf);
    EXPECT_EQ(pc_log_density(3.0, {1.0, false}), neg_inf);
    EXPECT_TRUE(std::isfinite(pc_log_density(3.0, {1.0, true})));
}

TEST(PcPrior, CdfMatchesQuadrature) {
    const PcPriorConfig cfg{3.0, false};
    const auto dens = [&](double xi) { return std::exp(pc_log_density(xi, cfg)); };
    for (double x : {-2.0, -0.3, 0.0, 0.4, 0.9}) {
        const double lower = -60.0;
        const double v = 0.5 * std::exp(cfg.lambda * lower / std::sqrt(1 - lower)) +
                         gauss_kronrod<double, 61>::integrate(dens, lower, x, 20, 1e-12);
        EXPECT_NEAR(pc_cdf(x, cfg), v, 1e-9) << x;
        EXPECT_NEAR(pc_quantile(pc_cdf(x, cfg), cfg), x, 1e-9);
    }
}

TEST(PcDistance, Values) {
    EXPECT_EQ(pc_distance(0.0), 0.0);
    EXPECT_NEAR(pc_distance(0.75), 1.5, 1e-15);
    EXPECT_EQ(pc_distance(1.0), INFINITY);
    EXPECT_LT(pc_distance(-0.2), pc_distance(-0.5));
    EXPECT_LT(pc_distance(0.2), pc_distance(0.5));
}

TEST(PcDistance, DerivativeByFiniteDifference) {
    for (double xi = -2.0; xi <= 0.9; xi += 0.05) {
        const double h = 1e-6;
        const auto signed_d = [](double x) { return x / std::sqrt(1 - x); };
        const double fd = (signed_d(xi + h) - signed_d(xi - h)) / (2 * h);
        EXPECT_NEAR(pc_distance_derivative(xi), fd, 1e-6) << xi;
        EXPECT_NEAR(pc_distance_derivative(xi), (1 - xi / 2) / std::pow(1 - xi, 1.5), 1e-14);
    }
}

TEST(PcDistance, ReproducesDensity) {
    const PcPriorConfig cfg{4.0, false};
    for (double xi = -3.0; xi < 0.95; xi += 0.1) {
        const double v = std::log(cfg.lambda / 2) - cfg.lambda * pc_distance(xi) +
                         std::log(std::abs(pc_distance_derivative(xi)));
        EXPECT_NEAR(pc_log_density(xi, cfg), v, 1e-12);
    }
}

TEST(PcComposite, Values) {
    EXPECT_NEAR(log_pc_composite({1, 1, 0}, {1.0, false}), std::log(0.5), 1e-15);
    EXPECT_EQ(log_pc_composite({1, 2.5, 0.3}, {2.0, false}), log_pc_composite({100, 2.5, 0.3}, {2.0, false}));
    EXPECT_NEAR(log_pc_composite({1, 1, 0}, {10.0, true}), std::log(5.0), 1e-15);
    EXPECT_EQ(log_pc_composite({1, 0, 0}, {1.0, false}), neg_inf);
}

TEST(PriorSpecValidate, PcPresenceMustMatchKind) {
    EXPECT_NO_THROW(PriorSpec::pc_composite(3).validate());
    EXPECT_THROW((PriorSpec{PriorKind::pc_composite, std::nullopt}).validate(), config_error);
    EXPECT_THROW((PriorSpec{PriorKind::flat, PcPriorConfig{}}).validate(), config_error);
    EXPECT_THROW(PriorSpec::pc_composite(-1).validate(), config_error);
}

// ---------------------------------------------------------------------------

TEST(PriorsProperty, PcNormalization) {
    for (double l : {0.5, 1.0, 3.0, 5.0, 10.0, 15.0}) EXPECT_NEAR(pc_mass({l, false}), 1.0, 1e-6) << l;
}

TEST(PriorsProperty, LaplaceIntervalsAnalytic) {
    for (double l : {0.5, 1.0, 3.0, 5.0, 10.0, 15.0}) {
        const auto [lo, hi] = pc_credible_interval(0.95, {l, true});
        EXPECT_NEAR(lo, -std::log(20.0) / l, 1e-10);
        EXPECT_NEAR(hi, std::log(20.0) / l, 1e-10);
    }
}

TEST(PriorsProperty, LaplaceApproximatesForLargeLambda) {
    for (double l : {10.0, 15.0}) {
        double worst = 0.0;
        for (double xi = -0.5; xi <= 0.5; xi += 1e-3) {
            const double a = std::exp(pc_log_density(xi, {l, false}));
            const double b = std::exp(pc_log_density(xi, {l, true}));
            worst = std::max(worst, std::abs(a - b));
        }
        EXPECT_LT(worst / (l / 2), 0.05) << l;
    }
}

TEST(PriorsProperty, JeffreysPushforward) {
    Engine rng = make_engine(3);
    for (int i = 0; i < 100; ++i) {
        const OriginalParams p{-5 + 10 * draw_uniform(rng), 0.5 + 5 * draw_uniform(rng),
                               -0.45 + 1.4 * draw_uniform(rng)};
        const ModelContext ctx{p.mu + p.sigma * (-0.4 + 1.4 * draw_uniform(rng)), 0.5 + 60 * draw_uniform(rng)};
        const double push = log_jeffreys_orthogonal(to_orthogonal(p, ctx)) +
                            std::log(std::abs(fd_jacobian(p, ctx).determinant()));
        ASSERT_NEAR(log_jeffreys_original(p, ctx) + 1.5 * std::log(ctx.m), push, 1e-8) << i;
    }
}

TEST(PriorsProperty, NeverThrowOutsideSupport) {
    const double bad[] = {-2.0, -0.5, 1.0, 5.0, NAN, INFINITY, -INFINITY};
    for (double xi : bad) {
        EXPECT_NO_THROW(log_jeffreys_orthogonal({1, 1, xi}));
        EXPECT_NO_THROW(log_jeffreys_original({0, 1, xi}, {3, 1}));
        EXPECT_NO_THROW(pc_log_density(xi, {1, false}));
        EXPECT_NO_THROW(log_pc_composite({1, -1, xi}, {1, false}));
        EXPECT_NO_THROW(log_jeffreys_gpd_orthogonal(1, xi));
    }
    EXPECT_EQ(log_jeffreys_orthogonal({-1, 1, 0}), neg_inf);
    EXPECT_EQ(log_jeffreys_original({NAN, 1, 0}, {0, 1}), neg_inf);
}

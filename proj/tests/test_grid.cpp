#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hmcurv/grid.hpp"

using namespace hmcurv;
using std::numbers::pi;

namespace {

template <int N>
double max_gradient_error(const SphereGrid<N>& grid, auto field, auto exact, auto keep)
{
    const ScalarField f = ScalarField::sample(grid, field);
    const Gradient<N> g = covariant_gradient(grid, f);
    double err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (keep(grid.node(k)))
            err = std::max(err, (g.covector[k] - exact(grid.node(k))).cwiseAbs().maxCoeff());
    return err;
}

template <int N>
double max_hessian_error(const SphereGrid<N>& grid, auto field, auto exact)
{
    const ScalarField f = ScalarField::sample(grid, field);
    const auto h = covariant_hessian(grid, f);
    double err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        err = std::max(err, (h[k] - exact(grid.node(k))).cwiseAbs().maxCoeff());
    return err;
}

} // namespace

TEST(BuildGrid, CircleHasFlatMetric)
{
    const SphereGrid<1> grid(16);
    ASSERT_EQ(grid.size(), 16u);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_EQ(grid.metric(k)(0, 0), 1.0);
        EXPECT_EQ(grid.christoffel(k)[0](0, 0), 0.0);
        EXPECT_NEAR(grid.node(k)[0], 2.0 * pi * k / 16, 1e-15);
    }
}

TEST(BuildGrid, SphereMetricAtEquatorAndMidLatitude)
{
    const SphereGrid<2> grid(32);
    EXPECT_EQ(grid.size(), 32u * 64u);
    const auto e = SphereGrid<2>::metric_at({pi / 2, 0.3});
    EXPECT_NEAR(e(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(e(1, 1), 1.0, 1e-15);
    EXPECT_EQ(e(0, 1), 0.0);
    EXPECT_NEAR(SphereGrid<2>::christoffel_at({pi / 2, 0.0})[0](1, 1), 0.0, 1e-15);
    EXPECT_NEAR(SphereGrid<2>::metric_at({pi / 4, 0.0})(1, 1), 0.5, 1e-15);
}

TEST(BuildGrid, PolarOffsetRings)
{
    const SphereGrid<2> grid(16);
    const double h = pi / 16;
    EXPECT_NEAR(grid.node(grid.index(0, 0))[0], 0.5 * h, 1e-15);
    EXPECT_NEAR(grid.node(grid.index(15, 0))[0], pi - 0.5 * h, 1e-15);
    EXPECT_EQ(grid.n_phi(), 32);
    // row-major: theta outer, phi inner
    EXPECT_NEAR(grid.node(grid.index(3, 5))[1], 5 * 2 * pi / 32, 1e-15);
    EXPECT_EQ(grid.index(3, 5), 3u * 32u + 5u);
}

TEST(BuildGrid, Errors)
{
    EXPECT_THROW(SphereGrid<1>(7), Error);
    try {
        (void)build_grid(3, 16);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedDimension);
    }
    try {
        (void)build_grid(2, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionTooSmall);
    }
    EXPECT_TRUE(std::holds_alternative<SphereGrid<2>>(build_grid(2, 8)));
}

TEST(BuildGrid, MetricInvariants)
{
    const SphereGrid<2> grid(24);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& e = grid.metric(k);
        EXPECT_EQ(e(0, 1), e(1, 0));
        EXPECT_GT(e.determinant(), 0.0);
        EXPECT_LT((grid.metric_inverse(k) * e - Eigen::Matrix2d::Identity()).norm(), 1e-14);
        int nonzero = 0;
        for (const auto& g : grid.christoffel(k))
            nonzero += static_cast<int>((g.array() != 0.0).count());
        EXPECT_EQ(nonzero, 3);
    }
}

TEST(BuildGrid, QuadratureWeightsIntegrateArea)
{
    const SphereGrid<2> grid(32);
    double area = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        area += grid.weight(k);
    EXPECT_NEAR(area, 4.0 * pi, 1e-2);
    const SphereGrid<1> circle(32);
    EXPECT_NEAR(circle.l2_norm(ScalarField(circle.size(), 1.0)), std::sqrt(2.0 * pi), 1e-13);
}

TEST(Derivatives, ConstantFieldHasZeroDerivatives)
{
    const SphereGrid<2> grid(16);
    const ScalarField f(grid.size(), 3.5);
    const auto g = covariant_gradient(grid, f);
    const auto h = covariant_hessian(grid, f);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_LT(g.covector[k].cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(h[k].cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Derivatives, CircleGradientOfCosine)
{
    auto field = [](const std::array<double, 1>& u) { return std::cos(u[0]); };
    std::vector<double> err;
    for (int res : {32, 64, 128}) {
        const SphereGrid<1> grid(res);
        const ScalarField f = ScalarField::sample(grid, field);
        const auto g = covariant_gradient(grid, f);
        EXPECT_NEAR(g.covector[0](0), 0.0, 1e-15); // critical point at theta = 0
        const std::size_t quarter = static_cast<std::size_t>(res / 4);
        err.push_back(std::abs(g.covector[quarter](0) + 1.0));
        EXPECT_EQ(g.vector[quarter](0), g.covector[quarter](0));
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(Derivatives, CircleHessianOfCos2)
{
    std::vector<double> err;
    for (int res : {32, 64, 128}) {
        const SphereGrid<1> grid(res);
        const ScalarField f = ScalarField::sample(grid, [](const auto& u) { return std::cos(2.0 * u[0]); });
        const double hxx = covariant_hessian(grid, f)[0](0, 0);
        const double h = grid.spacing()[0];
        // three-point symbol of d^2 on cos(2x)
        EXPECT_NEAR(hxx, -4.0 * std::pow(std::sin(h), 2) / (h * h), 1e-9);
        err.push_back(std::abs(hxx + 4.0));
    }
    EXPECT_LT(err[2], 4e-3);
    EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(Derivatives, SphereHessianOfCosTheta)
{
    // v = cos(theta): v_theta = -sin, Hess_thth = -cos, Hess_phph = -sin^2 cos, Hess_thph = 0
    auto field = [](const std::array<double, 2>& u) { return std::cos(u[0]); };
    auto exact = [](const std::array<double, 2>& u) {
        Eigen::Matrix2d h;
        h << -std::cos(u[0]), 0.0, 0.0, -std::sin(u[0]) * std::sin(u[0]) * std::cos(u[0]);
        return h;
    };
    const double e1 = max_hessian_error(SphereGrid<2>(16), field, exact);
    const double e2 = max_hessian_error(SphereGrid<2>(32), field, exact);
    EXPECT_LT(e2, 1e-5);
    EXPECT_GE(e1 / e2, 3.5);
}

TEST(Derivatives, ConvergenceThroughThePoles)
{
    // x = sin(theta) cos(phi) is smooth across both poles.
    auto field = [](const std::array<double, 2>& u) { return std::sin(u[0]) * std::cos(u[1]); };
    auto grad = [](const std::array<double, 2>& u) {
        return Eigen::Vector2d(std::cos(u[0]) * std::cos(u[1]), -std::sin(u[0]) * std::sin(u[1]));
    };
    auto all = [](const auto&) { return true; };
    for (int order : {2, 4}) {
        const double e1 = max_gradient_error(SphereGrid<2>(16, order), field, grad, all);
        const double e2 = max_gradient_error(SphereGrid<2>(32, order), field, grad, all);
        EXPECT_GE(std::log2(e1 / e2), 1.9) << "order " << order;
    }
}

TEST(Derivatives, SecondOrderStencilsAwayFromPoles)
{
    auto field = [](const std::array<double, 2>& u) {
        return std::sin(u[0]) * std::cos(u[1]) + 0.5 * std::cos(u[0]) * std::cos(u[0]);
    };
    auto exact = [](const std::array<double, 2>& u) {
        const double s = std::sin(u[0]), c = std::cos(u[0]);
        // f = s cos(phi) + c^2 / 2
        const double f_t = c * std::cos(u[1]) - s * c;
        const double f_tt = -s * std::cos(u[1]) - (c * c - s * s);
        const double f_p = -s * std::sin(u[1]);
        const double f_pp = -s * std::cos(u[1]);
        const double f_tp = -c * std::sin(u[1]);
        Eigen::Matrix2d h;
        h(0, 0) = f_tt;
        h(0, 1) = h(1, 0) = f_tp - (c / s) * f_p;
        h(1, 1) = f_pp + s * c * f_t;
        return h;
    };
    std::vector<double> err;
    for (int res : {16, 32, 64}) {
        const SphereGrid<2> grid(res, 2);
        const ScalarField f = ScalarField::sample(grid, field);
        const auto h = covariant_hessian(grid, f);
        double e = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double th = grid.node(k)[0];
            if (th > pi / 4 && th < 3 * pi / 4)
                e = std::max(e, (h[k] - exact(grid.node(k))).cwiseAbs().maxCoeff());
        }
        err.push_back(e);
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(Derivatives, HessianIsExactlySymmetric)
{
    const SphereGrid<2> grid(16);
    const ScalarField f = ScalarField::sample(grid, [](const auto& u) {
        return std::exp(std::sin(u[0]) * std::cos(u[1])) + std::cos(u[0]) * std::sin(2 * u[1]);
    });
    for (const auto& h : covariant_hessian(grid, f))
        EXPECT_EQ(h(0, 1), h(1, 0));
}

TEST(Derivatives, FirstEigenfunctionLaplacian)
{
    // trace_e Hess(v) = -n v for first spherical harmonics
    const SphereGrid<1> circle(64);
    const ScalarField c = ScalarField::sample(circle, [](const auto& u) { return std::cos(u[0]); });
    const auto hc = covariant_hessian(circle, c);
    for (std::size_t k = 0; k < circle.size(); ++k)
        EXPECT_NEAR(hc[k](0, 0), -c[k], 2e-3);

    const SphereGrid<2> sphere(32);
    const ScalarField x = ScalarField::sample(sphere, [](const auto& u) { return std::sin(u[0]) * std::cos(u[1]); });
    const auto hx = covariant_hessian(sphere, x);
    for (std::size_t k = 0; k < sphere.size(); ++k) {
        const double lap = (sphere.metric_inverse(k) * hx[k]).trace();
        EXPECT_NEAR(lap, -2.0 * x[k], 1e-4);
    }
}

TEST(ScalarFieldTest, Basics)
{
    ScalarField f(4, 1.0);
    EXPECT_TRUE(f.all_finite());
    f[2] = -3.0;
    EXPECT_EQ(sup_norm(f), 3.0);
    f[1] = std::nan("");
    EXPECT_FALSE(f.all_finite());
}

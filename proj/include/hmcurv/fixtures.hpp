#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hmcurv/errors.hpp"
#include "hmcurv/expr.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/space_form.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

/// Smooth random perturbation of the sphere of radius R.
///
/// N = 1: R + sum_{k=1..3} (a_k cos k theta + b_k sin k theta).
/// N = 2: R + a cubic polynomial in the ambient coordinates (x, y, w) of the unit sphere,
/// which is smooth through the poles.
template <int N>
class RandomSurface {
public:
    RandomSurface(double radius, double amplitude, std::uint64_t seed) : radius_(radius)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        const std::size_t count = N == 1 ? 6 : 19;
        double norm = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            coeffs_.push_back(coef(rng));
            norm += std::abs(coeffs_.back());
        }
        for (double& c : coeffs_)
            c *= amplitude / norm;
    }

    double radius() const noexcept { return radius_; }

    double operator()(const std::array<double, N>& u) const
    {
        double z = radius_;
        if constexpr (N == 1) {
            for (int k = 1; k <= 3; ++k)
                z += coeffs_[2 * (k - 1)] * std::cos(k * u[0]) + coeffs_[2 * k - 1] * std::sin(k * u[0]);
        } else {
            const double x = std::sin(u[0]) * std::cos(u[1]);
            const double y = std::sin(u[0]) * std::sin(u[1]);
            const double w = std::cos(u[0]);
            const double mono[19] = {x,         y,         w,         x * x,     y * y,     w * w,     x * y,
                                     x * w,     y * w,     x * x * x, y * y * y, w * w * w, x * x * y, x * x * w,
                                     y * y * x, y * y * w, w * w * x, w * w * y, x * y * w};
            for (int i = 0; i < 19; ++i)
                z += coeffs_[i] * mono[i];
        }
        return z;
    }

    RadialGraph<N> sample(GridPtr<N> grid, const SpaceForm& form) const
    {
        return RadialGraph<N>{grid, form, ScalarField::sample(*grid, *this)};
    }

private:
    double radius_;
    std::vector<double> coeffs_;
};

namespace detail {

struct SymMat2 {
    Expression a00, a01, a11;
};

} // namespace detail

/// Symbolic H_m = S_m / C(n, m) of the radial graph rho = z(u), as an expression in theta (and phi).
inline Expression graph_mean_curvature_expression(const Expression& z, const SpaceForm& form, int n, int m)
{
    if (n != 1 && n != 2)
        throw Error(ErrorCode::UnsupportedDimension, "graph curvature expression: n must be 1 or 2");
    if (m < 1 || m > n)
        throw Error(ErrorCode::DomainError, "graph curvature expression: order m must satisfy 1 <= m <= n");
    if (z.depends_on(Var::Rho) || (n == 1 && z.depends_on(Var::Phi)))
        throw Error(ErrorCode::DomainError, "graph curvature expression: z must depend on the angles only");
    using E = Expression;
    const bool hyp = form.is_hyperbolic();
    const E s = apply(hyp ? Func::Sinh : Func::Sin, z);
    const E c = apply(hyp ? Func::Cosh : Func::Cos, z);
    const E one = E::constant(1.0);
    const E th = E::variable(Var::Theta);

    if (n == 1) {
        const E z1 = z.derivative(Var::Theta);
        const E z2 = z1.derivative(Var::Theta);
        const E f = s * s;
        const E g = f + z1 * z1;
        const E b = s / apply(Func::Sqrt, g) * (-z2 + E::constant(2.0) * c / s * z1 * z1 + s * c);
        return b / g;
    }

    const E zt = z.derivative(Var::Theta);
    const E zp = z.derivative(Var::Phi);
    const E sin_t = apply(Func::Sin, th);
    const E cos_t = apply(Func::Cos, th);
    const E e11 = sin_t * sin_t;
    const E h00 = zt.derivative(Var::Theta);
    const E h01 = zt.derivative(Var::Phi) - cos_t / sin_t * zp;
    const E h11 = zp.derivative(Var::Phi) + sin_t * cos_t * zt;
    const E f = s * s;
    const E grad_sq = zt * zt + zp * zp / e11;
    const E kappa = s / apply(Func::Sqrt, f + grad_sq);
    const E ratio = E::constant(2.0) * c / s;
    const E half_df = s * c;
    const detail::SymMat2 g{f + zt * zt, zt * zp, f * e11 + zp * zp};
    const detail::SymMat2 b{kappa * (-h00 + ratio * zt * zt + half_df), kappa * (-h01 + ratio * zt * zp),
                            kappa * (-h11 + ratio * zp * zp + half_df * e11)};
    const E det_g = g.a00 * g.a11 - g.a01 * g.a01;
    // a = g^{-1} b with g^{-1} = adj(g) / det g
    const E a00 = (g.a11 * b.a00 - g.a01 * b.a01) / det_g;
    const E a01 = (g.a11 * b.a01 - g.a01 * b.a11) / det_g;
    const E a10 = (g.a00 * b.a01 - g.a01 * b.a00) / det_g;
    const E a11 = (g.a00 * b.a11 - g.a01 * b.a01) / det_g;
    if (m == 1)
        return (a00 + a11) / E::constant(2.0);
    return a00 * a11 - a01 * a10;
}

/// Prescription with known solution z*: psi = H_m(z*) (w(z*) / w(rho)) exp(-eps (rho - z*)).
/// psi w is strictly decreasing in rho for eps > 0, and z = z* solves the equation exactly.
inline PsiSpec manufactured_psi(const std::string& z_star, double eps, const SpaceForm& form, int n, int m,
                                double R1, double R2)
{
    using E = Expression;
    const E z = E::parse(z_star);
    const E rho = E::variable(Var::Rho);
    const E mm = E::constant(m);
    const Func wf = form.is_hyperbolic() ? Func::Sinh : Func::Tan;
    const E weight = pow(apply(wf, z), mm) / pow(apply(wf, rho), mm);
    const E expr = graph_mean_curvature_expression(z, form, n, m) * weight * apply(Func::Exp, -E::constant(eps) * (rho - z));
    return PsiSpec(expr, form, n, m, R1, R2, "manufactured(" + z_star + ", " + std::to_string(eps) + ")");
}

/// Samples a closed-form z(theta, phi) onto the grid.
template <int N>
RadialGraph<N> sample_expression(GridPtr<N> grid, const SpaceForm& form, const std::string& z_expr)
{
    const Expression z = Expression::parse(z_expr);
    if (z.depends_on(Var::Rho))
        throw Error(ErrorCode::DomainError, "z expression must not depend on rho");
    return RadialGraph<N>{grid, form, ScalarField::sample(*grid, [&](const std::array<double, N>& u) {
                              Bindings b;
                              b.theta = u[0];
                              if constexpr (N > 1)
                                  b.phi = u[1];
                              return z(b);
                          })};
}

} // namespace hmcurv

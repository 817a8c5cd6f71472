#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "hmcurv/errors.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

struct ScalingFit {
    double c = 1.0;
    double residual = 0.0;  ///< sup |c tanh(z1/2) - tanh(z2/2)|
    double ratio_min = 1.0;
    double ratio_max = 1.0;
    double spread = 1.0;    ///< ratio_max / ratio_min
    double tolerance = 0.0;
    bool related = false;
    bool identical = false;
};

/// Fits c tanh(z1/2) = tanh(z2/2) by the median nodal ratio. For an even node count the
/// median is the geometric mean of the two middle ratios, which makes fit(z1, z2).c and
/// fit(z2, z1).c exact reciprocals.
template <int N>
ScalingFit fit_scaling_constant(const RadialGraph<N>& z1, const RadialGraph<N>& z2, double tolerance)
{
    if (!(z1.grid->same_layout(*z2.grid)) || z1.z.size() != z2.z.size() || !(z1.form == z2.form))
        throw Error(ErrorCode::GridMismatch, "fit_scaling_constant: graphs live on different grids");
    if (!z1.form.is_hyperbolic())
        throw Error(ErrorCode::DomainError, "fit_scaling_constant: the scaling relation is only defined for K = -1");
    if (!(tolerance > 0.0))
        throw Error(ErrorCode::ConfigError, "fit_scaling_constant: tolerance must be positive");

    const std::size_t n = z1.z.size();
    std::vector<double> t1(n), t2(n), ratio(n);
    for (std::size_t k = 0; k < n; ++k) {
        t1[k] = std::tanh(0.5 * z1.z[k]);
        t2[k] = std::tanh(0.5 * z2.z[k]);
        if (!(t1[k] > 0.0 && t2[k] > 0.0))
            throw Error(ErrorCode::NonPositiveRadius, "fit_scaling_constant: radii must be positive");
        ratio[k] = t2[k] / t1[k];
    }
    std::vector<double> sorted = ratio;
    std::sort(sorted.begin(), sorted.end());

    ScalingFit fit;
    fit.tolerance = tolerance;
    fit.c = n % 2 == 1 ? sorted[n / 2] : std::sqrt(sorted[n / 2 - 1] * sorted[n / 2]);
    fit.ratio_min = sorted.front();
    fit.ratio_max = sorted.back();
    fit.spread = fit.ratio_max / fit.ratio_min;
    for (std::size_t k = 0; k < n; ++k)
        fit.residual = std::max(fit.residual, std::abs(fit.c * t1[k] - t2[k]));
    fit.related = fit.residual <= tolerance;
    fit.identical = fit.related && std::abs(fit.c - 1.0) <= tolerance;
    return fit;
}

enum class Boundary { Inner, Outer };

struct BoundaryTouchReport {
    std::size_t node = 0;
    double radius = 0.0;
    double mu = 0.0;  ///< f'(R) / (2 f(R))
    double gradient_norm = 0.0;
    std::vector<double> s;
    std::vector<double> direct;       ///< S_m of the interpolated graph at the node
    std::vector<double> interpolated; ///< sum_p (1-s)^p (mu s)^(m-p) S_p, with S_0 = C(n, m)
    double max_discrepancy = 0.0;
    bool positive = false;
};

/// Interpolates z(s) = (1 - s) z + s R toward the touched boundary sphere and compares S_m at
/// the touching node with the polynomial expansion in s. u0 must be a discrete maximum
/// (Outer) or minimum (Inner) with z(u0) = R and vanishing discrete gradient.
template <int N>
BoundaryTouchReport boundary_touch_identity(const RadialGraph<N>& graph, int m, Boundary side, double radius,
                                            std::size_t u0, const std::vector<double>& s_values,
                                            double boundary_tolerance = 1e-10, double gradient_tolerance = 1e-8)
{
    const auto& grid = *graph.grid;
    if (m < 1 || m > N)
        throw Error(ErrorCode::ConfigError, "boundary_touch_identity: order m must satisfy 1 <= m <= n");
    if (u0 >= grid.size())
        throw Error(ErrorCode::OutOfRange, "boundary_touch_identity: node index out of range");
    if (std::abs(graph.z[u0] - radius) > boundary_tolerance)
        throw Error(ErrorCode::NotAtBoundary, "boundary_touch_identity: z(u0) does not touch the boundary sphere");
    for (double z : graph.z) {
        const bool beyond = side == Boundary::Outer ? z > graph.z[u0] : z < graph.z[u0];
        if (beyond)
            throw Error(ErrorCode::NotAtMaximum, "boundary_touch_identity: u0 is not a discrete extremum");
    }
    const NodeJet<N> jet = grid.jet(graph.z, u0);
    BoundaryTouchReport rep;
    rep.node = u0;
    rep.radius = radius;
    rep.gradient_norm = std::sqrt(jet.dv.dot(grid.metric_inverse(u0) * jet.dv));
    if (rep.gradient_norm > gradient_tolerance)
        throw Error(ErrorCode::NotAtMaximum, "boundary_touch_identity: discrete gradient does not vanish at u0");

    const SpaceForm& form = graph.form;
    rep.mu = form.df(radius) / (2.0 * form.f(radius));
    const ShapeData<N> base = compute_shape(graph);
    std::vector<double> S(N + 1);
    for (int p = 1; p <= N; ++p)
        S[p] = principal_minor_sum(base.a[u0], p);
    S[0] = static_cast<double>(binomial(N, m));

    rep.positive = true;
    for (double s : s_values) {
        RadialGraph<N> zs = graph;
        for (double& z : zs.z.values)
            z = (1.0 - s) * z + s * radius;
        const ShapeData<N> shape = compute_shape(zs);
        const double direct = principal_minor_sum(shape.a[u0], m);
        double expansion = 0.0;
        for (int p = 0; p <= m; ++p)
            expansion += std::pow(1.0 - s, p) * std::pow(rep.mu * s, m - p) * S[p];
        rep.s.push_back(s);
        rep.direct.push_back(direct);
        rep.interpolated.push_back(expansion);
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(direct - expansion));
        rep.positive = rep.positive && direct > 0.0;
    }
    return rep;
}

/// Node of the discrete maximum (Outer) or minimum (Inner); the first one on ties.
template <int N>
std::size_t extremal_node(const RadialGraph<N>& graph, Boundary side)
{
    const auto& z = graph.z.values;
    const auto it = side == Boundary::Outer ? std::max_element(z.begin(), z.end()) : std::min_element(z.begin(), z.end());
    return static_cast<std::size_t>(it - z.begin());
}

} // namespace hmcurv

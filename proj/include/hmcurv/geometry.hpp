#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmcurv/errors.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/space_form.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

template <int N>
using GridPtr = std::shared_ptr<const SphereGrid<N>>;

/// Radial graph (u, z(u)) over S^N in a space form; z in geodesic-distance units.
template <int N>
struct RadialGraph {
    GridPtr<N> grid;
    SpaceForm form;
    ScalarField z;

    RadialGraph(GridPtr<N> g, SpaceForm f, ScalarField values)
        : grid(std::move(g)), form(f), z(std::move(values))
    {
        if (!grid || z.size() != grid->size())
            throw Error(ErrorCode::DomainError, "radial graph: field size does not match grid");
        if (!z.all_finite())
            throw Error(ErrorCode::DomainError, "radial graph: non-finite radius");
    }

    /// Throws NonPositiveRadius / RadiusOutOfRange unless 0 < z < a everywhere.
    void validate_range() const
    {
        const double a = form.upper_radius();
        for (std::size_t k = 0; k < z.size(); ++k) {
            if (!(z[k] > 0.0))
                throw Error(ErrorCode::NonPositiveRadius, "z <= 0 at node " + std::to_string(k));
            if (!(z[k] < a))
                throw Error(ErrorCode::RadiusOutOfRange, "z >= a at node " + std::to_string(k));
        }
    }
};

/// Per-node extrinsic data of a radial graph.
template <int N>
struct ShapeData {
    using Vec = Eigen::Matrix<double, N, 1>;
    using Mat = Eigen::Matrix<double, N, N>;

    std::vector<Mat> g;
    std::vector<Mat> g_inv;
    std::vector<Mat> b;
    std::vector<Mat> a;
    std::vector<Vec> lambda;
    std::vector<std::vector<double>> S;

    std::size_t size() const noexcept { return g.size(); }
};

template <int N>
struct NodeForms {
    Eigen::Matrix<double, N, N> g;
    Eigen::Matrix<double, N, N> g_inv;
    Eigen::Matrix<double, N, N> b;
    double grad_sq; ///< |nabla' z|^2 in the round metric
};

/// Induced metric, its closed-form inverse and the inner-normal second fundamental form
/// at one point, from z, z_i and nabla'_ij z.
template <int N>
NodeForms<N> node_forms(const SpaceForm& form, const Eigen::Matrix<double, N, N>& e,
                        const Eigen::Matrix<double, N, N>& e_inv, double z, const Eigen::Matrix<double, N, 1>& dz,
                        const Eigen::Matrix<double, N, N>& hz)
{
    const double f = form.f(z);
    const double df = form.df(z);
    const Eigen::Matrix<double, N, 1> up = e_inv * dz;
    const double grad_sq = dz.dot(up);
    const Eigen::Matrix<double, N, N> zz = dz * dz.transpose();
    NodeForms<N> out;
    out.grad_sq = grad_sq;
    out.g = f * e + zz;
    out.g_inv = (e_inv - up * up.transpose() / (f + grad_sq)) / f;
    out.b = f / std::sqrt(f * f + f * grad_sq) * (-hz + (df / f) * zz + 0.5 * df * e);
    return out;
}

/// g, g^{-1} and b at every node.
template <int N>
ShapeData<N> fundamental_forms(const RadialGraph<N>& graph)
{
    graph.validate_range();
    const auto& grid = *graph.grid;
    ShapeData<N> out;
    out.g.reserve(grid.size());
    out.g_inv.reserve(grid.size());
    out.b.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const NodeJet<N> j = grid.jet(graph.z, k);
        const NodeForms<N> nf =
            node_forms<N>(graph.form, grid.metric(k), grid.metric_inverse(k), j.value, j.dv, j.hess);
        out.g.push_back(nf.g);
        out.g_inv.push_back(nf.g_inv);
        out.b.push_back(nf.b);
    }
    return out;
}

/// a^i_j = g^{ik} b_kj.
template <int N>
std::vector<Eigen::Matrix<double, N, N>> shape_operator(const ShapeData<N>& shape)
{
    std::vector<Eigen::Matrix<double, N, N>> a;
    a.reserve(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k)
        a.push_back(shape.g_inv[k] * shape.b[k]);
    return a;
}

/// Generalized eigenvalues of (b, g), ascending.
template <int N>
std::vector<Eigen::Matrix<double, N, 1>> principal_curvatures(const ShapeData<N>& shape)
{
    std::vector<Eigen::Matrix<double, N, 1>> out;
    out.reserve(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k)
        out.push_back(generalized_eigenvalues<N>(shape.b[k], shape.g[k]));
    return out;
}

template <int N>
std::span<const double> as_span(const Eigen::Matrix<double, N, 1>& v)
{
    return {v.data(), static_cast<std::size_t>(N)};
}

/// Fills every field of ShapeData.
template <int N>
ShapeData<N> compute_shape(const RadialGraph<N>& graph)
{
    ShapeData<N> shape = fundamental_forms(graph);
    shape.a = shape_operator(shape);
    shape.lambda = principal_curvatures(shape);
    shape.S.reserve(shape.size());
    for (const auto& l : shape.lambda)
        shape.S.push_back(elementary_symmetric(as_span<N>(l)));
    return shape;
}

struct Admissibility {
    std::vector<char> node_ok;
    std::vector<std::size_t> offending;
    bool all = true;
};

/// lambda in Gamma_m iff S_j(lambda) > 0 for 1 <= j <= m.
inline bool in_gamma_cone(std::span<const double> S, int m)
{
    for (int j = 1; j <= m; ++j)
        if (!(S[j] > 0.0))
            return false;
    return true;
}

template <int N>
Admissibility is_m_admissible(const ShapeData<N>& shape, int m)
{
    Admissibility out;
    out.node_ok.resize(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
        const bool ok = in_gamma_cone(shape.S[k], m);
        out.node_ok[k] = ok;
        if (!ok)
            out.offending.push_back(k);
    }
    out.all = out.offending.empty();
    return out;
}

struct ResidualResult {
    ScalarField residual;
    bool admissible = true;
    std::vector<std::size_t> offending; ///< nodes outside Gamma_m
};

/// F_m(a(z)) - C(n,m) psi(u, z). Admissibility is reported, not enforced.
template <int N>
ResidualResult hm_residual(const RadialGraph<N>& graph, const PsiSpec& psi, int m)
{
    const ShapeData<N> shape = compute_shape(graph);
    const Admissibility adm = is_m_admissible(shape, m);
    ResidualResult out;
    out.residual = ScalarField(shape.size(), 0.0);
    for (std::size_t k = 0; k < shape.size(); ++k)
        out.residual[k] =
            principal_minor_sum(shape.a[k], m) - psi.bar(graph.grid->node(k), graph.z[k]);
    out.admissible = adm.all;
    out.offending = adm.offending;
    return out;
}

} // namespace hmcurv

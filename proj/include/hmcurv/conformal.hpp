#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmcurv/errors.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/space_form.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

/// The graph in conformal-ball form, v = t(z/2), 0 < v < 1.
template <int N>
struct ConformalGraph {
    GridPtr<N> grid;
    SpaceForm form;
    ScalarField v;

    ConformalGraph(GridPtr<N> g, SpaceForm f, ScalarField values) : grid(std::move(g)), form(f), v(std::move(values))
    {
        if (!grid || v.size() != grid->size())
            throw Error(ErrorCode::DomainError, "conformal graph: field size does not match grid");
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!(v[k] > 0.0 && v[k] < 1.0))
                throw Error(ErrorCode::OutOfRange, "conformal value outside (0,1) at node " + std::to_string(k));
    }
};

template <int N>
ConformalGraph<N> to_conformal(const RadialGraph<N>& graph)
{
    graph.validate_range();
    ScalarField v(graph.z.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = graph.form.to_conformal(graph.z[k]);
    return ConformalGraph<N>(graph.grid, graph.form, std::move(v));
}

template <int N>
RadialGraph<N> from_conformal(const ConformalGraph<N>& cg)
{
    ScalarField z(cg.v.size(), 0.0);
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!(cg.v[k] > 0.0 && cg.v[k] < 1.0))
            throw Error(ErrorCode::OutOfRange, "conformal value outside (0,1) at node " + std::to_string(k));
        z[k] = cg.form.from_conformal(cg.v[k]);
    }
    return RadialGraph<N>(cg.grid, cg.form, std::move(z));
}

/// Everything the conformal formulas produce at one point.
template <int N>
struct ConformalNode {
    using Mat = Eigen::Matrix<double, N, N>;
    Mat g_hat;
    Mat g_hat_inv;
    Mat b_hat;
    Mat a_hat;
    Mat a;
    Mat g; ///< q^2 g_hat
    Mat b; ///< q b_hat - K q^2 v^2 g_hat / W
    double q;
    double W;
};

template <int N>
ConformalNode<N> conformal_node(int K, const Eigen::Matrix<double, N, N>& e, const Eigen::Matrix<double, N, N>& e_inv,
                                double v, const Eigen::Matrix<double, N, 1>& dv,
                                const Eigen::Matrix<double, N, N>& hv)
{
    using Mat = Eigen::Matrix<double, N, N>;
    const Eigen::Matrix<double, N, 1> up = e_inv * dv;
    const double v2 = v * v;
    const double W2 = v2 + dv.dot(up);
    const Mat vv = dv * dv.transpose();
    ConformalNode<N> out;
    out.W = std::sqrt(W2);
    out.q = 2.0 / (1.0 + K * v2);
    out.g_hat = v2 * e + vv;
    out.g_hat_inv = (e_inv - up * up.transpose() / W2) / v2;
    out.b_hat = (-v * hv + 2.0 * vv + v2 * e) / out.W;
    out.a_hat = out.g_hat_inv * out.b_hat;
    out.a = out.a_hat / out.q - (K * v2 / out.W) * Mat::Identity();
    out.g = out.q * out.q * out.g_hat;
    out.b = out.q * out.b_hat - (K * out.q * out.q * v2 / out.W) * out.g_hat;
    return out;
}

template <int N>
ConformalNode<N> conformal_node_at(const ConformalGraph<N>& cg, std::size_t k)
{
    const auto& grid = *cg.grid;
    const NodeJet<N> j = grid.jet(cg.v, k);
    return conformal_node<N>(cg.form.K(), grid.metric(k), grid.metric_inverse(k), j.value, j.dv, j.hess);
}

template <int N>
struct ConformalShape {
    std::vector<Eigen::Matrix<double, N, N>> a_hat;
    std::vector<Eigen::Matrix<double, N, N>> a;
};

template <int N>
ConformalShape<N> conformal_shape_operator(const ConformalGraph<N>& cg)
{
    ConformalShape<N> out;
    for (std::size_t k = 0; k < cg.grid->size(); ++k) {
        const ConformalNode<N> c = conformal_node_at(cg, k);
        out.a_hat.push_back(c.a_hat);
        out.a.push_back(c.a);
    }
    return out;
}

/// Principal curvatures through the conformal formulas, as eigenvalues of (b, g).
template <int N>
std::vector<Eigen::Matrix<double, N, 1>> conformal_curvatures(const ConformalGraph<N>& cg)
{
    std::vector<Eigen::Matrix<double, N, 1>> out;
    out.reserve(cg.grid->size());
    for (std::size_t k = 0; k < cg.grid->size(); ++k) {
        const ConformalNode<N> c = conformal_node_at(cg, k);
        out.push_back(generalized_eigenvalues<N>(c.b, c.g));
    }
    return out;
}

template <int N>
std::vector<std::vector<double>> conformal_symmetric(const ConformalGraph<N>& cg)
{
    std::vector<std::vector<double>> out;
    for (const auto& l : conformal_curvatures(cg))
        out.push_back(elementary_symmetric(as_span<N>(l)));
    return out;
}

struct ScaleCoefficients {
    double s;
    std::vector<double> A;
    std::vector<double> B;
};

/// A(sv) = (1 + K s^2 v^2) / (s (1 + K v^2)),  B(sv) = K (1 - s^2) v^2 / (s (1 + K v^2) W(v)).
template <int N>
ScaleCoefficients scale_coefficients(const ConformalGraph<N>& cg, double s)
{
    const int K = cg.form.K();
    ScaleCoefficients out{s, {}, {}};
    for (std::size_t k = 0; k < cg.grid->size(); ++k) {
        const double v = cg.v[k];
        if (!(s > 0.0 && s * v < 1.0))
            throw Error(ErrorCode::ScaleOutOfRange, "s v must lie in (0,1); fails at node " + std::to_string(k));
        const NodeJet<N> j = cg.grid->jet(cg.v, k);
        const double W = std::sqrt(v * v + j.dv.dot(cg.grid->metric_inverse(k) * j.dv));
        const double den = s * (1.0 + K * v * v);
        out.A.push_back((1.0 + K * s * s * v * v) / den);
        out.B.push_back(K * (1.0 - s * s) * v * v / (den * W));
    }
    return out;
}

namespace detail {

// Fits S_m(lambda + t 1) = sum_j c_j t^{m-j} S_j(lambda) on random positive lambda by a
// Vandermonde solve in t, and reads c_j off the polynomial coefficients.
inline std::vector<double> fit_expansion_coefficients(int n, int m)
{
    constexpr int trials = 3;
    std::mt19937_64 rng(0x5eedULL + 131ULL * n + m);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    std::vector<std::vector<double>> fits;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> lambda(n);
        for (double& x : lambda)
            x = dist(rng);
        const std::vector<double> S = elementary_symmetric(lambda);
        Eigen::MatrixXd V(m + 1, m + 1);
        Eigen::VectorXd rhs(m + 1);
        for (int k = 0; k <= m; ++k) {
            const double t = k;
            std::vector<double> shifted = lambda;
            for (double& x : shifted)
                x += t;
            rhs(k) = elementary_symmetric(shifted)[m];
            for (int i = 0; i <= m; ++i)
                V(k, i) = std::pow(t, i);
        }
        const Eigen::VectorXd p = V.fullPivLu().solve(rhs);
        std::vector<double> c(m + 1);
        for (int j = 0; j <= m; ++j)
            c[j] = p(m - j) / S[j];
        fits.push_back(c);
    }
    std::vector<double> out(m + 1, 0.0);
    for (int j = 0; j <= m; ++j) {
        for (const auto& f : fits) {
            if (std::abs(f[j] - fits[0][j]) > 1e-8 * std::max(1.0, std::abs(fits[0][j])))
                throw Error(ErrorCode::DomainError, "expansion coefficients are not constant in lambda");
            out[j] += f[j] / trials;
        }
    }
    return out;
}

} // namespace detail

/// c(n, m, j) with S_m(A lambda + B) = sum_j c(n,m,j) A^j B^{m-j} S_j(lambda); fitted once per (n, m).
inline double expansion_coefficient(int n, int m, int j)
{
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    if (m < 0 || m > n || j < 0 || j > m)
        return 0.0;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({n, m});
    if (it == cache.end())
        it = cache.emplace(std::make_pair(n, m), detail::fit_expansion_coefficients(n, m)).first;
    return it->second[j];
}

struct ScaledSmReport {
    double s = 1.0;
    ScalarField direct;           ///< S_m(lambda(sv)) from the conformal formulas applied to sv
    ScalarField direct_spherical; ///< S_m from the radial graph 2 t^{-1}(sv)
    ScalarField expansion;        ///< sum_j c(n,m,j) A^j B^{m-j} S_j(lambda(v))
    ScalarField lower_bound;      ///< A^m S_m(lambda(v))
    double max_discrepancy = 0.0;           ///< |direct - expansion|
    double max_spherical_discrepancy = 0.0; ///< |direct_spherical - expansion|
    bool sign_conditions = false;           ///< (K=-1, s>=1) or (K=+1, s<=1)
    bool inequality_holds = true;
    std::size_t equality_nodes = 0;
    bool sv_admissible = true;
};

inline constexpr double equality_tolerance = 1e-8;

/// S_m of the scaled graph sv, directly and through the A/B expansion.
template <int N>
ScaledSmReport scaled_sm(const ConformalGraph<N>& cg, double s, int m)
{
    const ScaleCoefficients coef = scale_coefficients(cg, s);
    const auto S_v = conformal_symmetric(cg);
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < S_v.size(); ++k)
        if (!in_gamma_cone(S_v[k], m))
            bad.push_back(k);
    if (!bad.empty())
        throw NotAdmissibleError("scaled_sm: v is not m-admissible", bad);

    ScalarField sv = cg.v;
    for (double& x : sv.values)
        x *= s;
    const ConformalGraph<N> scaled(cg.grid, cg.form, sv);
    const auto S_sv = conformal_symmetric(scaled);
    const ShapeData<N> spherical = compute_shape(from_conformal(scaled));

    const std::size_t n_nodes = cg.grid->size();
    ScaledSmReport r;
    r.s = s;
    r.direct = ScalarField(n_nodes, 0.0);
    r.direct_spherical = ScalarField(n_nodes, 0.0);
    r.expansion = ScalarField(n_nodes, 0.0);
    r.lower_bound = ScalarField(n_nodes, 0.0);
    const int K = cg.form.K();
    r.sign_conditions = (K < 0 && s >= 1.0) || (K > 0 && s <= 1.0);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        const double A = coef.A[k];
        const double B = coef.B[k];
        double sum = 0.0;
        for (int j = 0; j <= m; ++j)
            sum += expansion_coefficient(N, m, j) * std::pow(A, j) * std::pow(B, m - j) * S_v[k][j];
        r.expansion[k] = sum;
        r.direct[k] = S_sv[k][m];
        r.direct_spherical[k] = spherical.S[k][m];
        r.lower_bound[k] = std::pow(A, m) * S_v[k][m];
        r.max_discrepancy = std::max(r.max_discrepancy, std::abs(r.direct[k] - sum));
        r.max_spherical_discrepancy = std::max(r.max_spherical_discrepancy, std::abs(r.direct_spherical[k] - sum));
        const double gap = r.direct[k] - r.lower_bound[k];
        const double tol = equality_tolerance * std::abs(r.lower_bound[k]);
        if (gap < -tol)
            r.inequality_holds = false;
        if (std::abs(gap) <= tol)
            ++r.equality_nodes;
        if (!in_gamma_cone(S_sv[k], m))
            r.sv_admissible = false;
    }
    return r;
}

template <int N>
struct EllipticitySpectrum {
    std::vector<Eigen::Matrix<double, N, 1>> eigenvalues; ///< ascending, per node
    double max_eigenvalue = -std::numeric_limits<double>::infinity();
    double min_abs = std::numeric_limits<double>::infinity();
};

/// Eigenvalues of dF_m / d(nabla'_ij v) in the principal frame: -(v / (q W)) dS_m/dlambda_i.
template <int N>
EllipticitySpectrum<N> ellipticity_spectrum(const ConformalGraph<N>& cg, int m)
{
    EllipticitySpectrum<N> out;
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < cg.grid->size(); ++k) {
        const ConformalNode<N> c = conformal_node_at(cg, k);
        const Eigen::Matrix<double, N, 1> lambda = generalized_eigenvalues<N>(c.b, c.g);
        const auto S = elementary_symmetric(as_span<N>(lambda));
        if (!in_gamma_cone(S, m))
            bad.push_back(k);
        const auto grad = symmetric_gradient(as_span<N>(lambda), m);
        const double factor = -cg.v[k] / (c.q * c.W);
        Eigen::Matrix<double, N, 1> ev;
        for (int i = 0; i < N; ++i)
            ev(i) = factor * grad[i];
        std::sort(ev.data(), ev.data() + N);
        out.max_eigenvalue = std::max(out.max_eigenvalue, ev(N - 1));
        out.min_abs = std::min(out.min_abs, ev.cwiseAbs().minCoeff());
        out.eigenvalues.push_back(ev);
    }
    if (!bad.empty())
        throw NotAdmissibleError("ellipticity_spectrum: graph is not m-admissible", bad);
    return out;
}

} // namespace hmcurv

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hmcurv/errors.hpp"

namespace hmcurv {

inline double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return std::round(r);
}

/// Elementary symmetric polynomials (S_0, ..., S_n) of lambda, S_0 = 1.
inline std::vector<double> elementary_symmetric(std::span<const double> lambda)
{
    std::vector<double> S(lambda.size() + 1, 0.0);
    S[0] = 1.0;
    for (std::size_t k = 0; k < lambda.size(); ++k)
        for (std::size_t j = k + 1; j >= 1; --j)
            S[j] += lambda[k] * S[j - 1];
    return S;
}

struct SymmetricFunctions {
    std::vector<double> S; ///< S_0..S_n
    std::vector<double> H; ///< H_m = S_m / C(n, m), H_0 = 1
};

inline SymmetricFunctions symmetric_functions(std::span<const double> lambda)
{
    SymmetricFunctions out;
    out.S = elementary_symmetric(lambda);
    const int n = static_cast<int>(lambda.size());
    out.H.resize(out.S.size());
    for (int m = 0; m <= n; ++m)
        out.H[m] = out.S[m] / binomial(n, m);
    return out;
}

/// dS_m / dlambda_i = S_{m-1}(lambda with lambda_i removed).
inline std::vector<double> symmetric_gradient(std::span<const double> lambda, int m)
{
    std::vector<double> out(lambda.size(), 0.0);
    if (m <= 0)
        return out;
    std::vector<double> rest;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        rest.clear();
        for (std::size_t j = 0; j < lambda.size(); ++j)
            if (j != i)
                rest.push_back(lambda[j]);
        out[i] = elementary_symmetric(rest)[m - 1];
    }
    return out;
}

/// F_m(a): sum of the principal m x m minors of a square matrix.
template <class Derived>
double principal_minor_sum(const Eigen::MatrixBase<Derived>& a, int m)
{
    const int n = static_cast<int>(a.rows());
    if (m == 0)
        return 1.0;
    if (m < 0 || m > n)
        return 0.0;
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != m)
            continue;
        Eigen::MatrixXd sub(m, m);
        int r = 0;
        for (int i = 0; i < n; ++i) {
            if (!(mask & (1u << i)))
                continue;
            int c = 0;
            for (int j = 0; j < n; ++j)
                if (mask & (1u << j))
                    sub(r, c++) = a(i, j);
            ++r;
        }
        sum += sub.determinant();
    }
    return sum;
}

/// Matrix D with D(i, k) = dF_m / da(i, k).
///
/// Uses dF_m = tr(P dA) with P = sum_{j<m} (-1)^j F_{m-1-j}(A) A^j.
template <int N>
Eigen::Matrix<double, N, N> minor_sum_gradient(const Eigen::Matrix<double, N, N>& a, int m)
{
    using Mat = Eigen::Matrix<double, N, N>;
    Mat P = Mat::Zero();
    Mat power = Mat::Identity();
    double sign = 1.0;
    for (int j = 0; j < m; ++j) {
        P += sign * principal_minor_sum(a, m - 1 - j) * power;
        power = power * a;
        sign = -sign;
    }
    return P.transpose();
}

/// Eigenvalues, ascending, of the pencil (b, g) with g symmetric positive definite.
///
/// Reduces to the symmetric problem L^{-1} b L^{-T} through the Cholesky factor of g;
/// closed forms for N <= 2. Throws DegenerateMetric when g is not safely SPD.
template <int N>
Eigen::Matrix<double, N, 1> generalized_eigenvalues(const Eigen::Matrix<double, N, N>& b,
                                                    const Eigen::Matrix<double, N, N>& g,
                                                    double max_condition = 1e12)
{
    using Vec = Eigen::Matrix<double, N, 1>;
    Vec out;
    if constexpr (N == 1) {
        if (!(g(0, 0) > 0.0) || !std::isfinite(g(0, 0)))
            throw Error(ErrorCode::DegenerateMetric, "metric is not positive");
        out(0) = b(0, 0) / g(0, 0);
    } else if constexpr (N == 2) {
        const double tr = g(0, 0) + g(1, 1);
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        const double gmax = 0.5 * tr + disc;
        const double gmin = det / gmax;
        if (!(gmin > 0.0) || !std::isfinite(gmax) || gmax / gmin > max_condition)
            throw Error(ErrorCode::DegenerateMetric, "metric is singular or ill-conditioned");
        const double l00 = std::sqrt(g(0, 0));
        const double l10 = g(1, 0) / l00;
        const double l11 = std::sqrt(g(1, 1) - l10 * l10);
        // C = L^{-1} b L^{-T}
        const double y00 = b(0, 0) / l00;
        const double y01 = b(0, 1) / l00;
        const double y10 = (b(1, 0) - l10 * y00) / l11;
        const double y11 = (b(1, 1) - l10 * y01) / l11;
        const double c00 = y00 / l00;
        const double c01 = (y01 - c00 * l10) / l11;
        const double c11 = (y11 - (y10 / l00) * l10) / l11;
        const double mean = 0.5 * (c00 + c11);
        const double half = 0.5 * (c00 - c11);
        const double r = std::hypot(half, c01);
        out(0) = mean - r;
        out(1) = mean + r;
    } else {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(b, g);
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::DegenerateMetric, "metric is not positive definite");
        out = es.eigenvalues();
    }
    return out;
}

} // namespace hmcurv

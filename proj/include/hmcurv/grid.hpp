#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hmcurv/errors.hpp"

namespace hmcurv {

/// One real value per grid node, node-major.
struct ScalarField {
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(std::vector<double> v) : values(std::move(v)) {}
    ScalarField(std::size_t n, double value) : values(n, value) {}

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }
    auto begin() const { return values.begin(); }
    auto end() const { return values.end(); }

    bool all_finite() const
    {
        for (double x : values)
            if (!std::isfinite(x))
                return false;
        return true;
    }

    /// Evaluates fn at every node coordinate of grid.
    template <class Grid, class Fn>
    static ScalarField sample(const Grid& grid, Fn&& fn)
    {
        ScalarField out(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k)
            out[k] = fn(grid.node(k));
        return out;
    }
};

inline double sup_norm(const ScalarField& f)
{
    double m = 0.0;
    for (double x : f)
        m = std::max(m, std::abs(x));
    return m;
}

/// Weights of one grid node's derivative stencil: contribution of `node` to the
/// partials d_i v and to the covariant Hessian (Christoffel correction folded in).
template <int N>
struct StencilEntry {
    std::size_t node;
    Eigen::Matrix<double, N, 1> grad;
    Eigen::Matrix<double, N, N> hess;
};

template <int N>
struct NodeJet {
    double value;
    Eigen::Matrix<double, N, 1> dv;
    Eigen::Matrix<double, N, N> hess;
};

template <int N>
struct Gradient {
    std::vector<Eigen::Matrix<double, N, 1>> covector; ///< v_i
    std::vector<Eigen::Matrix<double, N, 1>> vector;   ///< v^i = e^{ij} v_j
};

namespace detail {

struct FiniteDifferenceWeights {
    int half_width;
    std::vector<double> first;  // offsets -half_width..half_width
    std::vector<double> second;
};

inline FiniteDifferenceWeights centered_weights(int order)
{
    if (order == 2)
        return {1, {-0.5, 0.0, 0.5}, {1.0, -2.0, 1.0}};
    if (order == 4)
        return {2,
                {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12},
                {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12}};
    throw Error(ErrorCode::DomainError, "stencil order must be 2 or 4, got " + std::to_string(order));
}

} // namespace detail

/// Discretization of the unit sphere S^N with the round metric.
///
/// N = 1: uniform periodic grid theta_k = 2 pi k / R, k = 0..R-1.
/// N = 2: latitude rings theta_i = (i + 1/2) pi / R (no node on a pole) and
/// 2R longitudes; node index i * 2R + j. Stencils that cross a pole continue the
/// field through the antipodal node (theta, phi + pi).
template <int N>
class SphereGrid {
    static_assert(N == 1 || N == 2, "SphereGrid supports S^1 and S^2 only");

public:
    using Vec = Eigen::Matrix<double, N, 1>;
    using Mat = Eigen::Matrix<double, N, N>;
    using Coord = std::array<double, N>;

    static constexpr int default_order = N == 1 ? 2 : 4;

    explicit SphereGrid(int resolution, int order = default_order)
        : resolution_(resolution), order_(order)
    {
        if (resolution < 8)
            throw Error(ErrorCode::ResolutionTooSmall,
                        "resolution must be at least 8, got " + std::to_string(resolution));
        (void)detail::centered_weights(order);
        if constexpr (N == 1) {
            n_theta_ = resolution;
            n_phi_ = 1;
            spacing_ = {2.0 * std::numbers::pi / resolution};
            for (int k = 0; k < n_theta_; ++k)
                nodes_.push_back({k * spacing_[0]});
        } else {
            n_theta_ = resolution;
            n_phi_ = 2 * resolution;
            spacing_ = {std::numbers::pi / n_theta_, 2.0 * std::numbers::pi / n_phi_};
            for (int i = 0; i < n_theta_; ++i)
                for (int j = 0; j < n_phi_; ++j)
                    nodes_.push_back({(i + 0.5) * spacing_[0], j * spacing_[1]});
        }
        for (const Coord& x : nodes_) {
            metric_.push_back(metric_at(x));
            metric_inv_.push_back(metric_.back().inverse());
            christoffel_.push_back(christoffel_at(x));
            weights_.push_back(N == 1 ? spacing_[0] : std::sin(x[0]) * spacing_[0] * spacing_[1]);
        }
        build_stencils();
    }

    int resolution() const noexcept { return resolution_; }
    int order() const noexcept { return order_; }
    int n_theta() const noexcept { return n_theta_; }
    int n_phi() const noexcept { return n_phi_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::array<double, N>& spacing() const noexcept { return spacing_; }

    const Coord& node(std::size_t k) const { return nodes_[k]; }
    const Mat& metric(std::size_t k) const { return metric_[k]; }
    const Mat& metric_inverse(std::size_t k) const { return metric_inv_[k]; }
    /// christoffel(k)[i](s, j) = Gamma'^i_{sj}.
    const std::array<Mat, N>& christoffel(std::size_t k) const { return christoffel_[k]; }
    /// Midpoint quadrature weight (area element) of node k.
    double weight(std::size_t k) const { return weights_[k]; }

    std::span<const StencilEntry<N>> stencil(std::size_t k) const
    {
        return {entries_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }

    std::size_t index(int i, int j = 0) const
    {
        return static_cast<std::size_t>(i) * n_phi_ + static_cast<std::size_t>(j);
    }

    static Mat metric_at(const Coord& x)
    {
        Mat e = Mat::Identity();
        if constexpr (N == 2) {
            const double s = std::sin(x[0]);
            e(1, 1) = s * s;
        }
        return e;
    }

    static std::array<Mat, N> christoffel_at(const Coord& x)
    {
        std::array<Mat, N> gamma;
        for (auto& g : gamma)
            g.setZero();
        if constexpr (N == 2) {
            const double s = std::sin(x[0]);
            const double c = std::cos(x[0]);
            gamma[0](1, 1) = -s * c;    // Gamma^theta_{phi phi}
            gamma[1](0, 1) = c / s;     // Gamma^phi_{theta phi}
            gamma[1](1, 0) = c / s;
        }
        return gamma;
    }

    bool same_layout(const SphereGrid& other) const
    {
        return resolution_ == other.resolution_ && order_ == other.order_;
    }

    double l2_norm(const ScalarField& f) const
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < size(); ++k)
            acc += weights_[k] * f[k] * f[k];
        return std::sqrt(acc);
    }

    NodeJet<N> jet(const ScalarField& field, std::size_t k) const
    {
        NodeJet<N> out{field[k], Vec::Zero(), Mat::Zero()};
        for (const auto& e : stencil(k)) {
            const double d = field[e.node] - field[k];
            out.dv += e.grad * d;
            out.hess += e.hess * d;
        }
        return out;
    }

private:
    void build_stencils()
    {
        const auto w = detail::centered_weights(order_);
        const int p = w.half_width;
        offsets_.push_back(0);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            std::map<std::size_t, StencilEntry<N>> acc;
            auto at = [&](std::size_t node) -> StencilEntry<N>& {
                auto it = acc.find(node);
                if (it == acc.end())
                    it = acc.emplace(node, StencilEntry<N>{node, Vec::Zero(), Mat::Zero()}).first;
                return it->second;
            };
            if constexpr (N == 1) {
                const double h = spacing_[0];
                const int n = n_theta_;
                for (int a = -p; a <= p; ++a) {
                    auto& e = at(static_cast<std::size_t>(((static_cast<int>(k) + a) % n + n) % n));
                    e.grad(0) += w.first[a + p] / h;
                    e.hess(0, 0) += w.second[a + p] / (h * h);
                }
            } else {
                const int i = static_cast<int>(k) / n_phi_;
                const int j = static_cast<int>(k) % n_phi_;
                const double ht = spacing_[0];
                const double hp = spacing_[1];
                const double theta = nodes_[k][0];
                const double sn = std::sin(theta);
                const double cs = std::cos(theta);
                for (int a = -p; a <= p; ++a) {
                    auto& e = at(wrap(i + a, j));
                    e.grad(0) += w.first[a + p] / ht;
                    e.hess(0, 0) += w.second[a + p] / (ht * ht);
                    // nabla_{phi phi} v = v_{phi phi} + sin cos v_theta
                    e.hess(1, 1) += sn * cs * w.first[a + p] / ht;
                }
                for (int b = -p; b <= p; ++b) {
                    auto& e = at(wrap(i, j + b));
                    e.grad(1) += w.first[b + p] / hp;
                    e.hess(1, 1) += w.second[b + p] / (hp * hp);
                    // nabla_{theta phi} v = v_{theta phi} - cot v_phi
                    e.hess(0, 1) -= cs / sn * w.first[b + p] / hp;
                    e.hess(1, 0) -= cs / sn * w.first[b + p] / hp;
                }
                for (int a = -p; a <= p; ++a) {
                    for (int b = -p; b <= p; ++b) {
                        const double wab = w.first[a + p] * w.first[b + p] / (ht * hp);
                        if (wab == 0.0)
                            continue;
                        auto& e = at(wrap(i + a, j + b));
                        e.hess(0, 1) += wab;
                        e.hess(1, 0) += wab;
                    }
                }
            }
            // centre weight is minus the rest, so constants difference to exactly zero
            auto& centre = at(k);
            centre.grad.setZero();
            centre.hess.setZero();
            for (const auto& [node, entry] : acc)
                if (node != k) {
                    centre.grad -= entry.grad;
                    centre.hess -= entry.hess;
                }
            for (auto& [node, entry] : acc)
                entries_.push_back(entry);
            offsets_.push_back(entries_.size());
        }
    }

    // Maps an extended (ring, longitude) pair into the grid, reflecting through a pole.
    std::size_t wrap(int i, int j) const
    {
        if (i < 0) {
            i = -i - 1;
            j += n_phi_ / 2;
        } else if (i >= n_theta_) {
            i = 2 * n_theta_ - i - 1;
            j += n_phi_ / 2;
        }
        j = ((j % n_phi_) + n_phi_) % n_phi_;
        return index(i, j);
    }

    int resolution_;
    int order_;
    int n_theta_ = 0;
    int n_phi_ = 0;
    std::array<double, N> spacing_{};
    std::vector<Coord> nodes_;
    std::vector<Mat> metric_;
    std::vector<Mat> metric_inv_;
    std::vector<std::array<Mat, N>> christoffel_;
    std::vector<double> weights_;
    std::vector<StencilEntry<N>> entries_;
    std::vector<std::size_t> offsets_;
};

using AnyGrid = std::variant<SphereGrid<1>, SphereGrid<2>>;

/// Runtime-dimension entry point; n must be 1 or 2 and resolution at least 8.
inline AnyGrid build_grid(int n, int resolution)
{
    if (n == 1)
        return SphereGrid<1>(resolution);
    if (n == 2)
        return SphereGrid<2>(resolution);
    throw Error(ErrorCode::UnsupportedDimension, "sphere dimension must be 1 or 2, got " + std::to_string(n));
}

template <int N>
Gradient<N> covariant_gradient(const SphereGrid<N>& grid, const ScalarField& field)
{
    Gradient<N> out;
    out.covector.reserve(grid.size());
    out.vector.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Eigen::Matrix<double, N, 1> d = Eigen::Matrix<double, N, 1>::Zero();
        for (const auto& e : grid.stencil(k))
            d += e.grad * (field[e.node] - field[k]);
        out.covector.push_back(d);
        out.vector.push_back(grid.metric_inverse(k) * d);
    }
    return out;
}

template <int N>
std::vector<Eigen::Matrix<double, N, N>> covariant_hessian(const SphereGrid<N>& grid, const ScalarField& field)
{
    std::vector<Eigen::Matrix<double, N, N>> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Eigen::Matrix<double, N, N> h = Eigen::Matrix<double, N, N>::Zero();
        for (const auto& e : grid.stencil(k))
            h += e.hess * (field[e.node] - field[k]);
        out.push_back(h);
    }
    return out;
}

} // namespace hmcurv

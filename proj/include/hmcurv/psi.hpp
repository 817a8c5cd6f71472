#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hmcurv/errors.hpp"
#include "hmcurv/expr.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/space_form.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

struct PsiValue {
    double value;
    double d_rho;
    std::array<double, 2> d_u; ///< d/dtheta, d/dphi
};

/// Prescription psi(u, rho) on the annulus [R1, R2], given as an expression tree
/// with symbolic rho- and angular derivatives.
///
/// Optionally extended past R2 by psi(u, R2) w(R2) / w(rho), w the monotone weight
/// of the space form, which keeps psi w constant and psi below the outer barrier.
class PsiSpec {
public:
    PsiSpec(Expression expr, SpaceForm form, int n, int m, double R1, double R2, std::string definition = {})
        : form_(form), n_(n), m_(m), R1_(R1), R2_(R2), definition_(std::move(definition)),
          expr_(std::move(expr))
    {
        if (n != 1 && n != 2)
            throw Error(ErrorCode::UnsupportedDimension, "psi: n must be 1 or 2");
        if (m < 1 || m > n)
            throw Error(ErrorCode::DomainError, "psi: order m must satisfy 1 <= m <= n");
        if (!(R1 > 0.0 && R1 < R2 && R2 < form.upper_radius()))
            throw Error(ErrorCode::DomainError, "psi: annulus radii must satisfy 0 < R1 < R2 < a");
        if (n == 1 && expr_.depends_on(Var::Phi))
            throw Error(ErrorCode::DomainError, "psi: phi is not a coordinate on S^1");
        if (definition_.empty())
            definition_ = expr_.to_string();
        value_ = std::make_shared<const CompiledExpression>(expr_);
        d_rho_ = std::make_shared<const CompiledExpression>(expr_.derivative(Var::Rho));
        d_theta_ = std::make_shared<const CompiledExpression>(expr_.derivative(Var::Theta));
        d_phi_ = std::make_shared<const CompiledExpression>(expr_.derivative(Var::Phi));
    }

    static PsiSpec parse(const std::string& text, SpaceForm form, int n, int m, double R1, double R2)
    {
        return PsiSpec(Expression::parse(text), form, n, m, R1, R2, text);
    }

    const SpaceForm& form() const noexcept { return form_; }
    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    double R1() const noexcept { return R1_; }
    double R2() const noexcept { return R2_; }
    const std::string& definition() const noexcept { return definition_; }
    const Expression& expression() const noexcept { return expr_; }
    bool extended() const noexcept { return extended_; }

    /// C(n, m), the factor turning psi into the S_m-normalized right-hand side.
    double bar_factor() const { return binomial(n_, m_); }

    PsiSpec with_default_extension() const
    {
        PsiSpec out = *this;
        out.extended_ = true;
        return out;
    }

    template <std::size_t N>
    PsiValue evaluate(const std::array<double, N>& u, double rho) const
    {
        Bindings b;
        b.theta = u[0];
        if constexpr (N > 1)
            b.phi = u[1];
        if (extended_ && rho > R2_) {
            b.rho = R2_;
            const double w2 = form_.monotone_weight(R2_, m_);
            const double w = form_.monotone_weight(rho, m_);
            const double base = (*value_)(b);
            return {base * w2 / w, -base * w2 * form_.monotone_weight_derivative(rho, m_) / (w * w),
                    {(*d_theta_)(b) * w2 / w, (*d_phi_)(b) * w2 / w}};
        }
        b.rho = rho;
        return {(*value_)(b), (*d_rho_)(b), {(*d_theta_)(b), (*d_phi_)(b)}};
    }

    template <std::size_t N>
    double value(const std::array<double, N>& u, double rho) const
    {
        if (extended_ && rho > R2_)
            return evaluate(u, rho).value;
        Bindings b;
        b.theta = u[0];
        if constexpr (N > 1)
            b.phi = u[1];
        b.rho = rho;
        return (*value_)(b);
    }

    /// psi-bar = C(n, m) psi.
    template <std::size_t N>
    double bar(const std::array<double, N>& u, double rho) const
    {
        return bar_factor() * value(u, rho);
    }

    /// (1 - t) start + t * this, as one expression.
    PsiSpec blend_from(const PsiSpec& start, double t) const
    {
        Expression e = Expression::constant(1.0 - t) * start.expr_ + Expression::constant(t) * expr_;
        char weight[32];
        std::snprintf(weight, sizeof weight, "%.17g", t);
        PsiSpec out(e, form_, n_, m_, R1_, R2_,
                    "blend(" + start.definition_ + ", " + definition_ + ", " + weight + ")");
        out.extended_ = extended_;
        return out;
    }

private:
    SpaceForm form_;
    int n_;
    int m_;
    double R1_;
    double R2_;
    std::string definition_;
    Expression expr_;
    std::shared_ptr<const CompiledExpression> value_;
    std::shared_ptr<const CompiledExpression> d_rho_;
    std::shared_ptr<const CompiledExpression> d_theta_;
    std::shared_ptr<const CompiledExpression> d_phi_;
    bool extended_ = false;
};

/// c^m(R0) / s^m(rho): the radial prescription solved exactly by the sphere z = R0,
/// with psi w constant in rho.
inline Expression sphere_psi_expression(const SpaceForm& form, int m, double R0)
{
    const Expression rho = Expression::variable(Var::Rho);
    const Expression mm = Expression::constant(m);
    const Func sf = form.is_hyperbolic() ? Func::Sinh : Func::Sin;
    return pow(Expression::constant(form.c(R0)), mm) / pow(apply(sf, rho), mm);
}

inline PsiSpec sphere_psi(const SpaceForm& form, int n, int m, double R0, double R1, double R2)
{
    return PsiSpec(sphere_psi_expression(form, m, R0), form, n, m, R1, R2);
}

struct ConditionReport {
    bool positive_ok = true;
    bool barrier_low_ok = true;
    bool barrier_high_ok = true;
    bool monotone_ok = true;
    bool strict_monotone = false;
    double min_value = std::numeric_limits<double>::infinity();
    double low_margin = std::numeric_limits<double>::infinity();   ///< min psi(u,R1) - barrier(R1)
    double high_margin = std::numeric_limits<double>::infinity();  ///< min barrier(R2) - psi(u,R2)
    double monotone_max = -std::numeric_limits<double>::infinity(); ///< max d/drho [psi w]
    std::vector<std::size_t> low_violations;
    std::vector<std::size_t> high_violations;
    std::vector<std::size_t> monotone_violations;

    bool all_ok() const { return positive_ok && barrier_low_ok && barrier_high_ok && monotone_ok; }
};

inline constexpr double monotone_tolerance = 1e-10;
/// Relative slack on the barrier inequalities, so that psi equal to the barrier
/// up to rounding counts as equality.
inline constexpr double barrier_tolerance = 1e-14;
inline constexpr double strictness_threshold = 1e-10;

/// Barrier inequalities psi(u,R1) >= (c/s)^m(R1) and psi(u,R2) <= (c/s)^m(R2) at every node,
/// plus positivity of psi at both radii.
template <int N>
ConditionReport check_barrier_conditions(const PsiSpec& psi, const SphereGrid<N>& grid)
{
    ConditionReport r;
    const int m = psi.m();
    const double low_barrier = std::pow(psi.form().sphere_curvature(psi.R1()), m);
    const double high_barrier = std::pow(psi.form().sphere_curvature(psi.R2()), m);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double lo = psi.value(grid.node(k), psi.R1());
        const double hi = psi.value(grid.node(k), psi.R2());
        r.min_value = std::min({r.min_value, lo, hi});
        const double low_margin = lo - low_barrier;
        const double high_margin = high_barrier - hi;
        r.low_margin = std::min(r.low_margin, low_margin);
        r.high_margin = std::min(r.high_margin, high_margin);
        if (!(low_margin >= -barrier_tolerance * low_barrier))
            r.low_violations.push_back(k);
        if (!(high_margin >= -barrier_tolerance * high_barrier))
            r.high_violations.push_back(k);
    }
    r.positive_ok = r.min_value > 0.0;
    r.barrier_low_ok = r.low_violations.empty();
    r.barrier_high_ok = r.high_violations.empty();
    return r;
}

/// d/drho [psi w(rho)] <= 0 on the node x rho lattice over [rho_lo, rho_hi].
template <int N>
void sweep_monotonicity(const PsiSpec& psi, const SphereGrid<N>& grid, double rho_lo, double rho_hi,
                        int samples, ConditionReport& r)
{
    const int m = psi.m();
    const auto& form = psi.form();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        bool violated = false;
        for (int j = 0; j < samples; ++j) {
            const double rho = samples == 1 ? rho_lo : rho_lo + (rho_hi - rho_lo) * j / (samples - 1);
            const PsiValue p = psi.evaluate(grid.node(k), rho);
            const double d = p.d_rho * form.monotone_weight(rho, m) + p.value * form.monotone_weight_derivative(rho, m);
            r.monotone_max = std::max(r.monotone_max, d);
            if (!(d <= monotone_tolerance))
                violated = true;
        }
        if (violated)
            r.monotone_violations.push_back(k);
    }
    r.monotone_ok = r.monotone_violations.empty();
    r.strict_monotone = r.monotone_ok && r.monotone_max < -strictness_threshold;
}

/// Monotonicity of psi * sinh^m rho (K = -1) or psi * cot^{-m} rho (K = +1) on [R1, R2].
/// samples <= 0 selects 4x the angular resolution.
template <int N>
ConditionReport check_monotonicity(const PsiSpec& psi, const SphereGrid<N>& grid, int samples = 0)
{
    if (samples <= 0)
        samples = 4 * grid.resolution();
    ConditionReport r;
    sweep_monotonicity(psi, grid, psi.R1(), psi.R2(), samples, r);
    return r;
}

template <int N>
ConditionReport check_conditions(const PsiSpec& psi, const SphereGrid<N>& grid, int samples = 0)
{
    ConditionReport r = check_barrier_conditions(psi, grid);
    const ConditionReport mono = check_monotonicity(psi, grid, samples);
    r.monotone_ok = mono.monotone_ok;
    r.strict_monotone = mono.strict_monotone;
    r.monotone_max = mono.monotone_max;
    r.monotone_violations = mono.monotone_violations;
    return r;
}

struct ExtensionReport {
    bool bound_ok = true;     ///< psi(u, rho) <= barrier(R2) for rho >= R2
    bool monotone_ok = true;  ///< d/drho [psi w] <= 0 for rho >= R2
    double bound_margin = std::numeric_limits<double>::infinity();
    double monotone_max = -std::numeric_limits<double>::infinity();
};

/// Checks the outer-barrier and monotonicity conditions of the extension of psi on [R2, rho_max].
template <int N>
ExtensionReport check_extension(const PsiSpec& psi, const SphereGrid<N>& grid, double rho_max, int samples = 0)
{
    if (samples <= 0)
        samples = 4 * grid.resolution();
    const PsiSpec ext = psi.extended() ? psi : psi.with_default_extension();
    const double barrier = std::pow(psi.form().sphere_curvature(psi.R2()), psi.m());
    ExtensionReport out;
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (int j = 0; j < samples; ++j) {
            const double rho = psi.R2() + (rho_max - psi.R2()) * j / std::max(1, samples - 1);
            out.bound_margin = std::min(out.bound_margin, barrier - ext.value(grid.node(k), rho));
        }
    ConditionReport r;
    sweep_monotonicity(ext, grid, psi.R2(), rho_max, samples, r);
    out.monotone_max = r.monotone_max;
    out.monotone_ok = r.monotone_ok;
    out.bound_ok = out.bound_margin >= -barrier_tolerance * barrier;
    return out;
}

namespace detail {

inline void require_hyperbolic_q(const PsiSpec& psi, double v_tilde, double s)
{
    if (!psi.form().is_hyperbolic())
        throw Error(ErrorCode::DomainError, "Q profile is defined for K = -1 only");
    const double w = v_tilde / s;
    if (!(w > 0.0 && w < 1.0) || !(v_tilde < 1.0))
        throw Error(ErrorCode::DomainError, "Q profile needs 0 < v/s < 1 and v < 1");
}

} // namespace detail

/// Q(s) = [(1 - v^2) / (s (1 - v^2/s^2))]^m psibar(u, 2 artanh(v/s)) - psibar(u, 2 artanh(v)),
/// with v the fixed value v_tilde.
template <std::size_t N>
double q_value(const PsiSpec& psi, double v_tilde, const std::array<double, N>& u, double s)
{
    detail::require_hyperbolic_q(psi, v_tilde, s);
    const double w = v_tilde / s;
    const double P = (1.0 - v_tilde * v_tilde) / (s * (1.0 - w * w));
    const auto& form = psi.form();
    return std::pow(P, psi.m()) * psi.bar(u, form.from_conformal(w)) - psi.bar(u, form.from_conformal(v_tilde));
}

/// dQ/ds at fixed v_tilde, from the closed-form derivative (uses d psi / d rho).
template <std::size_t N>
double q_derivative(const PsiSpec& psi, double v_tilde, const std::array<double, N>& u, double s)
{
    detail::require_hyperbolic_q(psi, v_tilde, s);
    const int m = psi.m();
    const double w = v_tilde / s;
    const double one_minus = 1.0 - w * w;
    const double P = (1.0 - v_tilde * v_tilde) / (s * one_minus);
    const PsiValue p = psi.evaluate(u, psi.form().from_conformal(w));
    const double bar = psi.bar_factor();
    return -std::pow(P, m) / s *
           (m * (1.0 + w * w) / one_minus * bar * p.value + 2.0 * v_tilde / (s * one_minus) * bar * p.d_rho);
}

struct QProfile {
    std::vector<double> s;
    std::vector<double> Q;
    std::vector<double> dQ;     ///< closed-form derivative
    std::vector<double> dQ_fd;  ///< central finite difference
    double q_at_one = 0.0;
    double min_dQ = std::numeric_limits<double>::infinity();
};

template <std::size_t N>
QProfile q_profile(const PsiSpec& psi, double v_tilde, const std::array<double, N>& u, std::vector<double> s_values)
{
    QProfile out;
    out.q_at_one = q_value(psi, v_tilde, u, 1.0);
    for (double s : s_values) {
        out.s.push_back(s);
        out.Q.push_back(q_value(psi, v_tilde, u, s));
        const double d = q_derivative(psi, v_tilde, u, s);
        out.dQ.push_back(d);
        out.min_dQ = std::min(out.min_dQ, d);
        const double h = 1e-5 * s;
        const double hi_s = s + h;
        const double lo_s = s - h;
        // keep v_tilde / s inside (0, 1) for the one-sided cases
        if (v_tilde / lo_s < 1.0)
            out.dQ_fd.push_back((q_value(psi, v_tilde, u, hi_s) - q_value(psi, v_tilde, u, lo_s)) / (2.0 * h));
        else
            out.dQ_fd.push_back((q_value(psi, v_tilde, u, hi_s) - q_value(psi, v_tilde, u, s)) / h);
    }
    return out;
}

struct QSweepReport {
    double s_max = 1.0;
    double max_abs_q_at_one = 0.0;
    double min_dQ = std::numeric_limits<double>::infinity();
    double min_Q = std::numeric_limits<double>::infinity();
    double max_abs_Q = 0.0;
};

/// Evaluates Q and dQ/ds along the scaled family v_tilde = s v(u) for s in [1, 1/max v - eps],
/// at every node. psi is used with its default extension past R2.
template <int N>
QSweepReport q_sweep(const PsiSpec& psi, const SphereGrid<N>& grid, const ScalarField& v, int samples = 16,
                     double eps = 1e-3)
{
    const PsiSpec ext = psi.extended() ? psi : psi.with_default_extension();
    double vmax = 0.0;
    for (double x : v)
        vmax = std::max(vmax, x);
    QSweepReport out;
    out.s_max = 1.0 / vmax - eps;
    if (!(out.s_max > 1.0))
        throw Error(ErrorCode::DomainError, "Q sweep: max v too close to 1");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out.max_abs_q_at_one = std::max(out.max_abs_q_at_one, std::abs(q_value(ext, v[k], grid.node(k), 1.0)));
        for (int j = 0; j < samples; ++j) {
            const double s = 1.0 + (out.s_max - 1.0) * j / std::max(1, samples - 1);
            const double vt = s * v[k];
            const double Q = q_value(ext, vt, grid.node(k), s);
            out.min_Q = std::min(out.min_Q, Q);
            out.max_abs_Q = std::max(out.max_abs_Q, std::abs(Q));
            out.min_dQ = std::min(out.min_dQ, q_derivative(ext, vt, grid.node(k), s));
        }
    }
    return out;
}

} // namespace hmcurv

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "hmcurv/conformal.hpp"
#include "hmcurv/errors.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/grid.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/symmetric.hpp"

namespace hmcurv {

enum class LinearSolverKind { Auto, DirectDense, DirectSparse, IterativeKrylov };
enum class AdmissibilityPolicy { Warn, Reject };
enum class SolveStatus { Converged, LineSearchFailed, MaxItersExceeded, LeftAnnulus, LostAdmissibility, LinearSolveFailed };

inline const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::LineSearchFailed: return "LineSearchFailed";
    case SolveStatus::MaxItersExceeded: return "MaxItersExceeded";
    case SolveStatus::LeftAnnulus: return "LeftAnnulus";
    case SolveStatus::LostAdmissibility: return "LostAdmissibility";
    case SolveStatus::LinearSolveFailed: return "LinearSolveFailed";
    }
    return "Unknown";
}

inline const char* to_string(LinearSolverKind k)
{
    switch (k) {
    case LinearSolverKind::Auto: return "auto";
    case LinearSolverKind::DirectDense: return "direct-dense";
    case LinearSolverKind::DirectSparse: return "direct-sparse";
    case LinearSolverKind::IterativeKrylov: return "iterative-krylov";
    }
    return "auto";
}

inline const char* to_string(AdmissibilityPolicy p)
{
    return p == AdmissibilityPolicy::Warn ? "warn" : "reject";
}

struct SolverConfig {
    int m = 1;
    int max_newton_iters = 50;
    double newton_tol = 1e-11;  ///< sup-norm residual target of the final stage
    double stage_tol = 1e-8;    ///< target of intermediate continuation stages
    double damping_factor = 0.5;
    double min_step = 1.0 / 1024;
    int continuation_steps = 4;
    LinearSolverKind linear_solver = LinearSolverKind::Auto;
    int dense_limit = 1024; ///< Auto: dense LU up to this many unknowns, sparse LU beyond
    int krylov_restart = 60;
    int krylov_max_iters = 5000;
    double krylov_tol = 1e-13;
    std::optional<double> initial_radius;     ///< sphere R0; defaults to (R1 + R2) / 2
    std::optional<ScalarField> initial_field; ///< radii z; skips continuation when set
    AdmissibilityPolicy admissibility_policy = AdmissibilityPolicy::Warn;
    double guard_fraction = 0.05;
    bool require_psi_conditions = true;
    double fd_step = 1e-6;

    void validate(int n) const
    {
        if (m < 1 || m > n)
            throw Error(ErrorCode::ConfigError, "solver: order m must satisfy 1 <= m <= n");
        if (!(newton_tol > 0.0 && stage_tol > 0.0 && krylov_tol > 0.0 && fd_step > 0.0))
            throw Error(ErrorCode::ConfigError, "solver: tolerances must be positive");
        if (max_newton_iters < 1 || continuation_steps < 1)
            throw Error(ErrorCode::ConfigError, "solver: iteration counts must be positive");
        if (!(damping_factor > 0.0 && damping_factor < 1.0) || !(min_step > 0.0 && min_step <= 1.0))
            throw Error(ErrorCode::ConfigError, "solver: damping parameters out of range");
    }
};

struct SolveReport {
    bool converged = false;
    SolveStatus status = SolveStatus::MaxItersExceeded;
    std::string message;
    std::vector<int> iterations;          ///< Newton iterations per continuation stage
    std::vector<double> residual_history; ///< sup residual after every accepted step, all stages
    double residual_sup = std::numeric_limits<double>::quiet_NaN();
    double residual_l2 = std::numeric_limits<double>::quiet_NaN();
    double residual_sup_spherical = std::numeric_limits<double>::quiet_NaN();
    bool admissible = false;
    std::size_t admissibility_warnings = 0;
    bool annulus_ok = false;
    double annulus_margin_low = 0.0;  ///< min z - R1
    double annulus_margin_high = 0.0; ///< R2 - max z
    bool elliptic = false;
    double ellipticity_max = std::numeric_limits<double>::quiet_NaN();
    double ellipticity_min_abs = std::numeric_limits<double>::quiet_NaN();
    std::size_t linear_iterations = 0;
    double wall_time_s = 0.0;
};

template <int N>
struct SolveResult {
    RadialGraph<N> graph;
    ConformalGraph<N> conformal;
    ScalarField residual;
    SolveReport report;
};

/// Residual of one node as a function of the local jet of v, with nabla'_ij v held fixed.
template <int N>
double local_residual(const SphereGrid<N>& grid, const SpaceForm& form, const PsiSpec& psi, int m, std::size_t k,
                      double v, const Eigen::Matrix<double, N, 1>& dv, const Eigen::Matrix<double, N, N>& hv)
{
    const ConformalNode<N> c = conformal_node<N>(form.K(), grid.metric(k), grid.metric_inverse(k), v, dv, hv);
    return principal_minor_sum(c.a, m) - psi.bar(grid.node(k), form.from_conformal(v));
}

/// F_m(a(v)) - psibar(u, 2 t^{-1}(v)) at every node, through the conformal formulas.
template <int N>
ScalarField conformal_residual(const ConformalGraph<N>& cg, const PsiSpec& psi, int m)
{
    const auto& grid = *cg.grid;
    ScalarField r(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const NodeJet<N> j = grid.jet(cg.v, k);
        r[k] = local_residual<N>(grid, cg.form, psi, m, k, j.value, j.dv, j.hess);
    }
    return r;
}

/// Newton Jacobian dR_k / dv_l. The principal (Hessian) part is analytic:
/// dF/d(nabla'_pr v) = -(v / (q W)) (g_hat^{-1} D)(p, r), D(i, j) = dF_m / da(i, j).
/// The dependence on v and v_i (through q, W, g_hat and psibar) is closed by central differences.
template <int N>
Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_jacobian(const ConformalGraph<N>& cg, const PsiSpec& psi,
                                                               int m, double fd_step)
{
    using Vec = Eigen::Matrix<double, N, 1>;
    using Mat = Eigen::Matrix<double, N, N>;
    const auto& grid = *cg.grid;
    const SpaceForm& form = cg.form;
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const NodeJet<N> j = grid.jet(cg.v, k);
        const ConformalNode<N> c = conformal_node<N>(form.K(), grid.metric(k), grid.metric_inverse(k), j.value, j.dv, j.hess);
        const Mat D = minor_sum_gradient<N>(c.a, m);
        const Mat dF_dH = -(j.value / (c.q * c.W)) * (c.g_hat_inv * D);

        auto G = [&](double v, const Vec& dv) { return local_residual<N>(grid, form, psi, m, k, v, dv, j.hess); };
        const double h = fd_step;
        const double dG_dv = (G(j.value + h, j.dv) - G(j.value - h, j.dv)) / (2.0 * h);
        Vec dG_ddv;
        for (int i = 0; i < N; ++i) {
            Vec up = j.dv;
            Vec dn = j.dv;
            up(i) += h;
            dn(i) -= h;
            dG_ddv(i) = (G(j.value, up) - G(j.value, dn)) / (2.0 * h);
        }

        for (const auto& e : grid.stencil(k)) {
            double w = dG_ddv.dot(e.grad) + dF_dH.cwiseProduct(e.hess).sum();
            if (e.node == k)
                w += dG_dv;
            triplets.emplace_back(static_cast<int>(k), static_cast<int>(e.node), w);
        }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> J(static_cast<int>(grid.size()), static_cast<int>(grid.size()));
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

struct JacobianCheck {
    double max_abs_error = 0.0;
    double max_abs_entry = 0.0;
    double relative_error = 0.0; ///< max |J - J_fd| / max |J_fd|
};

/// Compares the assembled Jacobian with central differences of the full residual in every v_l.
template <int N>
JacobianCheck jacobian_check(const ConformalGraph<N>& cg, const PsiSpec& psi, int m, double fd_step = 1e-6,
                             double brute_step = 1e-6)
{
    const Eigen::MatrixXd J(assemble_jacobian(cg, psi, m, fd_step));
    JacobianCheck out;
    const std::size_t n = cg.grid->size();
    for (std::size_t l = 0; l < n; ++l) {
        ConformalGraph<N> up = cg;
        ConformalGraph<N> dn = cg;
        up.v[l] += brute_step;
        dn.v[l] -= brute_step;
        const ScalarField ru = conformal_residual(up, psi, m);
        const ScalarField rd = conformal_residual(dn, psi, m);
        for (std::size_t k = 0; k < n; ++k) {
            const double fd = (ru[k] - rd[k]) / (2.0 * brute_step);
            out.max_abs_entry = std::max(out.max_abs_entry, std::abs(fd));
            out.max_abs_error = std::max(out.max_abs_error,
                                         std::abs(J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) - fd));
        }
    }
    out.relative_error = out.max_abs_error / out.max_abs_entry;
    return out;
}

struct LinearSolveOutcome {
    bool ok = false;
    Eigen::VectorXd x;
    std::size_t iterations = 0;
};

inline LinearSolveOutcome solve_linear(const Eigen::SparseMatrix<double, Eigen::RowMajor>& J, const Eigen::VectorXd& rhs,
                                       const SolverConfig& cfg)
{
    LinearSolveOutcome out;
    LinearSolverKind kind = cfg.linear_solver;
    if (kind == LinearSolverKind::Auto)
        kind = J.rows() <= cfg.dense_limit ? LinearSolverKind::DirectDense : LinearSolverKind::DirectSparse;
    if (kind == LinearSolverKind::DirectDense) {
        const Eigen::MatrixXd A(J);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        out.x = lu.solve(rhs);
        out.iterations = 1;
        const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
        out.ok = out.x.allFinite() && (A * out.x - rhs).norm() <= 1e-8 * scale;
    } else if (kind == LinearSolverKind::DirectSparse) {
        Eigen::SparseMatrix<double> A(J);
        A.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            return out;
        out.x = lu.solve(rhs);
        out.iterations = 1;
        const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
        out.ok = lu.info() == Eigen::Success && out.x.allFinite() && (A * out.x - rhs).norm() <= 1e-8 * scale;
    } else {
        Eigen::SparseMatrix<double> A(J);
        Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> gmres;
        gmres.set_restart(cfg.krylov_restart);
        gmres.setMaxIterations(cfg.krylov_max_iters);
        gmres.setTolerance(cfg.krylov_tol);
        gmres.compute(A);
        out.x = gmres.solve(rhs);
        out.iterations = static_cast<std::size_t>(gmres.iterations());
        out.ok = gmres.info() == Eigen::Success && out.x.allFinite();
    }
    return out;
}

template <int N>
struct NewtonStepResult {
    ScalarField v;
    double residual_before = 0.0;
    double residual_after = 0.0;
    double step_norm = 0.0;   ///< sup norm of the accepted update
    double step_length = 1.0; ///< damping factor that was accepted
    std::size_t linear_iterations = 0;
    std::optional<SolveStatus> failure;
};

/// One damped Newton step on the conformal residual: solve J dv = -R, then backtrack
/// until the sup-norm residual decreases.
template <int N>
NewtonStepResult<N> newton_step(const ConformalGraph<N>& current, const PsiSpec& psi_t, const SolverConfig& cfg)
{
    NewtonStepResult<N> out;
    out.v = current.v;
    const ScalarField R = conformal_residual(current, psi_t, cfg.m);
    out.residual_before = sup_norm(R);
    out.residual_after = out.residual_before;
    if (out.residual_before == 0.0)
        return out;

    const auto J = assemble_jacobian(current, psi_t, cfg.m, cfg.fd_step);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(R.size()));
    for (std::size_t k = 0; k < R.size(); ++k)
        rhs(static_cast<Eigen::Index>(k)) = -R[k];
    const LinearSolveOutcome lin = solve_linear(J, rhs, cfg);
    out.linear_iterations = lin.iterations;
    if (!lin.ok) {
        out.failure = SolveStatus::LinearSolveFailed;
        return out;
    }

    for (double alpha = 1.0; alpha >= cfg.min_step; alpha *= cfg.damping_factor) {
        ScalarField trial = current.v;
        bool valid = true;
        for (std::size_t k = 0; k < trial.size(); ++k) {
            trial[k] += alpha * lin.x(static_cast<Eigen::Index>(k));
            valid = valid && trial[k] > 0.0 && trial[k] < 1.0;
        }
        if (!valid)
            continue;
        const ConformalGraph<N> cand(current.grid, current.form, trial);
        const double r = sup_norm(conformal_residual(cand, psi_t, cfg.m));
        if (std::isfinite(r) && r < out.residual_before) {
            out.v = std::move(trial);
            out.residual_after = r;
            out.step_length = alpha;
            out.step_norm = alpha * lin.x.cwiseAbs().maxCoeff();
            return out;
        }
    }
    out.failure = SolveStatus::LineSearchFailed;
    return out;
}

namespace detail {

template <int N>
bool conformal_admissible(const ConformalGraph<N>& cg, int m)
{
    for (const auto& S : conformal_symmetric(cg))
        if (!in_gamma_cone(S, m))
            return false;
    return true;
}

template <int N>
void finalize_report(SolveResult<N>& res, const PsiSpec& psi, const SolverConfig& cfg)
{
    SolveReport& rep = res.report;
    const auto& grid = *res.conformal.grid;
    res.residual = conformal_residual(res.conformal, psi, cfg.m);
    rep.residual_sup = sup_norm(res.residual);
    rep.residual_l2 = grid.l2_norm(res.residual);
    try {
        rep.residual_sup_spherical = sup_norm(hm_residual(res.graph, psi, cfg.m).residual);
    } catch (const Error&) {
        rep.residual_sup_spherical = std::numeric_limits<double>::quiet_NaN();
    }
    rep.admissible = conformal_admissible(res.conformal, cfg.m);
    double zmin = std::numeric_limits<double>::infinity();
    double zmax = -zmin;
    for (double z : res.graph.z) {
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
    }
    rep.annulus_margin_low = zmin - psi.R1();
    rep.annulus_margin_high = psi.R2() - zmax;
    constexpr double annulus_tolerance = 1e-8;
    rep.annulus_ok = rep.annulus_margin_low >= -annulus_tolerance && rep.annulus_margin_high >= -annulus_tolerance;
    if (rep.admissible) {
        const auto spec = ellipticity_spectrum(res.conformal, cfg.m);
        rep.ellipticity_max = spec.max_eigenvalue;
        rep.ellipticity_min_abs = spec.min_abs;
        rep.elliptic = spec.max_eigenvalue < 0.0;
    }
    if (rep.status == SolveStatus::Converged && !rep.admissible) {
        rep.status = SolveStatus::LostAdmissibility;
        rep.message = "final iterate is not m-admissible";
    }
    rep.converged = rep.status == SolveStatus::Converged && rep.residual_sup <= cfg.newton_tol;
}

} // namespace detail

/// Newton-continuation solve of F_m(a(z)) = C(n,m) psi(u, z) in the conformal variable.
///
/// Starts from the sphere R0 solving psi_0 = c^m(R0) / s^m(rho) exactly and follows
/// psi_t = (1 - t) psi_0 + t psi over continuation_steps stages. Throws
/// PsiConditionsFailed when require_psi_conditions is set and psi fails the barrier or
/// monotonicity checks; every other failure is reported through SolveReport::status.
template <int N>
SolveResult<N> continuation_solve(GridPtr<N> grid, const PsiSpec& psi, const SolverConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate(N);
    if (psi.n() != N || psi.m() != cfg.m)
        throw Error(ErrorCode::ConfigError, "solver: psi context (n, m) does not match the solve");
    if (cfg.require_psi_conditions) {
        const ConditionReport cond = check_conditions(psi, *grid);
        if (!cond.all_ok())
            throw Error(ErrorCode::PsiConditionsFailed, "psi fails the barrier or monotonicity conditions");
    }
    const SpaceForm& form = psi.form();
    const double R0 = cfg.initial_radius.value_or(0.5 * (psi.R1() + psi.R2()));
    const double guard = cfg.guard_fraction * (psi.R2() - psi.R1());

    ScalarField v(grid->size(), form.to_conformal(R0));
    std::vector<PsiSpec> stages;
    if (cfg.initial_field) {
        if (cfg.initial_field->size() != grid->size())
            throw Error(ErrorCode::ConfigError, "solver: initial field size does not match grid");
        for (std::size_t k = 0; k < v.size(); ++k)
            v[k] = form.to_conformal((*cfg.initial_field)[k]);
        stages.push_back(psi);
    } else {
        if (!(R0 > 0.0 && R0 < form.upper_radius()))
            throw Error(ErrorCode::ConfigError, "solver: initial radius outside (0, a)");
        const PsiSpec psi0 = sphere_psi(form, N, cfg.m, R0, psi.R1(), psi.R2());
        for (int s = 1; s <= cfg.continuation_steps; ++s)
            stages.push_back(psi.blend_from(psi0, static_cast<double>(s) / cfg.continuation_steps));
    }

    SolveReport rep;
    rep.status = SolveStatus::Converged;
    ConformalGraph<N> cg(grid, form, v);
    for (std::size_t stage = 0; stage < stages.size() && rep.status == SolveStatus::Converged; ++stage) {
        const PsiSpec& psi_t = stages[stage];
        const double tol = stage + 1 == stages.size() ? cfg.newton_tol : cfg.stage_tol;
        int iters = 0;
        double r = sup_norm(conformal_residual(cg, psi_t, cfg.m));
        while (r > tol) {
            if (iters == cfg.max_newton_iters) {
                rep.status = SolveStatus::MaxItersExceeded;
                rep.message = "stage " + std::to_string(stage + 1) + " did not reach tolerance";
                break;
            }
            NewtonStepResult<N> step = newton_step(cg, psi_t, cfg);
            rep.linear_iterations += step.linear_iterations;
            if (step.failure) {
                rep.status = *step.failure;
                rep.message = "stage " + std::to_string(stage + 1) + ", iteration " + std::to_string(iters + 1);
                break;
            }
            ++iters;
            cg = ConformalGraph<N>(grid, form, std::move(step.v));
            r = step.residual_after;
            rep.residual_history.push_back(r);
            bool outside = false;
            for (double x : cg.v) {
                const double z = form.from_conformal(x);
                outside = outside || z < psi.R1() - guard || z > psi.R2() + guard;
            }
            if (outside) {
                rep.status = SolveStatus::LeftAnnulus;
                rep.message = "iterate left the guard band around [R1, R2]";
                break;
            }
            if (!detail::conformal_admissible(cg, cfg.m)) {
                if (cfg.admissibility_policy == AdmissibilityPolicy::Reject) {
                    rep.status = SolveStatus::LostAdmissibility;
                    rep.message = "iterate left Gamma_m";
                    break;
                }
                ++rep.admissibility_warnings;
            }
        }
        rep.iterations.push_back(iters);
    }

    SolveResult<N> res{from_conformal(cg), cg, ScalarField{}, std::move(rep)};
    detail::finalize_report(res, psi, cfg);
    res.report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace hmcurv

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "hmcurv/conformal.hpp"
#include "hmcurv/fixtures.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/report.hpp"
#include "hmcurv/solver.hpp"
#include "hmcurv/verify.hpp"

namespace hmcurv {

struct SuiteResult {
    std::string name;
    bool pass = false;
    Json details;
};

struct IdentityOptions {
    int K = -1;
    int m = 1;
    int resolution = 0; ///< 0 picks 256 (n = 1) or 32 (n = 2)
    std::uint64_t seed = 1;
    double amplitude = 0.0; ///< 0 picks 0.02
};

namespace detail {

inline double base_radius(const SpaceForm& form) { return form.is_hyperbolic() ? 1.0 : 0.7; }

template <int N>
double curvature_discrepancy(const RadialGraph<N>& graph)
{
    const ShapeData<N> shape = compute_shape(graph);
    const auto conf = conformal_curvatures(to_conformal(graph));
    double d = 0.0;
    for (std::size_t k = 0; k < shape.size(); ++k)
        d = std::max(d, (shape.lambda[k] - conf[k]).cwiseAbs().maxCoeff());
    return d;
}

} // namespace detail

/// Constant graphs: principal curvatures equal c/s(R) without any differencing error.
template <int N>
SuiteResult sphere_suite(const SpaceForm& form, int m, int resolution)
{
    auto grid = std::make_shared<const SphereGrid<N>>(resolution);
    const std::vector<double> radii = form.is_hyperbolic() ? std::vector<double>{0.5, 1.0, 2.0} : std::vector<double>{0.3, 0.7};
    SuiteResult r{"sphere_exactness", true, Json::array()};
    for (double R : radii) {
        const RadialGraph<N> g{grid, form, ScalarField(grid->size(), R)};
        const ShapeData<N> shape = compute_shape(g);
        const double exact = form.sphere_curvature(R);
        double err = 0.0, herr = 0.0;
        for (std::size_t k = 0; k < shape.size(); ++k) {
            err = std::max(err, (shape.lambda[k].array() - exact).abs().maxCoeff());
            herr = std::max(herr, std::abs(shape.S[k][static_cast<std::size_t>(m)] / binomial(N, m) - std::pow(exact, m)));
        }
        const bool ok = err < 1e-10 && herr < 1e-10;
        r.pass = r.pass && ok;
        r.details.push_back(Json{{"R", R}, {"lambda_error", err}, {"H_m_error", herr}, {"pass", ok}});
    }
    return r;
}

/// Principal curvatures from the spherical and the conformal formulas on a random graph,
/// at the given resolution and its double.
template <int N>
SuiteResult dual_path_suite(const SpaceForm& form, int resolution, double amplitude, std::uint64_t seed)
{
    const RandomSurface<N> surf(detail::base_radius(form), amplitude, seed);
    auto coarse = std::make_shared<const SphereGrid<N>>(resolution);
    auto fine = std::make_shared<const SphereGrid<N>>(2 * resolution);
    const double d1 = detail::curvature_discrepancy(surf.sample(coarse, form));
    const double d2 = detail::curvature_discrepancy(surf.sample(fine, form));
    const double ratio = d1 / d2;
    SuiteResult r{"dual_path", d1 < 1e-6 && (ratio >= 3.5 || d2 < 1e-12), {}};
    r.details = Json{{"resolution", resolution}, {"discrepancy", d1}, {"discrepancy_refined", d2}, {"ratio", ratio}};
    return r;
}

/// S_m(sv) against the A/B expansion, the lower bound A^m S_m(v) and admissibility of sv.
template <int N>
SuiteResult scaling_suite(const SpaceForm& form, int m, int resolution, double amplitude, std::uint64_t seed)
{
    const std::vector<double> scales = form.is_hyperbolic() ? std::vector<double>{1.0, 1.1, 1.5} : std::vector<double>{0.7, 0.9, 1.0};
    auto grid = std::make_shared<const SphereGrid<N>>(resolution);
    const double R = detail::base_radius(form);
    const RadialGraph<N> sphere{grid, form, ScalarField(grid->size(), R)};
    const RadialGraph<N> bumpy = RandomSurface<N>(R, amplitude, seed).sample(grid, form);
    SuiteResult r{"scaled_sm", true, Json::array()};
    for (const auto* g : {&sphere, &bumpy}) {
        const bool constant = g == &sphere;
        for (double s : scales) {
            const ScaledSmReport rep = scaled_sm(to_conformal(*g), s, m);
            const bool ok = rep.max_discrepancy < 1e-9 && (!constant || rep.max_spherical_discrepancy < 1e-9) &&
                            rep.inequality_holds && rep.sv_admissible;
            r.pass = r.pass && ok;
            r.details.push_back(Json{{"graph", constant ? "sphere" : "random"},
                                     {"s", s},
                                     {"max_discrepancy", rep.max_discrepancy},
                                     {"max_spherical_discrepancy", rep.max_spherical_discrepancy},
                                     {"inequality_holds", rep.inequality_holds},
                                     {"equality_nodes", rep.equality_nodes},
                                     {"sv_admissible", rep.sv_admissible},
                                     {"pass", ok}});
        }
    }
    return r;
}

template <int N>
SuiteResult ellipticity_suite(const SpaceForm& form, int m, int resolution, double amplitude, std::uint64_t seed)
{
    auto grid = std::make_shared<const SphereGrid<N>>(resolution);
    const double R = detail::base_radius(form);
    SuiteResult r{"ellipticity", true, Json::array()};
    for (std::uint64_t k = 0; k < 3; ++k) {
        const RadialGraph<N> g = k == 0 ? RadialGraph<N>{grid, form, ScalarField(grid->size(), R)}
                                        : RandomSurface<N>(R, amplitude, seed + k).sample(grid, form);
        const auto spec = ellipticity_spectrum(to_conformal(g), m);
        const bool ok = spec.max_eigenvalue < -1e-12;
        r.pass = r.pass && ok;
        r.details.push_back(Json{{"graph", k == 0 ? "sphere" : "random"},
                                 {"max_eigenvalue", spec.max_eigenvalue},
                                 {"min_abs", spec.min_abs},
                                 {"pass", ok}});
    }
    return r;
}

/// Q(1) = 0, dQ/ds >= 0 for monotone psi, Q identically zero in the equality case.
template <int N>
SuiteResult q_profile_suite(const SpaceForm& form, int m, int resolution, const PsiSpec* configured)
{
    SuiteResult r{"q_profile", true, Json::array()};
    if (!form.is_hyperbolic()) {
        r.details = Json{{"skipped", "Q profile is defined for K = -1 only"}};
        return r;
    }
    auto grid = std::make_shared<const SphereGrid<N>>(resolution);
    const double R1 = 0.8, R2 = 1.6;
    const double C = std::pow(std::cosh(1.2), m);
    std::vector<std::pair<PsiSpec, bool>> cases;
    cases.emplace_back(sphere_psi(form, N, m, 1.2, R1, R2), true);
    cases.emplace_back(PsiSpec::parse("exp(-0.2*(rho-1.2))*" + format_double(C) + "/pow(sinh(rho)," + std::to_string(m) + ")",
                                      form, N, m, R1, R2),
                       false);
    if (configured)
        cases.emplace_back(*configured, false);
    for (const auto& [psi, equality] : cases) {
        const ScalarField v(grid->size(), form.to_conformal(0.5 * (psi.R1() + psi.R2())));
        const QSweepReport q = q_sweep(psi, *grid, v);
        const bool monotone = check_monotonicity(psi, *grid).monotone_ok;
        bool ok = q.max_abs_q_at_one <= 1e-14;
        if (monotone)
            ok = ok && q.min_dQ >= -1e-8;
        if (equality)
            ok = ok && q.max_abs_Q < 1e-12;
        r.pass = r.pass && ok;
        r.details.push_back(Json{{"psi", psi.definition()},
                                 {"monotone", monotone},
                                 {"max_abs_q_at_one", q.max_abs_q_at_one},
                                 {"min_dQ", q.min_dQ},
                                 {"max_abs_Q", q.max_abs_Q},
                                 {"s_max", q.s_max},
                                 {"pass", ok}});
    }
    return r;
}

/// z = R2 - eps (1 - cos d(u, u0)) touches the outer sphere at the node u0.
template <int N>
RadialGraph<N> touching_graph(GridPtr<N> grid, const SpaceForm& form, double R2, double eps, std::size_t u0)
{
    const auto x0 = grid->node(u0);
    return RadialGraph<N>{grid, form, ScalarField::sample(*grid, [&](const std::array<double, N>& u) {
                              double cos_d;
                              if constexpr (N == 1)
                                  cos_d = std::cos(u[0] - x0[0]);
                              else
                                  cos_d = std::sin(u[0]) * std::sin(x0[0]) * std::cos(u[1] - x0[1]) +
                                          std::cos(u[0]) * std::cos(x0[0]);
                              return R2 - eps * (1.0 - std::min(1.0, cos_d));
                          })};
}

template <int N>
std::size_t touching_node(const SphereGrid<N>& grid)
{
    if constexpr (N == 1)
        return 0;
    else
        return grid.index(grid.resolution() / 2, 0);
}

template <int N>
SuiteResult boundary_touch_suite(const SpaceForm& form, int m, int resolution)
{
    auto grid = std::make_shared<const SphereGrid<N>>(resolution);
    const double R2 = form.is_hyperbolic() ? 1.6 : 1.2;
    const std::size_t u0 = touching_node(*grid);
    const RadialGraph<N> g = touching_graph(grid, form, R2, 0.05, u0);
    const BoundaryTouchReport rep =
        boundary_touch_identity(g, m, Boundary::Outer, R2, u0, {0.0, 0.25, 0.5, 0.75, 1.0});
    const double mu_error = std::abs(rep.mu - form.sphere_curvature(R2));
    SuiteResult r{"boundary_touch", rep.max_discrepancy < 1e-10 && rep.positive && mu_error < 1e-12, to_json(rep)};
    r.details["mu_error"] = mu_error;
    return r;
}

template <int N>
SuiteResult jacobian_suite(const SpaceForm& form, int m, std::uint64_t seed)
{
    auto grid = std::make_shared<const SphereGrid<N>>(N == 1 ? 16 : 8);
    const double R = detail::base_radius(form);
    const PsiSpec psi = sphere_psi(form, N, m, R, 0.5 * R, 1.5 * R);
    const ConformalGraph<N> cg = to_conformal(RandomSurface<N>(R, 0.03, seed).sample(grid, form));
    const JacobianCheck jc = jacobian_check(cg, psi, m);
    return {"jacobian", jc.relative_error < 1e-6,
            Json{{"nodes", grid->size()}, {"relative_error", jc.relative_error}, {"max_abs_entry", jc.max_abs_entry}}};
}

template <int N>
std::vector<SuiteResult> run_identity_suites(const IdentityOptions& opt, const PsiSpec* configured = nullptr)
{
    const SpaceForm form(opt.K);
    const int res = opt.resolution > 0 ? opt.resolution : (N == 1 ? 256 : 32);
    const double amp = opt.amplitude > 0.0 ? opt.amplitude : 0.02;
    std::vector<SuiteResult> out;
    out.push_back(sphere_suite<N>(form, opt.m, res));
    out.push_back(dual_path_suite<N>(form, res, amp, opt.seed));
    out.push_back(scaling_suite<N>(form, opt.m, res, amp, opt.seed));
    out.push_back(ellipticity_suite<N>(form, opt.m, res, amp, opt.seed));
    out.push_back(q_profile_suite<N>(form, opt.m, res, configured));
    out.push_back(boundary_touch_suite<N>(form, opt.m, res));
    out.push_back(jacobian_suite<N>(form, opt.m, opt.seed));
    return out;
}

} // namespace hmcurv

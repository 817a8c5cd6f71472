#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hmcurv/errors.hpp"
#include "hmcurv/fixtures.hpp"
#include "hmcurv/identities.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/report.hpp"
#include "hmcurv/solver.hpp"
#include "hmcurv/verify.hpp"

namespace hmcurv {

enum class Mode { Solve, CheckPsi, VerifyIdentities, Compare };

inline const char* to_string(Mode m)
{
    switch (m) {
    case Mode::Solve: return "solve";
    case Mode::CheckPsi: return "check-psi";
    case Mode::VerifyIdentities: return "verify-identities";
    case Mode::Compare: return "compare";
    }
    return "solve";
}

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int mismatch = 1;
inline constexpr int config = 2;
inline constexpr int psi_conditions = 3;
inline constexpr int solver = 4;
} // namespace exit_code

struct RunConfig {
    Mode mode = Mode::Solve;
    int K = -1;
    int n = 1;
    int m = 1;
    double R1 = 0.8;
    double R2 = 1.6;
    int resolution = 0; ///< 0 picks a per-mode default
    std::string psi;
    std::string manufactured_z; ///< alternative to psi: exact solution z*(theta, phi)
    double manufactured_eps = 0.2;
    SolverConfig solver;
    bool newton_tol_set = false;
    bool strict_psi = true;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::string solution_a;
    std::string solution_b;
    std::optional<double> compare_tolerance;

    int effective_resolution() const
    {
        if (resolution > 0)
            return resolution;
        return n == 1 ? 256 : 32;
    }

    /// Defaults to 1e-11, or 1e-9 for n = 2 where the pole rows put the residual's
    /// rounding floor near 1e-10 on fine grids.
    double effective_newton_tol() const { return newton_tol_set ? solver.newton_tol : (n == 1 ? 1e-11 : 1e-9); }

    void validate() const
    {
        if (K != -1 && K != 1)
            throw Error(ErrorCode::ConfigError, "K must be -1 or 1");
        if (n != 1 && n != 2)
            throw Error(ErrorCode::ConfigError, "n must be 1 or 2");
        if (m < 1 || m > n)
            throw Error(ErrorCode::ConfigError, "m must satisfy 1 <= m <= n");
        if (resolution != 0 && resolution < 8)
            throw Error(ErrorCode::ConfigError, "resolution must be at least 8");
        if (mode == Mode::Solve || mode == Mode::CheckPsi) {
            if (psi.empty() == manufactured_z.empty())
                throw Error(ErrorCode::ConfigError, "exactly one of psi and manufactured_z must be given");
            if (!(R1 > 0.0 && R1 < R2 && R2 < SpaceForm(K).upper_radius()))
                throw Error(ErrorCode::ConfigError, "annulus must satisfy 0 < R1 < R2 < a");
        }
        if (mode == Mode::Compare && (solution_a.empty() || solution_b.empty()))
            throw Error(ErrorCode::ConfigError, "compare needs two solution files");
        if (compare_tolerance && !(*compare_tolerance > 0.0))
            throw Error(ErrorCode::ConfigError, "compare tolerance must be positive");
        SolverConfig s = solver;
        s.m = m;
        s.newton_tol = effective_newton_tol();
        s.validate(n);
    }
};

namespace detail {

inline LinearSolverKind parse_linear_solver(const std::string& s)
{
    if (s == "auto")
        return LinearSolverKind::Auto;
    if (s == "direct-dense")
        return LinearSolverKind::DirectDense;
    if (s == "direct-sparse")
        return LinearSolverKind::DirectSparse;
    if (s == "iterative-krylov")
        return LinearSolverKind::IterativeKrylov;
    throw Error(ErrorCode::ConfigError, "unknown linear_solver '" + s + "'");
}

inline AdmissibilityPolicy parse_policy(const std::string& s)
{
    if (s == "warn")
        return AdmissibilityPolicy::Warn;
    if (s == "reject")
        return AdmissibilityPolicy::Reject;
    throw Error(ErrorCode::ConfigError, "unknown admissibility_policy '" + s + "'");
}

} // namespace detail

inline Mode parse_mode(const std::string& s)
{
    for (Mode m : {Mode::Solve, Mode::CheckPsi, Mode::VerifyIdentities, Mode::Compare})
        if (s == to_string(m))
            return m;
    throw Error(ErrorCode::ConfigError, "unknown mode '" + s + "'");
}

/// Reads an INI file with sections [problem], [grid], [solver], [output], [compare].
inline void apply_ini(RunConfig& cfg, const std::string& path)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
    }
    try {
        if (auto v = tree.get_optional<std::string>("mode"))
            cfg.mode = parse_mode(*v);
        if (auto p = tree.get_child_optional("problem")) {
            cfg.K = p->get("K", cfg.K);
            cfg.n = p->get("n", cfg.n);
            cfg.m = p->get("m", cfg.m);
            cfg.R1 = p->get("R1", cfg.R1);
            cfg.R2 = p->get("R2", cfg.R2);
            cfg.psi = p->get("psi", cfg.psi);
            cfg.manufactured_z = p->get("manufactured_z", cfg.manufactured_z);
            cfg.manufactured_eps = p->get("manufactured_eps", cfg.manufactured_eps);
            cfg.strict_psi = p->get("strict_psi", cfg.strict_psi);
            cfg.seed = p->get("seed", cfg.seed);
        }
        if (auto g = tree.get_child_optional("grid"))
            cfg.resolution = g->get("resolution", cfg.resolution);
        if (auto s = tree.get_child_optional("solver")) {
            SolverConfig& c = cfg.solver;
            c.max_newton_iters = s->get("max_newton_iters", c.max_newton_iters);
            if (auto tol = s->get_optional<double>("newton_tol")) {
                c.newton_tol = *tol;
                cfg.newton_tol_set = true;
            }
            c.stage_tol = s->get("stage_tol", c.stage_tol);
            c.damping_factor = s->get("damping_factor", c.damping_factor);
            c.min_step = s->get("min_step", c.min_step);
            c.continuation_steps = s->get("continuation_steps", c.continuation_steps);
            if (auto ls = s->get_optional<std::string>("linear_solver"))
                c.linear_solver = detail::parse_linear_solver(*ls);
            c.dense_limit = s->get("dense_limit", c.dense_limit);
            c.krylov_restart = s->get("krylov_restart", c.krylov_restart);
            c.krylov_max_iters = s->get("krylov_max_iters", c.krylov_max_iters);
            c.krylov_tol = s->get("krylov_tol", c.krylov_tol);
            if (auto r0 = s->get_optional<double>("initial_radius"))
                c.initial_radius = *r0;
            if (auto pol = s->get_optional<std::string>("admissibility_policy"))
                c.admissibility_policy = detail::parse_policy(*pol);
            c.guard_fraction = s->get("guard_fraction", c.guard_fraction);
        }
        if (auto o = tree.get_child_optional("output"))
            cfg.out_dir = o->get("dir", cfg.out_dir);
        if (auto c = tree.get_child_optional("compare")) {
            cfg.solution_a = c->get("solution_a", cfg.solution_a);
            cfg.solution_b = c->get("solution_b", cfg.solution_b);
            if (auto t = c->get_optional<double>("tolerance"))
                cfg.compare_tolerance = *t;
        }
    } catch (const pt::ptree_bad_data& e) {
        throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
    }
}

inline Json config_json(const RunConfig& cfg)
{
    const SolverConfig& s = cfg.solver;
    Json j;
    j["mode"] = to_string(cfg.mode);
    j["K"] = cfg.K;
    j["n"] = cfg.n;
    j["m"] = cfg.m;
    j["R1"] = cfg.R1;
    j["R2"] = cfg.R2;
    j["resolution"] = cfg.effective_resolution();
    j["psi"] = cfg.psi;
    j["manufactured_z"] = cfg.manufactured_z;
    j["manufactured_eps"] = cfg.manufactured_eps;
    j["strict_psi"] = cfg.strict_psi;
    j["seed"] = cfg.seed;
    j["solver"] = {{"max_newton_iters", s.max_newton_iters},
                   {"newton_tol", cfg.effective_newton_tol()},
                   {"stage_tol", s.stage_tol},
                   {"damping_factor", s.damping_factor},
                   {"min_step", s.min_step},
                   {"continuation_steps", s.continuation_steps},
                   {"linear_solver", to_string(s.linear_solver)},
                   {"dense_limit", s.dense_limit},
                   {"initial_radius", s.initial_radius.value_or(0.5 * (cfg.R1 + cfg.R2))},
                   {"admissibility_policy", to_string(s.admissibility_policy)},
                   {"guard_fraction", s.guard_fraction}};
    return j;
}

inline PsiSpec make_psi(const RunConfig& cfg)
{
    const SpaceForm form(cfg.K);
    if (!cfg.manufactured_z.empty())
        return manufactured_psi(cfg.manufactured_z, cfg.manufactured_eps, form, cfg.n, cfg.m, cfg.R1, cfg.R2);
    return PsiSpec::parse(cfg.psi, form, cfg.n, cfg.m, cfg.R1, cfg.R2);
}

namespace detail {

inline std::string out_path(const RunConfig& cfg, const std::string& name)
{
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

template <int N>
int run_solve(const RunConfig& cfg, std::ostream& log)
{
    const PsiSpec psi = make_psi(cfg);
    auto grid = std::make_shared<const SphereGrid<N>>(cfg.effective_resolution());
    const ConditionReport cond = check_conditions(psi, *grid);
    Json report;
    report["config"] = config_json(cfg);
    report["psi"] = psi.definition();
    report["conditions"] = to_json(cond);
    if (!cond.all_ok()) {
        write_text(out_path(cfg, "conditions.json"), dump_json(Json{{"psi", psi.definition()}, {"conditions", to_json(cond)}}));
        if (cfg.strict_psi) {
            log << "psi conditions failed; see conditions.json\n";
            return exit_code::psi_conditions;
        }
        log << "warning: psi conditions failed, continuing (strict_psi = false)\n";
    }
    SolverConfig sc = cfg.solver;
    sc.m = cfg.m;
    sc.newton_tol = cfg.effective_newton_tol();
    sc.require_psi_conditions = false;
    const SolveResult<N> res = continuation_solve<N>(grid, psi, sc);
    report["solve"] = to_json(res.report);
    if (!cfg.manufactured_z.empty()) {
        const RadialGraph<N> exact = sample_expression<N>(grid, psi.form(), cfg.manufactured_z);
        double err = 0.0;
        for (std::size_t k = 0; k < grid->size(); ++k)
            err = std::max(err, std::abs(res.graph.z[k] - exact.z[k]));
        report["manufactured_error_sup"] = err;
    }
    write_text(out_path(cfg, "solution.csv"), solution_csv(res.graph, res.residual));
    write_text(out_path(cfg, "report.json"), dump_json(report));
    log << "solve: " << to_string(res.report.status) << ", residual " << format_double(res.report.residual_sup)
        << ", wall time " << res.report.wall_time_s << " s\n";
    if (!res.report.converged)
        return exit_code::solver;
    if (!res.report.annulus_ok || !res.report.elliptic)
        return exit_code::mismatch;
    return exit_code::ok;
}

template <int N>
int run_check_psi(const RunConfig& cfg, std::ostream& log)
{
    const PsiSpec psi = make_psi(cfg);
    auto grid = std::make_shared<const SphereGrid<N>>(cfg.effective_resolution());
    const ConditionReport cond = check_conditions(psi, *grid);
    Json j;
    j["config"] = config_json(cfg);
    j["psi"] = psi.definition();
    j["conditions"] = to_json(cond);
    const double rho_max = psi.form().is_hyperbolic() ? psi.R2() + (psi.R2() - psi.R1())
                                                      : psi.R2() + 0.5 * (psi.form().upper_radius() - psi.R2());
    j["extension"] = to_json(check_extension(psi, *grid, rho_max));
    write_text(out_path(cfg, "conditions.json"), dump_json(j));
    log << "check-psi: " << (cond.all_ok() ? "all conditions hold" : "conditions violated") << "\n";
    return cond.all_ok() || !cfg.strict_psi ? exit_code::ok : exit_code::psi_conditions;
}

template <int N>
int run_verify(const RunConfig& cfg, std::ostream& log)
{
    IdentityOptions opt;
    opt.K = cfg.K;
    opt.m = cfg.m;
    opt.resolution = cfg.resolution;
    opt.seed = cfg.seed;
    std::optional<PsiSpec> psi;
    if (!cfg.psi.empty() || !cfg.manufactured_z.empty())
        psi = make_psi(cfg);
    const auto suites = run_identity_suites<N>(opt, psi ? &*psi : nullptr);
    Json j;
    j["config"] = config_json(cfg);
    Json list = Json::object();
    bool all = true;
    for (const auto& s : suites) {
        list[s.name] = Json{{"pass", s.pass}, {"details", s.details}};
        all = all && s.pass;
        log << "  " << s.name << ": " << (s.pass ? "pass" : "FAIL") << "\n";
    }
    j["all_pass"] = all;
    j["suites"] = list;
    write_text(out_path(cfg, "identities.json"), dump_json(j));
    return all ? exit_code::ok : exit_code::mismatch;
}

template <int N>
int run_compare(const RunConfig& cfg, const SolutionTable& a, const SolutionTable& b, std::ostream& log)
{
    const SpaceForm form(cfg.K);
    const RadialGraph<N> z1 = graph_from_table<N>(a, form);
    const RadialGraph<N> z2 = graph_from_table<N>(b, form);
    const double tol = cfg.compare_tolerance.value_or(10.0 * cfg.effective_newton_tol());
    const ScalingFit fwd = fit_scaling_constant(z1, z2, tol);
    const ScalingFit rev = fit_scaling_constant(z2, z1, tol);
    Json j;
    j["solution_a"] = cfg.solution_a;
    j["solution_b"] = cfg.solution_b;
    j["fit"] = to_json(fwd);
    j["reverse_fit"] = to_json(rev);
    j["inverse_product"] = fwd.c * rev.c;
    write_text(out_path(cfg, "scaling.json"), dump_json(j));
    log << "compare: c = " << format_double(fwd.c) << ", residual " << format_double(fwd.residual)
        << (fwd.related ? " (related" : " (not related") << (fwd.identical ? ", identical)\n" : ")\n");
    return fwd.related ? exit_code::ok : exit_code::mismatch;
}

} // namespace detail

/// Runs one mode end to end and returns the process exit status.
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr)
{
    try {
        cfg.validate();
        std::filesystem::create_directories(cfg.out_dir);
        switch (cfg.mode) {
        case Mode::Solve: return cfg.n == 1 ? detail::run_solve<1>(cfg, log) : detail::run_solve<2>(cfg, log);
        case Mode::CheckPsi: return cfg.n == 1 ? detail::run_check_psi<1>(cfg, log) : detail::run_check_psi<2>(cfg, log);
        case Mode::VerifyIdentities: return cfg.n == 1 ? detail::run_verify<1>(cfg, log) : detail::run_verify<2>(cfg, log);
        case Mode::Compare: {
            const SolutionTable a = read_solution_csv(cfg.solution_a);
            const SolutionTable b = read_solution_csv(cfg.solution_b);
            if (a.n != b.n)
                throw Error(ErrorCode::GridMismatch, "solution tables have different sphere dimensions");
            return a.n == 1 ? detail::run_compare<1>(cfg, a, b, log) : detail::run_compare<2>(cfg, a, b, log);
        }
        }
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        switch (e.code()) {
        case ErrorCode::PsiConditionsFailed: return exit_code::psi_conditions;
        case ErrorCode::NotAdmissible:
        case ErrorCode::DegenerateMetric:
        case ErrorCode::ScaleOutOfRange:
        case ErrorCode::NotAtBoundary:
        case ErrorCode::NotAtMaximum: return exit_code::mismatch;
        default: return exit_code::config;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        log << "error: " << e.what() << "\n";
        return exit_code::config;
    }
    return exit_code::config;
}

} // namespace hmcurv

#include <cmath>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "hmcurv/psi.hpp"

using namespace hmcurv;

namespace {

double eval(const std::string& text, double rho = 0.0, double theta = 0.0, double phi = 0.0)
{
    return Expression::parse(text).evaluate({rho, theta, phi});
}

ErrorCode parse_error_code(const std::string& text)
{
    try {
        (void)Expression::parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::DomainError;
}

const char* const samples[] = {
    "pow(cosh(1.0),2)/pow(sinh(rho),2) * (1 + 0.1*cos(theta))",
    "exp(-0.2*rho) * cosh(1.2) / sinh(rho) * (1 + 0.05*sin(theta)*cos(phi))",
    "coth(rho)^2 + tan(0.3*theta) - cot(1 + phi)",
    "sqrt(1 + rho^2) * log(2 + sin(theta)) / tanh(rho)",
    "pow(rho, theta + 1) - -rho",
};

} // namespace

TEST(ExpressionParse, Arithmetic)
{
    EXPECT_DOUBLE_EQ(eval("2+3*4"), 14.0);
    EXPECT_DOUBLE_EQ(eval("(2+3)*4"), 20.0);
    EXPECT_DOUBLE_EQ(eval("8/4/2"), 1.0);
    EXPECT_DOUBLE_EQ(eval("10-4-3"), 3.0);
    EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
    EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
    EXPECT_DOUBLE_EQ(eval("2^-1"), 0.5);
    EXPECT_DOUBLE_EQ(eval("pow(2, 3)"), 8.0);
    EXPECT_DOUBLE_EQ(eval("1.5e2 + .5"), 150.5);
    EXPECT_DOUBLE_EQ(eval("pi"), std::numbers::pi);
    EXPECT_DOUBLE_EQ(eval("+rho", 3.0), 3.0);
}

TEST(ExpressionParse, VariablesAndFunctions)
{
    const double r = 0.7, t = 1.1, p = 2.3;
    EXPECT_DOUBLE_EQ(eval("rho*theta - phi", r, t, p), r * t - p);
    EXPECT_NEAR(eval("coth(rho)", r), 1.0 / std::tanh(r), 1e-15);
    EXPECT_NEAR(eval("cot(theta)", r, t), 1.0 / std::tan(t), 1e-15);
    EXPECT_NEAR(eval("sinh(rho)+cosh(rho)-exp(rho)", r), 0.0, 1e-15);
    EXPECT_NEAR(eval("sin(theta)^2 + cos(theta)^2", r, t), 1.0, 1e-15);
    EXPECT_NEAR(eval("log(exp(rho))", r), r, 1e-15);
    EXPECT_NEAR(eval("sqrt(rho)^2", r), r, 1e-15);
    EXPECT_NEAR(eval("tanh(rho) - sinh(rho)/cosh(rho)", r), 0.0, 1e-15);
    EXPECT_NEAR(eval("tan(phi) - sin(phi)/cos(phi)", r, t, p), 0.0, 1e-14);
}

TEST(ExpressionParse, Errors)
{
    for (const char* bad : {"", "1+", "foo(1)", "sin 1", "(1", "1)", "rho rho", "pow(1)", "sin(1,2)", "3 $ 4", "x"})
        EXPECT_EQ(parse_error_code(bad), ErrorCode::ParseError) << bad;
}

TEST(ExpressionDerivative, MatchesFiniteDifferences)
{
    const Bindings pts[] = {{0.8, 0.3, 1.0}, {1.3, 2.0, 4.0}, {1.1, 1.2, 0.2}};
    for (const char* text : samples) {
        const Expression e = Expression::parse(text);
        for (const Var v : {Var::Rho, Var::Theta, Var::Phi}) {
            const Expression d = e.derivative(v);
            for (Bindings b : pts) {
                const double h = 1e-5;
                Bindings up = b, dn = b;
                double& xu = v == Var::Rho ? up.rho : v == Var::Theta ? up.theta : up.phi;
                double& xd = v == Var::Rho ? dn.rho : v == Var::Theta ? dn.theta : dn.phi;
                xu += h;
                xd -= h;
                const double fd = (e(up) - e(dn)) / (2 * h);
                EXPECT_NEAR(d(b), fd, 1e-7 * (1 + std::abs(fd))) << text;
            }
        }
    }
}

TEST(ExpressionDerivative, IndependenceIsExact)
{
    const Expression e = Expression::parse("exp(-rho) * sin(theta)");
    EXPECT_TRUE(e.depends_on(Var::Rho));
    EXPECT_FALSE(e.depends_on(Var::Phi));
    EXPECT_TRUE(e.derivative(Var::Phi).is_constant());
    EXPECT_EQ(e.derivative(Var::Phi).constant_value(), 0.0);
    EXPECT_TRUE(Expression::parse("cosh(1.2)/3").is_constant());
}

TEST(ExpressionText, RoundTrip)
{
    for (const char* text : samples) {
        const Expression e = Expression::parse(text);
        const Expression back = Expression::parse(e.to_string());
        EXPECT_EQ(back.to_string(), e.to_string());
        for (double r : {0.6, 1.4}) {
            const Bindings b{r, 0.9, 2.2};
            EXPECT_EQ(back(b), e(b)) << text;
        }
    }
}

TEST(CompiledExpressionTest, AgreesWithTreeEvaluation)
{
    for (const char* text : samples) {
        const Expression e = Expression::parse(text);
        const Expression d = e.derivative(Var::Rho);
        const CompiledExpression ce(e);
        const CompiledExpression cd(d);
        EXPECT_LE(cd.size(), d.node_count());
        for (double r : {0.6, 1.0, 1.4})
            for (double t : {0.1, 2.5}) {
                const Bindings b{r, t, 0.7};
                EXPECT_DOUBLE_EQ(ce(b), e(b));
                EXPECT_DOUBLE_EQ(cd(b), d(b));
            }
    }
}

TEST(PsiSpecTest, Validation)
{
    const SpaceForm hyp = SpaceForm::hyperbolic();
    const SpaceForm ell = SpaceForm::elliptic();
    EXPECT_THROW(PsiSpec::parse("1/sinh(rho)", hyp, 3, 1, 0.5, 1.5), Error);
    EXPECT_THROW(PsiSpec::parse("1/sinh(rho)", hyp, 2, 0, 0.5, 1.5), Error);
    EXPECT_THROW(PsiSpec::parse("1/sinh(rho)", hyp, 1, 2, 0.5, 1.5), Error);
    EXPECT_THROW(PsiSpec::parse("1/sinh(rho)", hyp, 1, 1, 1.5, 0.5), Error);
    EXPECT_THROW(PsiSpec::parse("1/sinh(rho)", hyp, 1, 1, 0.0, 0.5), Error);
    EXPECT_THROW(PsiSpec::parse("1/sin(rho)", ell, 1, 1, 0.5, 1.6), Error);
    EXPECT_THROW(PsiSpec::parse("cos(phi)/sinh(rho)", hyp, 1, 1, 0.5, 1.5), Error);
    EXPECT_NO_THROW(PsiSpec::parse("cos(phi)/sinh(rho)", hyp, 2, 1, 0.5, 1.5));
}

TEST(PsiSpecTest, EvaluateAndBar)
{
    const PsiSpec psi = PsiSpec::parse("cosh(1)/sinh(rho) * (1 + 0.1*cos(theta))", SpaceForm::hyperbolic(), 2, 1, 0.5, 1.5);
    const std::array<double, 2> u{0.4, 1.0};
    const PsiValue p = psi.evaluate(u, 0.9);
    const double base = std::cosh(1.0) / std::sinh(0.9);
    EXPECT_NEAR(p.value, base * (1 + 0.1 * std::cos(0.4)), 1e-14);
    EXPECT_NEAR(p.d_rho, -base * std::cosh(0.9) / std::sinh(0.9) * (1 + 0.1 * std::cos(0.4)), 1e-14);
    EXPECT_NEAR(p.d_u[0], -base * 0.1 * std::sin(0.4), 1e-14);
    EXPECT_EQ(p.d_u[1], 0.0);
    EXPECT_DOUBLE_EQ(psi.bar(u, 0.9), 2.0 * psi.value(u, 0.9));
    const PsiSpec psi2 = PsiSpec::parse("2", SpaceForm::hyperbolic(), 2, 2, 0.5, 1.5);
    EXPECT_DOUBLE_EQ(psi2.bar_factor(), 1.0);
}

TEST(PsiSpecTest, SpherePrescription)
{
    for (int K : {-1, 1}) {
        const SpaceForm form(K);
        for (int m : {1, 2}) {
            const PsiSpec psi = sphere_psi(form, 2, m, 0.7, 0.4, 1.2);
            EXPECT_NEAR(psi.value(std::array<double, 2>{0.3, 0.1}, 0.7), std::pow(form.sphere_curvature(0.7), m), 1e-14);
        }
    }
}

TEST(PsiSpecTest, BlendEndpoints)
{
    const SpaceForm form = SpaceForm::hyperbolic();
    const PsiSpec start = sphere_psi(form, 1, 1, 1.2, 0.8, 1.6);
    const PsiSpec target = PsiSpec::parse("exp(-0.2*rho) * 2 / sinh(rho)", form, 1, 1, 0.8, 1.6);
    const std::array<double, 1> u{0.3};
    for (double rho : {0.8, 1.1, 1.6}) {
        EXPECT_NEAR(target.blend_from(start, 0.0).value(u, rho), start.value(u, rho), 1e-15);
        EXPECT_NEAR(target.blend_from(start, 1.0).value(u, rho), target.value(u, rho), 1e-15);
        EXPECT_NEAR(target.blend_from(start, 0.25).value(u, rho), 0.75 * start.value(u, rho) + 0.25 * target.value(u, rho), 1e-14);
    }
    EXPECT_EQ(target.blend_from(start, 0.5).definition().rfind("blend(", 0), 0u);
}

TEST(Barrier, ClosedFormMargin)
{
    const SphereGrid<1> grid(16);
    const PsiSpec psi = PsiSpec::parse("cosh(1)/sinh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5);
    const std::array<double, 1> u{0.0};
    // quoted 2.9610 / 0.7971 are rounded low; exact values 2.96123 / 0.79727
    EXPECT_NEAR(psi.value(u, 0.5), 2.9610, 5e-4);
    EXPECT_NEAR(1.0 / std::tanh(0.5), 2.1640, 5e-5);
    const auto r = check_barrier_conditions(psi, grid);
    EXPECT_TRUE(r.barrier_low_ok);
    EXPECT_TRUE(r.barrier_high_ok);
    EXPECT_TRUE(r.positive_ok);
    EXPECT_NEAR(r.low_margin, 0.7971, 5e-4);
    EXPECT_NEAR(r.low_margin, std::cosh(1.0) / std::sinh(0.5) - 1.0 / std::tanh(0.5), 1e-14);
    EXPECT_NEAR(r.high_margin, 1.0 / std::tanh(1.5) - std::cosh(1.0) / std::sinh(1.5), 1e-14);
}

TEST(Barrier, EqualityIsAccepted)
{
    const SphereGrid<2> grid(8);
    for (int K : {-1, 1})
        for (int m : {1, 2}) {
            const SpaceForm form(K);
            const auto r = check_barrier_conditions(sphere_psi(form, 2, m, 0.5, 0.5, 1.2), grid);
            EXPECT_TRUE(r.barrier_low_ok);
            EXPECT_NEAR(r.low_margin, 0.0, 1e-14);
        }
}

TEST(Barrier, Violations)
{
    const SphereGrid<1> grid(16);
    const auto small = check_barrier_conditions(PsiSpec::parse("0.5", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5), grid);
    EXPECT_FALSE(small.barrier_low_ok);
    EXPECT_TRUE(small.barrier_high_ok);
    EXPECT_EQ(small.low_violations.size(), grid.size());
    EXPECT_FALSE(small.all_ok());
    // only the nodes with cos(theta) > 0.5 exceed the outer barrier
    const auto big = check_barrier_conditions(
        PsiSpec::parse("1.1/tanh(rho) + 0.5*(cos(theta) - 0.5)", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5), grid);
    EXPECT_FALSE(big.barrier_high_ok);
    for (std::size_t k : big.high_violations)
        EXPECT_GT(std::cos(grid.node(k)[0]), 0.0);
    EXPECT_LT(big.high_violations.size(), grid.size());
    const auto neg = check_barrier_conditions(PsiSpec::parse("-1", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5), grid);
    EXPECT_FALSE(neg.positive_ok);
}

TEST(Monotonicity, Examples)
{
    const SphereGrid<1> grid(16);
    const SpaceForm hyp = SpaceForm::hyperbolic();
    for (int m : {1, 2}) {
        const std::string ms = std::to_string(m);
        const auto eq = check_monotonicity(PsiSpec::parse("3/sinh(rho)^" + ms, hyp, 2, m, 0.5, 1.5), grid);
        EXPECT_TRUE(eq.monotone_ok);
        EXPECT_FALSE(eq.strict_monotone);
        EXPECT_NEAR(eq.monotone_max, 0.0, 1e-12);
        const auto strict =
            check_monotonicity(PsiSpec::parse("exp(-0.1*rho)*3/sinh(rho)^" + ms, hyp, 2, m, 0.5, 1.5), grid);
        EXPECT_TRUE(strict.monotone_ok);
        EXPECT_TRUE(strict.strict_monotone);
        EXPECT_NEAR(strict.monotone_max, -0.1 * 3 * std::exp(-0.15), 1e-12);
        const auto bad = check_monotonicity(PsiSpec::parse("coth(rho)^" + ms, hyp, 2, m, 0.5, 1.5), grid);
        EXPECT_FALSE(bad.monotone_ok);
        EXPECT_FALSE(bad.strict_monotone);
        EXPECT_EQ(bad.monotone_violations.size(), grid.size());
    }
    const SpaceForm ell = SpaceForm::elliptic();
    const auto eq = check_monotonicity(PsiSpec::parse("2*cot(rho)", ell, 1, 1, 0.3, 1.2), grid);
    EXPECT_TRUE(eq.monotone_ok);
    EXPECT_FALSE(eq.strict_monotone);
    const auto bad = check_monotonicity(PsiSpec::parse("1/sin(rho)", ell, 1, 1, 0.3, 1.2), grid);
    EXPECT_FALSE(bad.monotone_ok);
}

TEST(Monotonicity, StrictImpliesMonotoneAndDefaultSampling)
{
    const SphereGrid<1> grid(16);
    const PsiSpec psi = PsiSpec::parse("exp(-0.2*rho)*(1 + 0.3*cos(theta))/sinh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5);
    const auto r = check_conditions(psi, grid);
    EXPECT_TRUE(!r.strict_monotone || r.monotone_ok);
    // a psi whose violation lives strictly between lattice points of a coarse sweep
    const PsiSpec bump = PsiSpec::parse("(1 + 0.5*exp(-((rho-1.25)/0.004)^2))/sinh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5);
    EXPECT_TRUE(check_monotonicity(bump, grid, 3).monotone_ok);
    EXPECT_FALSE(check_monotonicity(bump, grid).monotone_ok);
}

TEST(QProfileTest, VanishesAtOne)
{
    const PsiSpec psi = PsiSpec::parse("exp(-0.2*rho)*(2 + cos(theta))/sinh(rho)^2", SpaceForm::hyperbolic(), 2, 2, 0.5, 1.5);
    for (double v : {0.2, 0.45, 0.6})
        for (double t : {0.1, 1.5, 3.0})
            EXPECT_LE(std::abs(q_value(psi, v, std::array<double, 2>{t, 0.0}, 1.0)), 1e-14);
}

TEST(QProfileTest, MatchesReducedForm)
{
    // Q = C(n,m) ((1 - v^2)/(2v))^m [Phi(rho(v/s)) - Phi(rho(v))] with Phi = psi sinh^m
    const SpaceForm hyp = SpaceForm::hyperbolic();
    for (int m : {1, 2}) {
        const PsiSpec psi = PsiSpec::parse("exp(-0.3*rho)*(1 + 0.2*cos(theta))/sinh(rho)^" + std::to_string(m), hyp, 2, m, 0.5, 1.5);
        const std::array<double, 2> u{0.8, 0.0};
        auto Phi = [&](double rho) { return std::exp(-0.3 * rho) * (1 + 0.2 * std::cos(0.8)); };
        for (double v : {0.3, 0.5})
            for (double s : {1.05, 1.3, 1.6}) {
                const double oracle = binomial(2, m) * std::pow((1 - v * v) / (2 * v), m) *
                                      (Phi(2 * std::atanh(v / s)) - Phi(2 * std::atanh(v)));
                EXPECT_NEAR(q_value(psi, v, u, s), oracle, 1e-12);
                EXPECT_GT(oracle, 0.0);
            }
    }
}

TEST(QProfileTest, EqualityCaseIsFlat)
{
    const PsiSpec psi = sphere_psi(SpaceForm::hyperbolic(), 2, 2, 1.2, 0.8, 1.6);
    const auto prof = q_profile(psi, 0.5, std::array<double, 2>{1.0, 0.5}, {1.0, 1.2, 1.5, 1.9});
    for (std::size_t i = 0; i < prof.s.size(); ++i) {
        EXPECT_LT(std::abs(prof.Q[i]), 1e-12);
        EXPECT_LT(std::abs(prof.dQ[i]), 1e-12);
    }
}

TEST(QProfileTest, StrictCaseIncreases)
{
    const PsiSpec psi = PsiSpec::parse("exp(-0.2*(rho-1.2))*cosh(1.2)/sinh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.8, 1.6);
    const SphereGrid<1> grid(16);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto prof = q_profile(psi, 0.5, grid.node(k), {1.0, 1.1, 1.2, 1.5, 1.9});
        EXPECT_GT(prof.Q[2], 0.0);
        EXPECT_GE(prof.min_dQ, -1e-8);
        for (std::size_t i = 0; i < prof.s.size(); ++i)
            EXPECT_NEAR(prof.dQ[i], prof.dQ_fd[i], 1e-6 * (1 + std::abs(prof.dQ[i])));
        for (std::size_t i = 1; i < prof.s.size(); ++i)
            EXPECT_GT(prof.Q[i], prof.Q[i - 1]);
    }
}

TEST(QProfileTest, Sweep)
{
    const SphereGrid<1> grid(16);
    const PsiSpec psi = PsiSpec::parse("exp(-0.2*(rho-1.2))*cosh(1.2)/sinh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.8, 1.6);
    const ScalarField v(grid.size(), std::tanh(0.6));
    const auto r = q_sweep(psi, grid, v);
    EXPECT_LE(r.max_abs_q_at_one, 1e-14);
    EXPECT_GE(r.min_dQ, -1e-8);
    EXPECT_GE(r.min_Q, -1e-14);
    EXPECT_NEAR(r.s_max, 1.0 / std::tanh(0.6) - 1e-3, 1e-14);
    EXPECT_THROW((void)q_sweep(psi, grid, ScalarField(grid.size(), 0.9995)), Error);
}

TEST(QProfileTest, DomainErrors)
{
    const std::array<double, 1> u{0.0};
    const PsiSpec ell = PsiSpec::parse("cot(rho)", SpaceForm::elliptic(), 1, 1, 0.3, 1.2);
    EXPECT_THROW((void)q_value(ell, 0.3, u, 1.1), Error);
    const PsiSpec hyp = sphere_psi(SpaceForm::hyperbolic(), 1, 1, 1.0, 0.5, 1.5);
    try {
        (void)q_value(hyp, 0.5, u, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DomainError);
    }
}

TEST(Extension, DefaultExtensionSatisfiesOuterConditions)
{
    const SphereGrid<2> grid(8);
    const SpaceForm hyp = SpaceForm::hyperbolic();
    const PsiSpec psi = PsiSpec::parse("exp(-0.2*(rho-1.2))*cosh(1.2)/sinh(rho)^2*(1 + 0.1*cos(theta))", hyp, 2, 2, 0.8, 1.6);
    ASSERT_TRUE(check_barrier_conditions(psi, grid).barrier_high_ok);
    const auto ext = check_extension(psi, grid, 4.0);
    EXPECT_TRUE(ext.bound_ok);
    EXPECT_TRUE(ext.monotone_ok);
    EXPECT_NEAR(ext.monotone_max, 0.0, 1e-12);
    const PsiSpec e = psi.with_default_extension();
    const std::array<double, 2> u{0.5, 0.0};
    EXPECT_NEAR(e.value(u, 1.6 + 1e-12), psi.value(u, 1.6), 1e-10);
    EXPECT_NEAR(e.value(u, 2.5), psi.value(u, 1.6) * std::pow(std::sinh(1.6) / std::sinh(2.5), 2), 1e-14);
    const PsiValue p = e.evaluate(u, 2.5);
    EXPECT_NEAR(p.d_rho, -2.0 * p.value / std::tanh(2.5), 1e-12);
    EXPECT_EQ(e.value(u, 1.0), psi.value(u, 1.0));
}

TEST(Extension, OuterBarrierViolationIsReported)
{
    const SphereGrid<1> grid(16);
    const PsiSpec psi = PsiSpec::parse("2/tanh(rho)", SpaceForm::hyperbolic(), 1, 1, 0.5, 1.5);
    const auto ext = check_extension(psi, grid, 3.0);
    EXPECT_FALSE(ext.bound_ok);
    EXPECT_LT(ext.bound_margin, 0.0);
}

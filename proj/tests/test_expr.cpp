#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "filtlab/expr.hpp"

using filtlab::DomainError;
using filtlab::Expression;
using filtlab::ParseError;

TEST(ExprParse, SingleVariable) {
    auto e = Expression::parse("u");
    ASSERT_EQ(e.nodes().size(), 1u);
    EXPECT_EQ(e.nodes()[e.root()].kind, Expression::Kind::Var);
    EXPECT_DOUBLE_EQ(e(3.25), 3.25);
}

TEST(ExprParse, SubtractionOfExpAndConstant) {
    auto e = Expression::parse("exp(u)-1");
    const auto& root = e.nodes()[e.root()];
    ASSERT_EQ(root.kind, Expression::Kind::Sub);
    EXPECT_EQ(e.nodes()[root.lhs].kind, Expression::Kind::Func);
    EXPECT_EQ(e.nodes()[root.lhs].func, Expression::Func::Exp);
    EXPECT_EQ(e.nodes()[root.rhs].kind, Expression::Kind::Const);
    EXPECT_EQ(e.nodes()[root.rhs].value, 1.0);
}

TEST(ExprParse, PrecedenceAndAssociativity) {
    EXPECT_DOUBLE_EQ(Expression::parse("2*u^2 + exp(2*u)")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-u^2")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0.0), 512.0);
    EXPECT_DOUBLE_EQ(Expression::parse("8/4/2")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("1 - 2 - 3")(0.0), -4.0);
    EXPECT_DOUBLE_EQ(Expression::parse("u^-1")(4.0), 0.25);
    EXPECT_DOUBLE_EQ(Expression::parse("1.5e2 + 2E-1")(0.0), 150.2);
    EXPECT_NEAR(Expression::parse("pi + e")(0.0), M_PI + M_E, 1e-15);
}

TEST(ExprParse, AlternateVariableNames) {
    auto e = Expression::parse("sin(pi*x)", {"x", "r"});
    EXPECT_NEAR(e(0.5), 1.0, 1e-15);
    EXPECT_EQ(e.variable(), "x");
}

TEST(ExprParse, ErrorsCarryColumn) {
    try {
        Expression::parse("u + foo(u)");
        FAIL();
    } catch (const ParseError& err) {
        EXPECT_EQ(err.column(), 5);
        EXPECT_NE(std::string(err.what()).find("unknown identifier"), std::string::npos);
    }
    try {
        Expression::parse("(u + 1");
        FAIL();
    } catch (const ParseError& err) {
        EXPECT_EQ(err.column(), 7);
    }
    try {
        Expression::parse("u * * 2");
        FAIL();
    } catch (const ParseError& err) {
        EXPECT_EQ(err.column(), 5);
    }
    EXPECT_THROW(Expression::parse(""), ParseError);
    EXPECT_THROW(Expression::parse("   "), ParseError);
    EXPECT_THROW(Expression::parse("u 2"), ParseError);
    EXPECT_THROW(Expression::parse("x", {"u"}), ParseError);
}

TEST(ExprEval, ExactDerivatives) {
    auto e = Expression::parse("exp(2*u)");
    EXPECT_DOUBLE_EQ(e.eval(0.0, 1).d1, 2.0);
    auto d = e.eval(0.0, 3);
    EXPECT_DOUBLE_EQ(d.d2, 4.0);
    EXPECT_DOUBLE_EQ(d.d3, 8.0);
    EXPECT_EQ(Expression::parse("u").eval(7.3, 2).d2, 0.0);
    EXPECT_NEAR(Expression::parse("exp(u)-1").eval(1.0).value, 1.718281828459045, 1e-15);
}

TEST(ExprEval, IntegerPowersAreExact) {
    auto e = Expression::parse("u^3");
    auto d = e.eval(-2.0);
    EXPECT_EQ(d.value, -8.0);
    EXPECT_EQ(d.d1, 12.0);
    EXPECT_EQ(d.d2, -12.0);
    EXPECT_EQ(d.d3, 6.0);
    // Integer exponents accept nonpositive bases, and the derivative at zero is defined.
    auto sq = Expression::parse("u^2").eval(0.0);
    EXPECT_EQ(sq.d1, 0.0);
    EXPECT_EQ(sq.d2, 2.0);
    EXPECT_EQ(sq.d3, 0.0);
}

TEST(ExprEval, DomainErrorsReportSpan) {
    try {
        Expression::parse("1 + log(u)").eval(-1.0, 1);
        FAIL();
    } catch (const DomainError& err) {
        EXPECT_EQ(err.span().begin, 5);
        EXPECT_EQ(err.span().end, 10);
    }
    EXPECT_THROW(Expression::parse("u^0.5")(-1.0), DomainError);
    EXPECT_THROW(Expression::parse("1/u")(0.0), DomainError);
    EXPECT_THROW(Expression::parse("sqrt(u)").eval(0.0, 1), DomainError);
    EXPECT_EQ(Expression::parse("sqrt(u)").eval(0.0, 0).value, 0.0);
}

// ---------------------------------------------------------------------------------------------
// Property tests over a grammar of expressions that are smooth and finite on [-1, 1].

namespace {

struct Generator {
    std::mt19937_64 rng{20240917};

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

    std::string constant() {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", uniform(0.1, 2.0));
        return buf;
    }

    // Bounded sub-expression generator; every construct is smooth for u in [-1, 1].
    std::string expr(int depth) {
        if (depth == 0) return pick(3) == 0 ? constant() : "u";
        std::string a = expr(depth - 1);
        switch (pick(12)) {
            case 0: return "(" + a + " + " + expr(depth - 1) + ")";
            case 1: return "(" + a + " - " + expr(depth - 1) + ")";
            case 2: return "(" + a + " * " + expr(depth - 1) + ")";
            case 3: return "(" + a + ") / (2 + sin(" + expr(depth - 1) + "))";
            case 4: return "exp(0.5*sin(" + a + "))";
            case 5: return "sin(" + a + ")";
            case 6: return "cos(" + a + ")";
            case 7: return "log(1.5 + cos(" + a + "))";
            case 8: return "sqrt(1 + (" + a + ")^2)";
            case 9: return "(" + a + ")^" + std::to_string(2 + pick(3));
            case 10: return "(2 + cos(" + a + "))^" + constant();
            default: return "-(" + a + ")";
        }
    }
};

}  // namespace

TEST(ExprProperty, DerivativesMatchCentralDifferences) {
    Generator gen;
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 1200; ++trial) {
        auto e = Expression::parse(gen.expr(1 + gen.pick(3)));
        const double s = gen.uniform(-0.9, 0.9);
        auto c = e.eval(s, 3);
        auto p = e.eval(s + h, 3);
        auto m = e.eval(s - h, 3);
        const double fd1 = (p.value - m.value) / (2 * h);
        const double fd2 = (p.d1 - m.d1) / (2 * h);
        const double fd3 = (p.d2 - m.d2) / (2 * h);
        auto close = [](double exact, double fd, double lower_order) {
            double scale = std::max({1.0, std::fabs(exact), std::fabs(lower_order)});
            return std::fabs(exact - fd) <= 1e-6 * scale;
        };
        ASSERT_TRUE(close(c.d1, fd1, c.value)) << e.source() << " at " << s;
        ASSERT_TRUE(close(c.d2, fd2, c.d1)) << e.source() << " at " << s;
        ASSERT_TRUE(close(c.d3, fd3, c.d2)) << e.source() << " at " << s;
        ++checked;
    }
    EXPECT_GE(checked, 1000);
}

TEST(ExprProperty, PrintReparsesToEqualTree) {
    Generator gen;
    for (int trial = 0; trial < 300; ++trial) {
        auto e = Expression::parse(gen.expr(1 + gen.pick(4)));
        auto back = Expression::parse(e.print());
        ASSERT_TRUE(e.structurally_equal(back)) << e.source() << " -> " << e.print();
        const double s = gen.uniform(-0.9, 0.9);
        EXPECT_EQ(e(s), back(s));
    }
}

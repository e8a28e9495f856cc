#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "filtlab/dichotomy.hpp"
#include "filtlab/steady.hpp"

using namespace filtlab;

namespace {

NonlinearModel gelfand(BoundaryCondition bc) {
    return {Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), 1.0, Interval{0, 1},
            BoundarySpec::uniform(bc)};
}

// Largest sign change of G on a uniform dense grid, refined by bisection.
template <class Fn>
double dense_last_root(Fn G, double t_max, double dt) {
    double lo = -1.0;
    for (double t = 0.0; t + dt <= t_max; t += dt)
        if ((G(t) > 0) != (G(t + dt) > 0)) lo = t;
    if (lo < 0) return 0.0;
    double hi = lo + dt;
    const bool lo_pos = G(lo) > 0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        ((G(mid) > 0) == lo_pos ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

TEST(HFunc, Examples) {
    NonlinearModel e1{Expression::parse("u"), Expression::parse("exp(u)"), 1.0, Interval{0, 1},
                      BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    EXPECT_EQ(h_func(e1, 0.0), 0.0);
    EXPECT_NEAR(h_func(e1, 1.0), 0.718281828459045, 1e-14);
    EXPECT_NEAR(h_func(gelfand(BoundaryCondition::dirichlet()), 1.0), 4.38905609893065, 1e-13);
}

TEST(ComputeS, MatchesDenseScanOracle) {
    auto m = gelfand(BoundaryCondition::neumann());
    const double c = 0.05;
    const double c1 = 2.0 * std::exp(c), c2 = std::exp(c);  // f'(c)/K'(c), f(c)/K'(c)
    const double S = compute_S(m, c1, c2);
    auto G = [&](double t) { return std::exp(t) - 2.0 * (c1 * t + c2); };
    EXPECT_NEAR(S, dense_last_root(G, 50.0, 1e-4), 1e-10);
    EXPECT_GT(G(S + 1e-3), 0.0);
    EXPECT_LT(G(S - 1e-3), 0.0);
}

TEST(ComputeS, PositiveEverywhereGivesZero) {
    EXPECT_EQ(compute_S(gelfand(BoundaryCondition::neumann()), 0.0, 0.0), 0.0);
}

TEST(ComputeS, NoPositiveTailIsHypothesisFailure) {
    NonlinearModel m{Expression::parse("u"), Expression::parse("1 + u"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::neumann())};
    EXPECT_THROW(compute_S(m, 1.0, 1.0), HypothesisError);
    auto g = build_grid(m.domain, 8);
    EXPECT_THROW(compute_constants(m, Field(g.size(), 0.1), g), HypothesisError);
}

TEST(Constants, ConstantState) {
    auto m = gelfand(BoundaryCondition::neumann());
    auto g = build_grid(m.domain, 16);
    const double c = 0.3;
    auto k = compute_constants(m, Field(g.size(), c), g);
    EXPECT_EQ(k.m, c);
    EXPECT_EQ(k.M, c);
    EXPECT_NEAR(k.c1, 2.0 * std::exp(c), 1e-14);
    EXPECT_NEAR(k.c2, std::exp(c), 1e-14);
    EXPECT_NEAR(k.Lambda1, 0.25 * std::exp(c), 1e-15);
    EXPECT_GT(k.Lambda2, 0.0);
    EXPECT_EQ(k.Lambda, std::min(k.Lambda1, k.Lambda3));
}

TEST(Constants, SmallSLimitOfSquareOverH) {
    auto m = gelfand(BoundaryCondition::dirichlet());
    auto g = build_grid(m.domain, 16);
    auto k = compute_constants(m, Field(g.size(), 0.0), g);
    EXPECT_NEAR(k.s2_over_h_limit, 0.5, 1e-12);
    // Series oracle: h(s) = sum_{j >= 2} (2s)^j / j!, free of cancellation.
    const double s = 1e-7;
    double h = 0.0, term = 2.0 * s;
    for (int j = 2; j < 8; ++j) h += (term *= 2.0 * s / j);
    EXPECT_NEAR(s * s / h, k.s2_over_h_limit, 1e-6);
    EXPECT_LE(k.s2_over_h_min, k.s2_over_h_limit);
}

TEST(Constants, RefiningEtaGridNeverIncreasesLambda2) {
    auto m = gelfand(BoundaryCondition::dirichlet());
    auto g = build_grid(m.domain, 64);
    auto w = ramp_to_lambda(m, g, 1.2).w;
    auto coarse = compute_constants(m, w, g, 256);
    auto fine = compute_constants(m, w, g, 511);
    EXPECT_LE(fine.Lambda2, coarse.Lambda2);
    EXPECT_LE(fine.Lambda, coarse.Lambda);
}

TEST(Constants, FlatCurvatureViolatesConvexity) {
    NonlinearModel m{Expression::parse("u"), Expression::parse("exp(u) - 0.5*u^2"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::neumann())};
    auto g = build_grid(m.domain, 8);
    EXPECT_THROW(compute_constants(m, Field(g.size(), 0.0), g), HypothesisError);
}

TEST(Majorization, GelfandLowerBranch) {
    auto m = gelfand(BoundaryCondition::dirichlet());
    auto g = build_grid(m.domain, 128);
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 60, 0.25);
    const double lambda = 0.5 * find_lambda_star(br, m, g).lambda_star;
    auto w = steady_states_at(br, m, g, lambda).at(0).w;
    auto k = compute_constants(m, w, g);
    EXPECT_EQ(k.m, 0.0);
    EXPECT_NEAR(k.Lambda1, 0.25, 1e-15);
    EXPECT_LE(k.Lambda1, 0.5);
    // Frozen regression values, n = 128, 256 eta samples, 200 s samples.
    EXPECT_NEAR(k.S, 3.0240, 2e-3);
    EXPECT_NEAR(k.Lambda2, 1.0, 1e-12);
    EXPECT_NEAR(k.Lambda, 0.021968, 2e-5);

    auto rep = verify_majorization(m, w, k.Lambda, 10.0 * k.S, 80, &k);
    EXPECT_GE(rep.samples, 10000);
    EXPECT_TRUE(rep.passed) << rep.min_margin;
    EXPECT_GE(rep.min_margin, -1e-10);
    EXPECT_TRUE(rep.strictly_positive);
    EXPECT_TRUE(rep.small_regime_ok);
    EXPECT_TRUE(rep.large_regime_ok);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(F_w(m, w[i], 0.0), 0.0);

    auto loose = verify_majorization(m, w, 2.0 * k.Lambda, 10.0 * k.S, 80);
    std::printf("2*Lambda scale check: min margin %.3e (%s)\n", loose.min_margin,
                loose.passed ? "no violation" : "violated");
}

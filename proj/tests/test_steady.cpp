#include <gtest/gtest.h>

#include <cmath>

#include "filtlab/eigen.hpp"
#include "filtlab/steady.hpp"

using namespace filtlab;

namespace {

NonlinearModel bratu() {
    return {Expression::parse("u"), Expression::parse("exp(u)"), 1.0, Interval{0, 1},
            BoundarySpec::uniform(BoundaryCondition::dirichlet())};
}

// Closed-form Bratu branch on (0,1): theta = sqrt(2 lambda) cosh(theta/4), max u = 2 log cosh(theta/4).
double bratu_lambda(double theta) { return theta * theta / (2.0 * std::pow(std::cosh(theta / 4.0), 2)); }

double bratu_fold_theta() {
    double lo = 1.0, hi = 10.0;  // (theta/4) tanh(theta/4) = 1
    for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (lo + hi);
        ((m / 4) * std::tanh(m / 4) < 1.0 ? lo : hi) = m;
    }
    return lo;
}

double bratu_lower_max(double lambda) {
    double lo = 0.0, hi = bratu_fold_theta();
    for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (lo + hi);
        (bratu_lambda(m) < lambda ? lo : hi) = m;
    }
    return 2.0 * std::log(std::cosh(lo / 4.0));
}

double max_of(const Field& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST(BratuOracle, KnownValues) {
    EXPECT_NEAR(bratu_lambda(bratu_fold_theta()), 3.513830719, 1e-8);
    EXPECT_NEAR(bratu_lower_max(1.0), 0.1405, 1e-4);
}

TEST(Steady, BratuLowerBranchConvergesSecondOrder) {
    auto m = bratu();
    const double exact = bratu_lower_max(1.0);
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        auto g = build_grid(m.domain, n);
        auto s = solve_steady(m, g, 1.0, Field(g.size(), 0.0));
        EXPECT_LE(s.residual, 1e-10);
        double err = std::fabs(max_of(s.z) - exact);
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.1);
        }
        prev = err;
    }
    EXPECT_LT(prev, 1e-5);
}

TEST(Steady, NeumannLinearProblemHasNoSolutionForPositiveForcing) {
    NonlinearModel m{Expression::parse("u"), Expression::parse("1 + u^2"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::neumann())};
    auto g = build_grid(m.domain, 32);
    EXPECT_THROW(solve_steady(m, g, 1.0, Field(g.size(), 0.0)), NewtonDivergence);
}

TEST(Steady, ContinuationFindsBratuFold) {
    auto m = bratu();
    auto g = build_grid(m.domain, 128);
    auto start = ramp_to_lambda(m, g, 0.5, 2);
    auto br = continue_branch(m, g, start, 80, 0.25);
    EXPECT_FALSE(br.aborted);
    auto fold = find_lambda_star(br, m, g);
    EXPECT_NEAR(fold.lambda_star, 3.513830719, 2e-4);
    EXPECT_LE(fold.lambda_before, fold.lambda_star);
    EXPECT_LE(fold.lambda_after, fold.lambda_star);
    auto rough = find_lambda_star(br);
    EXPECT_NEAR(rough.lambda_star, fold.lambda_star, 1e-2);
    int turns = 0;
    for (bool t : br.turning) turns += t;
    EXPECT_EQ(turns, 1);
}

TEST(Steady, FoldMeshRefinementApproachesClosedForm) {
    auto m = bratu();
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        auto g = build_grid(m.domain, n);
        auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.5, 2), 60, 0.3);
        double err = std::fabs(find_lambda_star(br, m, g).lambda_star - 3.513830719);
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.3);
        }
        prev = err;
    }
}

TEST(Steady, NoFoldWhenBranchIsMonotone) {
    NonlinearModel m{Expression::parse("u"), Expression::parse("1 + 0*u"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    auto g = build_grid(m.domain, 16);
    auto br = continue_branch(m, g, solve_steady(m, g, 0.1, Field(g.size(), 0.0)), 10, 0.5);
    EXPECT_THROW(find_lambda_star(br, m, g), NoFoldError);
}

TEST(Steady, StatesAtLambdaGiveStableAndUnstableBranches) {
    auto m = bratu();
    auto g = build_grid(m.domain, 128);
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.5, 2), 80, 0.25);
    auto states = steady_states_at(br, m, g, 1.0);
    ASSERT_GE(states.size(), 2u);
    EXPECT_NEAR(max_of(states[0].z), bratu_lower_max(1.0), 2e-5);
    EXPECT_GT(max_of(states[1].z), max_of(states[0].z) + 1.0);
    auto lo = linearized_eigenpair(states[0].w, m.with_lambda(1.0), g);
    auto up = linearized_eigenpair(states[1].w, m.with_lambda(1.0), g);
    EXPECT_GT(lo.mu, 0.0);
    EXPECT_LT(up.mu, 0.0);
}

TEST(Steady, GelfandModelDirichletInKVariable) {
    // K = e^u - 1, f = e^{2u}: g(z) = (1 + z)^2. Boundary u = K^{-1}(0) = 0.
    NonlinearModel m{Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    auto g = build_grid(m.domain, 64);
    auto s = ramp_to_lambda(m, g, 1.0);
    EXPECT_LE(s.residual, 1e-10);
    EXPECT_EQ(s.w.front(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::exp(s.w[i]) - 1.0, s.z[i], 1e-11);
    // Same problem posed directly as Bratu-type with K = u, f = (1 + u)^2.
    NonlinearModel q{Expression::parse("u"), Expression::parse("(1 + u)^2"), 1.0, Interval{0, 1}, m.boundary};
    auto sq = ramp_to_lambda(q, g, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(sq.z[i], s.z[i], 1e-10);
}

TEST(Steady, LowerBranchUniqueFromTwoGuesses) {
    NonlinearModel m{Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), 0.3, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    auto g = build_grid(m.domain, 64);
    auto a = solve_steady(m, g, 0.3, Field(g.size(), 0.0));
    Field guess(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) guess[i] = 0.2 * std::sin(M_PI * g.x[i]);
    auto b = solve_steady(m, g, 0.3, guess);
    EXPECT_LE(a.residual, 1e-10);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(a.z[i], b.z[i], 1e-10);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_GT(a.z[i], 0.0);
}

TEST(Steady, ZeroLambdaGivesZeroState) {
    auto m = bratu();
    auto g = build_grid(m.domain, 16);
    auto s = solve_steady(m, g, 0.0, Field(g.size(), 0.3));
    for (double v : s.z) EXPECT_NEAR(v, 0.0, 1e-12);
    auto br = continue_branch(m, g, s, 0, 0.1);
    EXPECT_EQ(br.states.size(), 1u);
}

TEST(Steady, FoldConsistency) {
    auto m = bratu();
    auto g = build_grid(m.domain, 64);
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 80, 0.25);
    auto fold = find_lambda_star(br, m, g);
    auto fine = continue_branch(m, g, ramp_to_lambda(m, g, fold.lambda_star - 0.02, 8), 200, 0.005);
    auto below = steady_states_at(fine, m, g, fold.lambda_star - 1e-3);
    ASSERT_GE(below.size(), 2u);
    EXPECT_GT(max_of(below[1].z) - max_of(below[0].z), 0.05);
    for (const auto& s : br.states) {
        EXPECT_THROW(solve_steady(m, g, fold.lambda_star + 1e-3, s.z), NewtonDivergence);
        if (s.lambda > 3.0) break;
    }
    EXPECT_THROW(solve_steady(m, g, fold.lambda_star + 1e-3, fold.state.z), NewtonDivergence);
}

TEST(Steady, BranchInvariants) {
    NonlinearModel m{Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), 1.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    auto g = build_grid(m.domain, 64);
    const double ds = 0.2;
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 60, ds);
    for (std::size_t k = 0; k < br.states.size(); ++k) {
        const auto& s = br.states[k];
        EXPECT_LE(s.residual, 1e-10);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::exp(s.w[i]) - 1.0, s.z[i], 1e-10 * (1 + s.z[i]));
        if (k > 0) {
            EXPECT_LE(br.arclength[k] - br.arclength[k - 1], ds * (1 + 1e-9));
        }
    }
    // g = (1 + z)^2: continuum fold from the energy-integral shooting relation
    // sqrt(lambda) = 2 int_0^a dy / sqrt(2/3 ((1+a)^3 - (1+y)^3)), maximised over a.
    auto fold = find_lambda_star(br, m, g);
    EXPECT_NEAR(fold.lambda_star, 2.420597172612418, 1e-3);
}

// Traces the Bratu branch through its fold and prints lambda* under grid refinement.

#include <cstdio>

#include "filtlab/steady.hpp"

using namespace filtlab;

int main() {
    NonlinearModel m{Expression::parse("u"), Expression::parse("exp(u)"), 0.1, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    std::printf("%6s %14s %12s\n", "n", "lambda*", "max z");
    for (int n : {64, 128, 256, 512}) {
        auto g = build_grid(m.domain, n);
        auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 80, 0.25);
        auto fold = find_lambda_star(br, m, g);
        double zmax = 0.0;
        for (double z : fold.state.z) zmax = std::max(zmax, z);
        std::printf("%6d %14.9f %12.6f\n", n, fold.lambda_star, zmax);
    }
}

// Theorem 1 certificate for a Dirichlet bump, compared with the measured blow-up time.

#include <cstdio>

#include "filtlab/certify.hpp"

using namespace filtlab;

int main() {
    NonlinearModel m{Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), 2.0, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet()), Expression::parse("5*sin(pi*x)", {"x"})};
    auto g = build_grid(m.domain, 128);
    EvolutionConfig cfg;
    cfg.t_end = 10.0;
    cfg.U_max = 8.0;
    cfg.dt_init = 1e-8;
    cfg.dt_min = 1e-13;
    auto c = certify(m, g, EnvelopeSpec::concave(Expression::parse("sqrt(s)", {"s"}), 0.0), cfg);
    std::printf("mu = %.6f, B0 = %.6f\n", c.mu, c.B0);
    std::printf("verdict: %s (%s)\n", to_string(c.verdict).c_str(), c.note.c_str());
    if (c.bound.feasible) std::printf("eps* = %.6f, T* = %.6e\n", c.bound.eps_star, c.bound.T_star);
    if (c.evolution) {
        const auto& e = c.evolution->estimate;
        std::printf("measured: %s in [%.6e, %.6e], sound: %s\n", to_string(e.status).c_str(), e.t_lo, e.t_hi,
                    c.sound() ? "yes" : "no");
    }
}

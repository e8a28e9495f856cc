// Acceptance criteria 1-10. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <array>
#include <limits>
#include <tuple>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "filtlab/filtlab.hpp"

using namespace filtlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

NonlinearModel gelfand(BoundaryCondition bc, double lambda = 1.0) {
    return {Expression::parse("exp(u)-1"), Expression::parse("exp(2*u)"), lambda, Interval{0, 1},
            BoundarySpec::uniform(bc)};
}

double max_of(const Field& v) { return *std::max_element(v.begin(), v.end()); }

template <class Fn>
double bisect(Fn F, double lo, double hi) {
    const bool lo_neg = F(lo) < 0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((F(mid) < 0) == lo_neg ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Evolutions collected for the Kaplan and Jensen checks.
struct RecordedRun {
    std::string label;
    NonlinearModel model;
    Trajectory traj;
    double mu;
};
std::vector<RecordedRun> g_runs;

// Kaplan residual |dB/dt + mu r - lambda s| / (|mu| r + lambda s), trapezoidal in r and s.
double worst_kaplan(const Trajectory& T, double mu, double lambda) {
    double worst = 0.0;
    for (std::size_t k = 1; k < T.size(); ++k) {
        const double dB = (T.B[k] - T.B[k - 1]) / (T.t[k] - T.t[k - 1]);
        const double r = 0.5 * (T.r[k] + T.r[k - 1]), s = 0.5 * (T.s[k] + T.s[k - 1]);
        worst = std::max(worst, std::fabs(dB + mu * r - lambda * s) / (std::fabs(mu) * r + lambda * s));
    }
    return worst;
}

// ---------------------------------------------------------------------------------------------

Outcome criterion1() {
    auto dirichlet = [](int n) {
        auto g = build_grid(Interval{0, 1}, n);
        return principal_eigenpair(laplacian(g, BoundarySpec::uniform(BoundaryCondition::dirichlet())), g).mu;
    };
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double e512 = std::fabs(dirichlet(512) - pi2);
    const double ratio = (dirichlet(128) - pi2) / (dirichlet(256) - pi2);
    // Symmetric Robin mode cos(k(x - 1/2)) gives k tan(k/2) = beta.
    const double k = bisect([](double k) { return k * std::tan(0.5 * k) - 1.0; }, 1e-6, std::numbers::pi - 1e-6);
    const double root = k * k;
    auto g = build_grid(Interval{0, 1}, 512);
    const double robin = principal_eigenpair(laplacian(g, BoundarySpec::uniform(BoundaryCondition::robin(1.0))), g).mu;
    const double er = std::fabs(robin - root);
    return {e512 <= 1e-4 && std::fabs(ratio - 4.0) <= 0.2 && er <= 1e-4,
            fmt("dirichlet err %.2e, ratio %.4f; robin %.8f vs root %.8f (err %.2e)", e512, ratio, robin, root, er)};
}

Outcome criterion2() {
    // Closed-form Bratu relation: lambda = theta^2 / (2 cosh^2(theta/4)); the fold is its maximum.
    auto lam = [](double th) { return th * th / (2.0 * std::pow(std::cosh(0.25 * th), 2)); };
    double a = 1.0, b = 10.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        (lam(x1) > lam(x2) ? b : a) = lam(x1) > lam(x2) ? x2 : x1;
    }
    const double oracle = lam(0.5 * (a + b));
    NonlinearModel m{Expression::parse("u"), Expression::parse("exp(u)"), 0.1, Interval{0, 1},
                     BoundarySpec::uniform(BoundaryCondition::dirichlet())};
    auto g = build_grid(m.domain, 512);
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 80, 0.25);
    auto fold = find_lambda_star(br, m, g);
    const double err = std::fabs(fold.lambda_star - oracle);
    return {err <= 1e-3, fmt("lambda* %.9f vs closed form %.9f (err %.2e)", fold.lambda_star, oracle, err)};
}

Outcome criterion3() {
    auto m = gelfand(BoundaryCondition::neumann());
    m.u0 = Expression::constant(0.0);
    auto g = build_grid(m.domain, 64);
    auto ep = principal_eigenpair(laplacian(g, m.boundary), g);
    EvolutionConfig c;
    c.t_end = 2.0;
    c.U_max = 4.0;
    c.dt_init = 1e-3;
    c.dt_min = 1e-8;
    c.tracking = Tracking{ep.phi, ep.mu, {}, {}};
    auto r = evolve(m, g, c);
    g_runs.push_back({"neumann-ode", m, r.trajectory, ep.mu});
    const auto& e = r.estimate;
    const double exact = 0.5;  // int_0^inf e^{-2s} ds
    const double width = (e.t_hi - e.t_lo) / exact;
    return {e.status == BlowupStatus::BlewUp && e.t_lo <= exact && exact <= e.t_hi && width < 0.05,
            fmt("%s [%.9f, %.9f], relative width %.2e", to_string(e.status).c_str(), e.t_lo, e.t_hi, width)};
}

Outcome criterion4() {
    NonlinearModel ex{Expression::parse("exp(u)-1"), Expression::parse("exp(u)"), 2.0, Interval{0, 1}, {}};
    auto tb = tstar_bound(ex, EnvelopeSpec::concave(Expression::parse("sqrt(u)"), 0.0), 1.0, 0.0);
    const bool worked = tb.feasible && std::fabs(tb.eps_star - 1.0) <= 1e-9 && std::fabs(tb.T_star - 1.0) <= 1e-9;
    std::string detail = fmt("worked example eps* %.12f, T* %.12f; ", tb.eps_star, tb.T_star);

    auto m = gelfand(BoundaryCondition::dirichlet());
    auto g = build_grid(m.domain, 128);
    auto ep = principal_eigenpair(laplacian(g, m.boundary), g);
    int points = 0, certified = 0, sound = 0;
    double worst = -1e300;
    for (double lambda : {1.0, 2.0, 3.0})
        for (double amp : {4.0, 5.0, 6.0, 7.0}) {
            auto mm = m.with_lambda(lambda);
            mm.u0 = Expression::parse(fmt("%g*sin(pi*x)", amp), {"x"});
            EvolutionConfig c;
            c.t_end = 10.0;
            c.U_max = amp + 3.0;
            c.dt_init = 1e-8;
            c.dt_min = 1e-13;
            auto cert = certify(mm, g, EnvelopeSpec::concave(Expression::parse("sqrt(u)"), 0.0), c);
            ++points;
            if (cert.evolution) g_runs.push_back({fmt("certify-%g-%g", lambda, amp), mm, cert.evolution->trajectory, ep.mu});
            if (cert.verdict != Verdict::CertifiedBlowup) continue;
            ++certified;
            const auto& e = cert.evolution->estimate;
            const double rel = e.t_hi / cert.bound.T_star - 1.0;
            worst = std::max(worst, rel);
            if (e.status == BlowupStatus::BlewUp && e.t_hi <= cert.bound.T_star * 1.02) ++sound;
        }
    detail += fmt("sweep %d points, %d certified, %d with t_hi <= 1.02 T* (max t_hi/T* - 1 = %.3f)", points, certified,
                  sound, worst);
    return {worked && points >= 10 && certified >= 10 && sound == certified, detail};
}

struct GelfandSetup {
    Grid g;
    NonlinearModel m;  ///< at 0.5 lambda*
    double lambda_star;
    std::vector<SteadyState> states;
};

GelfandSetup gelfand_half(int n) {
    auto m = gelfand(BoundaryCondition::dirichlet());
    auto g = build_grid(m.domain, n);
    auto br = continue_branch(m, g, ramp_to_lambda(m, g, 0.1, 1), 80, 0.25);
    auto fold = find_lambda_star(br, m, g);
    const double lam = 0.5 * fold.lambda_star;
    return {g, m.with_lambda(lam), fold.lambda_star, steady_states_at(br, m, g, lam)};
}

Outcome criterion7() {
    auto s = gelfand_half(512);
    if (s.states.empty()) return {false, "no lower-branch state"};
    const auto& w = s.states[0].w;
    auto c = compute_constants(s.m, w, s.g);
    auto rep = verify_majorization(s.m, w, c.Lambda, 10.0 * c.S, 20, &c);
    // f = e^{2u}: f''(0) by central difference.
    const double h = 1e-4;
    const double f2 = (s.m.f(h) - 2.0 * s.m.f(0.0) + s.m.f(-h)) / (h * h);
    const double limit = 2.0 / f2;
    const double lerr = std::fabs(c.s2_over_h_limit - limit);
    return {rep.min_margin >= -1e-10 && rep.samples >= 10000 && lerr <= 1e-6,
            fmt("min(F_w - Lambda h) %.3e over %ld samples (s <= %.3f); Lambda %.6g; limit %.10f vs %.10f", rep.min_margin,
                rep.samples, 10.0 * c.S, c.Lambda, c.s2_over_h_limit, limit)};
}

Outcome criterion8(const GelfandSetup& s) {
    if (s.states.size() < 2) return {false, "upper-branch state not found"};
    const auto& w = s.states[1].w;
    auto lin = linearized_eigenpair(w, s.m, s.g);
    if (!(lin.mu < 0.0)) return {false, fmt("mu(lambda) = %.6f is not negative", lin.mu)};
    auto c = compute_constants(s.m, w, s.g);
    auto ep = principal_eigenpair(laplacian(s.g, s.m.boundary), s.g);
    Field u0(s.g.size());
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = w[i] + 0.1 * lin.phi[i];
    EvolutionConfig cfg;
    cfg.t_end = 50.0;
    cfg.U_max = 10.0;
    cfg.dt_init = 1e-4;
    cfg.dt_min = 1e-12;
    cfg.tracking = Tracking{ep.phi, ep.mu, w, lin.phi};
    auto r = evolve(s.m, s.g, cfg, u0);
    g_runs.push_back({"theorem2", s.m, r.trajectory, ep.mu});
    const auto& T = r.trajectory;
    // Independent recomputation of the monitored quantities along the recorded steps.
    auto h = [&](double a) { return s.m.f(a) - s.m.f(0.0) - s.m.f.eval(0.0, 1).d1 * a; };
    bool mono = true, ineq = true;
    double min_kd = 1e300, min_margin = 1e300;
    for (std::size_t k = 1; k < T.size(); ++k) {
        if (T.A[k] < T.A[k - 1]) mono = false;
        const double dA = (T.A[k] - T.A[k - 1]) / (T.t[k] - T.t[k - 1]);
        const double rhs = s.m.lambda * c.Lambda * h(T.A[k - 1]);
        const double margin = (dA - rhs) / std::max(std::fabs(dA), std::fabs(rhs));
        min_margin = std::min(min_margin, margin);
        if (dA < rhs - 1e-6 * std::max(std::fabs(dA), std::fabs(rhs))) ineq = false;
    }
    for (std::size_t k = 0; k < T.size(); ++k) min_kd = std::min(min_kd, T.kdiff[k]);
    const bool blew = r.estimate.status == BlowupStatus::BlewUp;
    return {blew && mono && ineq && min_kd >= -1e-8,
            fmt("mu %.4f; %s [%.8f, %.8f]; A nondecreasing %s; min relative margin of dA/dt - lambda Lambda h(A) %.3e; "
                "min int (K(u)-K(w)) phi %.3e",
                lin.mu, to_string(r.estimate.status).c_str(), r.estimate.t_lo, r.estimate.t_hi, mono ? "yes" : "no",
                min_margin, min_kd)};
}

Outcome criterion9(const GelfandSetup& s) {
    if (s.states.empty()) return {false, "no lower-branch state"};
    const auto& w = s.states[0].w;
    auto m = s.m;
    m.u0 = Expression::constant(0.0);
    auto ep = principal_eigenpair(laplacian(s.g, m.boundary), s.g);
    EvolutionConfig c;
    c.t_end = 50.0;
    c.U_max = 50.0;
    c.dt_init = 1e-3;
    c.tracking = Tracking{ep.phi, ep.mu, {}, {}};
    auto r = evolve(m, s.g, c);
    g_runs.push_back({"stability", m, r.trajectory, ep.mu});
    double dev = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) dev = std::max(dev, std::fabs(r.final_u[i] - w[i]));
    const double sup_gap = std::fabs(max_of(r.final_u) - max_of(w));
    const bool bounded = r.estimate.status == BlowupStatus::Bounded && r.trajectory.t.back() >= 50.0;
    return {bounded && sup_gap <= 1e-3 && dev <= 1e-3,
            fmt("%s at t = %g; |sup u - sup w| %.2e, max |u - w| %.2e", to_string(r.estimate.status).c_str(),
                r.trajectory.t.back(), sup_gap, dev)};
}

Outcome criterion5() {
    double worst = 0.0;
    std::string worst_label;
    for (const auto& run : g_runs) {
        const double k = worst_kaplan(run.traj, run.mu, run.model.lambda);
        if (k > worst) {
            worst = k;
            worst_label = run.label;
        }
    }
    // Refinement on a Robin problem: coarse (n 32, rtol 1e-4) against fine (n 128, rtol 1e-6).
    auto m = gelfand(BoundaryCondition::robin(1.0), 0.5);
    m.u0 = Expression::parse("1 + sin(pi*x)", {"x"});
    auto run = [&](int n, double rtol) {
        auto g = build_grid(m.domain, n);
        auto ep = principal_eigenpair(laplacian(g, m.boundary), g);
        EvolutionConfig c;
        c.t_end = 0.2;
        c.rtol = rtol;
        c.U_max = 50.0;
        c.tracking = Tracking{ep.phi, ep.mu, {}, {}};
        auto r = evolve(m, g, c);
        return worst_kaplan(r.trajectory, ep.mu, m.lambda);
    };
    const double coarse = run(32, 1e-4), fine = run(128, 1e-6);
    return {!g_runs.empty() && worst <= 0.05 && fine < coarse,
            fmt("max residual %.3e over %zu runs (worst: %s); refinement %.3e -> %.3e", worst, g_runs.size(),
                worst_label.c_str(), coarse, fine)};
}

Outcome criterion6() {
    double worst_s = 1e300, worst_r = 1e300;
    std::size_t points = 0;
    for (const auto& run : g_runs) {
        const auto& T = run.traj;
        for (std::size_t k = 0; k < T.size(); ++k) {
            worst_s = std::min(worst_s, T.s[k] - run.model.f(T.B[k]));
            worst_r = std::min(worst_r, T.r[k] - run.model.K(T.B[k]));
            ++points;
        }
    }
    return {points > 0 && worst_s >= -1e-8 && worst_r >= -1e-8,
            fmt("min s - f(B) %.3e, min r - K(B) %.3e over %zu recorded times", worst_s, worst_r, points)};
}

// Random expression trees over u built from every operator and function of the grammar.
std::string random_expression(std::mt19937_64& rng, int depth) {
    std::uniform_real_distribution<double> coef(0.25, 3.0);
    std::uniform_int_distribution<int> pick(0, 99);
    if (depth == 0 || pick(rng) < 25) return pick(rng) < 65 ? "u" : fmt("%.4g", coef(rng));
    const int kind = pick(rng) % 11;
    const auto a = random_expression(rng, depth - 1);
    switch (kind) {
        case 0: return "(" + a + " + " + random_expression(rng, depth - 1) + ")";
        case 1: return "(" + a + " - " + random_expression(rng, depth - 1) + ")";
        case 2: return "(" + a + " * " + random_expression(rng, depth - 1) + ")";
        case 3: return "(" + a + " / " + random_expression(rng, depth - 1) + ")";
        case 4: return "(" + a + ")^" + std::to_string(2 + pick(rng) % 3);
        case 5: return "(" + a + ")^" + fmt("%.3g", coef(rng));
        case 6: return "exp(" + a + ")";
        case 7: return "log(" + a + ")";
        case 8: return "sqrt(" + a + ")";
        case 9: return "sin(" + a + ")";
        default: return pick(rng) < 50 ? "cos(" + a + ")" : "-" + a;
    }
}

// Ridders' extrapolated central difference. Returns the estimate and its error estimate; the
// error is infinite when no stencil fits inside the expression's domain.
std::pair<double, double> ridders_derivative(const Expression& e, double u) {
    constexpr int kTab = 10;
    constexpr double kCon = 1.4, kCon2 = kCon * kCon;
    double h = 0.05 * std::max(1.0, std::fabs(u));
    auto central = [&](double step) { return (e(u + step) - e(u - step)) / (2.0 * step); };
    for (int shrink = 0;; ++shrink) {
        try {
            central(h);
            break;
        } catch (const DomainError&) {
            if (shrink == 30) return {0.0, std::numeric_limits<double>::infinity()};
            h *= 0.5;
        }
    }
    double a[kTab][kTab];
    double best = 0.0, err = std::numeric_limits<double>::infinity();
    a[0][0] = central(h);
    for (int i = 1; i < kTab; ++i) {
        h /= kCon;
        a[0][i] = central(h);
        double fac = kCon2;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= kCon2;
            const double errt = std::max(std::fabs(a[j][i] - a[j - 1][i]), std::fabs(a[j][i] - a[j - 1][i - 1]));
            if (errt <= err) {
                err = errt;
                best = a[j][i];
            }
        }
        if (std::fabs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * err) break;
    }
    return {best, err};
}

Outcome criterion10() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> point(0.1, 3.0);
    int accepted = 0, failed = 0, tried = 0, oracle_unreliable = 0;
    double worst = 0.0;
    std::string worst_expr;
    while (accepted < 1200 && tried < 200000) {
        ++tried;
        const auto text = random_expression(rng, 4);
        if (text.find('u') == std::string::npos) continue;  // constant trees test nothing
        const Expression e = Expression::parse(text);
        const double u = point(rng);
        double value = 0.0, d1 = 0.0;
        try {
            auto b = e.eval(u, 1);
            value = b.value;
            d1 = b.d1;
        } catch (const DomainError&) {
            continue;
        }
        if (!std::isfinite(value) || std::fabs(value) > 1e6) continue;
        double fd = 0.0, fd_err = 0.0;
        try {
            std::tie(fd, fd_err) = ridders_derivative(e, u);
        } catch (const DomainError&) {
            fd_err = std::numeric_limits<double>::infinity();
        }
        // The oracle must certify its own accuracy well below the tolerance under test.
        if (!std::isfinite(fd) || !(fd_err <= 1e-9 * std::max(1.0, std::fabs(fd)))) {
            ++oracle_unreliable;
            continue;
        }
        const double rel = std::fabs(d1 - fd) / std::max(1.0, std::fabs(fd));
        ++accepted;
        if (!(rel <= 1e-6)) ++failed;
        if (!(rel <= worst)) {
            worst = rel;
            worst_expr = fmt("%s at u = %.6g", text.c_str(), u);
        }
    }
    return {accepted >= 1000 && failed == 0,
            fmt("%d pairs (%d generated, %d skipped for oracle error), %d above 1e-6; worst %.2e for %s", accepted, tried,
                oracle_unreliable, failed, worst, worst_expr.c_str())};
}

}  // namespace

int main() {
    struct Line {
        Outcome outcome;
        double seconds = 0.0;
    };
    std::map<int, Line> lines;
    auto run = [&](int id, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        lines[id] = {o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    };
    run(1, criterion1);
    run(2, criterion2);
    run(3, criterion3);
    run(4, criterion4);
    run(7, criterion7);
    std::optional<GelfandSetup> setup;
    auto half = [&]() -> const GelfandSetup& {
        if (!setup) setup = gelfand_half(128);
        return *setup;
    };
    run(8, [&] { return criterion8(half()); });
    run(9, [&] { return criterion9(half()); });
    // 5 and 6 audit every evolution recorded by 3, 4, 8 and 9.
    run(5, criterion5);
    run(6, criterion6);
    run(10, criterion10);
    bool all = true;
    for (const auto& [id, l] : lines) {
        all = all && l.outcome.pass;
        std::printf("criterion %2d: %s  %s  (%.2f s)\n", id, l.outcome.pass ? "PASS" : "FAIL", l.outcome.detail.c_str(),
                    l.seconds);
    }
    std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
    return all ? 0 : 1;
}

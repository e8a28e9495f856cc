#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/expr.hpp"
#include "filtlab/quadrature.hpp"

namespace filtlab {

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

/// Radially symmetric ball in R^dimension.
struct Ball {
    int dimension = 1;
    double radius = 1.0;
};

class DomainSpec {
public:
    DomainSpec() = default;
    DomainSpec(Interval iv) : shape_(iv) {
        if (!(iv.b > iv.a)) throw Error("interval requires b > a");
    }
    DomainSpec(Ball ball) : shape_(ball) {
        if (ball.dimension < 1) throw Error("ball dimension must be >= 1");
        if (!(ball.radius > 0.0)) throw Error("ball radius must be positive");
    }

    bool is_interval() const { return std::holds_alternative<Interval>(shape_); }
    const Interval& interval() const { return std::get<Interval>(shape_); }
    const Ball& ball() const { return std::get<Ball>(shape_); }

private:
    std::variant<Interval, Ball> shape_ = Interval{};
};

enum class BoundaryKind { Neumann, Robin, Dirichlet };

inline std::string to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Neumann: return "neumann";
        case BoundaryKind::Robin: return "robin";
        case BoundaryKind::Dirichlet: return "dirichlet";
    }
    return "?";
}

/// Condition n.grad(v) + beta v = 0 on one boundary piece; Dirichlet is its own kind rather than
/// beta = infinity. beta is an expression in the boundary coordinate (x or r).
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Neumann;
    Expression beta;

    static BoundaryCondition neumann() { return {BoundaryKind::Neumann, {}}; }
    static BoundaryCondition dirichlet() { return {BoundaryKind::Dirichlet, {}}; }
    static BoundaryCondition robin(Expression beta) { return {BoundaryKind::Robin, std::move(beta)}; }
    static BoundaryCondition robin(double beta) { return robin(Expression::constant(beta)); }

    /// Robin coefficient at boundary coordinate `at`; zero for Neumann.
    double coefficient(double at) const {
        if (kind != BoundaryKind::Robin) return 0.0;
        double b = beta(at);
        if (!(b >= 0.0) || !std::isfinite(b)) throw Error("Robin coefficient must be finite and >= 0");
        return b;
    }
};

/// For an interval both ends are used; for a ball only `right` (the outer sphere) is.
struct BoundarySpec {
    BoundaryCondition left = BoundaryCondition::neumann();
    BoundaryCondition right = BoundaryCondition::neumann();

    static BoundarySpec uniform(BoundaryCondition bc) { return {bc, bc}; }
};

/// The problem u_t = Laplace K(u) + lambda f(u) with boundary condition on K(u) and data u0(x).
struct NonlinearModel {
    Expression K;
    Expression f;
    double lambda = 1.0;
    DomainSpec domain;
    BoundarySpec boundary;
    Expression u0 = Expression::constant(0.0);

    NonlinearModel() = default;
    NonlinearModel(Expression K_, Expression f_, double lambda_, DomainSpec domain_,
                   BoundarySpec boundary_, Expression u0_ = Expression::constant(0.0))
        : K(std::move(K_)), f(std::move(f_)), lambda(lambda_), domain(domain_),
          boundary(std::move(boundary_)), u0(std::move(u0_)) {
        if (!(lambda > 0.0)) throw Error("lambda must be positive");
    }

    NonlinearModel with_lambda(double l) const {
        NonlinearModel m = *this;
        if (!(l > 0.0)) throw Error("lambda must be positive");
        m.lambda = l;
        return m;
    }

    bool has_dirichlet() const {
        return boundary.right.kind == BoundaryKind::Dirichlet ||
               (domain.is_interval() && boundary.left.kind == BoundaryKind::Dirichlet);
    }
};

// ---------------------------------------------------------------------------------------------
// Monotone inversion

/// Solves e(s) = y for increasing e on [lo, hi] by bisection with a safeguarded Newton polish.
/// Result satisfies |e(s) - y| <= 1e-12 max(1, |y|) unless the bracket collapses to adjacent doubles.
inline double invert_monotone(const Expression& e, double y, double lo, double hi) {
    if (!(lo <= hi)) throw BracketError("invert_monotone: empty bracket");
    double flo = e(lo) - y, fhi = e(hi) - y;
    const double tol = 1e-12 * std::max(1.0, std::fabs(y));
    if (std::fabs(flo) <= tol) return lo;
    if (std::fabs(fhi) <= tol) return hi;
    if (flo > 0.0 || fhi < 0.0)
        throw BracketError("invert_monotone: bracket does not straddle the target value");
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        auto d = e.eval(s, 1);
        double r = d.value - y;
        if (std::fabs(r) <= tol) return s;
        if (r < 0.0)
            lo = s;
        else
            hi = s;
        double next = s;
        if (d.d1 > 0.0 && std::isfinite(d.d1)) next = s - r / d.d1;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(s)))
            return next;
        s = next;
    }
    return s;
}

/// Inversion of an increasing expression with automatic bracket expansion around `guess`.
inline double invert_increasing(const Expression& e, double y, double guess = 0.0) {
    // Newton from the guess usually converges in a few steps; fall back to bracketing.
    double s = guess;
    const double tol = 1e-12 * std::max(1.0, std::fabs(y));
    for (int it = 0; it < 8; ++it) {
        DerivativeBundle d;
        try {
            d = e.eval(s, 1);
        } catch (const DomainError&) {
            break;
        }
        double r = d.value - y;
        if (std::fabs(r) <= tol) return s;
        if (!(d.d1 > 0.0) || !std::isfinite(d.d1)) break;
        s -= r / d.d1;
        if (!std::isfinite(s)) break;
    }
    double lo = guess, hi = guess, step = 1.0;
    auto safe = [&](double x) {
        try {
            return e(x) - y;
        } catch (const DomainError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    double flo = safe(lo);
    if (std::isnan(flo)) throw BracketError("invert_increasing: guess outside expression domain");
    double fhi = flo;
    for (int k = 0; k < 200 && flo > 0.0; ++k) {
        double cand = lo - step;
        double fc = safe(cand);
        if (std::isnan(fc)) break;
        hi = lo;
        fhi = flo;
        lo = cand;
        flo = fc;
        step *= 2.0;
    }
    step = 1.0;
    for (int k = 0; k < 200 && fhi < 0.0; ++k) {
        double cand = hi + step;
        double fc = safe(cand);
        if (std::isnan(fc)) break;
        lo = hi;
        flo = fhi;
        hi = cand;
        fhi = fc;
        step *= 2.0;
    }
    return invert_monotone(e, y, lo, hi);
}

// ---------------------------------------------------------------------------------------------
// Osgood-type improper integrals

struct OsgoodResult {
    double finite_estimate = 0.0;  ///< quadrature over [0, s_cut]
    TailVerdict tail_verdict = TailVerdict::Inconclusive;
    double s_cut = 0.0;
};

/// Quadrature of K'/f over [0, s_cut] plus the (heuristic) tail ratio test at s_cut, 2s_cut, 4s_cut.
inline OsgoodResult osgood_check(const NonlinearModel& m, double s_cut) {
    if (!(s_cut > 0.0)) throw Error("osgood_check: s_cut must be positive");
    ScalarFunction integrand = [&](double s) {
        double fv = m.f(s);
        if (!std::isfinite(fv)) return 0.0;
        return m.K.eval(s, 1).d1 / fv;
    };
    OsgoodResult r;
    r.s_cut = s_cut;
    r.finite_estimate = integrate_adaptive(integrand, 0.0, s_cut);
    r.tail_verdict = tail_ratio_test(integrand, s_cut);
    return r;
}

/// Same test for an arbitrary positive integrand 1/e(s) over [start, s_cut].
inline OsgoodResult reciprocal_integral_check(const Expression& e, double start, double s_cut) {
    ScalarFunction integrand = [&](double s) {
        double v = e(s);
        if (!std::isfinite(v)) return 0.0;
        return 1.0 / v;
    };
    OsgoodResult r;
    r.s_cut = s_cut;
    r.finite_estimate = integrate_adaptive(integrand, start, s_cut);
    r.tail_verdict = tail_ratio_test(integrand, s_cut);
    return r;
}

// ---------------------------------------------------------------------------------------------
// Standing assumptions

enum class VerdictKind { HoldsOnSamples, Violated, Inconclusive };

inline std::string to_string(VerdictKind v) {
    switch (v) {
        case VerdictKind::HoldsOnSamples: return "holds-on-samples";
        case VerdictKind::Violated: return "violated";
        case VerdictKind::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct AssumptionVerdict {
    std::string name;
    VerdictKind verdict = VerdictKind::HoldsOnSamples;
    std::optional<double> witness;  ///< always set when violated
    std::string note;
};

struct AssumptionReport {
    double s_max = 0.0;
    int n_samples = 0;
    std::string grid_description;
    std::vector<AssumptionVerdict> items;

    const AssumptionVerdict* find(const std::string& name) const {
        for (const auto& i : items)
            if (i.name == name) return &i;
        return nullptr;
    }
    bool all_hold() const {
        return std::all_of(items.begin(), items.end(),
                           [](const auto& i) { return i.verdict == VerdictKind::HoldsOnSamples; });
    }
};

/// Sample points: s = 0 followed by a log-spaced grid of (0, s_max] spanning six decades.
inline std::vector<double> assumption_samples(double s_max, int n_samples) {
    std::vector<double> s{0.0};
    const double lo = s_max * 1e-6;
    for (int k = 0; k < n_samples; ++k)
        s.push_back(lo * std::pow(s_max / lo, static_cast<double>(k) / (n_samples - 1)));
    return s;
}

inline AssumptionReport validate_assumptions(const NonlinearModel& m, double s_max, int n_samples) {
    if (!(s_max > 0.0)) throw Error("validate_assumptions: s_max must be positive");
    if (n_samples < 10) throw Error("validate_assumptions: need at least 10 samples");
    AssumptionReport rep;
    rep.s_max = s_max;
    rep.n_samples = n_samples;
    rep.grid_description = "s = 0 plus " + std::to_string(n_samples) +
                           " log-spaced points on [1e-6 s_max, s_max]";
    const auto samples = assumption_samples(s_max, n_samples);

    // pred(s, K, f) returns false on failure; `strict_at_zero` false excludes s = 0.
    auto sampled = [&](std::string name, auto pred, bool include_zero, std::string note = {}) {
        AssumptionVerdict v{std::move(name), VerdictKind::HoldsOnSamples, std::nullopt, std::move(note)};
        for (double s : samples) {
            if (s == 0.0 && !include_zero) continue;
            auto k = m.K.eval(s, 2);
            auto f = m.f.eval(s, 2);
            if (!std::isfinite(k.value) || !std::isfinite(f.value)) continue;
            if (!pred(k, f)) {
                v.verdict = VerdictKind::Violated;
                v.witness = s;
                break;
            }
        }
        rep.items.push_back(std::move(v));
    };

    sampled("K(0) >= 0", [](auto k, auto) { return k.value >= 0.0; }, true);
    // K(0) is only required to be >= 0, so positivity starts after the origin.
    sampled("K(s) > 0 for s > 0", [](auto k, auto) { return k.value > 0.0; }, false);
    sampled("K'(s) > 0", [](auto k, auto) { return k.d1 > 0.0; }, true);
    sampled("K''(s) > 0", [](auto k, auto) { return k.d2 > 0.0; }, true);
    sampled("f(s) > 0", [](auto, auto f) { return f.value > 0.0; }, true);
    sampled("f'(s) > 0", [](auto, auto f) { return f.d1 > 0.0; }, true);
    sampled("f''(s) > 0", [](auto, auto f) { return f.d2 > 0.0; }, true);
    sampled(
        "g = f(K^-1) convex",
        [](auto k, auto f) {
            const double sf = std::max(std::abs(f.d1), std::abs(f.d2)), sk = std::max(std::abs(k.d1), std::abs(k.d2));
            if (!(sf > 0.0) || !(sk > 0.0)) return false;
            return (f.d2 / sf) * (k.d1 / sk) - (k.d2 / sk) * (f.d1 / sf) > 0.0;
        },
        true, "sign of f''K' - K''f', rescaled against overflow");

    auto tail_item = [&](std::string name, const OsgoodResult& r) {
        AssumptionVerdict v{std::move(name), VerdictKind::Inconclusive, std::nullopt, {}};
        v.note = "heuristic tail-ratio test at s_cut, 2 s_cut, 4 s_cut with s_cut = " +
                 std::to_string(r.s_cut) + "; finite part " + std::to_string(r.finite_estimate);
        if (r.tail_verdict == TailVerdict::Convergent) v.verdict = VerdictKind::HoldsOnSamples;
        if (r.tail_verdict == TailVerdict::Divergent) {
            v.verdict = VerdictKind::Violated;
            v.witness = r.s_cut;
        }
        rep.items.push_back(std::move(v));
    };
    tail_item("Osgood: int K'/f < inf", osgood_check(m, s_max));
    tail_item("Osgood: int 1/f < inf", reciprocal_integral_check(m.f, 0.0, s_max));
    tail_item("int_1^inf 1/K < inf", reciprocal_integral_check(m.K, 1.0, std::max(s_max, 2.0)));

    // u0 >= 0, sampled on the domain.
    AssumptionVerdict u0v{"u0(x) >= 0", VerdictKind::HoldsOnSamples, std::nullopt, "201 uniform samples"};
    double a = 0.0, b = 0.0;
    if (m.domain.is_interval()) {
        a = m.domain.interval().a;
        b = m.domain.interval().b;
    } else {
        b = m.domain.ball().radius;
    }
    for (int i = 0; i <= 200; ++i) {
        double x = a + (b - a) * i / 200.0;
        if (!(m.u0(x) >= 0.0)) {
            u0v.verdict = VerdictKind::Violated;
            u0v.witness = x;
            break;
        }
    }
    rep.items.push_back(std::move(u0v));
    return rep;
}

}  // namespace filtlab

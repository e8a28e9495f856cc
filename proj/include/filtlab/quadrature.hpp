#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace filtlab {

using ScalarFunction = std::function<double(double)>;

namespace detail {

// Gauss-Kronrod 7/15 nodes on [-1, 1].
inline constexpr std::array<double, 8> gk15_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
    double value;
    double error;
};

inline GkResult gk15(const ScalarFunction& g, double a, double b) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double fc = g(c);
    double kron = fc * gk15_wk[7];
    double gauss = fc * gk15_wg[3];
    for (int i = 0; i < 7; ++i) {
        double dx = hw * gk15_x[i];
        double f1 = g(c - dx), f2 = g(c + dx);
        kron += gk15_wk[i] * (f1 + f2);
        if (i % 2 == 1) gauss += gk15_wg[i / 2] * (f1 + f2);
    }
    return {kron * hw, std::fabs((kron - gauss) * hw)};
}

inline double adaptive_gk(const ScalarFunction& g, double a, double b, double abs_tol, double rel_tol,
                          int depth, const GkResult& whole) {
    const double m = 0.5 * (a + b);
    GkResult left = gk15(g, a, m), right = gk15(g, m, b);
    double value = left.value + right.value;
    double err = left.error + right.error;
    if (depth <= 0 || err <= std::max(abs_tol, rel_tol * std::fabs(value)) ||
        std::fabs(value - whole.value) <= 0.5 * std::max(abs_tol, rel_tol * std::fabs(value)) * 1e-3)
        return value;
    return adaptive_gk(g, a, m, 0.5 * abs_tol, rel_tol, depth - 1, left) +
           adaptive_gk(g, m, b, 0.5 * abs_tol, rel_tol, depth - 1, right);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
inline double integrate_adaptive(const ScalarFunction& g, double a, double b, double abs_tol = 1e-14,
                                 double rel_tol = 1e-12) {
    if (a == b) return 0.0;
    if (b < a) return -integrate_adaptive(g, b, a, abs_tol, rel_tol);
    auto whole = detail::gk15(g, a, b);
    return detail::adaptive_gk(g, a, b, abs_tol, rel_tol, 40, whole);
}

enum class TailVerdict { Convergent, Inconclusive, Divergent };

inline std::string to_string(TailVerdict v) {
    switch (v) {
        case TailVerdict::Convergent: return "convergent";
        case TailVerdict::Inconclusive: return "inconclusive";
        case TailVerdict::Divergent: return "divergent";
    }
    return "?";
}

/// Heuristic tail classification of a positive integrand from its values at c, 2c and 4c.
/// Decay strictly faster than 1/s per doubling (ratio < 1/2) is read as convergent; a
/// non-decaying integrand as divergent; anything in between is inconclusive.
inline TailVerdict tail_ratio_test(const ScalarFunction& g, double cut) {
    const double g1 = g(cut), g2 = g(2.0 * cut), g4 = g(4.0 * cut);
    if (!(g1 >= 0.0) || !(g2 >= 0.0) || !(g4 >= 0.0)) return TailVerdict::Inconclusive;
    if (g2 == 0.0 && g4 == 0.0) return TailVerdict::Convergent;
    if (g1 == 0.0) return TailVerdict::Inconclusive;
    const double r1 = g2 / g1;
    const double r2 = g2 > 0.0 ? g4 / g2 : 0.0;
    constexpr double half = 0.5 * (1.0 - 1e-9);
    if (r1 < half && r2 < half) return TailVerdict::Convergent;
    if (r1 >= 1.0 && r2 >= 1.0) return TailVerdict::Divergent;
    return TailVerdict::Inconclusive;
}

struct ImproperIntegral {
    double value = 0.0;        ///< integral over [a, cutoff] plus the geometric tail estimate
    double tail_estimate = 0.0;
    double cutoff = 0.0;       ///< where explicit quadrature stopped
    TailVerdict verdict = TailVerdict::Inconclusive;
};

/// Integral of a positive integrand over [a, infinity). Explicit quadrature runs over segments
/// of doubling width starting at `a` until a segment contributes less than `rel_tol` of the
/// running total; the remainder is bounded geometrically from the last segment ratio.
/// The verdict is the tail ratio test at the final cutoff.
inline ImproperIntegral integrate_to_infinity(const ScalarFunction& g, double a, double first_width = 1.0,
                                              double rel_tol = 1e-15, int max_segments = 200) {
    ImproperIntegral out;
    double lo = a, width = first_width, total = 0.0, prev = 0.0, ratio = 1.0;
    int small_streak = 0;
    for (int k = 0; k < max_segments; ++k) {
        double hi = lo + width;
        double piece = integrate_adaptive(g, lo, hi, 1e-300, 1e-13);
        if (!std::isfinite(piece)) {
            out.value = std::numeric_limits<double>::infinity();
            out.cutoff = hi;
            out.verdict = TailVerdict::Divergent;
            return out;
        }
        total += piece;
        if (k > 0 && prev > 0.0) ratio = piece / prev;
        prev = piece;
        lo = hi;
        width *= 2.0;
        if (piece <= rel_tol * std::fabs(total) && ratio < 0.5) {
            if (++small_streak >= 2) break;
        } else {
            small_streak = 0;
        }
    }
    out.cutoff = lo;
    out.tail_estimate = ratio < 1.0 ? prev * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
    out.value = total + out.tail_estimate;
    const double ref = std::max(lo, 1.0);
    out.verdict = tail_ratio_test(g, ref);
    if (out.verdict != TailVerdict::Convergent && ratio < 0.5 && prev <= rel_tol * std::fabs(total))
        out.verdict = TailVerdict::Convergent;
    return out;
}

}  // namespace filtlab

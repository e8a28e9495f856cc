#pragma once

// Constants of the two-regime lower bound F_w(s) >= Lambda h(s), where
//   F_w(s) = K'(w)(f(w+s) - f(w)) - f'(w)(K(w+s) - K(w)),  h(s) = f(s) - f(0) - s f'(0).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/model.hpp"

namespace filtlab {

inline double h_func(const NonlinearModel& m, double s) {
    const auto f0 = m.f.eval(0.0, 1);
    return m.f(s) - f0.value - s * f0.d1;
}

struct DichotomyConstants {
    double m = 0.0, M = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double S = 0.0;
    double S_cutoff = 1e6;
    double Lambda1 = 0.0, Lambda2 = 0.0, Lambda3 = 0.0, Lambda = 0.0;
    double s2_over_h_min = 0.0;    ///< min over (0, S] of s^2 / h(s)
    double s2_over_h_limit = 0.0;  ///< analytic s -> 0+ limit 2 / f''(0)
    int eta_samples = 256;
    int nodes = 0;
    int s_samples = 200;
    double Lambda2_eta = 0.0;  ///< minimiser coordinates
    double Lambda2_x = 0.0;
};

/// Largest sign change of f(t)/K'(t) - 2(c1 t + c2), scanned in octaves up to `cutoff`.
inline double compute_S(const NonlinearModel& m, double c1, double c2, double cutoff = 1e6, double t_floor = 1.0) {
    auto G = [&](double t) {
        const double f = m.f(t), kp = m.K.eval(t, 1).d1;
        const double v = f / kp - 2.0 * (c1 * t + c2);
        if (std::isnan(v)) return std::numeric_limits<double>::infinity();
        return v;
    };
    constexpr int per_octave = 32;
    double prev_t = 0.0, prev_g = G(0.0);
    double root_lo = -1.0, root_hi = -1.0;
    bool any_positive = prev_g > 0.0;
    int positive_octaves = prev_g > 0.0 ? 1 : 0;
    bool octave_positive = true;
    for (int k = 0;; ++k) {
        const double t = 0x1p-20 * std::exp2(static_cast<double>(k) / per_octave);
        if (t > cutoff) break;
        const double gv = G(t);
        if (gv > 0.0) any_positive = true;
        if ((prev_g > 0.0) != (gv > 0.0)) {
            root_lo = prev_t;
            root_hi = t;
            positive_octaves = 0;
        }
        if (!(gv > 0.0)) octave_positive = false;
        if ((k + 1) % per_octave == 0) {
            positive_octaves = octave_positive ? positive_octaves + 1 : 0;
            octave_positive = true;
            if (positive_octaves >= 3 && t >= t_floor) break;
        }
        prev_t = t;
        prev_g = gv;
        if (std::isinf(gv) && gv > 0.0 && t >= t_floor) break;
    }
    if (!any_positive || !(prev_g > 0.0))
        throw HypothesisError("compute_S: f/K' - 2(c1 t + c2) has no positive tail below the cutoff");
    if (root_lo < 0.0) return 0.0;
    double lo = root_lo, hi = root_hi;
    const bool lo_positive = G(lo) > 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        ((G(mid) > 0.0) == lo_positive ? lo : hi) = mid;
    }
    return hi;
}

/// F_w(s) at a single state value w.
inline double F_w(const NonlinearModel& m, double w, double s) {
    const auto fw = m.f.eval(w, 1);
    const auto Kw = m.K.eval(w, 1);
    return Kw.d1 * (m.f(w + s) - fw.value) - fw.d1 * (m.K(w + s) - Kw.value);
}

inline DichotomyConstants compute_constants(const NonlinearModel& m, const Field& w, const Grid& g,
                                            int eta_samples = 256, int s_samples = 200) {
    if (w.size() != g.size() || w.empty()) throw Error("compute_constants: field/grid size mismatch");
    DichotomyConstants c;
    c.eta_samples = eta_samples;
    c.s_samples = s_samples;
    c.nodes = static_cast<int>(w.size());
    c.m = *std::min_element(w.begin(), w.end());
    c.M = *std::max_element(w.begin(), w.end());
    const double kpm = m.K.eval(c.m, 1).d1;
    if (!(kpm > 0.0)) throw HypothesisError("compute_constants: K'(m) must be positive");
    const auto fM = m.f.eval(c.M, 1);
    c.c1 = fM.d1 / kpm;
    c.c2 = fM.value / kpm;
    c.S = compute_S(m, c.c1, c.c2, c.S_cutoff, std::max(1.0, c.M));
    c.Lambda1 = 0.25 * kpm;

    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < eta_samples; ++j) {
        const double eta = eta_samples > 1 ? c.S * j / (eta_samples - 1) : 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto fa = m.f.eval(w[i] + eta, 2);
            const auto Ka = m.K.eval(w[i] + eta, 2);
            const auto fw = m.f.eval(w[i], 1);
            const auto Kw = m.K.eval(w[i], 1);
            const double v = fa.d2 * Kw.d1 - Ka.d2 * fw.d1;
            if (v < best) {
                best = v;
                c.Lambda2_eta = eta;
                c.Lambda2_x = g.x[i];
            }
        }
    }
    c.Lambda2 = 0.5 * best;
    if (!(c.Lambda2 > 0.0)) throw HypothesisError("compute_constants: Lambda2 <= 0 (g is not convex on the sampled range)");

    const double f2 = m.f.eval(0.0, 2).d2;
    if (!(f2 > 0.0)) throw HypothesisError("compute_constants: f''(0) must be positive");
    c.s2_over_h_limit = 2.0 / f2;
    double mn = c.s2_over_h_limit;
    if (c.S > 0.0) {
        const double s_lo = std::max(1e-4 * c.S, 1e-4);
        for (int k = 0; k < s_samples; ++k) {
            double s = s_samples > 1 ? s_lo * std::pow(c.S / s_lo, static_cast<double>(k) / (s_samples - 1)) : c.S;
            if (s > c.S) s = c.S;
            const double h = h_func(m, s);
            if (h > 0.0) mn = std::min(mn, s * s / h);
        }
    }
    c.s2_over_h_min = mn;
    c.Lambda3 = c.Lambda2 * mn;
    c.Lambda = std::min(c.Lambda1, c.Lambda3);
    return c;
}

struct MajorizationReport {
    double min_margin = std::numeric_limits<double>::infinity();  ///< min of F_w(s) - Lambda h(s)
    std::size_t argmin_node = 0;
    double argmin_s = 0.0;
    long samples = 0;
    bool passed = true;
    bool strictly_positive = true;      ///< F_w(s) > 0 for every sampled s > 0
    bool small_regime_ok = true;        ///< Lambda2 s^2 <= F_w(s) for s <= S
    bool large_regime_ok = true;        ///< F_w(s) >= K'(w) f(s) / 2 >= Lambda1 h(s) for s > S
    std::vector<double> node_min;       ///< per-node minimum of F_w - Lambda h
    std::vector<double> node_argmin_s;
};

/// Samples F_w(s) - Lambda h(s) at every node and n_s log-spaced s in (0, s_max].
inline MajorizationReport verify_majorization(const NonlinearModel& m, const Field& w, double Lambda, double s_max,
                                              int n_s, const DichotomyConstants* c = nullptr) {
    MajorizationReport r;
    r.node_min.assign(w.size(), std::numeric_limits<double>::infinity());
    r.node_argmin_s.assign(w.size(), 0.0);
    const double s_lo = s_max * 1e-4;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double kw = m.K.eval(w[i], 1).d1;
        for (int k = 0; k < n_s; ++k) {
            const double s = n_s > 1 ? s_lo * std::pow(s_max / s_lo, static_cast<double>(k) / (n_s - 1)) : s_max;
            const double F = F_w(m, w[i], s);
            const double h = h_func(m, s);
            const double margin = F - Lambda * h;
            ++r.samples;
            if (margin < r.node_min[i]) {
                r.node_min[i] = margin;
                r.node_argmin_s[i] = s;
            }
            if (margin < r.min_margin) {
                r.min_margin = margin;
                r.argmin_node = i;
                r.argmin_s = s;
            }
            if (margin < -1e-10 * (1.0 + Lambda * h)) r.passed = false;
            if (!(F > 0.0)) r.strictly_positive = false;
            if (c) {
                const double tol = 1e-10 * (1.0 + std::fabs(F));
                if (s <= c->S) {
                    if (c->Lambda2 * s * s > F + tol) r.small_regime_ok = false;
                } else {
                    const double half = 0.5 * kw * m.f(s);
                    if (F + tol < half || half + tol < c->Lambda1 * h) r.large_regime_ok = false;
                }
            }
        }
    }
    return r;
}

}  // namespace filtlab

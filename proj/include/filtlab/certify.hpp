#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "filtlab/dichotomy.hpp"
#include "filtlab/eigen.hpp"
#include "filtlab/error.hpp"
#include "filtlab/evolve.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/model.hpp"
#include "filtlab/quadrature.hpp"

namespace filtlab {

enum class EnvelopeBranch { ConcavePsi, ConvexPhi };

inline std::string to_string(EnvelopeBranch b) { return b == EnvelopeBranch::ConcavePsi ? "concave-psi" : "convex-phi"; }

/// Concave psi with gamma = limsup psi(s)/s, or convex phi with kappa = liminf phi(r)/r.
struct EnvelopeSpec {
    EnvelopeBranch branch = EnvelopeBranch::ConcavePsi;
    Expression envelope;
    double slope = 0.0;

    static EnvelopeSpec concave(Expression psi, double gamma) { return {EnvelopeBranch::ConcavePsi, std::move(psi), gamma}; }
    static EnvelopeSpec convex(Expression phi, double kappa) { return {EnvelopeBranch::ConvexPhi, std::move(phi), kappa}; }
};

struct EnvelopeCheck {
    bool ok = true;
    std::string failure;
    double s_max = 0.0;
    int samples = 0;
};

/// Sample verification of the envelope hypotheses on a log grid up to s_max.
inline EnvelopeCheck check_envelope(const EnvelopeSpec& env, double lambda, double mu, double s_max = 1e3,
                                    int n = 200) {
    EnvelopeCheck c;
    c.s_max = s_max;
    c.samples = n;
    auto fail = [&](const std::string& why) {
        if (c.ok) c.failure = why;
        c.ok = false;
    };
    const auto pts = assumption_samples(s_max, n);
    const bool concave = env.branch == EnvelopeBranch::ConcavePsi;
    const double e0 = env.envelope(0.0);
    if (concave && e0 < 0.0) fail("psi(0) < 0");
    if (!concave && std::fabs(e0) > 1e-14) fail("phi(0) != 0");
    for (double s : pts) {
        if (s <= 0.0) continue;
        double d2 = 0.0;
        try {
            d2 = env.envelope.eval(s, 2).d2;
        } catch (const DomainError&) {
            continue;
        }
        if (concave && d2 > 1e-12 * (1.0 + std::fabs(env.envelope(s)))) fail("psi not concave at s = " + std::to_string(s));
        if (!concave && d2 < -1e-12 * (1.0 + std::fabs(env.envelope(s)))) fail("phi not convex at r = " + std::to_string(s));
        const double ratio = env.envelope(s) / s;
        // psi(s)/s decreases to gamma; phi(r)/r increases to kappa.
        if (concave && ratio < env.slope - 1e-12 * (1.0 + std::fabs(env.slope)))
            fail("psi(s)/s falls below the declared gamma");
        if (!concave && ratio > env.slope + 1e-12 * (1.0 + std::fabs(env.slope)))
            fail("phi(r)/r exceeds the declared kappa");
    }
    if (mu > 0.0) {
        if (concave && !(env.slope < lambda / mu)) fail("gamma >= lambda/mu");
        if (!concave && !(env.slope > mu / lambda)) fail("kappa <= mu/lambda");
    }
    return c;
}

namespace detail {

/// inf{s > 0 : G(s) > 0} for G with G(s)/s nondecreasing; `slope0` is lim_{s->0+} G(s)/s.
template <class Fn>
double upper_ray_start(Fn G, double slope0) {
    if (slope0 > 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (!(G(hi) > 0.0)) {
        lo = hi;
        hi *= 2.0;
        if (++it > 1000 || !std::isfinite(hi)) throw Error("threshold: the inequality never holds (epsilon out of range)");
    }
    for (int k = 0; k < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++k) {
        double mid = 0.5 * (lo + hi);
        (G(mid) > 0.0 ? hi : lo) = mid;
    }
    return hi;
}

inline double slope_at_zero(const Expression& e) {
    if (e(0.0) != 0.0) return e(0.0) > 0.0 ? std::numeric_limits<double>::infinity()
                                             : -std::numeric_limits<double>::infinity();
    try {
        return e.eval(0.0, 1).d1;
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

/// s_eps = inf{s > 0 : (lambda - eps) s - mu psi(s) > 0}.
inline double threshold_s_eps(const Expression& psi, double lambda, double mu, double eps) {
    if (!(eps >= 0.0) || !(eps < lambda)) throw Error("threshold_s_eps: epsilon out of range");
    if (mu == 0.0) return 0.0;
    const double a = lambda - eps;
    const double p0 = detail::slope_at_zero(psi);
    const double slope0 = std::isinf(p0) ? (mu > 0 ? -p0 : p0) : a - mu * p0;
    return detail::upper_ray_start([&](double s) { return a * s - mu * psi(s); }, slope0);
}

/// r_eps = inf{r > 0 : lambda phi(r) - (mu + eps) r > 0}.
inline double threshold_r_eps(const Expression& phi, double lambda, double mu, double eps) {
    if (!(eps >= 0.0)) throw Error("threshold_r_eps: epsilon out of range");
    const double p0 = detail::slope_at_zero(phi);
    const double slope0 = lambda * p0 - (mu + eps);
    return detail::upper_ray_start([&](double r) { return lambda * phi(r) - (mu + eps) * r; }, slope0);
}

struct UnconditionalThreshold {
    double value = 0.0;
    bool unconditional = false;  ///< threshold is 0 and the scalar data always exceed it
};

/// s_0 (concave branch) or r_0 (convex branch); the eps = 0 boundary of the thresholds.
inline UnconditionalThreshold thresholds_s0_r0(const EnvelopeSpec& env, double lambda, double mu,
                                               const NonlinearModel* m = nullptr) {
    UnconditionalThreshold t;
    if (env.branch == EnvelopeBranch::ConcavePsi) {
        t.value = threshold_s_eps(env.envelope, lambda, mu, 0.0);
        t.unconditional = t.value == 0.0 && (!m || m->f(0.0) > 0.0);
    } else {
        t.value = threshold_r_eps(env.envelope, lambda, mu, 0.0);
        t.unconditional = t.value == 0.0 && (!m || m->K(0.0) > 0.0);
    }
    return t;
}

struct EpsScanPoint {
    double eps;
    double T;
};

struct TStarResult {
    bool feasible = false;
    double eps_star = 0.0;
    double T_star = std::numeric_limits<double>::infinity();
    double threshold = 0.0;   ///< s_eps or r_eps at eps_star
    double eps_max = 0.0;     ///< admissible range (0, eps_max)
    double eps_feasible = 0.0;  ///< constraint holds on (0, eps_feasible]
    double lower_limit = 0.0;
    ImproperIntegral integral;
    std::vector<EpsScanPoint> scan;
};

/// Minimises T(eps) = (1/eps) int_{max(B0, inv(threshold))}^inf ds / (f or K) subject to the
/// initial-data constraint f(B0) >= s_eps (or K(B0) >= r_eps).
inline TStarResult tstar_bound(const NonlinearModel& m, const EnvelopeSpec& env, double mu, double B0) {
    const double lambda = m.lambda;
    const bool concave = env.branch == EnvelopeBranch::ConcavePsi;
    const Expression& G = concave ? m.f : m.K;
    TStarResult res;
    if (concave)
        res.eps_max = mu > 0.0 ? lambda - mu * env.slope : lambda;
    else
        res.eps_max = env.slope * lambda - mu;
    if (!(res.eps_max > 0.0)) return res;

    auto threshold = [&](double eps) {
        return concave ? threshold_s_eps(env.envelope, lambda, mu, eps) : threshold_r_eps(env.envelope, lambda, mu, eps);
    };
    const double data = G(B0);
    auto feasible = [&](double eps) {
        try {
            return threshold(eps) <= data;
        } catch (const Error&) {
            return false;
        }
    };
    double top = res.eps_max * (1.0 - 1e-12);
    if (!feasible(std::min(1e-300, top))) return res;
    if (!std::isfinite(top)) {
        top = 1.0;
        while (feasible(top) && top < 1e300) top *= 2.0;
    }
    double lo = std::min(1e-300, top), hi = top;
    if (feasible(top)) {
        lo = top;
    } else {
        while (hi > 2.0 * lo) {
            double mid = std::sqrt(lo) * std::sqrt(hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        for (int k = 0; k < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++k) {
            double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
    }
    if (!(lo > 0.0)) return res;
    res.eps_feasible = lo;

    auto lower_limit = [&](double eps) {
        const double th = threshold(eps);
        const double inv = th > G(B0) ? invert_increasing(G, th, B0) : B0;
        return std::max(B0, inv);
    };
    auto tail = [&](double a) {
        return integrate_to_infinity(
            [&](double s) {
                double v = G(s);
                return std::isfinite(v) ? 1.0 / v : 0.0;
            },
            a);
    };
    auto objective = [&](double eps) { return tail(lower_limit(eps)).value / eps; };

    // Log-spaced pre-scan over (0, eps_feasible], then golden-section refinement.
    const double e_lo = res.eps_feasible * 1e-6, e_hi = res.eps_feasible;
    std::size_t best = 0;
    for (int k = 0; k < 64; ++k) {
        double eps = e_lo * std::pow(e_hi / e_lo, k / 63.0);
        if (k == 63) eps = e_hi;
        res.scan.push_back({eps, objective(eps)});
        if (res.scan.back().T < res.scan[best].T) best = res.scan.size() - 1;
    }
    double a = res.scan[best > 0 ? best - 1 : 0].eps;
    double b = res.scan[std::min(best + 1, res.scan.size() - 1)].eps;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int k = 0; k < 200 && b - a > 1e-14 * b; ++k) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = objective(x2);
        }
    }
    double eps_star = f1 <= f2 ? x1 : x2;
    double T_star = std::min(f1, f2);
    for (const auto& p : res.scan) {
        if (p.T < T_star) {
            T_star = p.T;
            eps_star = p.eps;
        }
    }
    if (const double Te = objective(e_hi); Te <= T_star) {
        T_star = Te;
        eps_star = e_hi;
    }
    res.feasible = true;
    res.eps_star = eps_star;
    res.threshold = threshold(eps_star);
    res.lower_limit = lower_limit(eps_star);
    res.integral = tail(res.lower_limit);
    res.T_star = res.integral.value / eps_star;
    return res;
}

// ---------------------------------------------------------------------------------------------
// Along-trajectory monitors

struct MonitorRow {
    double t = 0.0;
    double condition = std::numeric_limits<double>::quiet_NaN();  ///< integral condition, snapshots only
    double residual = std::numeric_limits<double>::quiet_NaN();   ///< dB/dt - eps f(B) (or eps K(B)) once active
    double jensen_step = std::numeric_limits<double>::quiet_NaN();  ///< lambda s - mu psi(s) - eps s when s > s_eps
};

struct MonitorLog {
    std::string condition;
    std::vector<MonitorRow> rows;
    std::optional<double> first_violation;
    bool all_nonnegative = true;
};

/// Evaluates the selected integral condition at each snapshot and the discrete differential
/// inequality at each accepted step.
inline MonitorLog monitor_conditions(const Trajectory& traj, const Field& phi, const EnvelopeSpec* env,
                                     const Grid& g, const NonlinearModel& m, double mu, double eps = 0.0,
                                     double threshold = 0.0, double rel_tol = 1e-3) {
    MonitorLog log;
    log.condition = !env ? "basic: int (f(u) - K(u)) phi >= 0"
                    : env->branch == EnvelopeBranch::ConcavePsi ? "concave envelope: int [psi(f(u)) - K(u)] phi >= 0"
                                                                : "convex envelope: int [f(u) - phi(K(u))] phi >= 0";
    auto violate = [&](double t) {
        if (!log.first_violation) log.first_violation = t;
        log.all_nonnegative = false;
    };
    std::size_t snap = 0;
    const bool concave = !env || env->branch == EnvelopeBranch::ConcavePsi;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        MonitorRow row;
        row.t = traj.t[k];
        if (snap < traj.snapshot_times.size() && traj.snapshot_times[snap] == traj.t[k]) {
            const Field& u = traj.snapshots[snap++];
            double val = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double fu = m.f(u[i]), Ku = m.K(u[i]);
                double a, b;
                if (!env) {
                    a = fu;
                    b = Ku;
                } else if (env->branch == EnvelopeBranch::ConcavePsi) {
                    a = env->envelope(fu);
                    b = Ku;
                } else {
                    a = fu;
                    b = env->envelope(Ku);
                }
                val += g.weights[i] * (a - b) * phi[i];
                scale += g.weights[i] * (std::fabs(a) + std::fabs(b)) * phi[i];
            }
            row.condition = val;
            if (val < -1e-10 * (1.0 + scale)) violate(row.t);
        }
        if (k > 0 && eps > 0.0) {
            const double dt = traj.t[k] - traj.t[k - 1];
            const double dB = (traj.B[k] - traj.B[k - 1]) / dt;
            const double active = concave ? traj.s[k - 1] : traj.r[k - 1];
            if (active >= threshold) {
                const double drive = eps * (concave ? m.f(traj.B[k - 1]) : m.K(traj.B[k - 1]));
                row.residual = dB - drive;
                if (row.residual < -rel_tol * (std::fabs(dB) + std::fabs(drive))) violate(row.t);
                if (env && concave && active > threshold) {
                    const double s = traj.s[k - 1];
                    row.jensen_step = m.lambda * s - mu * env->envelope(s) - eps * s;
                }
            }
        }
        log.rows.push_back(row);
    }
    return log;
}

/// Relative Kaplan identity residual per accepted step:
/// |dB/dt + mu r - lambda s| / (|mu| r + lambda s) with trapezoid averages of r and s.
inline std::vector<double> kaplan_residuals(const Trajectory& traj, double mu, double lambda) {
    std::vector<double> out;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double dt = traj.t[k] - traj.t[k - 1];
        const double dB = (traj.B[k] - traj.B[k - 1]) / dt;
        const double r = 0.5 * (traj.r[k] + traj.r[k - 1]);
        const double s = 0.5 * (traj.s[k] + traj.s[k - 1]);
        out.push_back(std::fabs(dB + mu * r - lambda * s) / (std::fabs(mu) * r + lambda * s));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Theorem 2 monitor

struct Theorem2Row {
    double t = 0.0;
    double A = 0.0;
    double dA = std::numeric_limits<double>::quiet_NaN();  ///< (A_k - A_{k-1}) / dt
    double stated = std::numeric_limits<double>::quiet_NaN();    ///< dA - lambda Lambda h(A_{k-1})
    double rigorous = std::numeric_limits<double>::quiet_NaN();  ///< dA - lambda Lambda h(A_{k-1}) / ||K'(w)||
    double kdiff = 0.0;   ///< int (K(u) - K(w)) phi
};

struct Theorem2Log {
    std::vector<Theorem2Row> rows;
    double mu = 0.0;
    double Lambda = 0.0;
    double kprime_sup = 0.0;
    bool A_nondecreasing = true;
    bool inequality_holds = true;
    bool rigorous_holds = true;
    bool kdiff_nonnegative = true;
    std::optional<double> first_violation;
};

/// Logs A(t), dA/dt - lambda Lambda h(A) and int (K(u) - K(w)) phi along a trajectory recorded with
/// w and the linearised eigenfunction. Refuses when mu >= 0.
inline Theorem2Log theorem2_monitor(const Trajectory& traj, const Field& w, double Lambda, const NonlinearModel& m,
                                    [[maybe_unused]] const Grid& g, const EigenPair& lin, double rel_tol = 1e-6,
                                    double kdiff_tol = 1e-8) {
    if (!(lin.mu < 0.0)) throw HypothesisError("theorem2_monitor: requires mu(lambda) < 0");
    if (traj.size() == 0 || std::isnan(traj.A.front()))
        throw Error("theorem2_monitor: trajectory lacks A(t); record it with w and the linearised eigenfunction");
    Theorem2Log log;
    log.mu = lin.mu;
    log.Lambda = Lambda;
    for (double v : w) log.kprime_sup = std::max(log.kprime_sup, m.K.eval(v, 1).d1);
    auto violate = [&](double t) {
        if (!log.first_violation) log.first_violation = t;
    };
    for (std::size_t k = 0; k < traj.size(); ++k) {
        Theorem2Row row;
        row.t = traj.t[k];
        row.A = traj.A[k];
        row.kdiff = traj.kdiff[k];
        if (row.kdiff < -kdiff_tol) {
            log.kdiff_nonnegative = false;
            violate(row.t);
        }
        if (k > 0) {
            const double dt = traj.t[k] - traj.t[k - 1];
            const double A0 = traj.A[k - 1];
            row.dA = (traj.A[k] - A0) / dt;
            const double hA = A0 > 0.0 ? h_func(m, A0) : 0.0;
            const double rhs = m.lambda * Lambda * hA;
            row.stated = row.dA - rhs;
            row.rigorous = row.dA - rhs / log.kprime_sup;
            const double tol = rel_tol * (std::fabs(row.dA) + rhs) + 1e-14;
            if (traj.A[k] < A0 - 1e-12 * (1.0 + std::fabs(A0))) {
                log.A_nondecreasing = false;
                violate(row.t);
            }
            if (row.stated < -tol) {
                log.inequality_holds = false;
                violate(row.t);
            }
            if (row.rigorous < -tol) log.rigorous_holds = false;
        }
        log.rows.push_back(row);
    }
    return log;
}

// ---------------------------------------------------------------------------------------------
// End-to-end certificate

enum class Verdict { CertifiedBlowup, HypothesesViolated, DataTooSmall };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::CertifiedBlowup: return "certified-blow-up";
        case Verdict::HypothesesViolated: return "hypotheses-violated";
        default: return "data-too-small";
    }
}

struct Certificate {
    EnvelopeSpec envelope;
    EnvelopeCheck envelope_check;
    double mu = 0.0;
    double B0 = 0.0;
    UnconditionalThreshold unconditional;
    TStarResult bound;
    bool initial_data_ok = false;
    MonitorLog monitor;
    std::optional<EvolutionResult> evolution;
    Verdict verdict = Verdict::DataTooSmall;
    std::optional<double> first_violation;
    std::string note;

    /// Measured blow-up bracket respects the bound (when the run blew up).
    bool sound(double rel = 0.02) const {
        if (verdict != Verdict::CertifiedBlowup || !evolution) return true;
        const auto& e = evolution->estimate;
        if (e.status != BlowupStatus::BlewUp) return true;
        return e.t_hi <= bound.T_star * (1.0 + rel);
    }
};

/// eigen -> B0 -> T* bound -> evolve -> monitors -> verdict.
inline Certificate certify(const NonlinearModel& m, const Grid& g, const EnvelopeSpec& env, EvolutionConfig cfg,
                           bool run_evolution = true) {
    Certificate c;
    c.envelope = env;
    LinearOperator L = laplacian(g, m.boundary);
    EigenPair ep = principal_eigenpair(L, g);
    c.mu = ep.mu;
    Field u0 = sample(m.u0, g);
    if (L.any_fixed()) {
        const double ub = invert_increasing(m.K, 0.0, 0.0);
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (L.fixed[i]) u0[i] = ub;
    }
    Field pu(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) pu[i] = u0[i] * ep.phi[i];
    c.B0 = integrate(pu, g);
    c.envelope_check = check_envelope(env, m.lambda, ep.mu);
    c.unconditional = thresholds_s0_r0(env, m.lambda, ep.mu, &m);
    c.bound = tstar_bound(m, env, ep.mu, c.B0);
    c.initial_data_ok = c.bound.feasible;
    if (!c.envelope_check.ok) {
        c.verdict = Verdict::HypothesesViolated;
        c.note = c.envelope_check.failure;
        return c;
    }
    if (!c.bound.feasible) {
        c.verdict = Verdict::DataTooSmall;
        c.note = "initial-data constraint infeasible for every admissible epsilon";
        return c;
    }
    if (run_evolution) {
        cfg.tracking = Tracking{ep.phi, ep.mu, {}, {}};
        c.evolution = evolve(m, g, cfg, u0);
        c.monitor = monitor_conditions(c.evolution->trajectory, ep.phi, &env, g, m, ep.mu, c.bound.eps_star,
                                       c.bound.threshold);
        if (!c.monitor.all_nonnegative) {
            c.verdict = Verdict::HypothesesViolated;
            c.first_violation = c.monitor.first_violation;
            c.note = "condition monitor negative along the trajectory";
            return c;
        }
    }
    if (std::isfinite(c.bound.T_star) && c.bound.integral.verdict == TailVerdict::Convergent) {
        c.verdict = Verdict::CertifiedBlowup;
        c.note = run_evolution ? "verified along trajectory" : "bound only; no trajectory checked";
    } else {
        c.verdict = Verdict::HypothesesViolated;
        c.note = "improper integral tail not convergent";
    }
    return c;
}

}  // namespace filtlab

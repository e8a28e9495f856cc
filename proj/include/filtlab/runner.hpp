#pragma once

// Subcommand execution, artifact emission and run manifests.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "filtlab/certify.hpp"
#include "filtlab/config.hpp"
#include "filtlab/dichotomy.hpp"
#include "filtlab/eigen.hpp"
#include "filtlab/evolve.hpp"
#include "filtlab/io.hpp"
#include "filtlab/steady.hpp"

namespace filtlab {

inline constexpr const char* kToolVersion = "0.1.0";

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"validate", "eigen",     "steady", "continue", "evolve",
                                                   "certify",  "dichotomy", "sweep",  "report"};
    return names;
}

struct TaskOutcome {
    std::vector<std::string> files;  ///< relative to the output directory, in emission order
    std::vector<std::pair<std::string, std::string>> verdicts;
    bool positive = true;
    std::vector<std::string> summary;
};

enum ExitCode { kExitOk = 0, kExitError = 1, kExitNegative = 2 };

namespace detail {

class Emitter {
public:
    Emitter(std::filesystem::path dir, TaskOutcome& out) : dir_(std::move(dir)), out_(out) {}

    std::filesystem::path file(const std::string& name) {
        out_.files.push_back(name);
        return dir_ / name;
    }
    void verdict(const std::string& name, const std::string& value, bool positive) {
        out_.verdicts.emplace_back(name, value);
        out_.positive = out_.positive && positive;
    }
    void say(const std::string& line) { out_.summary.push_back(line); }

private:
    std::filesystem::path dir_;
    TaskOutcome& out_;
};

inline std::string fmt(double v) { return format_real(v); }

inline double max_of(const Field& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

/// Model at the requested lambda (absolute, or a fraction of the fold value) and the branch used.
struct Resolved {
    NonlinearModel model;
    Grid grid;
    std::optional<SteadyBranch> branch;
    std::optional<FoldReport> fold;
};

inline SteadyBranch compute_branch(const ExperimentConfig& cfg, const NonlinearModel& m, const Grid& g) {
    const auto& n = cfg.numerics;
    auto start = ramp_to_lambda(m, g, n.lambda_start, std::max(1, n.ramp_steps));
    return continue_branch(m, g, start, n.continuation_steps, n.ds);
}

inline Resolved resolve(const ExperimentConfig& cfg, bool need_branch) {
    Resolved r{cfg.model, build_grid(cfg.model.domain, cfg.numerics.n), std::nullopt, std::nullopt};
    if (cfg.task.lambda_fraction || need_branch) {
        r.branch = compute_branch(cfg, r.model, r.grid);
        if (cfg.task.lambda_fraction) {
            r.fold = find_lambda_star(*r.branch, r.model, r.grid);
            r.model = r.model.with_lambda(*cfg.task.lambda_fraction * r.fold->lambda_star);
        }
    }
    return r;
}

inline SteadyState select_state(const ExperimentConfig& cfg, Resolved& r, SteadyBranchChoice which) {
    if (which == SteadyBranchChoice::Lower && !r.branch) {
        auto s = ramp_to_lambda(r.model, r.grid, r.model.lambda, std::max(1, cfg.numerics.ramp_steps));
        return solve_steady(r.model, r.grid, r.model.lambda, s.z, SteadyOptions{cfg.numerics.newton_tol, 60});
    }
    if (!r.branch) r.branch = compute_branch(cfg, r.model, r.grid);
    auto states = steady_states_at(*r.branch, r.model, r.grid, r.model.lambda);
    const std::size_t idx = which == SteadyBranchChoice::Lower ? 0 : 1;
    if (states.size() <= idx)
        throw HypothesisError(std::string("no ") + (idx ? "upper" : "lower") + "-branch steady state at lambda = " +
                              fmt(r.model.lambda) + " on the computed branch");
    return states[idx];
}

inline std::string boundary_text(const BoundaryCondition& b) {
    switch (b.kind) {
        case BoundaryKind::Dirichlet: return "dirichlet";
        case BoundaryKind::Neumann: return "neumann";
        default: return "robin " + b.beta.source();
    }
}

inline json problem_json(const NonlinearModel& m, const Grid& g) {
    json j{{"K", m.K.source()}, {"f", m.f.source()}, {"lambda", m.lambda}, {"u0", m.u0.source()}};
    if (m.domain.is_interval())
        j["domain"] = {{"kind", "interval"}, {"a", m.domain.interval().a}, {"b", m.domain.interval().b}};
    else
        j["domain"] = {{"kind", "ball"}, {"dimension", m.domain.ball().dimension}, {"radius", m.domain.ball().radius}};
    j["boundary"] = {{"left", boundary_text(m.boundary.left)}, {"right", boundary_text(m.boundary.right)}};
    j["nodes"] = g.size();
    return j;
}

inline Field initial_field(const NonlinearModel& m, const Grid& g) {
    Field u = sample(m.u0, g);
    LinearOperator L = laplacian(g, m.boundary);
    if (L.any_fixed()) {
        const double ub = invert_increasing(m.K, 0.0, 0.0);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (L.fixed[i]) u[i] = ub;
    }
    return u;
}

inline EvolutionConfig evolution_config(const ExperimentConfig& cfg) { return cfg.numerics.evolution; }

inline void write_evolution(Emitter& em, const ExperimentConfig& cfg, const EvolutionResult& r, const Grid& g) {
    write_trajectory_csv(em.file("trajectory.csv"), r.trajectory);
    if (cfg.output.snapshots) write_snapshots_csv(em.file("snapshots.csv"), r.trajectory, g);
}

// ---------------------------------------------------------------------------------------------

inline void run_validate(const ExperimentConfig& cfg, Emitter& em) {
    const auto& m = cfg.model;
    auto rep = validate_assumptions(m, cfg.numerics.s_max, cfg.numerics.samples);
    json j{{"problem", problem_json(m, build_grid(m.domain, cfg.numerics.n))}, {"assumptions", to_json(rep)}};
    write_json(em.file("assumptions.json"), j);
    for (const auto& i : rep.items) em.say(i.name + ": " + to_string(i.verdict));
    em.verdict("assumptions", rep.all_hold() ? "hold" : "violated", rep.all_hold());
}

inline void run_eigen(const ExperimentConfig& cfg, Emitter& em) {
    auto r = resolve(cfg, false);
    const Grid& g = r.grid;
    auto ep = principal_eigenpair(laplacian(g, r.model.boundary), g);
    json j{{"problem", problem_json(r.model, g)}, {"auxiliary", to_json(ep)}};
    {
        CsvWriter w(em.file("eigenfunction.csv"), {"x", "phi"});
        for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x[i], ep.phi[i]});
    }
    em.say("auxiliary mu = " + fmt(ep.mu) + " (residual " + fmt(ep.residual) + ")");
    if (cfg.task.linearize != "none") {
        auto which = cfg.task.linearize == "upper" ? SteadyBranchChoice::Upper : SteadyBranchChoice::Lower;
        auto st = select_state(cfg, r, which);
        auto lin = linearized_eigenpair(st.w, r.model, g);
        j["linearized"] = to_json(lin);
        j["linearized"]["branch"] = cfg.task.linearize;
        j["linearized"]["stable"] = lin.mu > 0.0;
        CsvWriter w(em.file("linearized.csv"), {"x", "w", "phi"});
        for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x[i], st.w[i], lin.phi[i]});
        em.say("linearized mu = " + fmt(lin.mu) + " on the " + cfg.task.linearize + " branch");
    }
    write_json(em.file("eigen.json"), j);
    em.verdict("eigen", "computed", true);
}

inline void run_steady(const ExperimentConfig& cfg, Emitter& em) {
    auto r = resolve(cfg, false);
    const Grid& g = r.grid;
    SteadyState st;
    try {
        st = select_state(cfg, r, cfg.task.steady_branch);
    } catch (const ConvergenceError& e) {
        write_json(em.file("steady.json"),
                   {{"problem", problem_json(r.model, g)}, {"converged", false}, {"reason", e.what()}});
        em.say(std::string("no steady state: ") + e.what());
        em.verdict("steady", "no-solution", false);
        return;
    }
    {
        CsvWriter w(em.file("steady.csv"), {"x", "z", "w"});
        for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x[i], st.z[i], st.w[i]});
    }
    write_json(em.file("steady.json"), {{"problem", problem_json(r.model, g)},
                                        {"converged", true},
                                        {"lambda", st.lambda},
                                        {"residual", st.residual},
                                        {"iterations", st.iterations},
                                        {"max_z", max_of(st.z)},
                                        {"max_w", max_of(st.w)}});
    em.say("steady state at lambda = " + fmt(st.lambda) + ", max w = " + fmt(max_of(st.w)));
    em.verdict("steady", "converged", true);
}

inline void run_continue(const ExperimentConfig& cfg, Emitter& em) {
    NonlinearModel m = cfg.model;
    Grid g = build_grid(m.domain, cfg.numerics.n);
    auto br = compute_branch(cfg, m, g);
    {
        CsvWriter w(em.file("branch.csv"), {"index", "arclength", "lambda", "max_z", "max_w", "residual", "turning"});
        for (std::size_t k = 0; k < br.states.size(); ++k) {
            const auto& s = br.states[k];
            w.row({static_cast<double>(k), br.arclength[k], s.lambda, max_of(s.z), max_of(s.w), s.residual,
                   br.turning[k] ? 1.0 : 0.0});
        }
    }
    json j{{"problem", problem_json(m, g)}, {"branch_points", br.states.size()}, {"aborted", br.aborted}};
    try {
        auto fold = find_lambda_star(br, m, g);
        j["fold"] = to_json(fold);
        CsvWriter w(em.file("fold_state.csv"), {"x", "z", "w"});
        for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x[i], fold.state.z[i], fold.state.w[i]});
        em.say("lambda* = " + fmt(fold.lambda_star));
        em.verdict("fold", "found", true);
    } catch (const NoFoldError& e) {
        j["fold"] = nullptr;
        j["reason"] = e.what();
        em.say(std::string("no fold: ") + e.what());
        em.verdict("fold", "no-fold", false);
    }
    write_json(em.file("fold.json"), j);
}

inline void run_evolve(const ExperimentConfig& cfg, Emitter& em) {
    auto r = resolve(cfg, false);
    const Grid& g = r.grid;
    auto ep = principal_eigenpair(laplacian(g, r.model.boundary), g);
    EvolutionConfig ec = evolution_config(cfg);
    ec.tracking = Tracking{ep.phi, ep.mu, {}, {}};
    auto res = evolve(r.model, g, ec, initial_field(r.model, g));
    write_evolution(em, cfg, res, g);
    const auto kap = kaplan_residuals(res.trajectory, ep.mu, r.model.lambda);
    double jensen = std::numeric_limits<double>::infinity();
    const auto& T = res.trajectory;
    for (std::size_t k = 0; k < T.size(); ++k)
        jensen = std::min({jensen, T.s[k] - r.model.f(T.B[k]), T.r[k] - r.model.K(T.B[k])});
    json j{{"problem", problem_json(r.model, g)},
           {"estimate", to_json(res.estimate)},
           {"accepted_steps", T.size() - 1},
           {"rejected_steps", T.rejected},
           {"mu", ep.mu},
           {"kaplan_residual_max", kap.empty() ? 0.0 : *std::max_element(kap.begin(), kap.end())},
           {"jensen_margin_min", real_json(jensen)}};
    write_json(em.file("blowup.json"), j);
    const auto& e = res.estimate;
    em.say(to_string(e.status) + " [" + fmt(e.t_lo) + ", " + fmt(e.t_hi) + "] final sup " + fmt(e.final_sup));
    em.verdict("evolve", to_string(e.status), e.status != BlowupStatus::Inconclusive);
}

inline void write_monitor_csv(const std::filesystem::path& path, const MonitorLog& log) {
    CsvWriter w(path, {"t", "condition", "residual", "jensen_step"});
    for (const auto& row : log.rows) w.row({row.t, row.condition, row.residual, row.jensen_step});
}

inline void run_certify_theorem1(const ExperimentConfig& cfg, Emitter& em) {
    if (!cfg.task.envelope) throw ConfigError("certify (theorem 1) requires task.envelope");
    auto r = resolve(cfg, false);
    const Grid& g = r.grid;
    const EnvelopeSpec env = cfg.task.envelope_branch == "concave" ? EnvelopeSpec::concave(*cfg.task.envelope, cfg.task.slope)
                                                                     : EnvelopeSpec::convex(*cfg.task.envelope, cfg.task.slope);
    const bool external = !cfg.task.trajectory.empty();
    Certificate c = certify(r.model, g, env, evolution_config(cfg), !external);
    if (external && c.verdict == Verdict::CertifiedBlowup) {
        const std::filesystem::path tp = cfg.task.trajectory;
        if (!std::filesystem::exists(tp)) throw Error("missing referenced trajectory file " + tp.string());
        auto T = read_trajectory(tp, tp.parent_path() / "snapshots.csv");
        auto ep = principal_eigenpair(laplacian(g, r.model.boundary), g);
        c.monitor = monitor_conditions(T, ep.phi, &env, g, r.model, ep.mu, c.bound.eps_star, c.bound.threshold);
        c.note = "verified along the supplied trajectory";
        if (!c.monitor.all_nonnegative) {
            c.verdict = Verdict::HypothesesViolated;
            c.first_violation = c.monitor.first_violation;
            c.note = "condition monitor negative along the supplied trajectory";
        }
    }
    json j = to_json(c);
    j["problem"] = problem_json(r.model, g);
    write_json(em.file("certificate.json"), j);
    if (!c.monitor.rows.empty()) write_monitor_csv(em.file("monitor.csv"), c.monitor);
    if (c.evolution) write_evolution(em, cfg, *c.evolution, g);
    std::string line = to_string(c.verdict);
    if (c.bound.feasible) line += ": eps* = " + fmt(c.bound.eps_star) + ", T* = " + fmt(c.bound.T_star);
    if (c.evolution) line += ", measured t_hi = " + fmt(c.evolution->estimate.t_hi);
    em.say(line);
    em.verdict("certificate", to_string(c.verdict), c.verdict == Verdict::CertifiedBlowup && c.sound());
    if (c.evolution) em.verdict("sound", c.sound() ? "yes" : "no", c.sound());
}

inline void run_certify_theorem2(const ExperimentConfig& cfg, Emitter& em) {
    auto r = resolve(cfg, true);
    const Grid& g = r.grid;
    const auto& m = r.model;
    auto st = select_state(cfg, r, SteadyBranchChoice::Upper);
    auto lin = linearized_eigenpair(st.w, m, g);
    json j{{"problem", problem_json(m, g)}, {"steady_max_w", max_of(st.w)}, {"mu_linearized", lin.mu}};
    if (r.fold) j["lambda_star"] = r.fold->lambda_star;
    auto finish = [&](Verdict v, const std::string& note) {
        j["verdict"] = to_string(v);
        j["note"] = note;
        write_json(em.file("theorem2.json"), j);
        em.say(to_string(v) + ": " + note);
        em.verdict("theorem2", to_string(v), v == Verdict::CertifiedBlowup);
    };
    if (!(lin.mu < 0.0)) return finish(Verdict::HypothesesViolated, "mu(lambda) >= 0 at the selected steady state");
    auto k = compute_constants(m, st.w, g, cfg.task.eta_samples, cfg.task.s_samples);
    j["constants"] = to_json(k);
    Field u0(st.w.size());
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = st.w[i] + cfg.task.delta * lin.phi[i];
    auto ep = principal_eigenpair(laplacian(g, m.boundary), g);
    EvolutionConfig ec = evolution_config(cfg);
    ec.tracking = Tracking{ep.phi, ep.mu, st.w, lin.phi};
    auto res = evolve(m, g, ec, u0);
    write_evolution(em, cfg, res, g);
    auto log = theorem2_monitor(res.trajectory, st.w, k.Lambda, m, g, lin);
    {
        CsvWriter w(em.file("theorem2.csv"), {"t", "A", "dA", "stated", "rigorous", "kdiff"});
        for (const auto& row : log.rows) w.row({row.t, row.A, row.dA, row.stated, row.rigorous, row.kdiff});
    }
    j["estimate"] = to_json(res.estimate);
    j["monitor"] = {{"A_nondecreasing", log.A_nondecreasing},
                    {"inequality_holds", log.inequality_holds},
                    {"rigorous_holds", log.rigorous_holds},
                    {"kdiff_nonnegative", log.kdiff_nonnegative},
                    {"kprime_sup", log.kprime_sup}};
    j["first_violation"] = log.first_violation ? json(*log.first_violation) : json(nullptr);
    if (res.estimate.status != BlowupStatus::BlewUp)
        return finish(Verdict::HypothesesViolated, "no blow-up detected (" + to_string(res.estimate.status) + ")");
    if (!log.A_nondecreasing || !log.inequality_holds || !log.kdiff_nonnegative)
        return finish(Verdict::HypothesesViolated, "differential-inequality monitor violated");
    finish(Verdict::CertifiedBlowup, "blew up in [" + fmt(res.estimate.t_lo) + ", " + fmt(res.estimate.t_hi) +
                                         "]; monitor nonnegative along trajectory");
}

inline void run_dichotomy(const ExperimentConfig& cfg, Emitter& em) {
    auto r = resolve(cfg, false);
    const Grid& g = r.grid;
    const auto& m = r.model;
    auto st = select_state(cfg, r, cfg.task.steady_branch);
    json j{{"problem", problem_json(m, g)}, {"steady_max_w", max_of(st.w)}};
    DichotomyConstants k;
    try {
        k = compute_constants(m, st.w, g, cfg.task.eta_samples, cfg.task.s_samples);
    } catch (const HypothesisError& e) {
        j["error"] = e.what();
        write_json(em.file("constants.json"), j);
        em.say(std::string("hypotheses violated: ") + e.what());
        em.verdict("majorization", "hypotheses-violated", false);
        return;
    }
    const double s_max = cfg.task.majorization_factor * std::max(k.S, 1.0);
    auto rep = verify_majorization(m, st.w, k.Lambda, s_max, cfg.task.majorization_samples, &k);
    j["constants"] = to_json(k);
    j["majorization"] = to_json(rep);
    j["majorization"]["s_max"] = s_max;
    write_json(em.file("constants.json"), j);
    {
        CsvWriter w(em.file("majorization.csv"), {"x", "w", "min_margin", "argmin_s"});
        for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x[i], st.w[i], rep.node_min[i], rep.node_argmin_s[i]});
    }
    em.say("Lambda = " + fmt(k.Lambda) + ", S = " + fmt(k.S) + ", min(F_w - Lambda h) = " + fmt(rep.min_margin));
    em.verdict("majorization", rep.passed ? "passed" : "failed", rep.passed);
}

}  // namespace detail

/// Runs one non-sweep subcommand into `dir`, writing the manifest last.
inline TaskOutcome run_task(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    TaskOutcome out;
    detail::Emitter em(dir, out);
    {
        std::ofstream cf(em.file("resolved_config.ini"), std::ios::binary);
        cf << cfg.canonical;
    }
    if (command == "validate") detail::run_validate(cfg, em);
    else if (command == "eigen") detail::run_eigen(cfg, em);
    else if (command == "steady") detail::run_steady(cfg, em);
    else if (command == "continue") detail::run_continue(cfg, em);
    else if (command == "evolve") detail::run_evolve(cfg, em);
    else if (command == "certify") {
        if (cfg.task.theorem == 2) detail::run_certify_theorem2(cfg, em);
        else detail::run_certify_theorem1(cfg, em);
    } else if (command == "dichotomy") detail::run_dichotomy(cfg, em);
    else throw ConfigError("unknown subcommand '" + command + "'");

    json verdicts = json::object();
    for (const auto& [k, v] : out.verdicts) verdicts[k] = v;
    json manifest{{"tool", "filtlab"},
                  {"version", kToolVersion},
                  {"command", command},
                  {"config_hash", cfg.hash},
                  {"wall_time_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"files", out.files},
                  {"verdicts", verdicts},
                  {"positive", out.positive}};
    const auto tmp = dir / "manifest.json.tmp";
    write_json(tmp, manifest);
    fs::rename(tmp, dir / "manifest.json");
    return out;
}

struct SweepPoint {
    std::string dir;
    std::vector<std::pair<std::string, std::string>> assignment;
    std::string status = "ok";
    TaskOutcome outcome;
};

/// Runs every grid point concurrently (at most `jobs` at once); a failing point is recorded, not fatal.
inline std::vector<SweepPoint> run_sweep(const RawConfig& raw, const std::filesystem::path& dir, int jobs) {
    namespace fs = std::filesystem;
    if (raw.sweeps.empty()) throw ConfigError("sweep requires a [sweep] section with at least one grid");
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    auto points = expand_sweep(raw);
    std::vector<SweepPoint> results(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%04zu", i);
        results[i].dir = name;
        for (const auto& [key, _] : raw.sweeps) results[i].assignment.emplace_back(key, points[i].values.at(key).text);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
            try {
                auto cfg = build_experiment(points[i]);
                const std::string cmd = cfg.task.command;
                if (cmd == "sweep" || cmd == "report") throw ConfigError("task.command cannot be " + cmd);
                results[i].outcome = run_task(cmd, cfg, dir / results[i].dir);
                if (!results[i].outcome.positive) results[i].status = "negative";
            } catch (const std::exception& e) {
                results[i].status = std::string("error: ") + e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json pts = json::array();
    std::vector<std::string> files;
    for (const auto& p : results) {
        json a = json::object();
        for (const auto& [k, v] : p.assignment) a[k] = v;
        json verdicts = json::object();
        for (const auto& [k, v] : p.outcome.verdicts) verdicts[k] = v;
        pts.push_back({{"dir", p.dir}, {"assignment", a}, {"status", p.status}, {"verdicts", verdicts}});
        for (const auto& f : p.outcome.files) files.push_back(p.dir + "/" + f);
        if (p.status == "ok" || p.status == "negative") files.push_back(p.dir + "/manifest.json");
    }
    RawConfig base = raw;
    json manifest{{"tool", "filtlab"},
                  {"version", kToolVersion},
                  {"command", "sweep"},
                  {"config_hash", config_hash(base)},
                  {"wall_time_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"files", files},
                  {"points", pts}};
    const auto tmp = dir / "manifest.json.tmp";
    write_json(tmp, manifest);
    fs::rename(tmp, dir / "manifest.json");
    return results;
}

/// Human-readable summary of every manifest under `dir`. Returns the exit code the runs implied.
inline int report(const std::filesystem::path& dir, std::ostream& os) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw Error("report: no such directory " + dir.string());
    std::vector<fs::path> manifests;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "manifest.json") manifests.push_back(e.path());
    std::sort(manifests.begin(), manifests.end());
    if (manifests.empty()) throw Error("report: no manifest.json under " + dir.string());
    int code = kExitOk;
    for (const auto& p : manifests) {
        auto j = read_json(p);
        const auto rel = fs::relative(p.parent_path(), dir).string();
        os << (rel == "." ? std::string(".") : rel) << ": " << j.value("command", "?") << " (config " << j.value("config_hash", "?")
           << ", " << j["files"].size() << " files)\n";
        if (j.contains("points")) {
            for (const auto& pt : j["points"]) {
                os << "  " << pt["dir"].get<std::string>() << " " << pt["assignment"].dump() << " -> "
                   << pt["status"].get<std::string>() << "\n";
                const auto st = pt["status"].get<std::string>();
                if (st.rfind("error", 0) == 0) code = kExitError;
                else if (st == "negative" && code == kExitOk) code = kExitNegative;
            }
            continue;
        }
        for (const auto& [k, v] : j["verdicts"].items()) os << "  " << k << ": " << v.get<std::string>() << "\n";
        if (!j.value("positive", true) && code == kExitOk) code = kExitNegative;
    }
    return code;
}

}  // namespace filtlab

#pragma once

// CSV and JSON serialisation of results. Reals in CSV use 17 significant digits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "filtlab/certify.hpp"
#include "filtlab/dichotomy.hpp"
#include "filtlab/eigen.hpp"
#include "filtlab/error.hpp"
#include "filtlab/evolve.hpp"
#include "filtlab/model.hpp"
#include "filtlab/steady.hpp"

namespace filtlab {

using json = nlohmann::ordered_json;

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON has no NaN or infinity; they are emitted as null.
inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot write " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_real(values[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return json::parse(in);
}

/// Reads a numeric CSV with a header row into named columns.
inline std::vector<std::pair<std::string, std::vector<double>>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    std::string line;
    if (!std::getline(in, line)) throw Error("empty CSV " + path.string());
    std::size_t start = 0;
    while (true) {
        const auto c = line.find(',', start);
        cols.push_back({line.substr(start, c == std::string::npos ? std::string::npos : c - start), {}});
        if (c == std::string::npos) break;
        start = c + 1;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        for (auto& col : cols) {
            const auto c = line.find(',', pos);
            const std::string cell = line.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
            col.second.push_back(cell == "nan" ? std::nan("") : std::stod(cell));
            pos = c == std::string::npos ? line.size() : c + 1;
        }
    }
    return cols;
}

// ---------------------------------------------------------------------------------------------

inline json to_json(const AssumptionReport& r) {
    json items = json::array();
    for (const auto& i : r.items) {
        json j{{"name", i.name}, {"verdict", to_string(i.verdict)}};
        j["witness"] = i.witness ? real_json(*i.witness) : json(nullptr);
        j["note"] = i.note;
        items.push_back(j);
    }
    return {{"s_max", r.s_max}, {"samples", r.n_samples}, {"grid", r.grid_description}, {"all_hold", r.all_hold()},
            {"items", items}};
}

inline json to_json(const EigenPair& e) {
    return {{"mu", e.mu}, {"normalization", to_string(e.normalization)}, {"residual", e.residual},
            {"iterations", e.iterations}};
}

inline json to_json(const FoldReport& f) {
    double zmax = 0.0;
    for (double v : f.state.z) zmax = std::max(zmax, v);
    return {{"lambda_star", f.lambda_star}, {"lambda_before", f.lambda_before}, {"lambda_after", f.lambda_after},
            {"arclength", f.arclength},     {"accuracy", f.accuracy},           {"refinements", f.refinements},
            {"max_z", zmax},                {"residual", f.state.residual}};
}

inline json to_json(const BlowupEstimate& e) {
    json tail = json::array();
    for (double v : e.sup_tail) tail.push_back(real_json(v));
    return {{"status", to_string(e.status)}, {"t_lo", e.t_lo}, {"t_hi", e.t_hi}, {"final_sup", real_json(e.final_sup)},
            {"final_dt", e.final_dt},        {"reason", e.reason}, {"sup_tail", tail}};
}

inline json to_json(const ImproperIntegral& i) {
    return {{"value", real_json(i.value)}, {"tail_estimate", real_json(i.tail_estimate)}, {"cutoff", i.cutoff},
            {"verdict", to_string(i.verdict)}};
}

inline json to_json(const DichotomyConstants& c) {
    return {{"m", c.m},
            {"M", c.M},
            {"c1", c.c1},
            {"c2", c.c2},
            {"S", c.S},
            {"S_cutoff", c.S_cutoff},
            {"Lambda1", c.Lambda1},
            {"Lambda2", c.Lambda2},
            {"Lambda3", c.Lambda3},
            {"Lambda", c.Lambda},
            {"s2_over_h_min", c.s2_over_h_min},
            {"s2_over_h_limit", c.s2_over_h_limit},
            {"Lambda2_minimiser", {{"eta", c.Lambda2_eta}, {"x", c.Lambda2_x}}},
            {"provenance", {{"nodes", c.nodes}, {"eta_samples", c.eta_samples}, {"s_samples", c.s_samples}}}};
}

inline json to_json(const MajorizationReport& r) {
    return {{"min_margin", r.min_margin},   {"argmin_node", r.argmin_node},
            {"argmin_s", r.argmin_s},       {"samples", r.samples},
            {"passed", r.passed},           {"strictly_positive", r.strictly_positive},
            {"small_regime_ok", r.small_regime_ok}, {"large_regime_ok", r.large_regime_ok}};
}

inline json to_json(const Certificate& c) {
    json scan = json::array();
    for (const auto& p : c.bound.scan) scan.push_back({{"eps", p.eps}, {"T", real_json(p.T)}});
    json j{{"verdict", to_string(c.verdict)},
           {"note", c.note},
           {"envelope",
            {{"branch", to_string(c.envelope.branch)},
             {"expression", c.envelope.envelope.source()},
             {"slope", c.envelope.slope},
             {"check_ok", c.envelope_check.ok},
             {"check_failure", c.envelope_check.failure},
             {"verified_up_to", c.envelope_check.s_max},
             {"samples", c.envelope_check.samples}}},
           {"mu", c.mu},
           {"B0", c.B0},
           {"unconditional_threshold", {{"value", c.unconditional.value}, {"unconditional", c.unconditional.unconditional}}},
           {"initial_data_ok", c.initial_data_ok},
           {"eps_star", c.bound.feasible ? json(c.bound.eps_star) : json(nullptr)},
           {"threshold", c.bound.feasible ? json(c.bound.threshold) : json(nullptr)},
           {"T_star", c.bound.feasible ? real_json(c.bound.T_star) : json(nullptr)},
           {"eps_max", real_json(c.bound.eps_max)},
           {"eps_feasible", c.bound.eps_feasible},
           {"lower_limit", c.bound.lower_limit},
           {"integral", to_json(c.bound.integral)},
           {"eps_scan", scan},
           {"monitor", {{"condition", c.monitor.condition}, {"all_nonnegative", c.monitor.all_nonnegative}}}};
    j["first_violation"] = c.first_violation ? json(*c.first_violation) : json(nullptr);
    if (c.evolution) {
        j["evolution"] = to_json(c.evolution->estimate);
        j["sound"] = c.sound();
    }
    return j;
}

// ---------------------------------------------------------------------------------------------

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& T) {
    CsvWriter w(path, {"t", "dt", "sup_norm", "mass", "B", "s", "r", "A"});
    for (std::size_t k = 0; k < T.size(); ++k) w.row({T.t[k], T.dt[k], T.sup[k], T.mass[k], T.B[k], T.s[k], T.r[k], T.A[k]});
}

/// Long format: one row per (time, node).
inline void write_snapshots_csv(const std::filesystem::path& path, const Trajectory& T, const Grid& g) {
    CsvWriter w(path, {"t", "x", "u"});
    for (std::size_t k = 0; k < T.snapshots.size(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i) w.row({T.snapshot_times[k], g.x[i], T.snapshots[k][i]});
}

/// Inverse of write_trajectory_csv plus optional snapshots.
inline Trajectory read_trajectory(const std::filesystem::path& traj_csv, const std::filesystem::path& snapshots_csv = {}) {
    auto cols = read_csv(traj_csv);
    auto col = [&](const std::string& name) -> std::vector<double>& {
        for (auto& c : cols)
            if (c.first == name) return c.second;
        throw Error("trajectory CSV lacks column " + name);
    };
    Trajectory T;
    T.t = col("t");
    T.dt = col("dt");
    T.sup = col("sup_norm");
    T.mass = col("mass");
    T.B = col("B");
    T.s = col("s");
    T.r = col("r");
    T.A = col("A");
    T.kdiff.assign(T.t.size(), std::nan(""));
    if (!snapshots_csv.empty() && std::filesystem::exists(snapshots_csv)) {
        auto sc = read_csv(snapshots_csv);
        const auto& t = sc.at(0).second;
        const auto& u = sc.at(2).second;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (T.snapshot_times.empty() || T.snapshot_times.back() != t[i]) {
                T.snapshot_times.push_back(t[i]);
                T.snapshots.emplace_back();
            }
            T.snapshots.back().push_back(u[i]);
        }
    }
    return T;
}

}  // namespace filtlab

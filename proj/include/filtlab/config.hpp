#pragma once

// Experiment configuration: line-based `key = value` with `[section]` headers.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/evolve.hpp"
#include "filtlab/expr.hpp"
#include "filtlab/model.hpp"

namespace filtlab {

enum class ValueKind { Expression, Real, Integer, Text };

struct ConfigKey {
    std::string_view name;
    ValueKind kind;
};

struct ConfigSection {
    std::string_view name;
    std::vector<ConfigKey> keys;
};

inline const std::vector<ConfigSection>& config_schema() {
    static const std::vector<ConfigSection> schema = {
        {"problem",
         {{"K", ValueKind::Expression},
          {"f", ValueKind::Expression},
          {"lambda", ValueKind::Real},
          {"u0", ValueKind::Expression},
          {"domain", ValueKind::Text},
          {"boundary", ValueKind::Text},
          {"boundary_left", ValueKind::Text},
          {"boundary_right", ValueKind::Text}}},
        {"numerics",
         {{"n", ValueKind::Integer},
          {"t_end", ValueKind::Real},
          {"dt_init", ValueKind::Real},
          {"dt_min", ValueKind::Real},
          {"safety", ValueKind::Real},
          {"U_max", ValueKind::Real},
          {"rtol", ValueKind::Real},
          {"atol", ValueKind::Real},
          {"growth_limit", ValueKind::Real},
          {"max_steps", ValueKind::Integer},
          {"s_max", ValueKind::Real},
          {"samples", ValueKind::Integer},
          {"newton_tol", ValueKind::Real},
          {"lambda_start", ValueKind::Real},
          {"ramp_steps", ValueKind::Integer},
          {"continuation_steps", ValueKind::Integer},
          {"ds", ValueKind::Real}}},
        {"task",
         {{"envelope", ValueKind::Expression},
          {"envelope_branch", ValueKind::Text},
          {"slope", ValueKind::Real},
          {"theorem", ValueKind::Integer},
          {"lambda_fraction", ValueKind::Real},
          {"steady_branch", ValueKind::Text},
          {"delta", ValueKind::Real},
          {"linearize", ValueKind::Text},
          {"eta_samples", ValueKind::Integer},
          {"s_samples", ValueKind::Integer},
          {"majorization_factor", ValueKind::Real},
          {"majorization_samples", ValueKind::Integer},
          {"trajectory", ValueKind::Text},
          {"command", ValueKind::Text}}},
        {"output",
         {{"dir", ValueKind::Text}, {"snapshot_every", ValueKind::Integer}, {"snapshots", ValueKind::Text}}},
    };
    return schema;
}

inline const ConfigKey* find_config_key(std::string_view section, std::string_view key) {
    for (const auto& s : config_schema())
        if (s.name == section)
            for (const auto& k : s.keys)
                if (k.name == key) return &k;
    return nullptr;
}

struct ConfigValue {
    std::string text;
    int line = 0;  ///< 0 for command-line overrides
};

/// Parsed but untyped contents. Keys are "section.key"; sweep grids keep declaration order.
struct RawConfig {
    std::map<std::string, ConfigValue> values;
    std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;
    std::string source = "<string>";

    std::optional<ConfigValue> get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }

    /// Sorted, whitespace-normalised rendering; the basis of the config hash.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values) out += k + " = " + v.text + "\n";
        for (const auto& [k, vs] : sweeps) {
            out += "sweep " + k + " =";
            for (const auto& v : vs) out += " " + v + ";";
            out += "\n";
        }
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::pair<std::string, std::string> split_dotted(std::string_view key, int line) {
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) throw ConfigError("expected section.key, got '" + std::string(key) + "'", line);
    return {std::string(key.substr(0, dot)), std::string(key.substr(dot + 1))};
}

inline void check_key(const std::string& section, const std::string& key, int line) {
    bool known_section = false;
    for (const auto& s : config_schema()) known_section |= s.name == section;
    if (!known_section) throw ConfigError("unknown section [" + section + "]", line);
    if (!find_config_key(section, key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
}

}  // namespace detail

inline RawConfig parse_config_text(std::string_view text, std::string source = "<string>") {
    RawConfig cfg;
    cfg.source = std::move(source);
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            bool known = section == "sweep";
            for (const auto& s : config_schema()) known |= s.name == section;
            if (!known) throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no);
        if (section == "sweep") {
            auto [s, k] = detail::split_dotted(key, line_no);
            detail::check_key(s, k, line_no);
            for (const auto& [existing, _] : cfg.sweeps)
                if (existing == key) throw ConfigError("duplicate sweep key '" + key + "'", line_no);
            auto values = detail::split_list(value);
            for (const auto& v : values)
                if (v.empty()) throw ConfigError("empty value in sweep list for '" + key + "'", line_no);
            cfg.sweeps.emplace_back(key, std::move(values));
            continue;
        }
        detail::check_key(section, key, line_no);
        const std::string full = section + "." + key;
        if (cfg.values.contains(full)) throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line_no);
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no);
        cfg.values[full] = {value, line_no};
    }
    return cfg;
}

inline RawConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

/// Applies `section.key=value` on top of the file contents.
inline void apply_override(RawConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override must be section.key=value: " + std::string(assignment));
    const std::string key(detail::trim(assignment.substr(0, eq)));
    const std::string value(detail::trim(assignment.substr(eq + 1)));
    auto [s, k] = detail::split_dotted(key, 0);
    detail::check_key(s, k, 0);
    if (value.empty()) throw ConfigError("empty override value for " + key);
    cfg.values[key] = {value, 0};
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const RawConfig& cfg) { return fnv1a_hex(cfg.canonical()); }

/// Cartesian product of the sweep grids, first-declared key varying slowest.
inline std::vector<RawConfig> expand_sweep(const RawConfig& cfg) {
    std::vector<RawConfig> points{cfg};
    points.front().sweeps.clear();
    for (const auto& [key, values] : cfg.sweeps) {
        std::vector<RawConfig> next;
        for (const auto& p : points)
            for (const auto& v : values) {
                RawConfig q = p;
                q.values[key] = {v, 0};
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

// ---------------------------------------------------------------------------------------------
// Typed view

enum class SteadyBranchChoice { Lower, Upper };

struct NumericsConfig {
    int n = 256;
    EvolutionConfig evolution;
    double s_max = 1e3;
    int samples = 200;
    double newton_tol = 1e-10;
    double lambda_start = 0.1;
    int ramp_steps = 4;
    int continuation_steps = 80;
    double ds = 0.25;
};

struct TaskConfig {
    std::optional<Expression> envelope;
    std::string envelope_branch = "concave";
    double slope = 0.0;
    int theorem = 1;
    std::optional<double> lambda_fraction;
    SteadyBranchChoice steady_branch = SteadyBranchChoice::Lower;
    double delta = 0.1;
    std::string linearize = "none";
    int eta_samples = 256;
    int s_samples = 200;
    double majorization_factor = 10.0;
    int majorization_samples = 20;
    std::string trajectory;
    std::string command = "certify";
};

struct OutputConfig {
    std::string dir = "out";
    bool snapshots = false;
};

struct ExperimentConfig {
    NonlinearModel model;
    NumericsConfig numerics;
    TaskConfig task;
    OutputConfig output;
    std::string hash;
    std::string canonical;
};

namespace detail {

inline double parse_real(const ConfigValue& v, const std::string& key) {
    double out = 0.0;
    const char* b = v.text.data();
    const char* e = b + v.text.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) throw ConfigError("'" + key + "' expects a real number, got '" + v.text + "'", v.line);
    return out;
}

inline long parse_integer(const ConfigValue& v, const std::string& key) {
    long out = 0;
    const char* b = v.text.data();
    const char* e = b + v.text.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) throw ConfigError("'" + key + "' expects an integer, got '" + v.text + "'", v.line);
    return out;
}

inline Expression parse_expression(const ConfigValue& v, const std::string& key,
                                   std::initializer_list<std::string_view> vars) {
    try {
        return Expression::parse(v.text, vars);
    } catch (const ParseError& e) {
        throw ConfigError("'" + key + "': " + e.what(), v.line);
    }
}

inline std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

inline DomainSpec parse_domain(const ConfigValue& v) {
    auto w = words(v.text);
    try {
        if (w.size() == 3 && w[0] == "interval") {
            ConfigValue a{w[1], v.line}, b{w[2], v.line};
            return Interval{parse_real(a, "domain"), parse_real(b, "domain")};
        }
        if (w.size() == 3 && w[0] == "ball") {
            ConfigValue d{w[1], v.line}, r{w[2], v.line};
            return Ball{static_cast<int>(parse_integer(d, "domain")), parse_real(r, "domain")};
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("domain: ") + e.what(), v.line);
    }
    throw ConfigError("domain must be 'interval a b' or 'ball N R', got '" + v.text + "'", v.line);
}

inline BoundaryCondition parse_boundary(const ConfigValue& v, const std::string& key) {
    const std::string t(trim(v.text));
    if (t == "dirichlet") return BoundaryCondition::dirichlet();
    if (t == "neumann") return BoundaryCondition::neumann();
    if (t.rfind("robin", 0) == 0) {
        ConfigValue beta{std::string(trim(std::string_view(t).substr(5))), v.line};
        if (beta.text.empty()) throw ConfigError("'" + key + "': robin needs a coefficient", v.line);
        return BoundaryCondition::robin(parse_expression(beta, key, {"x", "r"}));
    }
    throw ConfigError("'" + key + "' must be dirichlet, neumann or 'robin <beta>', got '" + t + "'", v.line);
}

}  // namespace detail

/// Converts every value before any computation starts; errors cite the config line.
inline ExperimentConfig build_experiment(const RawConfig& raw) {
    ExperimentConfig out;
    auto req = [&](const std::string& key) {
        auto v = raw.get(key);
        if (!v) throw ConfigError("missing required key '" + key + "'");
        return *v;
    };
    auto real = [&](const std::string& key, double& dst) {
        if (auto v = raw.get(key)) dst = detail::parse_real(*v, key);
    };
    auto integer = [&](const std::string& key, auto& dst) {
        if (auto v = raw.get(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(detail::parse_integer(*v, key));
    };
    auto text = [&](const std::string& key, std::string& dst) {
        if (auto v = raw.get(key)) dst = v->text;
    };

    const Expression K = detail::parse_expression(req("problem.K"), "problem.K", {"u"});
    const Expression f = detail::parse_expression(req("problem.f"), "problem.f", {"u"});
    const auto lam_v = req("problem.lambda");
    const double lambda = detail::parse_real(lam_v, "problem.lambda");
    DomainSpec domain = Interval{0.0, 1.0};
    if (auto v = raw.get("problem.domain")) domain = detail::parse_domain(*v);
    BoundarySpec bc;
    if (auto v = raw.get("problem.boundary")) bc = BoundarySpec::uniform(detail::parse_boundary(*v, "problem.boundary"));
    if (auto v = raw.get("problem.boundary_left")) bc.left = detail::parse_boundary(*v, "problem.boundary_left");
    if (auto v = raw.get("problem.boundary_right")) bc.right = detail::parse_boundary(*v, "problem.boundary_right");
    Expression u0 = Expression::constant(0.0);
    if (auto v = raw.get("problem.u0")) u0 = detail::parse_expression(*v, "problem.u0", {"x", "r"});
    try {
        out.model = NonlinearModel(K, f, lambda, domain, bc, u0);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what(), lam_v.line);
    }

    auto& n = out.numerics;
    auto& ev = n.evolution;
    integer("numerics.n", n.n);
    real("numerics.t_end", ev.t_end);
    real("numerics.dt_init", ev.dt_init);
    real("numerics.dt_min", ev.dt_min);
    real("numerics.safety", ev.safety);
    real("numerics.U_max", ev.U_max);
    real("numerics.rtol", ev.rtol);
    real("numerics.atol", ev.atol);
    real("numerics.growth_limit", ev.growth_limit);
    integer("numerics.max_steps", ev.max_steps);
    real("numerics.s_max", n.s_max);
    integer("numerics.samples", n.samples);
    real("numerics.newton_tol", n.newton_tol);
    real("numerics.lambda_start", n.lambda_start);
    integer("numerics.ramp_steps", n.ramp_steps);
    integer("numerics.continuation_steps", n.continuation_steps);
    real("numerics.ds", n.ds);
    if (n.n < 4) throw ConfigError("numerics.n must be >= 4", raw.get("numerics.n")->line);

    auto& t = out.task;
    if (auto v = raw.get("task.envelope")) t.envelope = detail::parse_expression(*v, "task.envelope", {"u", "s", "r"});
    text("task.envelope_branch", t.envelope_branch);
    if (t.envelope_branch != "concave" && t.envelope_branch != "convex")
        throw ConfigError("task.envelope_branch must be concave or convex", raw.get("task.envelope_branch")->line);
    real("task.slope", t.slope);
    integer("task.theorem", t.theorem);
    if (t.theorem != 1 && t.theorem != 2) throw ConfigError("task.theorem must be 1 or 2", raw.get("task.theorem")->line);
    if (auto v = raw.get("task.lambda_fraction")) t.lambda_fraction = detail::parse_real(*v, "task.lambda_fraction");
    if (auto v = raw.get("task.steady_branch")) {
        if (v->text == "lower") t.steady_branch = SteadyBranchChoice::Lower;
        else if (v->text == "upper") t.steady_branch = SteadyBranchChoice::Upper;
        else throw ConfigError("task.steady_branch must be lower or upper", v->line);
    }
    real("task.delta", t.delta);
    text("task.linearize", t.linearize);
    if (t.linearize != "none" && t.linearize != "lower" && t.linearize != "upper")
        throw ConfigError("task.linearize must be none, lower or upper", raw.get("task.linearize")->line);
    integer("task.eta_samples", t.eta_samples);
    integer("task.s_samples", t.s_samples);
    real("task.majorization_factor", t.majorization_factor);
    integer("task.majorization_samples", t.majorization_samples);
    text("task.trajectory", t.trajectory);
    text("task.command", t.command);

    text("output.dir", out.output.dir);
    integer("output.snapshot_every", ev.snapshot_every);
    if (auto v = raw.get("output.snapshots")) {
        if (v->text == "true") out.output.snapshots = true;
        else if (v->text == "false") out.output.snapshots = false;
        else throw ConfigError("output.snapshots must be true or false", v->line);
    }
    out.canonical = raw.canonical();
    out.hash = config_hash(raw);
    return out;
}

}  // namespace filtlab

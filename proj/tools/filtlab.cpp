// Batch runner for the filtration-equation toolkit.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filtlab/runner.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    int jobs = 1;
    std::optional<int> n;
    std::vector<std::string> sets;
};

filtlab::RawConfig load(const Options& o) {
    if (o.config.empty()) throw filtlab::ConfigError("--config is required");
    if (!std::filesystem::exists(o.config)) throw filtlab::Error("config file not found: " + o.config);
    auto raw = filtlab::load_config(o.config);
    for (const auto& s : o.sets) filtlab::apply_override(raw, s);
    if (o.n) filtlab::apply_override(raw, "numerics.n=" + std::to_string(*o.n));
    return raw;
}

std::filesystem::path out_dir(const Options& o, const filtlab::ExperimentConfig* cfg) {
    if (!o.out.empty()) return o.out;
    return cfg ? cfg->output.dir : std::string("out");
}

int run(const std::string& command, const Options& o) {
    if (command == "report") {
        return filtlab::report(o.out.empty() ? std::filesystem::path("out") : std::filesystem::path(o.out), std::cout);
    }
    const auto raw = load(o);
    if (command == "sweep") {
        auto base = filtlab::build_experiment(raw);
        const auto dir = out_dir(o, &base);
        auto points = filtlab::run_sweep(raw, dir, o.jobs);
        int code = filtlab::kExitOk;
        for (const auto& p : points) {
            std::cout << p.dir << ": " << p.status << "\n";
            if (p.status.rfind("error", 0) == 0) code = filtlab::kExitError;
            else if (p.status == "negative" && code == filtlab::kExitOk) code = filtlab::kExitNegative;
        }
        std::cout << "manifest: " << (dir / "manifest.json").string() << "\n";
        return code;
    }
    const auto cfg = filtlab::build_experiment(raw);
    const auto dir = out_dir(o, &cfg);
    auto outcome = filtlab::run_task(command, cfg, dir);
    for (const auto& line : outcome.summary) std::cout << line << "\n";
    std::cout << "manifest: " << (dir / "manifest.json").string() << "\n";
    return outcome.positive ? filtlab::kExitOk : filtlab::kExitNegative;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"filtlab: blow-up analysis for u_t = Laplacian K(u) + lambda f(u)"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;
    for (const auto& name : filtlab::subcommands()) {
        auto* sub = app.add_subcommand(name);
        if (name == "report") {
            sub->add_option("--out", o.out, "Directory searched for manifests")->required();
        } else {
            sub->add_option("--config", o.config, "Experiment config file")->required();
            sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
            sub->add_option("--n", o.n, "Grid size override (numerics.n)")->check(CLI::PositiveNumber);
            sub->add_option("--set", o.sets, "Override section.key=value (repeatable)");
            if (name == "sweep") sub->add_option("--jobs", o.jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
        }
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : filtlab::kExitError;
    }
    try {
        return run(chosen, o);
    } catch (const filtlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return filtlab::kExitError;
}

#include "hamaccel/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::string> iters;
    std::optional<std::string> step;
    std::optional<std::string> damping;
    std::optional<std::string> certify;
    std::optional<std::string> seeds;
    std::optional<std::string> out;
    std::optional<std::string> tol;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "key = value config file");
    cmd->add_option("--iters", f.iters, "iteration budget (run.iterations)");
    cmd->add_option("--step", f.step, "step size s, real or auto");
    cmd->add_option("--damping", f.damping, "damping gamma, real or auto");
    cmd->add_option("--certify", f.certify, "on|off");
    cmd->add_option("--seeds", f.seeds, "comma-separated seed list");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--tol", f.tol, "target gap for compare");
    cmd->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

hamaccel::ExperimentConfig load(const CommonFlags& f) {
    using hamaccel::set_config_value;
    hamaccel::ExperimentConfig cfg;
    if (f.config) {
        std::string text;
        try {
            text = hamaccel::read_file(*f.config);
        } catch (const hamaccel::FileError& e) {
            throw hamaccel::ConfigError(e.what());
        }
        cfg = hamaccel::parse_config(text, cfg);
    }
    if (f.iters) set_config_value(cfg, "run.iterations", *f.iters);
    if (f.step) set_config_value(cfg, "scheme.step", *f.step);
    if (f.damping) set_config_value(cfg, "scheme.damping", *f.damping);
    if (f.certify) set_config_value(cfg, "run.certify", *f.certify);
    if (f.seeds) set_config_value(cfg, "run.seeds", *f.seeds);
    if (f.out) set_config_value(cfg, "run.out", *f.out);
    if (f.tol) set_config_value(cfg, "run.tol", *f.tol);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw hamaccel::ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, hamaccel::detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accelerated first-order schemes with runtime Lyapunov certificates"};
    app.require_subcommand(1);

    CommonFlags run_flags, compare_flags, sweep_flags, defaults_flags;
    auto* run = app.add_subcommand("run", "run one experiment; writes trace.csv and certificates.csv");
    add_common(run, run_flags);
    auto* compare = app.add_subcommand("compare", "iterations to tolerance per variant; writes compare.csv");
    add_common(compare, compare_flags);
    auto* sweep = app.add_subcommand("sweep-damping", "damping sweep on a two-mode quadratic; writes sweep.csv");
    add_common(sweep, sweep_flags);
    auto* defaults = app.add_subcommand("defaults", "print the effective configuration");
    add_common(defaults, defaults_flags);

    std::vector<std::string> traces;
    std::optional<std::string> plot_out;
    auto* plot = app.add_subcommand("plot-data", "two-column log10 gap data from trace CSVs");
    plot->add_option("traces", traces, "trace CSV files")->required();
    plot->add_option("--out", plot_out, "output directory (default: next to each trace)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? hamaccel::kExitOk : hamaccel::kExitUsage;
    }

    try {
        if (*run) return hamaccel::cmd_run(load(run_flags), std::cerr);
        if (*compare) return hamaccel::cmd_compare(load(compare_flags), std::cerr);
        if (*sweep) return hamaccel::cmd_sweep_damping(load(sweep_flags), std::cerr);
        if (*defaults) {
            std::cout << hamaccel::serialize_config(load(defaults_flags));
            return hamaccel::kExitOk;
        }
        if (*plot) return hamaccel::cmd_plot_data(traces, plot_out, std::cerr);
    } catch (const hamaccel::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return hamaccel::kExitUsage;
    } catch (const hamaccel::StepSizeError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return hamaccel::kExitUsage;
    } catch (const hamaccel::FileError& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return hamaccel::kExitFile;
    } catch (const hamaccel::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return hamaccel::kExitDivergence;
    } catch (const hamaccel::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hamaccel::kExitUsage;
    }
    return hamaccel::kExitUsage;
}

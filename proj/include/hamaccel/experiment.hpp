#pragma once

// Experiment configuration and the command implementations behind the CLI.

#include "hamaccel/continuous.hpp"
#include "hamaccel/coordinate.hpp"
#include "hamaccel/io.hpp"
#include "hamaccel/lyapunov.hpp"
#include "hamaccel/problems.hpp"
#include "hamaccel/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hamaccel {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitCertificateFailure = 1,
    kExitUsage = 2,
    kExitDivergence = 3,
    kExitFile = 4,
};

struct ProblemSpec {
    std::string kind = "quadratic";  // quadratic | ridge_l1 | box_quadratic | banded
    long dimension = 50;
    double alpha = 1.0;
    double lipschitz = 100.0;
    bool rotate = true;
    double mu = 0.1;
    double box_lower = -1.0;
    double box_upper = 1.0;
    long bandwidth = 3;
    std::uint64_t seed = 1;
    std::uint64_t x0_seed = 2;

    bool operator==(const ProblemSpec&) const = default;
};

struct SchemeSpec {
    // paper_smooth | paper_composite | nesterov | heavy_ball | gradient_descent | coordinate | rk4
    std::string variant = "paper_smooth";
    std::vector<std::string> variants = {"paper_smooth", "nesterov", "heavy_ball", "gradient_descent"};
    std::optional<double> step;     // nullopt = auto (1/sqrt(L))
    std::optional<double> damping;  // nullopt = auto (2 sqrt(alpha))
    std::string strict_step_check = "auto";  // auto | on | off
    std::string mode = "sampled";            // sampled | semi_greedy
    std::string engine = "dense";            // dense | lazy

    bool operator==(const SchemeSpec&) const = default;
};

struct RunSpec {
    long iterations = 500;
    bool certify = true;
    long z_samples = 8;
    std::string out = "out";
    std::vector<std::uint64_t> seeds = {1};
    double tol = 1e-6;
    double dt = 1e-3;
    long checkpoint_every = 0;

    bool operator==(const RunSpec&) const = default;
};

struct SweepSpec {
    double lambda_min = 1.0;
    double lambda_max = 100.0;
    long grid = 200;
    double dt = 1e-2;
    double horizon = 40.0;

    bool operator==(const SweepSpec&) const = default;
};

struct ExperimentConfig {
    ProblemSpec problem;
    SchemeSpec scheme;
    RunSpec run;
    SweepSpec sweep;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        const double x = parse_number(v);
        if (std::isnan(x)) throw InvalidArgumentError("empty");
        return x;
    } catch (const Error&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

inline long to_long(const std::string& key, const std::string& v) {
    long x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    }
    return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("config: '" + key + "' expects on|off, got '" + v + "'");
}

inline std::optional<double> to_auto_double(const std::string& key, const std::string& v) {
    if (v == "auto") return std::nullopt;
    return to_double(key, v);
}

inline std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t k = 0; k < items.size(); ++k) out += (k ? "," : "") + items[k];
    return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    if (trim(v).empty()) return out;
    for (auto& item : split(v, ',')) out.push_back(trim(item));
    return out;
}

inline void expect_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (v == a) return;
    }
    std::string msg = "config: '" + key + "' must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg + ", got '" + v + "'");
}

}  // namespace detail

// Applies one `key = value` setting.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = trim(raw);
    auto& p = cfg.problem;
    auto& s = cfg.scheme;
    auto& r = cfg.run;
    auto& w = cfg.sweep;
    if (key == "problem.kind") {
        expect_one_of(key, v, {"quadratic", "ridge_l1", "box_quadratic", "banded"});
        p.kind = v;
    } else if (key == "problem.dimension") {
        p.dimension = to_long(key, v);
    } else if (key == "problem.alpha") {
        p.alpha = to_double(key, v);
    } else if (key == "problem.lipschitz") {
        p.lipschitz = to_double(key, v);
    } else if (key == "problem.rotate") {
        p.rotate = to_bool(key, v);
    } else if (key == "problem.mu") {
        p.mu = to_double(key, v);
    } else if (key == "problem.box_lower") {
        p.box_lower = to_double(key, v);
    } else if (key == "problem.box_upper") {
        p.box_upper = to_double(key, v);
    } else if (key == "problem.bandwidth") {
        p.bandwidth = to_long(key, v);
    } else if (key == "problem.seed") {
        p.seed = to_u64(key, v);
    } else if (key == "problem.x0_seed") {
        p.x0_seed = to_u64(key, v);
    } else if (key == "scheme.variant") {
        expect_one_of(key, v,
                      {"paper_smooth", "paper_composite", "nesterov", "heavy_ball", "gradient_descent", "coordinate",
                       "rk4"});
        s.variant = v;
    } else if (key == "scheme.variants") {
        s.variants = split_list(v);
        for (const auto& item : s.variants) {
            expect_one_of(key, item,
                          {"paper_smooth", "paper_composite", "nesterov", "heavy_ball", "gradient_descent",
                           "coordinate"});
        }
    } else if (key == "scheme.step") {
        s.step = to_auto_double(key, v);
    } else if (key == "scheme.damping") {
        s.damping = to_auto_double(key, v);
    } else if (key == "scheme.strict_step_check") {
        expect_one_of(key, v, {"auto", "on", "off"});
        s.strict_step_check = v;
    } else if (key == "scheme.mode") {
        expect_one_of(key, v, {"sampled", "semi_greedy"});
        s.mode = v;
    } else if (key == "scheme.engine") {
        expect_one_of(key, v, {"dense", "lazy"});
        s.engine = v;
    } else if (key == "run.iterations") {
        r.iterations = to_long(key, v);
    } else if (key == "run.certify") {
        r.certify = to_bool(key, v);
    } else if (key == "run.z_samples") {
        r.z_samples = to_long(key, v);
    } else if (key == "run.out") {
        if (v.empty()) throw ConfigError("config: 'run.out' must not be empty");
        r.out = v;
    } else if (key == "run.seeds") {
        r.seeds.clear();
        for (const auto& item : split_list(v)) r.seeds.push_back(to_u64(key, item));
        if (r.seeds.empty()) throw ConfigError("config: 'run.seeds' must list at least one seed");
    } else if (key == "run.tol") {
        r.tol = to_double(key, v);
    } else if (key == "run.dt") {
        r.dt = to_double(key, v);
    } else if (key == "run.checkpoint_every") {
        r.checkpoint_every = to_long(key, v);
    } else if (key == "sweep.lambda_min") {
        w.lambda_min = to_double(key, v);
    } else if (key == "sweep.lambda_max") {
        w.lambda_max = to_double(key, v);
    } else if (key == "sweep.grid") {
        w.grid = to_long(key, v);
    } else if (key == "sweep.dt") {
        w.dt = to_double(key, v);
    } else if (key == "sweep.horizon") {
        w.horizon = to_double(key, v);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

// Every key in a fixed order, `key = value` per line.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    auto num = [](double x) { return format_number(x); };
    auto flag = [](bool b) { return std::string(b ? "on" : "off"); };
    auto opt = [&](const std::optional<double>& x) { return x ? num(*x) : std::string("auto"); };
    std::vector<std::string> seeds;
    for (auto s : cfg.run.seeds) seeds.push_back(std::to_string(s));
    const auto& p = cfg.problem;
    const auto& s = cfg.scheme;
    const auto& r = cfg.run;
    const auto& w = cfg.sweep;
    std::ostringstream os;
    os << "problem.kind = " << p.kind << '\n'
       << "problem.dimension = " << p.dimension << '\n'
       << "problem.alpha = " << num(p.alpha) << '\n'
       << "problem.lipschitz = " << num(p.lipschitz) << '\n'
       << "problem.rotate = " << flag(p.rotate) << '\n'
       << "problem.mu = " << num(p.mu) << '\n'
       << "problem.box_lower = " << num(p.box_lower) << '\n'
       << "problem.box_upper = " << num(p.box_upper) << '\n'
       << "problem.bandwidth = " << p.bandwidth << '\n'
       << "problem.seed = " << p.seed << '\n'
       << "problem.x0_seed = " << p.x0_seed << '\n'
       << "scheme.variant = " << s.variant << '\n'
       << "scheme.variants = " << detail::join(s.variants) << '\n'
       << "scheme.step = " << opt(s.step) << '\n'
       << "scheme.damping = " << opt(s.damping) << '\n'
       << "scheme.strict_step_check = " << s.strict_step_check << '\n'
       << "scheme.mode = " << s.mode << '\n'
       << "scheme.engine = " << s.engine << '\n'
       << "run.iterations = " << r.iterations << '\n'
       << "run.certify = " << flag(r.certify) << '\n'
       << "run.z_samples = " << r.z_samples << '\n'
       << "run.out = " << r.out << '\n'
       << "run.seeds = " << detail::join(seeds) << '\n'
       << "run.tol = " << num(r.tol) << '\n'
       << "run.dt = " << num(r.dt) << '\n'
       << "run.checkpoint_every = " << r.checkpoint_every << '\n'
       << "sweep.lambda_min = " << num(w.lambda_min) << '\n'
       << "sweep.lambda_max = " << num(w.lambda_max) << '\n'
       << "sweep.grid = " << w.grid << '\n'
       << "sweep.dt = " << num(w.dt) << '\n'
       << "sweep.horizon = " << num(w.horizon) << '\n';
    return os.str();
}

// Parses `key = value` lines on top of `base`; '#' starts a comment.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

inline void validate_config(const ExperimentConfig& cfg) {
    const auto& p = cfg.problem;
    if (p.dimension < 1) throw ConfigError("config: problem.dimension must be positive");
    if (!(p.alpha > 0.0)) throw ConfigError("config: problem.alpha must be positive");
    if (!(p.lipschitz >= p.alpha)) throw ConfigError("config: problem.lipschitz must be >= problem.alpha");
    if (p.mu < 0.0) throw ConfigError("config: problem.mu must be nonnegative");
    if (!(p.box_lower <= p.box_upper)) throw ConfigError("config: problem.box_lower exceeds problem.box_upper");
    if (cfg.scheme.step && !(*cfg.scheme.step > 0.0)) throw ConfigError("config: scheme.step must be positive");
    if (cfg.scheme.damping && !(*cfg.scheme.damping >= 0.0)) {
        throw ConfigError("config: scheme.damping must be nonnegative");
    }
    if (cfg.run.iterations < 1) throw ConfigError("config: run.iterations must be at least 1");
    if (cfg.run.z_samples < 0) throw ConfigError("config: run.z_samples must be nonnegative");
    if (!(cfg.run.tol > 0.0)) throw ConfigError("config: run.tol must be positive");
    if (!(cfg.run.dt > 0.0)) throw ConfigError("config: run.dt must be positive");
    if (cfg.run.checkpoint_every < 0) throw ConfigError("config: run.checkpoint_every must be nonnegative");
    if (cfg.sweep.grid < 3) throw ConfigError("config: sweep.grid must be at least 3");
    if (!(cfg.sweep.lambda_min > 0.0) || !(cfg.sweep.lambda_max >= cfg.sweep.lambda_min)) {
        throw ConfigError("config: need 0 < sweep.lambda_min <= sweep.lambda_max");
    }
    if (!(cfg.sweep.dt > 0.0) || !(cfg.sweep.horizon > 0.0)) {
        throw ConfigError("config: sweep.dt and sweep.horizon must be positive");
    }
}

// A constructed problem with its starting point and reference optimum.
struct BuiltProblem {
    CompositeOracle objective;
    Vector x0;
    ReferenceSolution reference;
};

inline constexpr double kReferenceTolerance = 1e-11;

inline BuiltProblem build_problem(const ProblemSpec& p) {
    const Index d = p.dimension;
    std::optional<CompositeOracle> obj;
    if (p.kind == "quadratic") {
        obj.emplace(spectrum_quadratic(d, p.alpha, p.lipschitz, p.rotate, p.seed));
    } else if (p.kind == "ridge_l1") {
        obj.emplace(ridge_l1_problem(d, p.alpha, p.lipschitz, p.mu, p.seed));
    } else if (p.kind == "box_quadratic") {
        obj.emplace(box_quadratic_problem(d, p.alpha, p.lipschitz, p.box_lower, p.box_upper, p.seed));
    } else if (p.kind == "banded") {
        obj.emplace(banded_quadratic(d, p.bandwidth, p.seed));
    } else {
        throw ConfigError("unknown problem kind '" + p.kind + "'");
    }
    Vector x0 = random_point(d, p.x0_seed);
    if (p.kind == "box_quadratic") x0 = x0.cwiseMax(p.box_lower).cwiseMin(p.box_upper);
    auto ref = reference_minimizer(*obj, kReferenceTolerance);
    return {std::move(*obj), std::move(x0), std::move(ref)};
}

struct ResolvedScheme {
    SchemeConfig cfg;
    double damping = 0.0;
};

// Resolves "auto" step and damping against the constructed problem.
inline ResolvedScheme resolve_scheme(const ExperimentConfig& cfg, const BuiltProblem& prob, Variant variant) {
    ResolvedScheme r;
    r.cfg.alpha = prob.objective.alpha();
    r.cfg.step = cfg.scheme.step ? *cfg.scheme.step : 1.0 / std::sqrt(prob.objective.lipschitz());
    r.cfg.variant = variant;
    const auto& strict = cfg.scheme.strict_step_check;
    r.cfg.strict_step_check = strict == "on" || (strict == "auto" && !cfg.run.certify);
    r.damping = cfg.scheme.damping ? *cfg.scheme.damping : optimal_damping(prob.objective.alpha());
    return r;
}

namespace detail {

inline std::string first_failure(const std::vector<Certificate>& certs) {
    for (const auto& c : certs) {
        if (!c.passed) {
            std::ostringstream os;
            os << "certificate '" << c.name << "'" << (c.z_tag.empty() ? "" : " (z=" + c.z_tag + ")")
               << " failed at n=" << c.iteration << ": lhs=" << format_number(c.lhs)
               << " rhs=" << format_number(c.rhs);
            return os.str();
        }
    }
    return {};
}

template <class Record>
std::string first_failure(const std::vector<Record>& records) {
    for (const auto& r : records) {
        auto msg = first_failure(r.certificates);
        if (!msg.empty()) return msg;
    }
    return {};
}

template <class Record>
std::string certificate_csv(const std::vector<Record>& records) {
    std::ostringstream os;
    write_certificate_csv(os, records);
    return os.str();
}

inline int run_deterministic(const ExperimentConfig& cfg, const BuiltProblem& prob, Variant variant,
                             std::ostream& log) {
    const std::filesystem::path out(cfg.run.out);
    const auto scheme = resolve_scheme(cfg, prob, variant);
    std::vector<Certifier> certifiers;
    if (cfg.run.certify && is_paper_variant(variant)) {
        certifiers = paper_certifiers(static_cast<std::size_t>(cfg.run.z_samples), cfg.problem.seed);
    }
    const Monitor monitor = monitor_from(prob.reference);
    std::vector<IterateRecord> records;
    bool diverged = false;
    std::size_t diverged_at = 0;
    try {
        records = run(prob.objective, scheme.cfg, initial_state(prob.x0), static_cast<std::size_t>(cfg.run.iterations),
                      monitor, certifiers);
    } catch (const TraceDivergence& e) {
        records = e.records();
        diverged = true;
        diverged_at = e.step();
    }
    std::ostringstream trace;
    write_trace_csv(trace, records);
    write_file_atomic(out / "trace.csv", trace.str());
    write_file_atomic(out / "certificates.csv", certificate_csv(records));

    // A certificate failure recorded before a blow-up is the first failure.
    const auto failure = first_failure(records);
    if (diverged) log << "divergence: iterate became non-finite at step " << diverged_at << '\n';
    if (!failure.empty()) {
        log << failure << '\n';
        return kExitCertificateFailure;
    }
    if (diverged) return kExitDivergence;
    log << "run complete: " << records.size() << " iterations, final gap "
        << format_number(records.back().f_gap) << '\n';
    return kExitOk;
}

inline int run_coordinate(const ExperimentConfig& cfg, const BuiltProblem& prob, std::ostream& log) {
    if (!prob.objective.nonsmooth().is_zero) {
        throw ConfigError("coordinate variant needs a smooth quadratic problem kind (quadratic or banded)");
    }
    const std::filesystem::path out(cfg.run.out);
    const auto coords = coordinate_oracle(prob.objective.smooth());
    const Monitor monitor = monitor_from(prob.reference);
    CoordinateRunOptions opt;
    opt.mode = cfg.scheme.mode == "semi_greedy" ? CoordinateMode::semi_greedy : CoordinateMode::sampled;
    opt.engine = cfg.scheme.engine == "lazy" ? CoordinateEngine::lazy : CoordinateEngine::dense;
    opt.certify = cfg.run.certify;
    opt.random_z = static_cast<std::size_t>(cfg.run.z_samples);
    opt.checkpoint_every = static_cast<std::size_t>(cfg.run.checkpoint_every);

    const bool multi = cfg.run.seeds.size() > 1;
    std::vector<double> mean_gap(static_cast<std::size_t>(cfg.run.iterations), 0.0);
    std::string failure;
    for (const auto seed : cfg.run.seeds) {
        const auto sampler = sampler_from_lipschitz(coords.coord_lipschitz, seed);
        std::vector<CoordinateRecord> records;
        try {
            records = acd_run(coords, sampler, prob.objective.alpha(), prob.x0,
                              static_cast<std::size_t>(cfg.run.iterations), monitor, opt)
                          .records;
        } catch (const DivergenceError& e) {
            log << "divergence (seed " << seed << "): " << e.what() << '\n';
            return kExitDivergence;
        }
        const std::string suffix = multi ? "_seed" + std::to_string(seed) : "";
        std::ostringstream trace;
        write_coordinate_trace_csv(trace, records);
        write_file_atomic(out / ("trace" + suffix + ".csv"), trace.str());
        write_file_atomic(out / ("certificates" + suffix + ".csv"), certificate_csv(records));
        if (failure.empty()) failure = first_failure(records);
        for (std::size_t k = 0; k < records.size(); ++k) mean_gap[k] += records[k].f_gap;
    }
    if (multi) {
        std::ostringstream os;
        os << "n,f_gap\n";
        const double count = static_cast<double>(cfg.run.seeds.size());
        for (std::size_t k = 0; k < mean_gap.size(); ++k) {
            os << (k + 1) << ',' << format_number(mean_gap[k] / count) << '\n';
        }
        write_file_atomic(out / "mean_trace.csv", os.str());
    }
    if (!failure.empty()) {
        log << failure << '\n';
        return kExitCertificateFailure;
    }
    log << "coordinate run complete: " << cfg.run.seeds.size() << " seed(s), " << cfg.run.iterations
        << " iterations\n";
    return kExitOk;
}

inline int run_continuous(const ExperimentConfig& cfg, const BuiltProblem& prob, std::ostream& log) {
    if (!prob.objective.nonsmooth().is_zero) throw ConfigError("rk4 variant needs a smooth problem kind");
    const auto& oracle = prob.objective.smooth();
    const auto scheme = resolve_scheme(cfg, prob, Variant::paper_smooth);
    const auto& ref = prob.reference;
    PhaseState init{prob.x0, Vector::Zero(prob.x0.size()), 0.0};
    std::vector<PhaseState> states;
    try {
        states = rk4_trajectory(oracle, scheme.damping, init, cfg.run.dt, static_cast<std::size_t>(cfg.run.iterations));
    } catch (const DivergenceError& e) {
        log << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    }
    const std::filesystem::path out(cfg.run.out);
    std::ostringstream traj;
    write_trajectory_csv(traj, oracle, states, ref.point, ref.value);
    write_file_atomic(out / "trajectory.csv", traj.str());

    // The rate theorem is stated for damping 2 sqrt(alpha) only.
    std::vector<Certificate> certs;
    if (cfg.run.certify && !cfg.scheme.damping) {
        const double ra = std::sqrt(oracle.alpha());
        const double gap0 = oracle.gap(init.x, ref.point, ref.value);
        double lprev = continuous_lyapunov(oracle, states.front(), ref.point, ref.value);
        for (std::size_t k = 1; k < states.size(); ++k) {
            const double gap = oracle.gap(states[k].x, ref.point, ref.value);
            auto rate = check_inequality("continuous_rate", gap, 2.0 * std::exp(-ra * states[k].t) * gap0, 1e-4, 0.0);
            rate.iteration = static_cast<long>(k);
            certs.push_back(rate);
            const double lnext = continuous_lyapunov(oracle, states[k], ref.point, ref.value);
            auto mono = check_inequality("lyapunov_monotone", lnext, lprev, 1e-8, kCertAbsTol);
            mono.iteration = static_cast<long>(k);
            certs.push_back(mono);
            lprev = lnext;
        }
    }
    std::ostringstream cs;
    cs << kCertificateHeader << '\n';
    write_certificate_rows(cs, certs);
    write_file_atomic(out / "certificates.csv", cs.str());
    const auto failure = first_failure(certs);
    if (!failure.empty()) {
        log << failure << '\n';
        return kExitCertificateFailure;
    }
    log << "trajectory complete: " << states.size() << " states\n";
    return kExitOk;
}

}  // namespace detail

// `run`: one experiment; writes trace.csv and certificates.csv into run.out.
inline int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const auto prob = build_problem(cfg.problem);
    const auto& v = cfg.scheme.variant;
    if (v == "coordinate") return detail::run_coordinate(cfg, prob, log);
    if (v == "rk4") return detail::run_continuous(cfg, prob, log);
    const auto variant = parse_variant(v);
    if (!variant) throw ConfigError("unknown variant '" + v + "'");
    if (*variant != Variant::paper_composite && !prob.objective.nonsmooth().is_zero) {
        throw ConfigError("variant " + v + " needs a smooth problem; use paper_composite for " + cfg.problem.kind);
    }
    return detail::run_deterministic(cfg, prob, *variant, log);
}

// First n with f(x_n) - f* <= tol, or nullopt once the budget is spent.
inline std::optional<long> iterations_to_tolerance(const BuiltProblem& prob, const SchemeConfig& scheme,
                                                   double tol, long budget) {
    const Monitor m = monitor_from(prob.reference);
    const auto& obj = prob.objective;
    DiscreteState st = initial_state(prob.x0);
    for (long n = 1; n <= budget; ++n) {
        switch (scheme.variant) {
            case Variant::paper_smooth: st = paper_smooth_step(obj.smooth(), scheme, st).next; break;
            case Variant::paper_composite: st = paper_composite_step(obj, scheme, st).next; break;
            case Variant::nesterov: st = nesterov_step(obj.smooth(), st); break;
            case Variant::heavy_ball: st = heavy_ball_step(obj.smooth(), st); break;
            case Variant::gradient_descent: st = gradient_descent_step(obj.smooth(), st); break;
        }
        if (!all_finite(st.x)) return std::nullopt;
        if (obj.gap(st.x, m.xstar, m.fstar) <= tol) return n;
    }
    return std::nullopt;
}

inline std::optional<long> coordinate_iterations_to_tolerance(const BuiltProblem& prob, std::uint64_t seed,
                                                              double tol, long budget) {
    const auto coords = coordinate_oracle(prob.objective.smooth());
    const auto sampler = sampler_from_lipschitz(coords.coord_lipschitz, seed);
    const Monitor m = monitor_from(prob.reference);
    DiscreteState st = initial_state(prob.x0);
    for (long n = 1; n <= budget; ++n) {
        st = acd_step(coords, sampler, prob.objective.alpha(), st,
                      sample_coordinate(sampler, static_cast<std::uint64_t>(n - 1)))
                 .next;
        if (!all_finite(st.x)) return std::nullopt;
        if (prob.objective.gap(st.x, m.xstar, m.fstar) <= tol) return n;
    }
    return std::nullopt;
}

struct ComparisonRow {
    std::string variant;
    std::optional<long> iterations;
};

inline std::vector<ComparisonRow> compare_variants(const ExperimentConfig& cfg, const BuiltProblem& prob) {
    if (cfg.scheme.variants.empty()) throw ConfigError("compare: scheme.variants is empty");
    std::vector<ComparisonRow> rows;
    for (const auto& name : cfg.scheme.variants) {
        if (name == "coordinate") {
            if (!prob.objective.nonsmooth().is_zero) throw ConfigError("compare: coordinate needs a smooth problem");
            rows.push_back({name, coordinate_iterations_to_tolerance(prob, cfg.run.seeds.front(), cfg.run.tol,
                                                                     cfg.run.iterations)});
            continue;
        }
        const auto variant = parse_variant(name);
        if (!variant) throw ConfigError("compare: unknown variant '" + name + "'");
        if (*variant != Variant::paper_composite && !prob.objective.nonsmooth().is_zero) {
            throw ConfigError("compare: variant " + name + " needs a smooth problem");
        }
        auto scheme = resolve_scheme(cfg, prob, *variant).cfg;
        rows.push_back({name, iterations_to_tolerance(prob, scheme, cfg.run.tol, cfg.run.iterations)});
    }
    return rows;
}

// `compare`: iterations-to-tolerance per variant into compare.csv; "inf"
// marks an exhausted budget.
inline int cmd_compare(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    if (cfg.scheme.variants.empty()) throw ConfigError("compare: scheme.variants is empty");
    const auto prob = build_problem(cfg.problem);
    const auto rows = compare_variants(cfg, prob);
    std::ostringstream os;
    os << "variant,iterations_to_tol\n";
    for (const auto& r : rows) {
        os << r.variant << ',' << (r.iterations ? std::to_string(*r.iterations) : std::string("inf")) << '\n';
        log << r.variant << ": " << (r.iterations ? std::to_string(*r.iterations) : std::string("inf")) << '\n';
    }
    write_file_atomic(std::filesystem::path(cfg.run.out) / "compare.csv", os.str());
    return kExitOk;
}

struct SweepRow {
    double gamma = 0.0;
    DampingAnalysis analytic;
    double empirical_rate = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
};

// Damping grid gamma_k = 4 sqrt(lambda_min) k / grid, k = 1..grid.
inline std::vector<double> damping_grid(double lambda_min, long grid) {
    std::vector<double> g;
    for (long k = 1; k <= grid; ++k) {
        g.push_back(4.0 * std::sqrt(lambda_min) * static_cast<double>(k) / static_cast<double>(grid));
    }
    return g;
}

// Empirical amplitude decay of the diagonal quadratic diag(lambda_min,
// lambda_max) under damping gamma, fitted over the second half of the horizon.
inline double empirical_decay_rate(double lambda_min, double lambda_max, double gamma, double dt, double horizon) {
    const std::vector<double> spectrum = lambda_min == lambda_max ? std::vector<double>{lambda_min}
                                                                  : std::vector<double>{lambda_min, lambda_max};
    const auto d = static_cast<Index>(spectrum.size());
    const auto oracle = quadratic_from_spectrum(spectrum, Vector::Zero(d));
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const auto traj = rk4_trajectory(oracle, gamma, PhaseState{Vector::Ones(d), Vector::Zero(d), 0.0}, dt, steps);
    std::vector<double> t, e;
    const Vector zero = Vector::Zero(d);
    for (const auto& st : traj) {
        if (st.t < 0.5 * horizon) continue;
        t.push_back(st.t);
        e.push_back(mechanical_energy(oracle, st, zero, 0.0));
    }
    return fitted_decay_rate(t, e);
}

inline std::vector<SweepRow> sweep_damping(const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    for (double gamma : damping_grid(spec.lambda_min, spec.grid)) {
        SweepRow row;
        row.gamma = gamma;
        row.analytic = classify_damping(spec.lambda_min, gamma);
        try {
            row.empirical_rate = empirical_decay_rate(spec.lambda_min, spec.lambda_max, gamma, spec.dt, spec.horizon);
        } catch (const DivergenceError&) {
            row.diverged = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << kSweepHeader << '\n';
    for (const auto& r : rows) {
        os << format_number(r.gamma) << ',' << format_number(r.analytic.decay_rate) << ','
           << to_string(r.analytic.regime) << ',' << format_number(r.empirical_rate) << ',' << (r.diverged ? 1 : 0)
           << '\n';
    }
    return os.str();
}

inline int cmd_sweep_damping(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const auto rows = sweep_damping(cfg.sweep);
    write_file_atomic(std::filesystem::path(cfg.run.out) / "sweep.csv", sweep_csv(rows));
    const auto best = std::min_element(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.analytic.decay_rate < b.analytic.decay_rate;
    });
    std::size_t diverged = 0;
    for (const auto& r : rows) diverged += r.diverged ? 1 : 0;
    log << "fastest analytic decay at gamma=" << format_number(best->gamma) << " (rate "
        << format_number(best->analytic.decay_rate) << "); " << diverged << " diverged row(s)\n";
    return kExitOk;
}

// `plot-data`: <trace stem>.dat next to each trace, or under out_dir if given.
inline int cmd_plot_data(const std::vector<std::string>& traces, const std::optional<std::string>& out_dir,
                         std::ostream& log) {
    if (traces.empty()) throw ConfigError("plot-data: no trace files given");
    for (const auto& t : traces) {
        const std::filesystem::path trace(t);
        const auto data = emit_plot_data(trace);
        auto target = trace;
        target.replace_extension(".dat");
        if (out_dir) target = std::filesystem::path(*out_dir) / target.filename();
        write_file_atomic(target, data);
        log << "wrote " << target.string() << '\n';
    }
    return kExitOk;
}

}  // namespace hamaccel

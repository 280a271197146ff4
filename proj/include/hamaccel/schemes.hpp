#pragma once

#include "hamaccel/core.hpp"
#include "hamaccel/lyapunov.hpp"
#include "hamaccel/problems.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hamaccel {

enum class Variant { paper_smooth, paper_composite, nesterov, heavy_ball, gradient_descent };

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::paper_smooth: return "paper_smooth";
        case Variant::paper_composite: return "paper_composite";
        case Variant::nesterov: return "nesterov";
        case Variant::heavy_ball: return "heavy_ball";
        case Variant::gradient_descent: return "gradient_descent";
    }
    return "unknown";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
    for (Variant v : {Variant::paper_smooth, Variant::paper_composite, Variant::nesterov, Variant::heavy_ball,
                      Variant::gradient_descent}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

struct SchemeConfig {
    double step = 0.0;
    double alpha = 0.0;
    Variant variant = Variant::paper_smooth;
    bool strict_step_check = true;
};

// Default configuration: s = 1/sqrt(L), the largest step the rate theorems allow.
inline SchemeConfig default_config(double alpha, double lipschitz, Variant variant = Variant::paper_smooth) {
    return SchemeConfig{1.0 / std::sqrt(lipschitz), alpha, variant, true};
}

// (x_n, v_n) plus x_{n-1} for the two-point baselines.
struct DiscreteState {
    Vector x;
    Vector v;
    long n = 0;
    std::optional<Vector> previous;
};

inline DiscreteState initial_state(const Vector& x0) {
    return DiscreteState{x0, Vector::Zero(x0.size()), 0, x0};
}

// v_n = (x_n - x_{n-1}) / s: reads a two-point baseline as a velocity.
inline Vector velocity_from_difference(const Vector& x, const Vector& previous, double s) {
    return (x - previous) / s;
}

// x', v', the gradient surrogate g_n and the decrease step delta_n of one
// paper-scheme step.
struct StepIntermediates {
    Vector x_mid;
    Vector v_mid;
    Vector g;
    Vector delta;
};

struct StepResult {
    DiscreteState next;
    StepIntermediates mid;
};

namespace detail {

inline void check_step(const SchemeConfig& cfg, double lipschitz, const char* where) {
    if (!(cfg.step > 0.0)) throw StepSizeError(std::string(where) + ": step must be positive");
    if (!(cfg.alpha > 0.0)) throw InvalidArgumentError(std::string(where) + ": alpha must be positive");
    if (cfg.strict_step_check && cfg.step * cfg.step * lipschitz > 1.0 + 1e-12) {
        throw StepSizeError(std::string(where) + ": step " + std::to_string(cfg.step) + " exceeds 1/sqrt(L) = " +
                            std::to_string(1.0 / std::sqrt(lipschitz)));
    }
}

// Closed-form solution of the implicit velocity line
//   v' = v - c^{-1}(s sqrt(a) v + s g) - s sqrt(a) v',   c = 1 + s sqrt(a).
inline Vector semi_implicit_velocity(const Vector& v, const Vector& g, double s, double root_alpha) {
    const double c = 1.0 + s * root_alpha;
    return (v - (s * root_alpha * v + s * g) / c) / c;
}

inline StepResult generic_step(const DiscreteState& state, const Vector& x_mid, const Vector& g,
                               const Vector& delta, double s, double alpha) {
    const double ra = std::sqrt(alpha);
    StepResult r;
    r.mid.x_mid = x_mid;
    r.mid.v_mid = semi_implicit_velocity(state.v, g, s, ra);
    r.mid.g = g;
    r.mid.delta = delta;
    r.next.x = x_mid - delta;
    r.next.v = r.mid.v_mid + (ra / (1.0 + s * ra)) * delta;
    r.next.n = state.n + 1;
    r.next.previous = state.x;
    return r;
}

}  // namespace detail

// x <- x - grad f(x)/L,  v <- v + (1 + s sqrt(alpha))^{-1} (sqrt(alpha)/L) grad f(x)
inline std::pair<Vector, Vector> sufficient_decrease_update(const SmoothOracle& oracle, const SchemeConfig& cfg,
                                                            const Vector& x, const Vector& v) {
    require_same_dimension(x, v, "sufficient_decrease_update");
    const double ra = std::sqrt(cfg.alpha);
    const Vector g = oracle.gradient(x);
    const double inv_l = 1.0 / oracle.lipschitz();
    return {x - inv_l * g, v + (ra * inv_l / (1.0 + cfg.step * ra)) * g};
}

inline StepResult paper_smooth_step(const SmoothOracle& oracle, const SchemeConfig& cfg,
                                    const DiscreteState& state) {
    detail::check_step(cfg, oracle.lipschitz(), "paper_smooth_step");
    require_same_dimension(state.x, state.v, "paper_smooth_step");
    const double s = cfg.step;
    const Vector x_mid = state.x + s * state.v;
    const Vector g = oracle.gradient(x_mid);
    return detail::generic_step(state, x_mid, g, g / oracle.lipschitz(), s, cfg.alpha);
}

// Forward-backward version: g_n = (x' - prox_{s^2 h}(x' - s^2 grad g(x'))) / s^2,
// delta_n = s^2 g_n.
inline StepResult paper_composite_step(const CompositeOracle& oracle, const SchemeConfig& cfg,
                                       const DiscreteState& state) {
    detail::check_step(cfg, oracle.lipschitz(), "paper_composite_step");
    require_same_dimension(state.x, state.v, "paper_composite_step");
    const double s = cfg.step;
    const double s2 = s * s;
    const Vector x_mid = state.x + s * state.v;
    const Vector forward = x_mid - s2 * oracle.smooth().gradient(x_mid);
    const Vector delta = x_mid - oracle.prox(forward, s2);
    return detail::generic_step(state, x_mid, delta / s2, delta, s, cfg.alpha);
}

// Nesterov's constant-momentum scheme in (x_n, x_{n-1}) form:
//   y = x_n + beta (x_n - x_{n-1}),  x_{n+1} = y - grad f(y)/L,
//   beta = (sqrt(L) - sqrt(alpha)) / (sqrt(L) + sqrt(alpha)).
inline double nesterov_momentum(double alpha, double lipschitz) {
    const double rl = std::sqrt(lipschitz), ra = std::sqrt(alpha);
    return (rl - ra) / (rl + ra);
}

inline DiscreteState nesterov_step(const SmoothOracle& oracle, const DiscreteState& state) {
    const Vector& prev = state.previous ? *state.previous : state.x;
    const double beta = nesterov_momentum(oracle.alpha(), oracle.lipschitz());
    const Vector y = state.x + beta * (state.x - prev);
    DiscreteState next;
    next.x = y - oracle.gradient(y) / oracle.lipschitz();
    next.v = next.x - state.x;
    next.n = state.n + 1;
    next.previous = state.x;
    return next;
}

struct HeavyBallCoefficients {
    double step;
    double momentum;
};

inline HeavyBallCoefficients heavy_ball_coefficients(double alpha, double lipschitz) {
    const double rl = std::sqrt(lipschitz), ra = std::sqrt(alpha);
    const double beta = (rl - ra) / (rl + ra);
    return {4.0 / ((rl + ra) * (rl + ra)), beta * beta};
}

inline DiscreteState heavy_ball_step(const SmoothOracle& oracle, const DiscreteState& state) {
    const Vector& prev = state.previous ? *state.previous : state.x;
    const auto [step, momentum] = heavy_ball_coefficients(oracle.alpha(), oracle.lipschitz());
    DiscreteState next;
    next.x = state.x - step * oracle.gradient(state.x) + momentum * (state.x - prev);
    next.v = next.x - state.x;
    next.n = state.n + 1;
    next.previous = state.x;
    return next;
}

inline DiscreteState gradient_descent_step(const SmoothOracle& oracle, const DiscreteState& state) {
    DiscreteState next;
    next.x = state.x - oracle.gradient(state.x) / oracle.lipschitz();
    next.v = next.x - state.x;
    next.n = state.n + 1;
    next.previous = state.x;
    return next;
}

struct IterateRecord {
    long n = 0;
    double f_gap = 0.0;
    double lyapunov = 0.0;
    double contraction_ratio = 0.0;
    std::vector<Certificate> certificates;

    bool all_passed() const {
        for (const auto& c : certificates) {
            if (!c.passed) return false;
        }
        return true;
    }
};

// Raised by run() on a non-finite iterate; carries the records completed so far.
class TraceDivergence : public DivergenceError {
public:
    TraceDivergence(std::size_t step, std::vector<IterateRecord> records)
        : DivergenceError("iterate became non-finite", step), records_(std::move(records)) {}
    const std::vector<IterateRecord>& records() const noexcept { return records_; }

private:
    std::vector<IterateRecord> records_;
};

// Reference point the monitors measure against; never produced by the scheme under test.
struct Monitor {
    Vector xstar;
    double fstar = 0.0;
};

inline Monitor monitor_from(const ReferenceSolution& ref) { return Monitor{ref.point, ref.value}; }

struct StepContext {
    const CompositeOracle& oracle;
    const SchemeConfig& cfg;
    const Monitor& monitor;
    const DiscreteState& prev;
    const DiscreteState& next;
    const StepIntermediates* mid;  // null for baselines
    double lyapunov_prev;
    double lyapunov_next;
    double gap_next;
    double initial_gap;
    double initial_lyapunov;
};

using Certifier = std::function<void(const StepContext&, std::vector<Certificate>&)>;

inline Certifier contraction_certifier(double rel_tol = kCertRelTol) {
    return [rel_tol](const StepContext& ctx, std::vector<Certificate>& out) {
        auto c = contraction_certificate(ctx.lyapunov_prev, ctx.lyapunov_next, ctx.cfg.step, ctx.cfg.alpha, rel_tol);
        c.iteration = ctx.next.n;
        out.push_back(std::move(c));
    };
}

inline Certifier preserved_norm_certifier() {
    return [](const StepContext& ctx, std::vector<Certificate>& out) {
        if (ctx.mid == nullptr) return;
        auto c = preserved_norm_certificate(ctx.mid->x_mid, ctx.mid->v_mid, ctx.next.x, ctx.next.v, ctx.cfg.step,
                                            ctx.cfg.alpha, ctx.monitor.xstar);
        c.iteration = ctx.next.n;
        out.push_back(std::move(c));
    };
}

// z in {x_n, x*} plus `random_count` seeded points around x*. For composite
// objectives the random points are pushed through prox(., 1) so they land
// in the domain of h.
inline std::vector<TaggedPoint> decrease_condition_samples(const CompositeOracle& oracle, const Vector& x_n,
                                                           const Vector& xstar, std::size_t random_count,
                                                           std::uint64_t seed) {
    std::vector<TaggedPoint> z;
    z.push_back({"x_n", x_n});
    z.push_back({"x_star", xstar});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::max(1.0, (x_n - xstar).norm() / std::sqrt(static_cast<double>(xstar.size())));
    for (std::size_t k = 0; k < random_count; ++k) {
        Vector p(xstar.size());
        for (Index i = 0; i < p.size(); ++i) p[i] = xstar[i] + scale * normal(rng);
        if (!oracle.nonsmooth().is_zero) p = oracle.prox(p, 1.0);
        z.push_back({"rand" + std::to_string(k), std::move(p)});
    }
    return z;
}

inline Certifier decrease_condition_certifier(std::size_t random_count = 8, std::uint64_t seed = 0) {
    return [random_count, seed](const StepContext& ctx, std::vector<Certificate>& out) {
        if (ctx.mid == nullptr) return;
        const auto z = decrease_condition_samples(ctx.oracle, ctx.prev.x, ctx.monitor.xstar, random_count,
                                                  seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(ctx.next.n));
        for (auto& c : decrease_condition_certificate(ctx.oracle, ctx.mid->x_mid, ctx.next.x, ctx.mid->g,
                                                      ctx.cfg.step, ctx.cfg.alpha, z)) {
            c.iteration = ctx.next.n;
            out.push_back(std::move(c));
        }
    };
}

// f(x_n) - f* <= (1 + s sqrt(alpha))^{-n} L_0 always; when the whole
// objective is smooth and strongly convex, also against 2 (f(x_0) - f*).
inline Certifier rate_certifier(double rel_tol = kCertRelTol) {
    return [rel_tol](const StepContext& ctx, std::vector<Certificate>& out) {
        out.push_back(rate_certificate("rate_lyapunov0", ctx.gap_next, ctx.next.n, ctx.cfg.step, ctx.cfg.alpha,
                                       ctx.initial_lyapunov, rel_tol));
        if (ctx.oracle.nonsmooth().is_zero) {
            out.push_back(rate_certificate("rate_2gap", ctx.gap_next, ctx.next.n, ctx.cfg.step, ctx.cfg.alpha,
                                           2.0 * ctx.initial_gap, rel_tol));
        }
    };
}

// Full certifier set for the paper's schemes.
inline std::vector<Certifier> paper_certifiers(std::size_t random_z = 8, std::uint64_t seed = 0) {
    return {contraction_certifier(), preserved_norm_certifier(), decrease_condition_certifier(random_z, seed),
            rate_certifier()};
}

namespace detail {

inline bool is_paper_variant(Variant v) { return v == Variant::paper_smooth || v == Variant::paper_composite; }

inline double run_lyapunov(const CompositeOracle& oracle, const SchemeConfig& cfg, const Monitor& m,
                           const DiscreteState& st) {
    if (is_paper_variant(cfg.variant)) {
        return discrete_lyapunov(oracle, st.x, st.v, cfg.step, cfg.alpha, m.xstar, m.fstar);
    }
    const Vector v = st.previous ? velocity_from_difference(st.x, *st.previous, cfg.step) : Vector::Zero(st.x.size());
    return discrete_lyapunov(oracle, st.x, v, cfg.step, cfg.alpha, m.xstar, m.fstar);
}

}  // namespace detail

// Runs `iterations` steps of the configured scheme, one record per step
// (record n describes x_n). Certifiers see every step with its intermediates;
// failures are recorded, never thrown.
inline std::vector<IterateRecord> run(const CompositeOracle& oracle, const SchemeConfig& cfg,
                                      const DiscreteState& initial, std::size_t iterations, const Monitor& monitor,
                                      const std::vector<Certifier>& certifiers = {}) {
    if (iterations < 1) throw InvalidArgumentError("run: iterations must be at least 1");
    if (cfg.variant != Variant::paper_composite && !oracle.nonsmooth().is_zero) {
        throw InvalidArgumentError(std::string("run: variant ") + std::string(to_string(cfg.variant)) +
                                   " needs a smooth objective");
    }
    if (initial.x.size() != oracle.dimension()) throw DimensionError("run: initial state dimension mismatch");

    std::vector<IterateRecord> records;
    records.reserve(iterations);
    DiscreteState state = initial;
    const double initial_gap = oracle.gap(initial.x, monitor.xstar, monitor.fstar);
    double lyap = detail::run_lyapunov(oracle, cfg, monitor, state);
    const double initial_lyap = lyap;

    for (std::size_t k = 1; k <= iterations; ++k) {
        StepResult step;
        bool has_mid = false;
        switch (cfg.variant) {
            case Variant::paper_smooth:
                step = paper_smooth_step(oracle.smooth(), cfg, state);
                has_mid = true;
                break;
            case Variant::paper_composite:
                step = paper_composite_step(oracle, cfg, state);
                has_mid = true;
                break;
            case Variant::nesterov: step.next = nesterov_step(oracle.smooth(), state); break;
            case Variant::heavy_ball: step.next = heavy_ball_step(oracle.smooth(), state); break;
            case Variant::gradient_descent: step.next = gradient_descent_step(oracle.smooth(), state); break;
        }
        if (!all_finite(step.next.x) || !all_finite(step.next.v)) throw TraceDivergence(k, std::move(records));

        IterateRecord rec;
        rec.n = step.next.n;
        rec.f_gap = oracle.gap(step.next.x, monitor.xstar, monitor.fstar);
        rec.lyapunov = detail::run_lyapunov(oracle, cfg, monitor, step.next);
        rec.contraction_ratio = lyap > 0.0 ? rec.lyapunov / lyap : 0.0;
        const StepContext ctx{oracle, cfg,          monitor,     state,      step.next, has_mid ? &step.mid : nullptr,
                              lyap,   rec.lyapunov, rec.f_gap,   initial_gap, initial_lyap};
        for (const auto& certify : certifiers) certify(ctx, rec.certificates);
        if (!std::isfinite(rec.f_gap) || !std::isfinite(rec.lyapunov)) throw TraceDivergence(k, std::move(records));
        lyap = rec.lyapunov;
        state = std::move(step.next);
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<IterateRecord> run(const SmoothOracle& oracle, const SchemeConfig& cfg,
                                      const DiscreteState& initial, std::size_t iterations, const Monitor& monitor,
                                      const std::vector<Certifier>& certifiers = {}) {
    return run(CompositeOracle(oracle), cfg, initial, iterations, monitor, certifiers);
}

}  // namespace hamaccel

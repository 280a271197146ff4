#pragma once

#include "hamaccel/core.hpp"
#include "hamaccel/lyapunov.hpp"
#include "hamaccel/problems.hpp"
#include "hamaccel/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace hamaccel {

// Counter-based SplitMix64 stream. Draw k (k = 0, 1, ...) of seed S is
//   z = S + (k + 1) * 0x9E3779B97F4A7C15             (mod 2^64)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// and its uniform variate is (z >> 11) * 2^-53 in [0, 1).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t k) noexcept {
        std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t k) const noexcept { return mix(seed_, k); }
    double uniform(std::uint64_t k) const noexcept {
        return static_cast<double>(bits(k) >> 11) * 0x1.0p-53;
    }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

// Sampling distribution p_i = sqrt(L_i) / sum_j sqrt(L_j) and step
// s = 1 / sum_j sqrt(L_j).
struct SamplerConfig {
    Vector probs;
    Vector cumulative;
    Vector root_lipschitz;
    double step = 0.0;
    std::uint64_t rng_seed = 0;
};

inline SamplerConfig sampler_from_lipschitz(const Vector& coord_lipschitz, std::uint64_t seed) {
    if (coord_lipschitz.size() == 0) throw DimensionError("sampler_from_lipschitz: empty Lipschitz vector");
    for (Index i = 0; i < coord_lipschitz.size(); ++i) {
        if (!(coord_lipschitz[i] > 0.0) || !std::isfinite(coord_lipschitz[i])) {
            throw InvalidArgumentError("sampler_from_lipschitz: coordinate Lipschitz constants must be positive");
        }
    }
    SamplerConfig cfg;
    cfg.root_lipschitz = coord_lipschitz.cwiseSqrt();
    const double total = cfg.root_lipschitz.sum();
    cfg.probs = cfg.root_lipschitz / total;
    cfg.step = 1.0 / total;
    cfg.cumulative.resize(cfg.probs.size());
    double acc = 0.0;
    for (Index i = 0; i < cfg.probs.size(); ++i) {
        acc += cfg.probs[i];
        cfg.cumulative[i] = acc;
    }
    cfg.cumulative[cfg.cumulative.size() - 1] = 1.0;
    cfg.rng_seed = seed;
    return cfg;
}

// Inverse-CDF draw: smallest i with u < cumulative_i.
inline Index sample_coordinate(const SamplerConfig& cfg, std::uint64_t draw) {
    const double u = CounterRng(cfg.rng_seed).uniform(draw);
    const auto* begin = cfg.cumulative.data();
    const auto* end = begin + cfg.cumulative.size();
    const auto* it = std::upper_bound(begin, end, u);
    return std::min<Index>(static_cast<Index>(it - begin), cfg.cumulative.size() - 1);
}

namespace detail {

inline Vector unit_scaled(Index d, Index i, double value) {
    Vector e = Vector::Zero(d);
    e[i] = value;
    return e;
}

}  // namespace detail

// One accelerated coordinate-descent step on the drawn coordinate i:
//   g_n = grad_i f(x') / (s sqrt(L_i)) e_i,  delta_n = grad_i f(x') / L_i e_i.
// When `decrease_coordinate` is set, delta_n is taken on that coordinate
// instead (semi-greedy variant); g_n still uses the drawn i.
inline StepResult acd_step(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                           const DiscreteState& state, Index i,
                           std::optional<Index> decrease_coordinate = std::nullopt) {
    const Index d = oracle.dimension();
    if (i < 0 || i >= d) throw InvalidArgumentError("acd_step: coordinate index out of range");
    require_same_dimension(state.x, state.v, "acd_step");
    const double s = cfg.step;
    const Vector x_mid = state.x + s * state.v;
    const double di = oracle.partial(x_mid, i);
    const Vector g = detail::unit_scaled(d, i, di / (s * cfg.root_lipschitz[i]));
    Vector delta;
    if (decrease_coordinate) {
        const Index j = *decrease_coordinate;
        const double dj = j == i ? di : oracle.partial(x_mid, j);
        delta = detail::unit_scaled(d, j, dj / oracle.coord_lipschitz[j]);
    } else {
        delta = detail::unit_scaled(d, i, di / oracle.coord_lipschitz[i]);
    }
    return detail::generic_step(state, x_mid, g, delta, s, alpha);
}

struct GreedyChoice {
    Index coordinate = 0;
    Vector delta;
};

// Coordinate j maximizing |grad_j f|^2 / (2 L_j), lowest index on ties,
// with delta = grad_j f / L_j e_j.
inline GreedyChoice semi_greedy_delta(const CoordinateOracle& oracle, const Vector& x_mid) {
    const Index d = oracle.dimension();
    const Vector grad = oracle.base.gradient(x_mid);
    Index best = 0;
    double best_score = -1.0;
    for (Index j = 0; j < d; ++j) {
        const double score = grad[j] * grad[j] / (2.0 * oracle.coord_lipschitz[j]);
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return {best, detail::unit_scaled(d, best, grad[best] / oracle.coord_lipschitz[best])};
}

// E_n(g_n) by enumerating every coordinate outcome.
inline Vector exact_mean_g(const CoordinateOracle& oracle, const SamplerConfig& cfg, const Vector& x_mid) {
    const Index d = oracle.dimension();
    Vector mean = Vector::Zero(d);
    for (Index i = 0; i < d; ++i) {
        mean[i] += cfg.probs[i] * (oracle.partial(x_mid, i) / (cfg.step * cfg.root_lipschitz[i]));
    }
    return mean;
}

// Per-coordinate storage for the lazy engine. Between selections a
// coordinate follows the idle map  x <- x + s v,  v <- rho v  with
// rho = (1 + s sqrt(alpha))^{-2}, which is advanced in closed form.
class LazyState {
public:
    LazyState(const Vector& x0, const Vector& v0, double s, double alpha)
        : x_(x0), v_(v0), last_touch_(static_cast<std::size_t>(x0.size()), 0), step_(s) {
        require_same_dimension(x0, v0, "LazyState");
        if (!(alpha > 0.0)) throw InvalidArgumentError("LazyState: alpha must be positive");
        if (!(s > 0.0)) throw InvalidArgumentError("LazyState: step must be positive");
        const double c = 1.0 + s * std::sqrt(alpha);
        rho_ = 1.0 / (c * c);
    }

    Index dimension() const noexcept { return x_.size(); }
    long iteration() const noexcept { return iteration_; }
    double rho() const noexcept { return rho_; }
    double step() const noexcept { return step_; }
    long last_touch(Index i) const { return last_touch_[static_cast<std::size_t>(i)]; }
    double stored_x(Index i) const { return x_[i]; }
    double stored_v(Index i) const { return v_[i]; }

    // Drift multiplier s (1 - rho^k) / (1 - rho) = s sum_{j<k} rho^j.
    double drift(long k) const {
        if (std::abs(1.0 - rho_) < 1e-12) {
            double acc = 0.0, p = 1.0;
            for (long j = 0; j < k; ++j) {
                acc += p;
                p *= rho_;
            }
            return step_ * acc;
        }
        return step_ * (1.0 - std::pow(rho_, static_cast<double>(k))) / (1.0 - rho_);
    }

    void store(Index i, double x, double v, long m) {
        x_[i] = x;
        v_[i] = v;
        last_touch_[static_cast<std::size_t>(i)] = m;
    }

    void advance_iteration() noexcept { ++iteration_; }

private:
    Vector x_;
    Vector v_;
    std::vector<long> last_touch_;
    long iteration_ = 0;
    double step_;
    double rho_ = 1.0;
};

// (x_i, v_i) at iteration m, assuming i was idle since its last touch.
inline std::pair<double, double> lazy_advance(const LazyState& lz, Index i, long m) {
    const long tau = lz.last_touch(i);
    if (m < tau) {
        throw StaleStateError("lazy_advance: target iteration " + std::to_string(m) +
                              " precedes last touch " + std::to_string(tau));
    }
    const long k = m - tau;
    if (k == 0) return {lz.stored_x(i), lz.stored_v(i)};
    const double v0 = lz.stored_v(i);
    return {lz.stored_x(i) + lz.drift(k) * v0, std::pow(lz.rho(), static_cast<double>(k)) * v0};
}

inline std::pair<Vector, Vector> materialize(const LazyState& lz, long m) {
    const Index d = lz.dimension();
    Vector x(d), v(d);
    for (Index i = 0; i < d; ++i) std::tie(x[i], v[i]) = lazy_advance(lz, i, m);
    return {x, v};
}

enum class CoordinateMode { sampled, semi_greedy };
enum class CoordinateEngine { dense, lazy };

inline std::string_view to_string(CoordinateMode m) { return m == CoordinateMode::sampled ? "sampled" : "semi_greedy"; }
inline std::string_view to_string(CoordinateEngine e) { return e == CoordinateEngine::dense ? "dense" : "lazy"; }

struct CoordinateRecord : IterateRecord {
    Index coord = 0;           // drawn coordinate
    Index decrease_coord = 0;  // coordinate the decrease step acted on
    double realized_decrease = 0.0;
    double expected_lyapunov = std::numeric_limits<double>::quiet_NaN();
    std::size_t touched = 0;   // coordinates read or written this step
    bool checkpoint = true;    // f_gap / lyapunov filled in
};

struct CoordinateRunOptions {
    CoordinateMode mode = CoordinateMode::sampled;
    CoordinateEngine engine = CoordinateEngine::dense;
    bool certify = false;
    std::size_t random_z = 8;
    // Lazy engine only: materialize f_gap / lyapunov every k iterations (0 = last only).
    std::size_t checkpoint_every = 0;
};

struct CoordinateRun {
    std::vector<CoordinateRecord> records;
    Vector x;
    Vector v;
};

namespace detail {

struct DenseCoordinateStep {
    StepResult step;
    Index drawn = 0;
    Index decrease_coord = 0;
};

inline DenseCoordinateStep dense_coordinate_step(const CoordinateOracle& oracle, const SamplerConfig& cfg,
                                                 double alpha, const DiscreteState& state, Index i,
                                                 CoordinateMode mode) {
    DenseCoordinateStep r;
    r.drawn = i;
    if (mode == CoordinateMode::semi_greedy) {
        const Vector x_mid = state.x + cfg.step * state.v;
        r.decrease_coord = semi_greedy_delta(oracle, x_mid).coordinate;
        r.step = acd_step(oracle, cfg, alpha, state, i, r.decrease_coord);
    } else {
        r.decrease_coord = i;
        r.step = acd_step(oracle, cfg, alpha, state, i);
    }
    return r;
}

// E_n(L_{n+1}) by running the step once per possible draw.
inline double enumerated_expected_lyapunov(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                                           const DiscreteState& state, CoordinateMode mode, const Monitor& m) {
    const CompositeOracle full(oracle.base);
    double expected = 0.0;
    for (Index i = 0; i < oracle.dimension(); ++i) {
        const auto r = dense_coordinate_step(oracle, cfg, alpha, state, i, mode);
        expected += cfg.probs[i] *
                    discrete_lyapunov(full, r.step.next.x, r.step.next.v, cfg.step, alpha, m.xstar, m.fstar);
    }
    return expected;
}

inline void certify_coordinate_step(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                                    const DiscreteState& state, const DenseCoordinateStep& r, CoordinateMode mode,
                                    const Monitor& m, double lyap_prev, std::size_t random_z,
                                    CoordinateRecord& rec) {
    const CompositeOracle full(oracle.base);
    const auto& mid = r.step.mid;
    const auto& next = r.step.next;
    const long n = next.n;

    rec.expected_lyapunov = enumerated_expected_lyapunov(oracle, cfg, alpha, state, mode, m);
    auto c = contraction_certificate(lyap_prev, rec.expected_lyapunov, cfg.step, alpha);
    c.name = "expected_contraction";
    c.iteration = n;
    rec.certificates.push_back(std::move(c));

    const Vector mean_g = exact_mean_g(oracle, cfg, mid.x_mid);
    const auto z = decrease_condition_samples(full, state.x, m.xstar, random_z,
                                              cfg.rng_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(n));
    for (auto& sc : stochastic_decrease_certificate(full, mid.x_mid, next.x, mid.g, mean_g, cfg.step, alpha, z)) {
        sc.iteration = n;
        rec.certificates.push_back(std::move(sc));
    }

    auto realized = check_inequality("realized_decrease", -rec.realized_decrease,
                                     -0.5 * cfg.step * cfg.step * mid.g.squaredNorm());
    realized.iteration = n;
    rec.certificates.push_back(std::move(realized));

    auto pn = preserved_norm_certificate(mid.x_mid, mid.v_mid, next.x, next.v, cfg.step, alpha, m.xstar);
    pn.iteration = n;
    rec.certificates.push_back(std::move(pn));

    if (mode == CoordinateMode::semi_greedy) {
        const Index i = r.drawn;
        const Vector alt = mid.x_mid - unit_scaled(oracle.dimension(), i,
                                                   oracle.partial(mid.x_mid, i) / oracle.coord_lipschitz[i]);
        auto dom = check_inequality("semi_greedy_dominance", objective_difference(full, mid.x_mid, alt),
                                    rec.realized_decrease);
        dom.iteration = n;
        rec.certificates.push_back(std::move(dom));
    }
}

inline CoordinateRun acd_run_dense(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                                   const Vector& x0, std::size_t iterations, const Monitor& m,
                                   const CoordinateRunOptions& opt) {
    const CompositeOracle full(oracle.base);
    DiscreteState state = initial_state(x0);
    double lyap = discrete_lyapunov(full, state.x, state.v, cfg.step, alpha, m.xstar, m.fstar);
    std::vector<CoordinateRecord> records;
    records.reserve(iterations);
    for (std::size_t k = 1; k <= iterations; ++k) {
        const Index i = sample_coordinate(cfg, k - 1);
        auto r = dense_coordinate_step(oracle, cfg, alpha, state, i, opt.mode);
        const auto& next = r.step.next;
        if (!all_finite(next.x) || !all_finite(next.v)) throw DivergenceError("acd_run: iterate became non-finite", k);

        CoordinateRecord rec;
        rec.n = next.n;
        rec.coord = i;
        rec.decrease_coord = r.decrease_coord;
        rec.touched = static_cast<std::size_t>(oracle.dimension());
        rec.realized_decrease = objective_difference(full, r.step.mid.x_mid, next.x);
        rec.f_gap = full.gap(next.x, m.xstar, m.fstar);
        rec.lyapunov = discrete_lyapunov(full, next.x, next.v, cfg.step, alpha, m.xstar, m.fstar);
        rec.contraction_ratio = lyap > 0.0 ? rec.lyapunov / lyap : 0.0;
        if (opt.certify) certify_coordinate_step(oracle, cfg, alpha, state, r, opt.mode, m, lyap, opt.random_z, rec);
        lyap = rec.lyapunov;
        state = r.step.next;
        records.push_back(std::move(rec));
    }
    return {std::move(records), state.x, state.v};
}

inline CoordinateRun acd_run_lazy(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                                  const Vector& x0, std::size_t iterations, const Monitor& m,
                                  const CoordinateRunOptions& opt) {
    if (opt.mode != CoordinateMode::sampled) {
        throw InvalidArgumentError("acd_run: the lazy engine supports only sampled mode");
    }
    const CompositeOracle full(oracle.base);
    const Index d = oracle.dimension();
    const double s = cfg.step;
    const double ra = std::sqrt(alpha);
    const double c = 1.0 + s * ra;
    LazyState lz(x0, Vector::Zero(d), s, alpha);
    Vector scratch = x0;
    std::vector<Index> touched;
    std::vector<double> held_x, held_v;
    double lyap = discrete_lyapunov(full, x0, Vector::Zero(d), s, alpha, m.xstar, m.fstar);
    double last_checkpoint_lyap = lyap;

    std::vector<CoordinateRecord> records;
    records.reserve(iterations);
    for (std::size_t k = 1; k <= iterations; ++k) {
        const long n = lz.iteration();
        const Index i = sample_coordinate(cfg, k - 1);
        CoordinateRecord rec;
        rec.n = n + 1;
        rec.coord = i;
        rec.decrease_coord = i;

        const bool checkpoint =
            k == iterations || (opt.checkpoint_every > 0 && k % opt.checkpoint_every == 0) || opt.certify;
        DiscreteState dense_before;
        if (opt.certify) {
            auto [x, v] = materialize(lz, n);
            dense_before = DiscreteState{std::move(x), std::move(v), n, std::nullopt};
        }

        // Materialize x'_j = x_j(n) + s v_j(n) on the dependency set of i.
        touched = oracle.dependencies[static_cast<std::size_t>(i)];
        if (std::find(touched.begin(), touched.end(), i) == touched.end()) touched.push_back(i);
        held_x.resize(touched.size());
        held_v.resize(touched.size());
        for (std::size_t t = 0; t < touched.size(); ++t) {
            const Index j = touched[t];
            std::tie(held_x[t], held_v[t]) = lazy_advance(lz, j, n);
            scratch[j] = held_x[t] + s * held_v[t];
        }
        const double di = oracle.partial(scratch, i);
        const double gi = di / (s * cfg.root_lipschitz[i]);
        const double delta = di / oracle.coord_lipschitz[i];

        double vi = 0.0;
        for (std::size_t t = 0; t < touched.size(); ++t) {
            const Index j = touched[t];
            if (j == i) {
                vi = held_v[t];
            } else {
                lz.store(j, held_x[t], held_v[t], n);
            }
        }
        const double x_mid_i = scratch[i];
        const double v_mid_i = (vi - (s * ra * vi + s * gi) / c) / c;
        const double x_next_i = x_mid_i - delta;
        const double v_next_i = v_mid_i + (ra / c) * delta;
        if (!std::isfinite(x_next_i) || !std::isfinite(v_next_i)) {
            throw DivergenceError("acd_run: iterate became non-finite", k);
        }
        lz.store(i, x_next_i, v_next_i, n + 1);
        lz.advance_iteration();
        rec.touched = touched.size();

        if (oracle.exact_coordinate_curvature) {
            rec.realized_decrease = di * delta - 0.5 * oracle.coord_lipschitz[i] * delta * delta;
        } else {
            rec.realized_decrease = std::numeric_limits<double>::quiet_NaN();
        }

        rec.checkpoint = checkpoint;
        if (checkpoint) {
            const auto [x, v] = materialize(lz, n + 1);
            rec.f_gap = full.gap(x, m.xstar, m.fstar);
            rec.lyapunov = discrete_lyapunov(full, x, v, s, alpha, m.xstar, m.fstar);
            rec.contraction_ratio = last_checkpoint_lyap > 0.0 ? rec.lyapunov / last_checkpoint_lyap : 0.0;
            if (opt.certify) {
                DenseCoordinateStep r;
                r.drawn = i;
                r.decrease_coord = i;
                r.step = acd_step(oracle, cfg, alpha, dense_before, i);
                r.step.next.x = x;
                r.step.next.v = v;
                certify_coordinate_step(oracle, cfg, alpha, dense_before, r, opt.mode, m, lyap, opt.random_z, rec);
            }
            last_checkpoint_lyap = rec.lyapunov;
            lyap = rec.lyapunov;
        } else {
            rec.f_gap = rec.lyapunov = rec.contraction_ratio = std::numeric_limits<double>::quiet_NaN();
        }
        records.push_back(std::move(rec));
    }
    auto [x, v] = materialize(lz, lz.iteration());
    return {std::move(records), std::move(x), std::move(v)};
}

}  // namespace detail

// Accelerated coordinate descent from (x0, v0 = 0). Draw k uses
// sample_coordinate(cfg, k), so dense and lazy engines with the same seed
// select the same coordinates.
inline CoordinateRun acd_run(const CoordinateOracle& oracle, const SamplerConfig& cfg, double alpha,
                             const Vector& x0, std::size_t iterations, const Monitor& monitor,
                             const CoordinateRunOptions& options = {}) {
    if (iterations < 1) throw InvalidArgumentError("acd_run: iterations must be at least 1");
    if (!(alpha > 0.0)) throw InvalidArgumentError("acd_run: alpha must be positive");
    if (x0.size() != oracle.dimension()) throw DimensionError("acd_run: initial point dimension mismatch");
    if (options.engine == CoordinateEngine::lazy) {
        return detail::acd_run_lazy(oracle, cfg, alpha, x0, iterations, monitor, options);
    }
    return detail::acd_run_dense(oracle, cfg, alpha, x0, iterations, monitor, options);
}

}  // namespace hamaccel

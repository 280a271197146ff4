#pragma once

#include "hamaccel/core.hpp"
#include "hamaccel/problems.hpp"

#include <cmath>
#include <complex>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace hamaccel {

// Position/velocity pair of the damped dynamics  x' = v,  v' = -gamma v - grad f(x).
struct PhaseState {
    Vector x;
    Vector v;
    double t = 0.0;
};

inline std::pair<Vector, Vector> vector_field(const SmoothOracle& oracle, double damping, const PhaseState& state) {
    require_same_dimension(state.x, state.v, "vector_field");
    return {state.v, -damping * state.v - oracle.gradient(state.x)};
}

// Classic four-stage Runge-Kutta. Returns steps + 1 states, initial included.
// Throws DivergenceError once a state is non-finite or its norm passes
// 1e12 * (1 + |initial|).
inline std::vector<PhaseState> rk4_trajectory(const SmoothOracle& oracle, double damping, const PhaseState& initial,
                                              double dt, std::size_t steps) {
    if (!(dt > 0.0)) throw InvalidArgumentError("rk4_trajectory: dt must be positive");
    if (damping < 0.0) throw InvalidArgumentError("rk4_trajectory: damping must be nonnegative");
    require_same_dimension(initial.x, initial.v, "rk4_trajectory");
    if (initial.x.size() != oracle.dimension()) throw DimensionError("rk4_trajectory: state/oracle dimension mismatch");

    const double ceiling = 1e12 * (1.0 + std::sqrt(initial.x.squaredNorm() + initial.v.squaredNorm()));
    std::vector<PhaseState> out;
    out.reserve(steps + 1);
    out.push_back(initial);

    auto field = [&](const Vector& x, const Vector& v) {
        return std::pair<Vector, Vector>{v, -damping * v - oracle.gradient(x)};
    };

    for (std::size_t k = 1; k <= steps; ++k) {
        const PhaseState& s = out.back();
        const auto [k1x, k1v] = field(s.x, s.v);
        const auto [k2x, k2v] = field(s.x + 0.5 * dt * k1x, s.v + 0.5 * dt * k1v);
        const auto [k3x, k3v] = field(s.x + 0.5 * dt * k2x, s.v + 0.5 * dt * k2v);
        const auto [k4x, k4v] = field(s.x + dt * k3x, s.v + dt * k3v);
        PhaseState next;
        next.x = s.x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        next.v = s.v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        next.t = initial.t + dt * static_cast<double>(k);
        const double norm = std::sqrt(next.x.squaredNorm() + next.v.squaredNorm());
        if (!all_finite(next.x) || !all_finite(next.v) || !(norm <= ceiling)) {
            throw DivergenceError("rk4_trajectory: state diverged", k);
        }
        out.push_back(std::move(next));
    }
    return out;
}

// L(t) = f(x) - f* + |sqrt(alpha)(x - x*) + v|^2 / 2
inline double continuous_lyapunov(const SmoothOracle& oracle, const PhaseState& state, const Vector& xstar,
                                  double fstar) {
    const double ra = std::sqrt(oracle.alpha());
    return oracle.gap(state.x, xstar, fstar) + 0.5 * (ra * (state.x - xstar) + state.v).squaredNorm();
}

// f(x) - f* + |v|^2 / 2, conserved by the undamped flow.
inline double mechanical_energy(const SmoothOracle& oracle, const PhaseState& state, const Vector& xstar,
                                double fstar) {
    return oracle.gap(state.x, xstar, fstar) + 0.5 * state.v.squaredNorm();
}

enum class DampingRegime { overdamped, critical, underdamped };

inline std::string_view to_string(DampingRegime r) {
    switch (r) {
        case DampingRegime::overdamped: return "overdamped";
        case DampingRegime::critical: return "critical";
        case DampingRegime::underdamped: return "underdamped";
    }
    return "unknown";
}

// One eigenmode z^2 + gamma z + lambda = 0 of the linearized dynamics.
struct DampingAnalysis {
    double eigenvalue = 0.0;
    double damping = 0.0;
    std::pair<std::complex<double>, std::complex<double>> roots;
    DampingRegime regime = DampingRegime::critical;
    double decay_rate = 0.0;
    double root_modulus = 0.0;
};

inline constexpr double kCriticalTolerance = 1e-12;

inline DampingAnalysis classify_damping(double lambda, double gamma) {
    if (!(lambda > 0.0)) throw InvalidArgumentError("classify_damping: eigenvalue must be positive");
    if (!(gamma > 0.0)) throw InvalidArgumentError("classify_damping: damping must be positive");
    DampingAnalysis a;
    a.eigenvalue = lambda;
    a.damping = gamma;
    const double disc = gamma * gamma - 4.0 * lambda;
    if (std::abs(disc) <= kCriticalTolerance) {
        a.regime = DampingRegime::critical;
        a.roots = {std::complex<double>(-0.5 * gamma, 0.0), std::complex<double>(-0.5 * gamma, 0.0)};
    } else if (disc > 0.0) {
        a.regime = DampingRegime::overdamped;
        // Larger-magnitude root first, the other from the product z1 z2 = lambda.
        const double big = -0.5 * (gamma + std::sqrt(disc));
        a.roots = {std::complex<double>(big, 0.0), std::complex<double>(lambda / big, 0.0)};
    } else {
        a.regime = DampingRegime::underdamped;
        const double im = 0.5 * std::sqrt(-disc);
        a.roots = {std::complex<double>(-0.5 * gamma, im), std::complex<double>(-0.5 * gamma, -im)};
    }
    a.decay_rate = std::max(a.roots.first.real(), a.roots.second.real());
    a.root_modulus = std::max(std::abs(a.roots.first), std::abs(a.roots.second));
    return a;
}

inline double optimal_damping(double lambda_min) {
    if (!(lambda_min > 0.0)) throw InvalidArgumentError("optimal_damping: eigenvalue must be positive");
    return 2.0 * std::sqrt(lambda_min);
}

inline double stability_step_bound(double lambda_max) {
    if (!(lambda_max > 0.0)) throw InvalidArgumentError("stability_step_bound: eigenvalue must be positive");
    return 1.0 / std::sqrt(lambda_max);
}

// Amplitude decay rate from a sampled energy curve: half the least-squares
// slope of log E(t). Nonpositive energies are skipped.
inline double fitted_decay_rate(std::span<const double> times, std::span<const double> energies) {
    if (times.size() != energies.size()) throw DimensionError("fitted_decay_rate: length mismatch");
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(energies[k] > 0.0)) continue;
        const double y = std::log(energies[k]);
        n += 1;
        st += times[k];
        sy += y;
        stt += times[k] * times[k];
        sty += times[k] * y;
    }
    if (n < 2) throw InvalidArgumentError("fitted_decay_rate: need at least two positive samples");
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw InvalidArgumentError("fitted_decay_rate: degenerate time samples");
    return 0.5 * (n * sty - st * sy) / denom;
}

}  // namespace hamaccel

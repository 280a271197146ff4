#pragma once

#include "hamaccel/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace hamaccel {

inline constexpr double kCertRelTol = 1e-10;
inline constexpr double kCertAbsTol = 1e-12;

// Result of checking one inequality lhs <= rhs at runtime.
struct Certificate {
    std::string name;
    bool passed = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    long iteration = -1;
    std::string z_tag;
};

// lhs <= rhs + tol |rhs| + atol. For rhs >= 0 this is lhs <= rhs (1 + tol) + atol.
inline Certificate check_inequality(std::string name, double lhs, double rhs, double rel_tol = kCertRelTol,
                                    double abs_tol = kCertAbsTol) {
    Certificate c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = rhs - lhs;
    c.passed = !std::isnan(lhs) && !std::isnan(rhs) && lhs <= rhs + rel_tol * std::abs(rhs) + abs_tol;
    return c;
}

// L = f(x) - f* + |sqrt(alpha)(x - x*) + (1 + s sqrt(alpha)) v|^2 / 2
template <class Oracle>
double discrete_lyapunov(const Oracle& oracle, const Vector& x, const Vector& v, double s, double alpha,
                         const Vector& xstar, double fstar) {
    const double ra = std::sqrt(alpha);
    return oracle.gap(x, xstar, fstar) + 0.5 * (ra * (x - xstar) + (1.0 + s * ra) * v).squaredNorm();
}

// The momentum part of the Lyapunov function alone.
inline double lyapunov_norm_term(const Vector& x, const Vector& v, double s, double alpha, const Vector& xstar) {
    const double ra = std::sqrt(alpha);
    return 0.5 * (ra * (x - xstar) + (1.0 + s * ra) * v).squaredNorm();
}

inline Certificate contraction_certificate(double lyapunov_prev, double lyapunov_next, double s, double alpha,
                                           double rel_tol = kCertRelTol) {
    const double factor = 1.0 / (1.0 + s * std::sqrt(alpha));
    return check_inequality("contraction", lyapunov_next, factor * lyapunov_prev, rel_tol);
}

// Gap at iteration n against (1 + s sqrt(alpha))^{-n} * initial_bound.
inline Certificate rate_certificate(std::string name, double gap, long n, double s, double alpha,
                                    double initial_bound, double rel_tol = kCertRelTol,
                                    double abs_tol = kCertAbsTol) {
    const double bound = std::pow(1.0 + s * std::sqrt(alpha), -static_cast<double>(n)) * initial_bound;
    auto c = check_inequality(std::move(name), gap, bound, rel_tol, abs_tol);
    c.iteration = n;
    return c;
}

// f(x) - f(z) evaluated through the oracle's gap expansion around z, which is
// exact for quadratics and avoids cancellation between two nearby values.
template <class Oracle>
double objective_difference(const Oracle& oracle, const Vector& x, const Vector& z) {
    const double fz = oracle.value(z);
    if (!std::isfinite(fz)) return -std::numeric_limits<double>::infinity();
    return oracle.gap(x, z, fz);
}

struct TaggedPoint {
    std::string tag;
    Vector point;
};

namespace detail {

template <class Oracle>
std::vector<Certificate> decrease_condition_impl(const char* name, const Oracle& oracle, const Vector& x_mid,
                                                 const Vector& x_next, const Vector& inner_g, const Vector& norm_g,
                                                 double s, double alpha, const std::vector<TaggedPoint>& z_samples) {
    if (z_samples.empty()) throw InvalidArgumentError("decrease condition: z_samples must not be empty");
    std::vector<Certificate> out;
    out.reserve(z_samples.size());
    const double tail = 0.5 * s * s * norm_g.squaredNorm();
    for (const auto& z : z_samples) {
        require_same_dimension(z.point, x_mid, "decrease condition");
        const Vector diff = x_mid - z.point;
        const double lhs = objective_difference(oracle, x_next, z.point);
        const double rhs = inner_g.dot(diff) - 0.5 * alpha * diff.squaredNorm() - tail;
        auto c = check_inequality(name, lhs, rhs);
        c.z_tag = z.tag;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace detail

// For every z: f(x_{n+1}) - f(z) <= <g_n, x' - z> - (alpha/2)|x' - z|^2 - (s^2/2)|g_n|^2
template <class Oracle>
std::vector<Certificate> decrease_condition_certificate(const Oracle& oracle, const Vector& x_mid,
                                                        const Vector& x_next, const Vector& g, double s,
                                                        double alpha, const std::vector<TaggedPoint>& z_samples) {
    return detail::decrease_condition_impl("decrease_condition", oracle, x_mid, x_next, g, g, s, alpha, z_samples);
}

// Same inequality with E_n(g_n) in the inner product and the realized g_n in the norm.
template <class Oracle>
std::vector<Certificate> stochastic_decrease_certificate(const Oracle& oracle, const Vector& x_mid,
                                                         const Vector& x_next, const Vector& g,
                                                         const Vector& mean_g, double s, double alpha,
                                                         const std::vector<TaggedPoint>& z_samples) {
    return detail::decrease_condition_impl("stochastic_decrease_condition", oracle, x_mid, x_next, mean_g, g, s,
                                           alpha, z_samples);
}

// The decrease update must leave |sqrt(alpha)(x - x*) + (1 + s sqrt(alpha)) v| unchanged.
inline Certificate preserved_norm_certificate(const Vector& x_mid, const Vector& v_mid, const Vector& x_next,
                                              const Vector& v_next, double s, double alpha, const Vector& xstar) {
    const double before = lyapunov_norm_term(x_mid, v_mid, s, alpha, xstar);
    const double after = lyapunov_norm_term(x_next, v_next, s, alpha, xstar);
    Certificate c;
    c.name = "preserved_norm";
    c.lhs = after;
    c.rhs = before;
    c.margin = before - after;
    c.passed = std::abs(after - before) <= kCertRelTol * std::max(before, after) + kCertAbsTol;
    return c;
}

}  // namespace hamaccel

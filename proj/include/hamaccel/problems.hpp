#pragma once

#include "hamaccel/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hamaccel {

struct KnownMinimum {
    Vector point;
    double value = 0.0;
};

// f together with its gradient and the constants the schemes need: strong
// convexity modulus alpha and gradient Lipschitz constant L. Immutable once
// built; copies share the underlying callables.
class SmoothOracle {
public:
    using ValueFn = std::function<double(const Vector&)>;
    using GradientFn = std::function<Vector(const Vector&)>;

    SmoothOracle(Index dimension, double alpha, double lipschitz, ValueFn value, GradientFn gradient)
        : dimension_(dimension),
          alpha_(alpha),
          lipschitz_(lipschitz),
          value_(std::move(value)),
          gradient_(std::move(gradient)) {
        if (dimension <= 0) throw DimensionError("SmoothOracle: dimension must be positive");
        if (!(alpha > 0.0)) throw InvalidArgumentError("SmoothOracle: alpha must be positive");
        if (!(alpha <= lipschitz)) throw InvalidArgumentError("SmoothOracle: alpha must not exceed L");
    }

    Index dimension() const noexcept { return dimension_; }
    double alpha() const noexcept { return alpha_; }
    double lipschitz() const noexcept { return lipschitz_; }

    double value(const Vector& x) const { return value_(x); }
    Vector gradient(const Vector& x) const { return gradient_(x); }

    const std::optional<KnownMinimum>& minimum() const noexcept { return minimum_; }

    // Non-null iff f is quadratic with this constant Hessian.
    const Matrix* hessian() const noexcept { return hessian_.get(); }

    SmoothOracle with_minimum(Vector point, double value) const {
        if (point.size() != dimension_) throw DimensionError("SmoothOracle: minimizer dimension mismatch");
        SmoothOracle copy = *this;
        copy.minimum_ = KnownMinimum{std::move(point), value};
        return copy;
    }

    SmoothOracle with_hessian(std::shared_ptr<const Matrix> hessian) const {
        SmoothOracle copy = *this;
        copy.hessian_ = std::move(hessian);
        return copy;
    }

    // f(x) - fstar. For quadratics this is expanded around xstar,
    //   f(x) - f* = (f(x*) - f*) + <grad f(x*), e> + e'He/2,  e = x - x*,
    // which is exact and keeps full relative precision as x -> x*.
    double gap(const Vector& x, const Vector& xstar, double fstar) const {
        if (hessian_) {
            const Vector e = x - xstar;
            return (value(xstar) - fstar) + gradient(xstar).dot(e) + 0.5 * e.dot(*hessian_ * e);
        }
        return value(x) - fstar;
    }

private:
    Index dimension_;
    double alpha_;
    double lipschitz_;
    ValueFn value_;
    GradientFn gradient_;
    std::optional<KnownMinimum> minimum_;
    std::shared_ptr<const Matrix> hessian_;
};

// The nonsmooth part h of a composite objective, described by its value and
// proximal map prox(x, s) = argmin_y h(y) + |y - x|^2 / (2s).
struct NonsmoothTerm {
    std::string name;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&, double)> prox;
    bool is_zero = false;
};

inline Vector prox_l1(const Vector& x, double s, double weight) {
    if (!(s > 0.0)) throw InvalidArgumentError("prox_l1: scale must be positive");
    if (weight < 0.0) throw InvalidArgumentError("prox_l1: weight must be nonnegative");
    const double t = s * weight;
    Vector y(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double a = std::abs(x[i]) - t;
        y[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
    }
    return y;
}

inline void validate_box(const Vector& lower, const Vector& upper) {
    require_same_dimension(lower, upper, "box");
    for (Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i])) {
            throw InvalidBoxError("box: lower bound exceeds upper bound at index " + std::to_string(i));
        }
    }
}

inline Vector prox_box(const Vector& x, const Vector& lower, const Vector& upper) {
    validate_box(lower, upper);
    require_same_dimension(x, lower, "prox_box");
    return x.cwiseMax(lower).cwiseMin(upper);
}

inline NonsmoothTerm zero_term() {
    return NonsmoothTerm{"zero", [](const Vector&) { return 0.0; },
                         [](const Vector& x, double) { return x; }, true};
}

inline NonsmoothTerm l1_term(double weight) {
    if (weight < 0.0) throw InvalidArgumentError("l1_term: weight must be nonnegative");
    return NonsmoothTerm{"l1", [weight](const Vector& x) { return weight * x.lpNorm<1>(); },
                         [weight](const Vector& x, double s) { return prox_l1(x, s, weight); }, false};
}

// Indicator of [lower, upper]; +inf outside.
inline NonsmoothTerm box_term(Vector lower, Vector upper) {
    validate_box(lower, upper);
    auto lo = std::make_shared<const Vector>(std::move(lower));
    auto hi = std::make_shared<const Vector>(std::move(upper));
    return NonsmoothTerm{
        "box",
        [lo, hi](const Vector& x) {
            for (Index i = 0; i < x.size(); ++i) {
                if (x[i] < (*lo)[i] || x[i] > (*hi)[i]) return std::numeric_limits<double>::infinity();
            }
            return 0.0;
        },
        [lo, hi](const Vector& x, double) { return prox_box(x, *lo, *hi); }, false};
}

// f = g + h with g smooth (carries alpha, L) and h convex with a prox.
class CompositeOracle {
public:
    CompositeOracle(SmoothOracle smooth, NonsmoothTerm nonsmooth)
        : smooth_(std::move(smooth)), nonsmooth_(std::move(nonsmooth)) {}

    explicit CompositeOracle(SmoothOracle smooth) : CompositeOracle(std::move(smooth), zero_term()) {}

    const SmoothOracle& smooth() const noexcept { return smooth_; }
    const NonsmoothTerm& nonsmooth() const noexcept { return nonsmooth_; }

    Index dimension() const noexcept { return smooth_.dimension(); }
    double alpha() const noexcept { return smooth_.alpha(); }
    double lipschitz() const noexcept { return smooth_.lipschitz(); }

    double value(const Vector& x) const { return smooth_.value(x) + nonsmooth_.value(x); }
    Vector prox(const Vector& x, double s) const { return nonsmooth_.prox(x, s); }

    double gap(const Vector& x, const Vector& xstar, double fstar) const {
        const double hx = nonsmooth_.value(x);
        if (!std::isfinite(hx)) return hx;
        const double hs = nonsmooth_.value(xstar);
        return smooth_.gap(x, xstar, fstar - hs) + (hx - hs);
    }

private:
    SmoothOracle smooth_;
    NonsmoothTerm nonsmooth_;
};

// Coordinate access to a smooth objective: per-coordinate Lipschitz constants
// L_i, a partial-derivative oracle, and the coordinates each partial reads.
struct CoordinateOracle {
    SmoothOracle base;
    Vector coord_lipschitz;
    std::function<double(const Vector&, Index)> partial;
    std::vector<std::vector<Index>> dependencies;
    // Set when the objective is quadratic and coord_lipschitz holds the exact
    // Hessian diagonal, so the change in f along e_i is known in closed form.
    bool exact_coordinate_curvature = false;

    Index dimension() const noexcept { return base.dimension(); }
};

namespace detail {

inline Vector standard_normal(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace detail

// Haar-ish random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
inline Matrix random_orthogonal(Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix g(d, d);
    for (Index j = 0; j < d; ++j) g.col(j) = detail::standard_normal(d, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

// f(x) = x'Ax/2 - b'x + offset with A symmetric positive definite.
inline SmoothOracle quadratic_oracle(Matrix a, Vector b, double alpha, double lipschitz, double offset = 0.0) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw DimensionError("quadratic_oracle: matrix and linear term disagree in dimension");
    }
    auto hess = std::make_shared<const Matrix>(detail::symmetrize(a));
    auto lin = std::make_shared<const Vector>(std::move(b));
    const Index d = lin->size();
    SmoothOracle oracle(
        d, alpha, lipschitz,
        [hess, lin, offset](const Vector& x) { return 0.5 * x.dot(*hess * x) - lin->dot(x) + offset; },
        [hess, lin](const Vector& x) -> Vector { return *hess * x - *lin; });
    const Vector xstar = hess->ldlt().solve(*lin);
    const double fstar = oracle.value(xstar);
    return oracle.with_hessian(hess).with_minimum(xstar, fstar);
}

inline SmoothOracle quadratic_from_spectrum(const std::vector<double>& eigenvalues, const Vector& linear_term,
                                            std::optional<std::uint64_t> rotation_seed = std::nullopt) {
    if (eigenvalues.empty()) throw InvalidSpectrumError("quadratic_from_spectrum: empty spectrum");
    for (double lambda : eigenvalues) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw InvalidSpectrumError("quadratic_from_spectrum: eigenvalues must be positive and finite");
        }
    }
    if (!std::is_sorted(eigenvalues.begin(), eigenvalues.end())) {
        throw InvalidSpectrumError("quadratic_from_spectrum: eigenvalues must be sorted ascending");
    }
    const auto d = static_cast<Index>(eigenvalues.size());
    if (linear_term.size() != d) throw DimensionError("quadratic_from_spectrum: linear term dimension mismatch");

    const Vector diag = Eigen::Map<const Vector>(eigenvalues.data(), d);
    Matrix a = diag.asDiagonal();
    if (rotation_seed) {
        const Matrix q = random_orthogonal(d, *rotation_seed);
        a = q * diag.asDiagonal() * q.transpose();
    }
    return quadratic_oracle(std::move(a), linear_term, eigenvalues.front(), eigenvalues.back());
}

// Evenly spaced spectrum from alpha to L, inclusive.
inline std::vector<double> linear_spectrum(Index d, double alpha, double lipschitz) {
    std::vector<double> eig(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) {
        eig[static_cast<std::size_t>(k)] =
            d == 1 ? alpha : alpha + (lipschitz - alpha) * static_cast<double>(k) / static_cast<double>(d - 1);
    }
    eig.back() = lipschitz;
    return eig;
}

inline SmoothOracle spectrum_quadratic(Index d, double alpha, double lipschitz, bool rotate, std::uint64_t seed) {
    if (d <= 0) throw DimensionError("spectrum_quadratic: dimension must be positive");
    if (!(alpha > 0.0) || !(alpha <= lipschitz)) {
        throw InvalidSpectrumError("spectrum_quadratic: need 0 < alpha <= L");
    }
    std::mt19937_64 rng(seed ^ 0x6c696e6561727465ULL);
    const Vector b = detail::standard_normal(d, rng);
    return quadratic_from_spectrum(linear_spectrum(d, alpha, lipschitz), b,
                                   rotate ? std::optional<std::uint64_t>(seed) : std::nullopt);
}

// g(x) = |Mx - y|^2/2 + (ridge/2)|x|^2 with M of size (d/2) x d, scaled so the
// largest Hessian eigenvalue is exactly `lipschitz`. M'M is rank deficient, so
// alpha equals the ridge weight.
inline SmoothOracle ridge_least_squares(Index d, double ridge, double lipschitz, std::uint64_t seed) {
    if (d <= 0) throw DimensionError("ridge_least_squares: dimension must be positive");
    if (!(ridge > 0.0) || !(ridge < lipschitz)) {
        throw InvalidArgumentError("ridge_least_squares: need 0 < ridge < L");
    }
    std::mt19937_64 rng(seed);
    const Index rows = std::max<Index>(1, d / 2);
    Matrix m(rows, d);
    for (Index j = 0; j < d; ++j) m.col(j) = detail::standard_normal(rows, rng);
    const Vector y = detail::standard_normal(rows, rng);
    Matrix gram = m.transpose() * m;
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double scale = (lipschitz - ridge) / top;
    gram *= scale;
    const Vector b = std::sqrt(scale) * (m.transpose() * y);
    Matrix h = gram + ridge * Matrix::Identity(d, d);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(detail::symmetrize(h), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    return quadratic_oracle(std::move(h), b, ridge, std::max(lmax, ridge), 0.5 * y.squaredNorm());
}

inline CompositeOracle ridge_l1_problem(Index d, double ridge, double lipschitz, double weight, std::uint64_t seed) {
    return CompositeOracle(ridge_least_squares(d, ridge, lipschitz, seed), l1_term(weight));
}

inline CompositeOracle box_quadratic_problem(Index d, double alpha, double lipschitz, double lower, double upper,
                                             std::uint64_t seed) {
    if (!(lower <= upper)) throw InvalidBoxError("box_quadratic_problem: lower bound exceeds upper bound");
    return CompositeOracle(spectrum_quadratic(d, alpha, lipschitz, true, seed),
                           box_term(Vector::Constant(d, lower), Vector::Constant(d, upper)));
}

// Banded SPD quadratic. `bandwidth` counts nonzero diagonals (odd): row i
// couples to |i - j| <= (bandwidth - 1) / 2. Strictly diagonally dominant
// with margin >= 1; alpha and L are the exact extreme eigenvalues.
inline SmoothOracle banded_quadratic(Index d, Index bandwidth, std::uint64_t seed) {
    if (d <= 0) throw DimensionError("banded_quadratic: dimension must be positive");
    if (bandwidth < 1 || bandwidth % 2 == 0) {
        throw InvalidArgumentError("banded_quadratic: bandwidth must be a positive odd number of diagonals");
    }
    const Index half = (bandwidth - 1) / 2;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> off(-1.0, 1.0);
    std::uniform_real_distribution<double> extra(0.0, 1.0);
    Matrix a = Matrix::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j <= std::min(d - 1, i + half); ++j) {
            a(i, j) = a(j, i) = off(rng);
        }
    }
    for (Index i = 0; i < d; ++i) a(i, i) = a.row(i).cwiseAbs().sum() + 1.0 + extra(rng);
    const Vector b = detail::standard_normal(d, rng);
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues();
    return quadratic_oracle(std::move(a), b, eig.minCoeff(), eig.maxCoeff());
}

// Coordinate view of a quadratic: L_i = A_ii, partial i reads only the
// nonzero columns of row i.
inline CoordinateOracle coordinate_oracle(const SmoothOracle& quadratic) {
    const Matrix* h = quadratic.hessian();
    if (h == nullptr) throw InvalidArgumentError("coordinate_oracle: objective is not a quadratic");
    const Index d = quadratic.dimension();
    const Vector b = -quadratic.gradient(Vector::Zero(d));

    struct Row {
        std::vector<Index> cols;
        std::vector<double> vals;
    };
    auto rows = std::make_shared<std::vector<Row>>(static_cast<std::size_t>(d));
    std::vector<std::vector<Index>> deps(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) {
        auto& row = (*rows)[static_cast<std::size_t>(i)];
        for (Index j = 0; j < d; ++j) {
            if ((*h)(i, j) != 0.0) {
                row.cols.push_back(j);
                row.vals.push_back((*h)(i, j));
            }
        }
        deps[static_cast<std::size_t>(i)] = row.cols;
    }
    auto lin = std::make_shared<const Vector>(b);
    auto partial = [rows, lin](const Vector& x, Index i) {
        const auto& row = (*rows)[static_cast<std::size_t>(i)];
        double acc = -(*lin)[i];
        for (std::size_t k = 0; k < row.cols.size(); ++k) acc += row.vals[k] * x[row.cols[k]];
        return acc;
    };
    return CoordinateOracle{quadratic, h->diagonal(), partial, std::move(deps), true};
}

inline Vector random_point(Index d, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    return scale * detail::standard_normal(d, rng);
}

struct ReferenceSolution {
    Vector point;
    double value = 0.0;
    double residual = 0.0;
};

// High-accuracy (x*, f*) for the Lyapunov monitors. Uses the attached exact
// minimizer when there is one, otherwise runs plain gradient descent with
// step 1/L until |grad f| <= tolerance.
inline ReferenceSolution reference_minimizer(const SmoothOracle& oracle, double tolerance,
                                             std::size_t max_iterations = 2'000'000) {
    if (!(tolerance > 0.0)) throw InvalidArgumentError("reference_minimizer: tolerance must be positive");
    if (oracle.minimum()) {
        const auto& m = *oracle.minimum();
        return {m.point, m.value, oracle.gradient(m.point).norm()};
    }
    Vector x = Vector::Zero(oracle.dimension());
    double best = std::numeric_limits<double>::infinity();
    const double step = 1.0 / oracle.lipschitz();
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        const Vector g = oracle.gradient(x);
        const double r = g.norm();
        best = std::min(best, r);
        if (r <= tolerance) return {x, oracle.value(x), r};
        x -= step * g;
    }
    throw NonConvergenceError("reference_minimizer: iteration budget exhausted", best);
}

// Composite version: proximal gradient with step 1/L, stopping on the
// gradient-mapping residual L |x - prox(x - grad g(x)/L, 1/L)|.
inline ReferenceSolution reference_minimizer(const CompositeOracle& oracle, double tolerance,
                                             std::size_t max_iterations = 2'000'000) {
    if (!(tolerance > 0.0)) throw InvalidArgumentError("reference_minimizer: tolerance must be positive");
    if (oracle.nonsmooth().is_zero) return reference_minimizer(oracle.smooth(), tolerance, max_iterations);
    const double lip = oracle.lipschitz();
    const double step = 1.0 / lip;
    Vector x = oracle.prox(Vector::Zero(oracle.dimension()), step);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        const Vector next = oracle.prox(x - step * oracle.smooth().gradient(x), step);
        const double r = lip * (x - next).norm();
        best = std::min(best, r);
        if (r <= tolerance) return {next, oracle.value(next), r};
        x = next;
    }
    throw NonConvergenceError("reference_minimizer: iteration budget exhausted", best);
}

}  // namespace hamaccel

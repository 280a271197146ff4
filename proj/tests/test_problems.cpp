#include "hamaccel/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace hamaccel;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Brute-force 1-D minimizer of phi on [lo, hi] with n grid points.
template <class F>
double grid_argmin(F phi, double lo, double hi, int n = 10001) {
    double best_x = lo, best = phi(lo);
    for (int k = 1; k < n; ++k) {
        const double x = lo + (hi - lo) * k / (n - 1);
        const double v = phi(x);
        if (v < best) best = v, best_x = x;
    }
    return best_x;
}

std::vector<SmoothOracle> smooth_suite() {
    return {
        spectrum_quadratic(10, 1.0, 100.0, true, 3),
        spectrum_quadratic(6, 0.5, 2.0, false, 4),
        ridge_least_squares(12, 1.0, 50.0, 5),
        banded_quadratic(15, 3, 6),
        banded_quadratic(15, 5, 7),
    };
}

}  // namespace

TEST(QuadraticFromSpectrum, IdentityCase) {
    const auto f = quadratic_from_spectrum({1.0}, vec({0.0}));
    EXPECT_EQ(f.alpha(), 1.0);
    EXPECT_EQ(f.lipschitz(), 1.0);
    ASSERT_TRUE(f.minimum());
    EXPECT_NEAR(f.minimum()->point[0], 0.0, 1e-15);
    EXPECT_NEAR(f.value(vec({3.0})), 4.5, 1e-15);
}

TEST(QuadraticFromSpectrum, IdentityMatrixMinimizerIsB) {
    const auto f = quadratic_from_spectrum({1.0, 1.0}, vec({1.0, 2.0}));
    EXPECT_NEAR(f.minimum()->point[0], 1.0, 1e-14);
    EXPECT_NEAR(f.minimum()->point[1], 2.0, 1e-14);
}

TEST(QuadraticFromSpectrum, ValueAndGradientDiagonal) {
    const auto f = quadratic_from_spectrum({1.0, 100.0}, vec({0.0, 0.0}));
    const Vector x = vec({1.0, 1.0});
    // 0.5 * (1 + 100)
    EXPECT_NEAR(f.value(x), 50.5, 1e-12);
    EXPECT_NEAR(f.gradient(x)[0], 1.0, 1e-12);
    EXPECT_NEAR(f.gradient(x)[1], 100.0, 1e-12);
}

TEST(QuadraticFromSpectrum, Errors) {
    EXPECT_THROW(quadratic_from_spectrum({0.0, 1.0}, vec({0.0, 0.0})), InvalidSpectrumError);
    EXPECT_THROW(quadratic_from_spectrum({-1.0}, vec({0.0})), InvalidSpectrumError);
    EXPECT_THROW(quadratic_from_spectrum({1.0, 2.0}, vec({0.0})), DimensionError);
}

TEST(QuadraticFromSpectrum, RotationKeepsSpectrum) {
    const std::vector<double> eig = {0.5, 1.0, 3.0, 7.0, 20.0};
    const auto f = quadratic_from_spectrum(eig, Vector::Zero(5), 11);
    ASSERT_NE(f.hessian(), nullptr);
    Eigen::SelfAdjointEigenSolver<Matrix> es(*f.hessian());
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(es.eigenvalues()[i], eig[static_cast<std::size_t>(i)], 1e-12);
    EXPECT_EQ(f.alpha(), 0.5);
    EXPECT_EQ(f.lipschitz(), 20.0);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        Vector u(5);
        for (auto& c : u) c = n(rng);
        const double rq = u.dot(*f.hessian() * u) / u.squaredNorm();
        EXPECT_GE(rq, 0.5 - 1e-12);
        EXPECT_LE(rq, 20.0 + 1e-12);
    }
}

TEST(SmoothOracleProperties, StrongConvexityAndLipschitzSampled) {
    std::mt19937_64 rng(9);
    for (const auto& f : smooth_suite()) {
        const Index d = f.dimension();
        for (int k = 0; k < 1000; ++k) {
            const Vector x = random_point(d, rng(), 2.0);
            const Vector y = random_point(d, rng(), 2.0);
            const double lower = f.value(y) + f.gradient(y).dot(x - y) + 0.5 * f.alpha() * (x - y).squaredNorm();
            EXPECT_GE(f.value(x), lower - 1e-9 * (1.0 + std::abs(lower)));
            EXPECT_LE((f.gradient(x) - f.gradient(y)).norm(), f.lipschitz() * (x - y).norm() * (1 + 1e-12));
        }
    }
}

TEST(SmoothOracleProperties, GradientMatchesFiniteDifferences) {
    for (const auto& f : smooth_suite()) {
        const Index d = f.dimension();
        const Vector x = random_point(d, 77);
        const Vector g = f.gradient(x);
        for (Index i = 0; i < d; ++i) {
            const double h = 1e-5;
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (f.value(xp) - f.value(xm)) / (2 * h);
            EXPECT_LE(std::abs(fd - g[i]), 1e-6 * std::max(1.0, std::abs(g[i])));
        }
    }
}

TEST(SmoothOracleProperties, AttachedMinimizerHasZeroGradient) {
    for (const auto& f : smooth_suite()) {
        ASSERT_TRUE(f.minimum());
        EXPECT_LE(f.gradient(f.minimum()->point).norm(), 1e-9);
    }
}

TEST(SmoothOracle, RejectsBadConstants) {
    auto val = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    auto grad = [](const Vector& x) { return Vector(x); };
    EXPECT_THROW(SmoothOracle(1, 2.0, 1.0, val, grad), InvalidArgumentError);
    EXPECT_THROW(SmoothOracle(1, 0.0, 1.0, val, grad), InvalidArgumentError);
    EXPECT_THROW(SmoothOracle(0, 1.0, 1.0, val, grad), DimensionError);
}

TEST(SmoothOracle, StableGapMatchesDirectDifference) {
    const auto f = spectrum_quadratic(8, 1.0, 10.0, true, 2);
    const auto& m = *f.minimum();
    const Vector x = random_point(8, 5);
    EXPECT_NEAR(f.gap(x, m.point, m.value), f.value(x) - m.value, 1e-12 * std::abs(f.value(x)) + 1e-13);
    // Tiny displacement: expansion stays positive where the subtraction cancels.
    const Vector near = m.point + 1e-10 * Vector::Ones(8);
    EXPECT_GT(f.gap(near, m.point, m.value), 0.0);
}

TEST(ProxL1, Examples) {
    EXPECT_EQ(prox_l1(vec({0.0}), 0.7, 2.0)[0], 0.0);
    EXPECT_NEAR(prox_l1(vec({2.0}), 1.0, 1.0)[0], 1.0, 1e-15);
    EXPECT_EQ(prox_l1(vec({-0.5}), 1.0, 1.0)[0], 0.0);
}

TEST(ProxL1, BeatsGridSearch) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const double x = u(rng), s = 0.1 + std::abs(u(rng)), mu = std::abs(u(rng));
        auto phi = [&](double y) { return mu * std::abs(y) + (y - x) * (y - x) / (2 * s); };
        const double p = prox_l1(vec({x}), s, mu)[0];
        const double g = grid_argmin(phi, -4.0, 4.0);
        EXPECT_LE(phi(p), phi(g) + 1e-12);
        EXPECT_NEAR(p, g, 1e-3);
    }
}

TEST(ProxBox, Examples) {
    const Vector lo = vec({0.0}), hi = vec({1.0});
    EXPECT_EQ(prox_box(vec({0.3}), lo, hi)[0], 0.3);
    EXPECT_EQ(prox_box(vec({3.0}), lo, hi)[0], 1.0);
    const Vector r = prox_box(vec({-2.0, 0.5}), Vector::Zero(2), Vector::Ones(2));
    EXPECT_EQ(r[0], 0.0);
    EXPECT_EQ(r[1], 0.5);
    EXPECT_THROW(prox_box(vec({0.0}), vec({1.0}), vec({0.0})), InvalidBoxError);
}

TEST(ProxBox, ScaleFreeAndBeatsGridSearch) {
    const auto h = box_term(vec({-1.0}), vec({0.5}));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const double x = u(rng);
        const double p1 = h.prox(vec({x}), 0.01)[0];
        EXPECT_EQ(p1, h.prox(vec({x}), 100.0)[0]);
        auto phi = [&](double y) { return (y - x) * (y - x); };
        const double g = grid_argmin(phi, -1.0, 0.5);
        EXPECT_LE(phi(p1), phi(g) + 1e-15);
    }
}

TEST(ZeroTerm, ProxIsIdentity) {
    const auto h = zero_term();
    const Vector x = random_point(4, 1);
    EXPECT_EQ(h.prox(x, 0.3), x);
    EXPECT_EQ(h.value(x), 0.0);
}

TEST(ReferenceMinimizer, Examples) {
    const auto q = quadratic_from_spectrum({1.0, 1.0}, vec({1.0, 2.0}));
    const auto r = reference_minimizer(q, 1e-10);
    EXPECT_NEAR(r.point[0], 1.0, 1e-12);
    EXPECT_NEAR(r.point[1], 2.0, 1e-12);
    EXPECT_NEAR(r.value, -2.5, 1e-12);

    const auto half = quadratic_from_spectrum({1.0}, vec({0.0}));
    const auto r0 = reference_minimizer(half, 1e-10);
    EXPECT_NEAR(r0.point[0], 0.0, 1e-15);
    EXPECT_NEAR(r0.value, 0.0, 1e-15);
}

TEST(ReferenceMinimizer, CompositeOneDimensional) {
    // g = (x - 2)^2 / 2, h = |x|
    const auto g = quadratic_oracle(Matrix::Identity(1, 1), vec({2.0}), 1.0, 1.0, 2.0);
    const CompositeOracle f(g, l1_term(1.0));
    const auto r = reference_minimizer(f, 1e-12);
    auto phi = [](double x) { return 0.5 * (x - 2) * (x - 2) + std::abs(x); };
    EXPECT_NEAR(r.point[0], grid_argmin(phi, -3.0, 3.0, 60001), 1e-4);
    EXPECT_NEAR(r.point[0], 1.0, 1e-12);
    EXPECT_NEAR(r.value, 1.5, 1e-12);
}

TEST(ReferenceMinimizer, RunsGradientDescentWithoutAttachedMinimum) {
    auto val = [](const Vector& x) { return 0.5 * (x[0] - 3) * (x[0] - 3) + 2.0 * x[1] * x[1]; };
    auto grad = [](const Vector& x) { return vec({x[0] - 3, 4.0 * x[1]}); };
    const SmoothOracle f(2, 1.0, 4.0, val, grad);
    const auto r = reference_minimizer(f, 1e-10);
    EXPECT_NEAR(r.point[0], 3.0, 1e-9);
    EXPECT_NEAR(r.point[1], 0.0, 1e-9);
    EXPECT_LE(r.residual, 1e-10);
}

TEST(ReferenceMinimizer, BudgetExhaustedCarriesResidual) {
    const auto f = spectrum_quadratic(5, 1.0, 1000.0, false, 1);
    auto bare = SmoothOracle(f.dimension(), f.alpha(), f.lipschitz(), [&](const Vector& x) { return f.value(x); },
                             [&](const Vector& x) { return f.gradient(x); });
    try {
        reference_minimizer(bare, 1e-14, 3);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_GT(e.best_residual(), 1e-14);
        EXPECT_TRUE(std::isfinite(e.best_residual()));
    }
    EXPECT_THROW(reference_minimizer(bare, 0.0), InvalidArgumentError);
}

TEST(CompositeProblems, RidgeL1AndBox) {
    const auto ridge = ridge_l1_problem(30, 1.0, 100.0, 0.1, 3);
    EXPECT_EQ(ridge.alpha(), 1.0);
    EXPECT_LE(ridge.lipschitz(), 100.0 + 1e-9);
    const auto r = reference_minimizer(ridge, 1e-11);
    EXPECT_LE(r.residual, 1e-11);

    const auto box = box_quadratic_problem(10, 1.0, 50.0, -0.2, 0.2, 3);
    const auto rb = reference_minimizer(box, 1e-11);
    EXPECT_LE(rb.point.maxCoeff(), 0.2);
    EXPECT_GE(rb.point.minCoeff(), -0.2);
    EXPECT_TRUE(std::isfinite(box.value(rb.point)));
    EXPECT_TRUE(std::isinf(box.value(Vector::Constant(10, 1.0))));
}

TEST(CompositeOracle, GapSubtractsNonsmoothValueAtReference) {
    const auto f = ridge_l1_problem(6, 1.0, 20.0, 0.5, 2);
    const auto r = reference_minimizer(f, 1e-12);
    const Vector x = random_point(6, 3);
    EXPECT_NEAR(f.gap(x, r.point, r.value), f.value(x) - r.value, 1e-10 * std::abs(f.value(x)));
    EXPECT_NEAR(f.gap(r.point, r.point, r.value), 0.0, 1e-14);
}

TEST(BandedQuadratic, BandStructureAndExactConstants) {
    const auto f = banded_quadratic(20, 3, 1);
    const Matrix& h = *f.hessian();
    for (Index i = 0; i < 20; ++i) {
        for (Index j = 0; j < 20; ++j) {
            if (std::abs(i - j) > 1) EXPECT_EQ(h(i, j), 0.0);
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    EXPECT_NEAR(f.alpha(), es.eigenvalues().minCoeff(), 1e-12);
    EXPECT_NEAR(f.lipschitz(), es.eigenvalues().maxCoeff(), 1e-12);
    EXPECT_THROW(banded_quadratic(5, 2, 1), InvalidArgumentError);
}

TEST(CoordinateOracle, PartialsAndCoordinateLipschitz) {
    for (const auto& f : smooth_suite()) {
        const auto c = coordinate_oracle(f);
        std::mt19937_64 rng(13);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int k = 0; k < 20; ++k) {
            const Vector x = random_point(f.dimension(), rng());
            const Vector g = f.gradient(x);
            for (Index i = 0; i < f.dimension(); ++i) {
                EXPECT_NEAR(c.partial(x, i), g[i], 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()));
                const double step = n(rng);
                Vector y = x;
                y[i] += step;
                EXPECT_LE(std::abs(c.partial(y, i) - c.partial(x, i)),
                          c.coord_lipschitz[i] * std::abs(step) * (1 + 1e-12) + 1e-12);
            }
        }
    }
}

TEST(CoordinateOracle, BandedDependenciesAreLocal) {
    const auto c = coordinate_oracle(banded_quadratic(50, 3, 2));
    for (Index i = 0; i < 50; ++i) {
        const auto& dep = c.dependencies[static_cast<std::size_t>(i)];
        EXPECT_LE(dep.size(), 3u);
        for (Index j : dep) EXPECT_LE(std::abs(j - i), 1);
    }
}

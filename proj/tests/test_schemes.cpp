#include "hamaccel/problems.hpp"
#include "hamaccel/schemes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace hamaccel;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

SmoothOracle half_square() { return quadratic_from_spectrum({1.0}, scalar(0.0)); }

// Gradient identically zero; alpha = L = 1 only to satisfy the oracle contract.
SmoothOracle zero_gradient(Index d) {
    return SmoothOracle(d, 1.0, 1.0, [](const Vector&) { return 0.0; },
                        [](const Vector& x) -> Vector { return Vector::Zero(x.size()); });
}

DiscreteState state(double x, double v) { return DiscreteState{scalar(x), scalar(v), 0, std::nullopt}; }

}  // namespace

TEST(Variant, RoundTrip) {
    for (auto v : {Variant::paper_smooth, Variant::paper_composite, Variant::nesterov, Variant::heavy_ball,
                   Variant::gradient_descent}) {
        EXPECT_EQ(parse_variant(to_string(v)), v);
    }
    EXPECT_FALSE(parse_variant("fista"));
}

TEST(PaperSmoothStep, HandEvaluation) {
    const auto f = half_square();
    SchemeConfig cfg{1.0, 1.0, Variant::paper_smooth, true};
    const auto r = paper_smooth_step(f, cfg, state(1.0, 0.0));
    EXPECT_NEAR(r.mid.x_mid[0], 1.0, 1e-15);
    EXPECT_NEAR(r.mid.v_mid[0], -0.25, 1e-15);
    EXPECT_NEAR(r.next.x[0], 0.0, 1e-15);
    EXPECT_NEAR(r.next.v[0], 0.25, 1e-15);
    EXPECT_EQ(r.next.n, 1);
}

TEST(PaperSmoothStep, FixedPoint) {
    const auto f = spectrum_quadratic(6, 1.0, 9.0, true, 1);
    const Vector xs = f.minimum()->point;
    const auto cfg = default_config(1.0, 9.0);
    const auto r = paper_smooth_step(f, cfg, DiscreteState{xs, Vector::Zero(6), 0, std::nullopt});
    EXPECT_LE((r.next.x - xs).norm(), 1e-13);
    EXPECT_LE(r.next.v.norm(), 1e-13);
}

TEST(PaperSmoothStep, ZeroGradientIsIdleMap) {
    SchemeConfig cfg{1.0, 1.0, Variant::paper_smooth, true};
    const auto r = paper_smooth_step(zero_gradient(1), cfg, state(0.0, 4.0));
    EXPECT_EQ(r.next.x[0], 4.0);
    EXPECT_EQ(r.next.v[0], 1.0);
}

TEST(PaperSmoothStep, VelocityResetIdentityRandom) {
    const double s = 0.37, alpha = 0.8;
    SchemeConfig cfg{s, alpha, Variant::paper_smooth, false};
    const double rho = 1.0 / std::pow(1 + s * std::sqrt(alpha), 2);
    for (std::uint64_t k = 0; k < 20; ++k) {
        const DiscreteState st{random_point(3, k), random_point(3, k + 50), 0, std::nullopt};
        const auto r = paper_smooth_step(zero_gradient(3), cfg, st);
        EXPECT_LE((r.next.x - (st.x + s * st.v)).norm(), 1e-14);
        EXPECT_LE((r.next.v - rho * st.v).norm(), 1e-14);
    }
}

TEST(PaperSmoothStep, StrictStepCheck) {
    const auto f = spectrum_quadratic(3, 1.0, 100.0, false, 1);
    SchemeConfig cfg{0.11, 1.0, Variant::paper_smooth, true};
    EXPECT_THROW(paper_smooth_step(f, cfg, initial_state(Vector::Ones(3))), StepSizeError);
    cfg.strict_step_check = false;
    EXPECT_NO_THROW(paper_smooth_step(f, cfg, initial_state(Vector::Ones(3))));
    cfg.step = 0.1;
    cfg.strict_step_check = true;
    EXPECT_NO_THROW(paper_smooth_step(f, cfg, initial_state(Vector::Ones(3))));
}

TEST(SufficientDecrease, Examples) {
    const auto f = half_square();
    SchemeConfig cfg{1.0, 1.0, Variant::paper_smooth, true};
    const auto [x, v] = sufficient_decrease_update(f, cfg, scalar(1.0), scalar(0.0));
    EXPECT_NEAR(x[0], 0.0, 1e-15);
    EXPECT_NEAR(v[0], 0.5, 1e-15);

    const auto [x0, v0] = sufficient_decrease_update(f, cfg, scalar(0.0), scalar(0.3));
    EXPECT_EQ(x0[0], 0.0);
    EXPECT_EQ(v0[0], 0.3);
}

TEST(SufficientDecrease, PreservesNormTermAndDecreases) {
    const auto f = spectrum_quadratic(7, 0.5, 30.0, true, 2);
    const auto& m = *f.minimum();
    SchemeConfig cfg{0.15, 0.5, Variant::paper_smooth, true};
    const double ra = std::sqrt(cfg.alpha), c = 1 + cfg.step * ra;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const Vector x = random_point(7, k), v = random_point(7, k + 100);
        const auto [xn, vn] = sufficient_decrease_update(f, cfg, x, v);
        const Vector before = ra * (x - m.point) + c * v;
        const Vector after = ra * (xn - m.point) + c * vn;
        EXPECT_LE((before - after).norm(), 1e-12 * before.norm());
        const Vector g = f.gradient(x);
        EXPECT_LE(f.value(xn), f.value(x) - g.squaredNorm() / (2 * f.lipschitz()) + 1e-10 * std::abs(f.value(x)));
    }
}

TEST(PaperCompositeStep, AbsoluteValueExample) {
    const CompositeOracle f(quadratic_oracle(Matrix::Identity(1, 1), scalar(2.0), 1.0, 1.0, 2.0), l1_term(1.0));
    SchemeConfig cfg{1.0, 1.0, Variant::paper_composite, true};
    // x' = x + s v = 0
    const auto r = paper_composite_step(f, cfg, state(0.0, 0.0));
    EXPECT_NEAR(r.mid.x_mid[0], 0.0, 1e-15);
    EXPECT_NEAR(r.next.x[0], 1.0, 1e-15);
    EXPECT_NEAR(r.mid.g[0], -1.0, 1e-15);
    EXPECT_NEAR(r.mid.delta[0], -1.0, 1e-15);

    const auto fixed = paper_composite_step(f, cfg, state(1.0, 0.0));
    EXPECT_NEAR(fixed.mid.g[0], 0.0, 1e-15);
    EXPECT_NEAR(fixed.next.x[0], 1.0, 1e-15);
}

TEST(PaperCompositeStep, ZeroTermMatchesSmoothWithUnitStep) {
    const auto q = spectrum_quadratic(10, 1.0, 64.0, true, 3);
    const CompositeOracle f(q);
    const auto cfg = default_config(q.alpha(), q.lipschitz(), Variant::paper_composite);
    auto smooth_cfg = cfg;
    smooth_cfg.variant = Variant::paper_smooth;
    DiscreteState a = initial_state(random_point(10, 1)), b = a;
    for (int k = 0; k < 200; ++k) {
        a = paper_composite_step(f, cfg, a).next;
        b = paper_smooth_step(q, smooth_cfg, b).next;
        EXPECT_LE((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((a.v - b.v).lpNorm<Eigen::Infinity>(), 1e-12);
    }
}

TEST(Nesterov, Coefficients) {
    EXPECT_EQ(nesterov_momentum(1.0, 1.0), 0.0);
    EXPECT_NEAR(nesterov_momentum(1.0, 4.0), 1.0 / 3.0, 1e-15);
}

TEST(Nesterov, KappaOneConvergesInOneStep) {
    const Vector xs = random_point(5, 3);
    const auto f = quadratic_from_spectrum(std::vector<double>(5, 1.0), xs);
    const auto st = nesterov_step(f, initial_state(random_point(5, 4)));
    EXPECT_LE((st.x - xs).norm(), 1e-15);
    EXPECT_LE(f.gap(st.x, xs, f.minimum()->value), 1e-30);
}

TEST(Nesterov, FixedPoint) {
    const auto f = spectrum_quadratic(4, 1.0, 10.0, true, 1);
    const Vector xs = f.minimum()->point;
    const auto st = nesterov_step(f, DiscreteState{xs, Vector::Zero(4), 0, xs});
    EXPECT_LE((st.x - xs).norm(), 1e-13);
}

TEST(HeavyBall, Coefficients) {
    const auto c = heavy_ball_coefficients(1.0, 4.0);
    EXPECT_NEAR(c.step, 4.0 / 9.0, 1e-15);
    EXPECT_NEAR(c.momentum, 1.0 / 9.0, 1e-15);
    const auto one = heavy_ball_coefficients(2.0, 2.0);
    EXPECT_NEAR(one.step, 0.5, 1e-15);
    EXPECT_EQ(one.momentum, 0.0);
}

TEST(HeavyBall, FixedPointRunHasZeroGap) {
    const auto f = spectrum_quadratic(4, 1.0, 10.0, true, 1);
    const auto ref = reference_minimizer(f, 1e-12);
    SchemeConfig cfg = default_config(f.alpha(), f.lipschitz(), Variant::heavy_ball);
    const auto recs = run(f, cfg, initial_state(ref.point), 20, monitor_from(ref));
    for (const auto& r : recs) EXPECT_LE(std::abs(r.f_gap), 1e-30);
}

TEST(Run, SingleIteration) {
    const auto f = half_square();
    const auto ref = reference_minimizer(f, 1e-12);
    const auto recs = run(f, default_config(1.0, 1.0), initial_state(scalar(1.0)), 1, monitor_from(ref));
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].n, 1);
    EXPECT_THROW(run(f, default_config(1.0, 1.0), initial_state(scalar(1.0)), 0, monitor_from(ref)),
                 InvalidArgumentError);
}

TEST(Run, KappaHundredAllCertificatesPass) {
    const auto f = spectrum_quadratic(50, 1.0, 100.0, true, 1);
    const auto ref = reference_minimizer(f, 1e-12);
    const auto recs = run(f, default_config(1.0, 100.0), initial_state(random_point(50, 2)), 500, monitor_from(ref),
                          paper_certifiers(8, 1));
    ASSERT_EQ(recs.size(), 500u);
    for (const auto& r : recs) {
        EXPECT_TRUE(r.all_passed()) << "n=" << r.n;
        EXPECT_LE(r.f_gap, r.lyapunov + 1e-15);
    }
}

TEST(Run, RidgeLeastSquaresRate) {
    const auto f = ridge_least_squares(40, 1.0, 200.0, 7);
    const auto ref = reference_minimizer(f, 1e-12);
    const auto recs = run(f, default_config(f.alpha(), f.lipschitz()), initial_state(random_point(40, 8)), 400,
                          monitor_from(ref), {rate_certifier(), contraction_certifier()});
    for (const auto& r : recs) EXPECT_TRUE(r.all_passed()) << "n=" << r.n;
}

TEST(Run, RecordsCompleteWhenCertificatesFail) {
    const auto f = spectrum_quadratic(10, 1.0, 100.0, true, 1);
    const auto ref = reference_minimizer(f, 1e-12);
    auto cfg = default_config(1.0, 100.0);
    cfg.step = 0.12;
    cfg.strict_step_check = false;
    const auto recs =
        run(f, cfg, initial_state(random_point(10, 2)), 30, monitor_from(ref), {contraction_certifier()});
    EXPECT_EQ(recs.size(), 30u);
}

TEST(Run, DivergenceCarriesStepAndRecords) {
    const auto f = spectrum_quadratic(5, 1.0, 100.0, false, 1);
    const auto ref = reference_minimizer(f, 1e-12);
    auto cfg = default_config(1.0, 100.0, Variant::paper_smooth);
    cfg.step = 5.0;
    cfg.strict_step_check = false;
    try {
        run(f, cfg, initial_state(random_point(5, 2)), 100000, monitor_from(ref));
        FAIL() << "expected divergence";
    } catch (const TraceDivergence& e) {
        EXPECT_GT(e.step(), 1u);
        EXPECT_EQ(e.records().size(), e.step() - 1);
    }
}

TEST(Run, SmoothVariantRejectsNonsmoothObjective) {
    const auto f = ridge_l1_problem(6, 1.0, 10.0, 0.1, 1);
    const auto ref = reference_minimizer(f, 1e-12);
    EXPECT_THROW(run(f, default_config(1.0, 10.0), initial_state(Vector::Zero(6)), 5, monitor_from(ref)),
                 InvalidArgumentError);
}

TEST(Run, BaselinesConverge) {
    const auto f = spectrum_quadratic(20, 1.0, 100.0, true, 2);
    const auto ref = reference_minimizer(f, 1e-12);
    for (auto v : {Variant::nesterov, Variant::heavy_ball, Variant::gradient_descent}) {
        const auto recs = run(f, default_config(1.0, 100.0, v), initial_state(random_point(20, 3)), 3000,
                              monitor_from(ref));
        EXPECT_LT(recs.back().f_gap, 1e-8) << to_string(v);
    }
}

TEST(VelocityFromDifference, Identity) {
    const Vector x = random_point(3, 1), p = random_point(3, 2);
    EXPECT_LE((velocity_from_difference(x, p, 0.5) - 2.0 * (x - p)).norm(), 1e-15);
}

#include "varentropy/spherical.hpp"

#include <gtest/gtest.h>

using namespace varentropy;

namespace {

Mat quad2(double a, double b, double c) {
    Mat A(2, 2);
    A << a, b, b, c;
    return A;
}

// 2D Cartesian Hessian assembled from the profile by finite differences of
// eta(x, y) = r F(atan2(y, x)).
Mat fd_hessian_2d(const SphericalProfile& prof, double x, double y, double h) {
    auto eta = [&](double a, double b) { return std::hypot(a, b) * prof.F(std::atan2(b, a), 0.0); };
    Mat H(2, 2);
    H(0, 0) = (eta(x + h, y) - 2 * eta(x, y) + eta(x - h, y)) / (h * h);
    H(1, 1) = (eta(x, y + h) - 2 * eta(x, y) + eta(x, y - h)) / (h * h);
    H(0, 1) = H(1, 0) =
        (eta(x + h, y + h) - eta(x + h, y - h) - eta(x - h, y + h) + eta(x - h, y - h)) / (4 * h * h);
    return H;
}

}  // namespace

TEST(Profile, ClosedForms2D) {
    const auto p2 = profile_from_spec(EntropySpec::p_norm(2.0, 2));
    for (double t : {0.1, 1.0, 2.5, 4.0}) EXPECT_NEAR(p2.F(t, 0.0), 1.0, 1e-15);
    const auto p1 = profile_from_spec(EntropySpec::p_norm(1.0, 2));
    EXPECT_NEAR(p1.F(pi / 4, 0.0), std::sqrt(2.0), 1e-15);
    Vec a(2);
    a << 3.0, -2.0;
    const auto lin = profile_from_spec(EntropySpec::linear(a));
    EXPECT_DOUBLE_EQ(lin.F(0.0, 0.0), 3.0);
    EXPECT_NEAR(lin.F(pi / 2, 0.0), -2.0, 1e-15);
}

TEST(Profile, RegularizedIsNotHomogeneous) {
    EXPECT_THROW(profile_from_spec(EntropySpec::regularized_2norm(0.1, 2)), NotHomogeneous);
    EXPECT_THROW(profile_from_spec(EntropySpec::combination({{1.0, EntropySpec::regularized_2norm(0.1, 3)}})),
                 NotHomogeneous);
}

TEST(Profile, MatchesEntropyOnUnitSphere) {
    Mat A = Mat::Identity(3, 3);
    A(0, 2) = A(2, 0) = 0.3;
    const std::vector<EntropySpec> suite = {EntropySpec::p_norm(1.5, 3), EntropySpec::quadratic_form(A),
                                            EntropySpec::combination({{2.0, EntropySpec::p_norm(4.0, 3)}})};
    for (const auto& spec : suite) {
        const auto prof = profile_from_spec(spec);
        for (double t : {0.3, 2.0, 5.5})
            for (double p : {0.2, 1.3, 2.9}) {
                Vec u(3);
                u << std::cos(t) * std::sin(p), std::sin(t) * std::sin(p), std::cos(p);
                EXPECT_NEAR(prof.F(t, p), eval(spec, u), 1e-14);
                // Radial ODE: r d/dr (r F) = r F.
                const double r = 3.7, dr = 1e-6;
                const double deta = (eval(spec, (r + dr) * u) - eval(spec, (r - dr) * u)) / (2 * dr);
                EXPECT_NEAR(r * deta, eval(spec, r * u), 1e-7 * r);
            }
    }
}

TEST(Profile, AnalyticDerivativesMatchFiniteDifferences) {
    const auto spec = EntropySpec::p_norm(3.0, 3);
    auto prof = profile_from_spec(spec);
    auto fd = prof;
    fd.mode = DerivativeMode::finite_difference;
    const auto a = angular_derivatives(prof, 0.7, 1.1, 0.0);
    const auto b = angular_derivatives(fd, 0.7, 1.1, 1e-3);
    EXPECT_NEAR(a.F, b.F, 1e-15);
    EXPECT_NEAR(a.Ft, b.Ft, 1e-9);
    EXPECT_NEAR(a.Fp, b.Fp, 1e-9);
    EXPECT_NEAR(a.Ftt, b.Ftt, 1e-7);
    EXPECT_NEAR(a.Fpp, b.Fpp, 1e-7);
    EXPECT_NEAR(a.Fpt, b.Fpt, 1e-7);
}

TEST(Profile, PeriodicityCheck) {
    EXPECT_NO_THROW(make_profile(2, [](double t, double) { return 2.0 + std::cos(3 * t); }));
    EXPECT_THROW(make_profile(2, [](double t, double) { return 1.0 + 0.1 * t; }), ContractViolation);
}

TEST(Convexity2D, LinearIsFlat) {
    Vec a(2);
    a << 1.0, 2.0;
    const auto rep = check_convexity_2d(profile_from_spec(EntropySpec::linear(a)), 360);
    EXPECT_EQ(rep.verdict, Verdict::convex);
    EXPECT_NEAR(rep.min_margin, 0.0, 1e-13);
    EXPECT_EQ(rep.criterion, Criterion::fplusfpp_2d);
}

TEST(Convexity2D, QuadraticFormDeterminantIdentity) {
    const Mat A = quad2(2.0, 0.5, 1.0);
    const auto prof = profile_from_spec(EntropySpec::quadratic_form(A));
    for (double t = 0.05; t < 2 * pi; t += 0.3) {
        const auto d = angular_derivatives(prof, t, 0.0, 0.0);
        EXPECT_NEAR(d.F + d.Ftt, A.determinant() / std::pow(d.F, 3), 1e-13);
    }
    EXPECT_EQ(check_convexity_2d(prof, 256).verdict, Verdict::convex);
}

TEST(Convexity2D, PseudoNormNotConvex) {
    const auto pseudo = EntropySpec::unchecked_p_norm(0.5, 2);
    auto prof = profile_from_spec(pseudo);
    const auto rep = check_convexity_2d(prof, 360);
    EXPECT_EQ(rep.verdict, Verdict::not_convex);
    // Brute-force oracle: 5-point differences of the closed form.
    auto fd = make_profile(2, [](double t, double) {
        const double s = std::sqrt(std::abs(std::cos(t))) + std::sqrt(std::abs(std::sin(t)));
        return s * s;
    });
    const auto rep_fd = check_convexity_2d(fd, 360);
    EXPECT_EQ(rep_fd.verdict, Verdict::not_convex);
    EXPECT_LT(rep_fd.min_margin, -1e-3);
}

TEST(Convexity2D, OneNormFlatAwayFromAxes) {
    const auto prof = profile_from_spec(EntropySpec::p_norm(1.0, 2));
    std::vector<ConvexitySample> rows;
    ConvexityOptions opt;
    opt.dump = &rows;
    const auto rep = check_convexity_2d(prof, 720, opt);
    EXPECT_EQ(rep.verdict, Verdict::convex);
    for (const auto& r : rows) EXPECT_NEAR(r.A, 0.0, 1e-9) << r.theta;
}

TEST(Convexity2D, FiniteDifferenceModeReportsInconclusiveAtZeroMargin) {
    Vec a(2);
    a << 1.0, 0.0;
    auto prof = profile_from_spec(EntropySpec::linear(a));
    prof.mode = DerivativeMode::finite_difference;
    EXPECT_EQ(check_convexity_2d(prof, 128).verdict, Verdict::inconclusive);
}

TEST(Convexity2D, EigenvalueIdentity) {
    const auto prof = profile_from_spec(EntropySpec::p_norm(3.0, 2));
    for (double t : {0.3, 1.2, 2.2, 4.0}) {
        const double r = 1.7;
        const auto d = angular_derivatives(prof, t, 0.0, 0.0);
        const Mat H = fd_hessian_2d(prof, r * std::cos(t), r * std::sin(t), 1e-4);
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        const double expect = (d.F + d.Ftt) / r;
        EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-6);
        EXPECT_NEAR(es.eigenvalues()[1], expect, 1e-6 * std::max(1.0, expect));
    }
}

TEST(Convexity3D, ConstantProfileGivesEightAndZero) {
    const auto prof = profile_from_spec(EntropySpec::p_norm(2.0, 3));
    std::vector<ConvexitySample> rows;
    ConvexityOptions opt;
    opt.dump = &rows;
    const auto rep = check_convexity_3d(prof, 32, 16, opt);
    EXPECT_EQ(rep.verdict, Verdict::convex);
    EXPECT_EQ(rep.criterion, Criterion::a_ge_b_3d);
    EXPECT_EQ(rep.skipped, 0);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.A, 8.0, 1e-13);
        EXPECT_NEAR(r.B, 0.0, 1e-6);
    }
}

TEST(Convexity3D, ConstantCallableExact) {
    SphericalProfile prof;
    prof.dim = 3;
    prof.mode = DerivativeMode::analytic;
    prof.F = [](double, double) { return 1.0; };
    prof.analytic = [](double, double) { return AngularDerivatives{1.0, 0, 0, 0, 0, 0}; };
    std::vector<ConvexitySample> rows;
    ConvexityOptions opt;
    opt.dump = &rows;
    check_convexity_3d(prof, 16, 8, opt);
    for (const auto& r : rows) {
        EXPECT_EQ(r.A, 8.0);
        EXPECT_EQ(r.B, 0.0);
    }
}

TEST(Convexity3D, LinearHasZeroMargin) {
    Vec a(3);
    a << 0.0, 0.0, 1.0;
    std::vector<ConvexitySample> rows;
    ConvexityOptions opt;
    opt.dump = &rows;
    const auto rep = check_convexity_3d(profile_from_spec(EntropySpec::linear(a)), 64, 32, opt);
    EXPECT_EQ(rep.verdict, Verdict::convex);
    for (const auto& r : rows) EXPECT_NEAR(r.A - r.B, 0.0, 1e-9 * std::max(1.0, r.A));
    EXPECT_NEAR(rep.min_margin, 0.0, 1e-9);
}

TEST(Convexity3D, EigenvaluesMatchCartesianHessian) {
    // (A +- B) / (8 r) are the nonzero Hessian eigenvalues.
    Mat Q = Mat::Identity(3, 3);
    Q(0, 0) = 3.0;
    Q(1, 2) = Q(2, 1) = 0.4;
    for (const auto& spec : {EntropySpec::p_norm(4.0, 3), EntropySpec::quadratic_form(Q)}) {
        const auto prof = profile_from_spec(spec);
        for (double t : {0.4, 2.0, 3.9})
            for (double p : {0.5, 1.4, 2.6}) {
                const auto d = angular_derivatives(prof, t, p, 0.0);
                const auto ab = a_and_b(d, p);
                ASSERT_TRUE(ab);
                Vec u(3);
                u << std::cos(t) * std::sin(p), std::sin(t) * std::sin(p), std::cos(p);
                Eigen::SelfAdjointEigenSolver<Mat> es(hess(spec, u));
                const auto ev = es.eigenvalues();
                EXPECT_NEAR(ev[0], 0.0, 1e-10);
                EXPECT_NEAR(ev[1], (ab->first - ab->second) / 8.0, 1e-9);
                EXPECT_NEAR(ev[2], (ab->first + ab->second) / 8.0, 1e-9);
            }
    }
}

TEST(Convexity3D, ExpandedRadicandAgrees) {
    for (const auto& spec : {EntropySpec::p_norm(4.0, 3), EntropySpec::p_norm(1.5, 3)}) {
        const auto prof = profile_from_spec(spec);
        for (double t : {0.4, 2.0, 3.9})
            for (double p : {0.5, 1.4, 2.6}) {
                const auto d = angular_derivatives(prof, t, p, 0.0);
                const auto R = radicand_expanded(d, p);
                ASSERT_TRUE(R);
                const auto ab = a_and_b(d, p);
                const double s2 = std::sin(p) * std::sin(p);
                EXPECT_NEAR(std::sqrt(2.0) / s2 * std::sqrt(*R), ab->second, 1e-9 * std::max(1.0, ab->second));
            }
    }
    // The F_pp-free formula misses the 1/sin^2 curvature of cos(p): A - B < 0.
    AngularDerivatives lin{std::cos(2.5), 0, 0, -std::sin(2.5), -std::cos(2.5), 0};
    const auto ab = a_and_b(lin, 2.5);
    EXPECT_NEAR(ab->first - ab->second, 0.0, 1e-14);
}

TEST(Convexity3D, PNormFourConvex) {
    const auto spec = EntropySpec::p_norm(4.0, 3);
    EXPECT_EQ(check_convexity_3d(profile_from_spec(spec), 64, 32).verdict, Verdict::convex);
    const auto cart = cartesian_eigen_check(spec, 10000, 42);
    EXPECT_GE(cart.min_margin, -1e-10);
}

TEST(Cartesian, Examples) {
    const auto r2 = cartesian_eigen_check(EntropySpec::p_norm(2.0, 2), 2000, 42);
    EXPECT_EQ(r2.verdict, Verdict::convex);
    EXPECT_NEAR(r2.min_margin, 0.0, 1e-12);
    Vec a(2);
    a << 1.0, 5.0;
    const auto rl = cartesian_eigen_check(EntropySpec::linear(a), 100, 42);
    EXPECT_EQ(rl.min_margin, 0.0);
    const auto ri = cartesian_eigen_check(EntropySpec::unchecked_quadratic_form(quad2(1.0, 0.0, -0.5)), 2000, 42);
    EXPECT_EQ(ri.verdict, Verdict::not_convex);
    EXPECT_EQ(cartesian_eigen_check(EntropySpec::regularized_2norm(0.1, 3), 500, 42).verdict, Verdict::convex);
}

TEST(Cartesian, NullVectorIsGradient) {
    const Vec g = (Vec(2) << 0.6, -1.7).finished();
    const Mat H = hess(EntropySpec::p_norm(2.0, 2), g);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-15);
    EXPECT_NEAR(std::abs(es.eigenvectors().col(0).dot(g.normalized())), 1.0, 1e-12);
    EXPECT_NEAR(es.eigenvalues()[1], 1.0 / g.norm(), 1e-14);
}

TEST(Agreement, CriteriaVerdictsMatch) {
    std::vector<EntropySpec> suite2, suite3;
    for (int d = 2; d <= 3; ++d) {
        auto& s = d == 2 ? suite2 : suite3;
        for (double p : {1.0, 1.5, 2.0, 4.0}) s.push_back(EntropySpec::p_norm(p, d));
        s.push_back(EntropySpec::linear(Vec::LinSpaced(d, 1.0, 2.0)));
        Mat A = Mat::Identity(d, d);
        A(0, 1) = A(1, 0) = 0.3;
        s.push_back(EntropySpec::quadratic_form(A));
        A(d - 1, d - 1) = -0.5;
        s.push_back(EntropySpec::unchecked_quadratic_form(A));
        s.push_back(EntropySpec::unchecked_p_norm(0.5, d));
    }
    for (const auto& spec : suite2)
        EXPECT_EQ(check_convexity_2d(profile_from_spec(spec), 720).verdict,
                  cartesian_eigen_check(spec, 10000, 42).verdict)
            << format_entropy(spec);
    for (const auto& spec : suite3)
        EXPECT_EQ(check_convexity_3d(profile_from_spec(spec), 96, 48).verdict,
                  cartesian_eigen_check(spec, 10000, 42).verdict)
            << format_entropy(spec);
}

TEST(Determinism, ThreadCountDoesNotChangeResult) {
    const auto prof = profile_from_spec(EntropySpec::p_norm(1.5, 3));
    setenv("VARENTROPY_THREADS", "1", 1);
    const auto a = check_convexity_3d(prof, 64, 32);
    setenv("VARENTROPY_THREADS", "4", 1);
    const auto b = check_convexity_3d(prof, 64, 32);
    unsetenv("VARENTROPY_THREADS");
    EXPECT_EQ(a.min_margin, b.min_margin);
    EXPECT_EQ(a.argmin_angles, b.argmin_angles);
}

#include "varentropy/objectivity.hpp"

#include <gtest/gtest.h>

using namespace varentropy;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Mat cross_matrix(const Vec& w) {
    Mat W(3, 3);
    W << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
    return W;
}

}  // namespace

TEST(Rotations, Orthogonal) {
    for (int d : {2, 3})
        for (const Mat& R : sample_rotations(d, 200, 7)) {
            EXPECT_LE(orthogonality_defect(R), 1e-13);
            EXPECT_NEAR(R.determinant(), 1.0, 1e-13);
        }
}

TEST(Rotations, QuaternionMeanIsZero) {
    // Haar measure: E[R] = 0.
    Mat sum = Mat::Zero(3, 3);
    const auto rs = sample_rotations(3, 20000, 3);
    for (const Mat& R : rs) sum += R;
    EXPECT_LT((sum / rs.size()).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Invariance, TwoNormIsObjective) {
    for (int d : {2, 3}) {
        const auto rep = rotation_invariance_report(EntropySpec::p_norm(2, d), 64, 100, 42);
        EXPECT_LE(rep.max_deviation, 1e-12);
        EXPECT_TRUE(rep.objective());
        EXPECT_LE(rotation_invariance(EntropySpec::regularized_2norm(0.1, d), 32, 50, 1), 1e-12);
        EXPECT_LE(rotation_invariance(EntropySpec::quadratic_form(3.0 * Mat::Identity(d, d)), 32, 50, 1), 1e-12);
    }
}

TEST(Invariance, OneNormWitness) {
    // ||R(pi/4) e1||_1 = sqrt 2, which 64 equally spaced angles include.
    const auto spec = EntropySpec::p_norm(1, 2);
    EXPECT_NEAR(eval(spec, rotation_2d(pi / 4) * vec({1, 0})) - eval(spec, vec({1, 0})), std::sqrt(2.0) - 1, 1e-15);
    const auto rep = rotation_invariance_report(spec, 64, 0, 42);
    EXPECT_NEAR(rep.max_deviation, std::sqrt(2.0) - 1, 1e-12);
    EXPECT_FALSE(rep.objective());
    EXPECT_GT(rotation_invariance(EntropySpec::p_norm(1, 3), 16, 16, 42), 0.1);
    EXPECT_GT(rotation_invariance(EntropySpec::p_norm(4, 2), 16, 16, 42), 1e-3);
}

TEST(Invariance, LinearNotObjective) {
    const Vec a = vec({0.3, -1.2, 0.5});
    const auto rep = rotation_invariance_report(EntropySpec::linear(a), 8, 8, 5);
    const double oracle = std::abs(a.dot(rep.worst_rotation * rep.worst_vector) - a.dot(rep.worst_vector));
    EXPECT_NEAR(rep.max_deviation, oracle, 1e-14);
    EXPECT_GT(rep.max_deviation, 0.1);
}

TEST(Invariance, Deterministic) {
    const auto spec = EntropySpec::p_norm(3, 3);
    EXPECT_EQ(rotation_invariance(spec, 20, 20, 9), rotation_invariance(spec, 20, 20, 9));
}

TEST(Invariance, Errors) {
    EXPECT_THROW(rotation_invariance(EntropySpec::p_norm(2, 1), 4, 4, 1), ContractViolation);
    EXPECT_THROW(rotation_invariance(EntropySpec::p_norm(2, 2), 0, 4, 1), ContractViolation);
}

TEST(Coefficients, VectorCondition) {
    const Mat R = sample_rotations(3, 1, 11).front();
    EXPECT_LE(coefficient_condition_a([](const Vec& x) { return x; }, R, 50, 1), 1e-14);
    EXPECT_GT(coefficient_condition_a([](const Vec&) { return vec({1, 0, 0}); }, R, 50, 1), 1e-3);
    const Mat R2 = rotation_2d(0.3);
    const double c = coefficient_condition_a([](const Vec&) { return vec({1, 2}); }, R2, 1, 1);
    EXPECT_NEAR(c, (vec({1, 2}) - R2 * vec({1, 2})).norm(), 1e-15);
}

TEST(Coefficients, CrossProductCommutator) {
    const Vec w = vec({0.2, -0.4, 1.0});
    const Mat W = cross_matrix(w);
    auto field = [&](const Vec& x) -> Vec { return W * x; };
    // About the axis of w, R commutes with W.
    const Vec u = w.normalized();
    const double t = 0.7;
    const Mat about_w = rotation_from_quaternion(std::cos(t / 2), std::sin(t / 2) * u[0], std::sin(t / 2) * u[1],
                                                 std::sin(t / 2) * u[2]);
    EXPECT_LE((W * about_w - about_w * W).norm(), 1e-14);
    EXPECT_LE(coefficient_condition_a(field, about_w, 50, 2), 1e-14);
    // Generic R: residual is ||(W R - R W) x||, bounded by the commutator norm.
    const Mat R = sample_rotations(3, 1, 4).front();
    const double comm = (W * R - R * W).norm();
    const double res = coefficient_condition_a(field, R, 50, 2);
    EXPECT_GT(comm, 1e-3);
    EXPECT_GT(res, 0.0);
    double bound = 0.0;
    for (const Vec& x : detail::sample_points(3, 50, 2)) bound = std::max(bound, ((W * R - R * W) * x).norm());
    EXPECT_NEAR(res, bound, 1e-13);
}

TEST(Coefficients, MatrixCondition) {
    const Mat R = rotation_2d(pi / 4);
    EXPECT_LE(coefficient_condition_A([](const Vec&) { return Mat(Mat::Identity(2, 2)); }, R, 20, 1), 1e-15);
    EXPECT_LE(coefficient_condition_A([](const Vec& x) { return Mat(x.squaredNorm() * Mat::Identity(2, 2)); }, R, 20, 1),
              1e-13);
    Mat D = Mat::Zero(2, 2);
    D.diagonal() << 1, 2;
    // R D R^T for pi/4 is [[1.5, -0.5], [-0.5, 1.5]]: Frobenius distance 1.
    EXPECT_NEAR(coefficient_condition_A([&](const Vec&) { return D; }, R, 5, 1), 1.0, 1e-14);
    Mat S(2, 2);
    S << 1, 0.5, 0.5, 1;
    EXPECT_THROW(coefficient_condition_A([](const Vec&) { return Mat(Mat::Identity(2, 2)); }, S, 5, 1),
                 ContractViolation);
}

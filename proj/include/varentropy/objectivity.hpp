/**
 * @file objectivity.hpp
 * @brief Rotation invariance eta(R v) = eta(v) of entropy functions, and the
 * covariance conditions a(Rx) = R a(x), A(Rx) = R A(x) R^T for spatially
 * varying coefficients.
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/entropy.hpp"

#include <functional>
#include <vector>

namespace varentropy {

inline constexpr double objectivity_threshold = 1e-9;

inline Mat rotation_2d(double angle) {
    Mat R(2, 2);
    R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return R;
}

/// Rotation from a unit quaternion (w, x, y, z); the input is normalized.
inline Mat rotation_from_quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    require(n > 0.0 && std::isfinite(n), "quaternion must be nonzero and finite");
    w /= n, x /= n, y /= n, z /= n;
    Mat R(3, 3);
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),    //
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

/// Haar-uniform rotation: normalized Gaussian quaternion.
inline Mat random_rotation_3d(Rng& rng) {
    double q[4];
    double n = 0.0;
    do {
        for (double& c : q) c = rng.normal();
        n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    } while (n < 1e-12);
    return rotation_from_quaternion(q[0], q[1], q[2], q[3]);
}

/// ||R^T R - I||_F.
inline double orthogonality_defect(const Mat& R) {
    return (R.transpose() * R - Mat::Identity(R.rows(), R.cols())).norm();
}

/// Rotations tried by rotation_invariance: 2pi k / n in 2D, seeded random in 3D.
inline std::vector<Mat> sample_rotations(int dim, int n_angles, std::uint64_t seed) {
    require(dim == 2 || dim == 3, "rotation sampling needs dim 2 or 3");
    require(n_angles >= 1, "n_angles must be >= 1");
    std::vector<Mat> out;
    out.reserve(n_angles);
    Rng rng(seed);
    for (int k = 0; k < n_angles; ++k) {
        out.push_back(dim == 2 ? rotation_2d(2.0 * pi * k / n_angles) : random_rotation_3d(rng));
        if (orthogonality_defect(out.back()) > 1e-13)
            throw Error("sampled rotation is not orthogonal to 1e-13");
    }
    return out;
}

struct ObjectivityReport {
    double max_deviation = 0.0;
    Mat worst_rotation;
    Vec worst_vector;
    int n_angles = 0;
    int samples = 0;
    bool objective() const { return max_deviation <= objectivity_threshold; }
};

/**
 * max |eta(R v) - eta(v)| over the sampled rotations and probe vectors. Probes
 * are the coordinate unit vectors followed by `samples` seeded random unit
 * vectors. Points where eta is singular are skipped.
 */
inline ObjectivityReport rotation_invariance_report(const EntropySpec& spec, int n_angles, int samples,
                                                    std::uint64_t seed) {
    const int d = spec.dim();
    require(d == 2 || d == 3, "rotation invariance needs dim 2 or 3");
    require(samples >= 0, "samples must be >= 0");
    const auto rotations = sample_rotations(d, n_angles, seed);
    std::vector<Vec> probes;
    for (int i = 0; i < d; ++i) probes.push_back(Vec::Unit(d, i));
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int s = 0; s < samples; ++s) probes.push_back(rng.unit_vector(d));

    std::vector<double> dev(rotations.size(), 0.0);
    std::vector<std::size_t> arg(rotations.size(), 0);
    parallel_for(rotations.size(), [&](std::size_t r) {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            double delta;
            try {
                delta = std::abs(eval(spec, rotations[r] * probes[p]) - eval(spec, probes[p]));
            } catch (const SingularPoint&) {
                continue;
            }
            if (!(delta <= dev[r])) {
                dev[r] = delta;
                arg[r] = p;
            }
        }
    });
    ObjectivityReport rep;
    rep.n_angles = n_angles;
    rep.samples = samples;
    rep.worst_rotation = rotations.front();
    rep.worst_vector = probes.front();
    for (std::size_t r = 0; r < rotations.size(); ++r)
        if (dev[r] > rep.max_deviation || std::isnan(dev[r])) {
            rep.max_deviation = dev[r];
            rep.worst_rotation = rotations[r];
            rep.worst_vector = probes[arg[r]];
            if (std::isnan(dev[r])) break;
        }
    return rep;
}

inline double rotation_invariance(const EntropySpec& spec, int n_angles, int samples, std::uint64_t seed) {
    return rotation_invariance_report(spec, n_angles, samples, seed).max_deviation;
}

namespace detail {

inline std::vector<Vec> sample_points(int dim, int samples, std::uint64_t seed) {
    require(samples >= 1, "samples must be >= 1");
    Rng rng(seed);
    std::vector<Vec> xs(samples, Vec(dim));
    for (auto& x : xs)
        for (int i = 0; i < dim; ++i) x[i] = rng.normal();
    return xs;
}

inline void check_rotation(const Mat& R) {
    require(R.rows() == R.cols() && R.rows() >= 1 && R.rows() <= 3, "rotation must be square, size 1..3");
    require(orthogonality_defect(R) <= 1e-12, "matrix is not orthogonal");
}

}  // namespace detail

/// max ||a(Rx) - R a(x)||_2 over standard normal x.
inline double coefficient_condition_a(const std::function<Vec(const Vec&)>& a_field, const Mat& R, int samples,
                                      std::uint64_t seed) {
    detail::check_rotation(R);
    double worst = 0.0;
    for (const Vec& x : detail::sample_points(static_cast<int>(R.rows()), samples, seed)) {
        const Vec ax = a_field(x), arx = a_field(R * x);
        require(ax.size() == R.rows() && arx.size() == R.rows(), "a(x) has the wrong length");
        worst = std::max(worst, (arx - R * ax).norm());
    }
    return worst;
}

/// max ||A(Rx) - R A(x) R^T||_F over standard normal x.
inline double coefficient_condition_A(const std::function<Mat(const Vec&)>& A_field, const Mat& R, int samples,
                                      std::uint64_t seed) {
    detail::check_rotation(R);
    double worst = 0.0;
    for (const Vec& x : detail::sample_points(static_cast<int>(R.rows()), samples, seed)) {
        const Mat Ax = A_field(x), Arx = A_field(R * x);
        require(Ax.rows() == R.rows() && Ax.cols() == R.rows() && Arx.rows() == R.rows() && Arx.cols() == R.rows(),
                "A(x) has the wrong size");
        worst = std::max(worst, (Arx - R * Ax * R.transpose()).norm());
    }
    return worst;
}

}  // namespace varentropy

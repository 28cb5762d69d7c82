/**
 * @file core.hpp
 * @brief Shared value types, error hierarchy and small numeric utilities.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace varentropy {

/// Small stack-allocated vector, length 1..3 (a gradient ∇φ, a speed, a flux).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Small stack-allocated matrix, up to 3x3.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double pi = std::numbers::pi;

/// Below this 2-norm of the gradient, exact (non-regularized) norms are not
/// differentiable and report SingularPoint.
inline constexpr double default_singularity_cutoff = 1e-8;

inline constexpr double default_convexity_tolerance = 1e-9;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition failed: dimension mismatch, out-of-range parameter, bad input.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Derivative requested at (or too near) the non-differentiable origin of an
/// exact norm.
class SingularPoint : public Error {
public:
    explicit SingularPoint(double gradient_norm)
        : Error("entropy not differentiable at |g|_2 = " + std::to_string(gradient_norm)),
          gradient_norm_(gradient_norm) {}
    double gradient_norm() const noexcept { return gradient_norm_; }

private:
    double gradient_norm_;
};

/// The entropy is not of the form r F(angles) (e.g. a regularized norm).
class NotHomogeneous : public Error {
public:
    using Error::Error;
};

/// Diffusion matrix with a positive eigenvalue: variation entropy blows up.
class IllPosedModel : public Error {
public:
    using Error::Error;
};

class UnsupportedClosedForm : public Error {
public:
    using Error::Error;
};

/// Malformed numerical data (file contents, negative radicands beyond rounding).
class DataError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/**
 * Seeded generator with a platform-independent output sequence.
 *
 * The engine is std::mt19937_64, whose output is fixed by the standard. The
 * standard distributions are implementation-defined, so the mapping to
 * doubles is done here: uniform() takes the top 53 bits, normal() uses the
 * Box-Muller transform on two uniforms.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * pi * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * pi * u2);
    }

    /// Uniformly distributed direction on the unit sphere in R^dim.
    Vec unit_vector(int dim) {
        Vec v(dim);
        double n = 0.0;
        do {
            for (int i = 0; i < dim; ++i) v[i] = normal();
            n = v.norm();
        } while (n < 1e-12);
        return v / n;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Reductions and parallel loops
// ---------------------------------------------------------------------------

/// Pairwise (cascade) summation; the order is fixed by the input order.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

/// Thread cap from VARENTROPY_THREADS (>= 1), else hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("VARENTROPY_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs body(i) for i in [0, n) over contiguous chunks. body must only write
 * to per-index storage; callers reduce afterwards in index order so results
 * do not depend on the thread count.
 */
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned threads = std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / 256));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * chunk;
                const std::size_t hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace varentropy

/**
 * @file jet.hpp
 * @brief Second-order forward-mode automatic differentiation in N variables.
 *
 * A Jet carries a value together with its gradient and Hessian with respect
 * to N seed variables. Closed-form angular profiles are written once as
 * templates over the scalar type and evaluated with Jet<N> to obtain exact
 * first and second partial derivatives.
 */
#pragma once

#include <array>
#include <cmath>

namespace varentropy {

template <int N>
struct Jet {
    double v = 0.0;
    std::array<double, N> g{};
    std::array<std::array<double, N>, N> h{};

    Jet() = default;
    Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly

    static Jet variable(double value, int index) {
        Jet j(value);
        j.g[index] = 1.0;
        return j;
    }
};

// Chain rule for a scalar function with value f0 and derivatives f1, f2.
template <int N>
Jet<N> apply(const Jet<N>& a, double f0, double f1, double f2) {
    Jet<N> r(f0);
    for (int i = 0; i < N; ++i) {
        r.g[i] = f1 * a.g[i];
        for (int j = 0; j < N; ++j) r.h[i][j] = f1 * a.h[i][j] + f2 * a.g[i] * a.g[j];
    }
    return r;
}

template <int N>
Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r(a.v + b.v);
    for (int i = 0; i < N; ++i) {
        r.g[i] = a.g[i] + b.g[i];
        for (int j = 0; j < N; ++j) r.h[i][j] = a.h[i][j] + b.h[i][j];
    }
    return r;
}

template <int N>
Jet<N> operator-(const Jet<N>& a) {
    return apply(a, -a.v, -1.0, 0.0);
}

template <int N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
    return a + (-b);
}

template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i) {
        r.g[i] = a.g[i] * b.v + a.v * b.g[i];
        for (int j = 0; j < N; ++j)
            r.h[i][j] = a.h[i][j] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[i][j];
    }
    return r;
}

template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
    const double inv = 1.0 / b.v;
    return a * apply(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

template <int N>
Jet<N> operator*(double s, const Jet<N>& a) {
    return apply(a, s * a.v, s, 0.0);
}

template <int N>
Jet<N> sqrt(const Jet<N>& a) {
    const double s = std::sqrt(a.v);
    return apply(a, s, 0.5 / s, -0.25 / (s * a.v));
}

template <int N>
Jet<N> sin(const Jet<N>& a) {
    return apply(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v));
}

template <int N>
Jet<N> cos(const Jet<N>& a) {
    return apply(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v));
}

template <int N>
Jet<N> exp(const Jet<N>& a) {
    const double e = std::exp(a.v);
    return apply(a, e, e, e);
}

/// |a|; the derivative at 0 uses sign(0) = 0.
template <int N>
Jet<N> abs(const Jet<N>& a) {
    const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    return apply(a, std::abs(a.v), s, 0.0);
}

/// a^p for a > 0 (callers pass |x|).
template <int N>
Jet<N> pow(const Jet<N>& a, double p) {
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return apply(a, std::pow(a.v, p), p * std::pow(a.v, p - 1.0), p * (p - 1.0) * std::pow(a.v, p - 2.0));
}

}  // namespace varentropy

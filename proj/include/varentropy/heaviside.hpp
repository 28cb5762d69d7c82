/**
 * @file heaviside.hpp
 * @brief Linearized and smoothed Heaviside ramps on [-E, E] and their
 * (regularized) total variation, in closed form and by adaptive quadrature.
 *
 *   linear:  phi(x) = (1 + x/E) / 2
 *   smooth:  phi(x) = (1 + x/E + sin(pi x / E) / pi) / 2
 *
 * with phi = 0 left of -E and 1 right of E. For slope phi' on [-E, E]:
 *   tv      = int |phi'|                 = 1
 *   tv_eps  = int sqrt(phi'^2 + eps^2)   (linear: sqrt(1 + 4 E^2 eps^2))
 *   tv_bar  = int (|phi'| + eps)         = 1 + 2 E eps
 * and tv <= tv_eps <= tv_bar.
 */
#pragma once

#include "varentropy/core.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace varentropy {

enum class HeavisideKind { linear, smooth };
enum class TVMethod { closed_form, quadrature };

inline const char* to_string(HeavisideKind k) { return k == HeavisideKind::linear ? "linear" : "smooth"; }
inline const char* to_string(TVMethod m) { return m == TVMethod::closed_form ? "closed_form" : "quadrature"; }

inline HeavisideKind parse_heaviside_kind(std::string_view s) {
    if (s == "linear") return HeavisideKind::linear;
    if (s == "smooth") return HeavisideKind::smooth;
    throw ContractViolation("unknown Heaviside kind '" + std::string(s) + "'");
}

inline double heaviside_profile(HeavisideKind kind, double E, double x) {
    require(std::isfinite(E) && E > 0.0, "ramp half-width E must be > 0");
    if (x <= -E) return 0.0;
    if (x >= E) return 1.0;
    const double base = 1.0 + x / E;
    return kind == HeavisideKind::linear ? 0.5 * base : 0.5 * (base + std::sin(pi * x / E) / pi);
}

inline double heaviside_slope(HeavisideKind kind, double E, double x) {
    require(std::isfinite(E) && E > 0.0, "ramp half-width E must be > 0");
    if (x <= -E || x >= E) return 0.0;
    return kind == HeavisideKind::linear ? 0.5 / E : 0.5 * (1.0 + std::cos(pi * x / E)) / E;
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double fa, double m, double fm, double b,
                           double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson over n >= 64 equal panels, absolute tolerance split
/// evenly between panels; panel results are summed pairwise.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                               int panels = 64) {
    require(panels >= 64, "quadrature needs at least 64 panels");
    require(tol > 0.0 && b > a, "bad quadrature interval or tolerance");
    std::vector<double> parts(panels);
    const double w = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * w, hi = k + 1 == panels ? b : a + (k + 1) * w, m = 0.5 * (lo + hi);
        const double flo = f(lo), fm = f(m), fhi = f(hi);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        parts[k] = detail::simpson_step(f, lo, flo, m, fm, hi, fhi, whole, tol / panels, 40);
    }
    return pairwise_sum(parts);
}

struct TVReport {
    HeavisideKind kind = HeavisideKind::linear;
    double E = 0.0;
    double eps = 0.0;
    double tv = 0.0;
    double tv_eps = 0.0;
    double tv_bar_eps = 0.0;
    TVMethod method = TVMethod::closed_form;
    /// Initial quadrature panels (quadrature only).
    int panels = 0;
};

/**
 * Total variation of the ramp. Closed forms exist for tv (both kinds),
 * tv_bar_eps (both kinds) and tv_eps (linear only); asking for the smooth
 * tv_eps in closed form throws UnsupportedClosedForm.
 */
inline TVReport tv_report(HeavisideKind kind, double E, double eps, TVMethod method, int panels = 64,
                          double tol = 1e-10) {
    require(std::isfinite(E) && E > 0.0, "ramp half-width E must be > 0");
    require(std::isfinite(eps) && eps >= 0.0, "eps must be >= 0");
    TVReport r;
    r.kind = kind;
    r.E = E;
    r.eps = eps;
    r.method = method;
    if (method == TVMethod::closed_form) {
        if (kind == HeavisideKind::smooth && eps > 0.0)
            throw UnsupportedClosedForm("regularized TV of the smooth ramp has no closed form; use quadrature");
        r.tv = 1.0;
        r.tv_eps = kind == HeavisideKind::linear ? std::sqrt(1.0 + 4.0 * E * E * eps * eps) : 1.0;
        r.tv_bar_eps = 1.0 + 2.0 * E * eps;
        return r;
    }
    r.panels = panels;
    auto slope = [&](double x) { return heaviside_slope(kind, E, x); };
    r.tv = adaptive_simpson([&](double x) { return std::abs(slope(x)); }, -E, E, tol, panels);
    r.tv_eps = adaptive_simpson([&](double x) { return std::hypot(slope(x), eps); }, -E, E, tol, panels);
    r.tv_bar_eps = adaptive_simpson([&](double x) { return std::abs(slope(x)) + eps; }, -E, E, tol, panels);
    return r;
}

}  // namespace varentropy

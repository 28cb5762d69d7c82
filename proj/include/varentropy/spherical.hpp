/**
 * @file spherical.hpp
 * @brief Angular form eta = r F(theta[, phi]) of a homogeneous entropy and
 * convexity certification by sampling.
 *
 * Three criteria are provided:
 *   - 2D:  F + F'' >= 0 on the circle,
 *   - 3D:  A >= B >= 0 on the sphere, where (A +- B) / (8 r) are the two
 *          non-trivial Hessian eigenvalues,
 *   - Cartesian: minimum eigenvalue of the d x d Hessian at random points,
 *          used as an independent oracle for the first two.
 *
 * Angles follow v = r (cos t sin p, sin t sin p, cos p) in 3D and
 * v = r (cos t, sin t) in 2D, with t in [0, 2 pi) and p in (0, pi).
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/entropy.hpp"
#include "varentropy/jet.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace varentropy {

/// F and its partial derivatives at one direction; t = theta, p = phi.
struct AngularDerivatives {
    double F = 0.0;
    double Ft = 0.0;
    double Ftt = 0.0;
    double Fp = 0.0;
    double Fpp = 0.0;
    double Fpt = 0.0;
};

enum class DerivativeMode { analytic, finite_difference };

struct SphericalProfile {
    int dim = 2;
    /// F(theta, phi); phi is ignored in 2D.
    std::function<double(double, double)> F;
    /// Exact derivatives, required when mode == analytic.
    std::function<AngularDerivatives(double, double)> analytic;
    DerivativeMode mode = DerivativeMode::finite_difference;
    /// Finite-difference step; 0 selects 2 pi / (8 n_theta) at check time.
    double h_angle = 0.0;
    /// Known non-smooth angles (p-norm axes). Sampling grids never hit them
    /// and a refinement pass probes their neighbourhood.
    std::vector<double> theta_kinks;
    std::vector<double> phi_kinks;
};

/// Builds a finite-difference profile and checks 2 pi periodicity in theta.
inline SphericalProfile make_profile(int dim, std::function<double(double, double)> F, double h_angle = 0.0) {
    require(dim == 2 || dim == 3, "spherical profiles exist for dim 2 and 3");
    require(static_cast<bool>(F), "profile function is empty");
    for (int i = 0; i < 16; ++i) {
        const double t = 2.0 * pi * (i + 0.37) / 16.0;
        const double p = dim == 3 ? pi * (i + 0.5) / 16.0 : 0.5 * pi;
        const double a = F(t, p), b = F(t + 2.0 * pi, p);
        require(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)), "profile is not 2 pi periodic in theta");
    }
    SphericalProfile prof;
    prof.dim = dim;
    prof.F = std::move(F);
    prof.mode = DerivativeMode::finite_difference;
    prof.h_angle = h_angle;
    return prof;
}

// ---------------------------------------------------------------------------
// Closed forms r F(angles) for the built-in entropy families
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T closed_form_profile(const EntropySpec& spec, const T& theta, const T& phi) {
    using std::cos;
    using std::sin;
    using std::abs;
    using std::pow;
    using std::sqrt;
    using K = EntropySpec::Kind;
    const int d = spec.dim();
    std::array<T, 3> u;
    if (d == 2) {
        u = {cos(theta), sin(theta), T(0.0)};
    } else {
        const T sp = sin(phi);
        u = {cos(theta) * sp, sin(theta) * sp, cos(phi)};
    }
    switch (spec.kind()) {
        case K::linear: {
            T s(0.0);
            for (int i = 0; i < d; ++i) s = s + spec.coefficients()[i] * u[i];
            return s;
        }
        case K::quadratic_form: {
            T s(0.0);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) s = s + spec.matrix()(i, j) * (u[i] * u[j]);
            return sqrt(s);
        }
        case K::p_norm: {
            T s(0.0);
            for (int i = 0; i < d; ++i) s = s + pow(abs(u[i]), spec.p());
            return pow(s, 1.0 / spec.p());
        }
        case K::combination: {
            T s(0.0);
            for (const auto& t : spec.terms()) s = s + t.weight * closed_form_profile(t.spec, theta, phi);
            return s;
        }
        case K::regularized_2norm:
            break;
    }
    throw NotHomogeneous("regularized 2-norm is not of the form r F(angles)");
}

inline void collect_kinks(const EntropySpec& spec, bool& has_kinks) {
    if (spec.kind() == EntropySpec::Kind::p_norm && spec.p() != 2.0) has_kinks = true;
    for (const auto& t : spec.terms())
        if (t.weight != 0.0) collect_kinks(t.spec, has_kinks);
}

inline bool contains_regularized(const EntropySpec& spec) {
    if (spec.kind() == EntropySpec::Kind::regularized_2norm) return true;
    for (const auto& t : spec.terms())
        if (contains_regularized(t.spec)) return true;
    return false;
}

}  // namespace detail

/**
 * Angular profile of a homogeneous entropy with analytic derivatives.
 *
 * F is the closed form in angles (e.g. (|cos t|^p + |sin t|^p)^(1/p) for a
 * 2D p-norm); derivatives come from evaluating that closed form with
 * second-order jets, not from the Cartesian Hessian.
 */
inline SphericalProfile profile_from_spec(const EntropySpec& spec) {
    require(spec.dim() == 2 || spec.dim() == 3, "spherical profiles exist for dim 2 and 3");
    if (detail::contains_regularized(spec))
        throw NotHomogeneous("regularized 2-norm is not of the form r F(angles)");
    SphericalProfile prof;
    prof.dim = spec.dim();
    prof.mode = DerivativeMode::analytic;
    prof.F = [spec](double t, double p) { return detail::closed_form_profile<double>(spec, t, p); };
    if (spec.dim() == 2) {
        prof.analytic = [spec](double t, double) {
            const auto j = detail::closed_form_profile(spec, Jet<1>::variable(t, 0), Jet<1>(0.0));
            AngularDerivatives a;
            a.F = j.v;
            a.Ft = j.g[0];
            a.Ftt = j.h[0][0];
            return a;
        };
    } else {
        prof.analytic = [spec](double t, double p) {
            const auto j = detail::closed_form_profile(spec, Jet<2>::variable(t, 0), Jet<2>::variable(p, 1));
            AngularDerivatives a;
            a.F = j.v;
            a.Ft = j.g[0];
            a.Fp = j.g[1];
            a.Ftt = j.h[0][0];
            a.Fpp = j.h[1][1];
            a.Fpt = j.h[0][1];
            return a;
        };
    }
    bool kinks = false;
    detail::collect_kinks(spec, kinks);
    if (kinks) {
        prof.theta_kinks = {0.0, 0.5 * pi, pi, 1.5 * pi};
        if (spec.dim() == 3) prof.phi_kinks = {0.5 * pi};
    }
    return prof;
}

/// Weighted sum of profiles sharing a dimension and derivative mode.
inline SphericalProfile combine_profiles(const std::vector<std::pair<double, SphericalProfile>>& parts) {
    require(!parts.empty(), "nothing to combine");
    SphericalProfile out;
    out.dim = parts.front().second.dim;
    out.mode = parts.front().second.mode;
    out.h_angle = parts.front().second.h_angle;
    for (const auto& [w, p] : parts) {
        require(p.dim == out.dim && p.mode == out.mode, "profiles must share dimension and mode");
        out.theta_kinks.insert(out.theta_kinks.end(), p.theta_kinks.begin(), p.theta_kinks.end());
        out.phi_kinks.insert(out.phi_kinks.end(), p.phi_kinks.begin(), p.phi_kinks.end());
    }
    out.F = [parts](double t, double p) {
        double s = 0.0;
        for (const auto& [w, prof] : parts) s += w * prof.F(t, p);
        return s;
    };
    if (out.mode == DerivativeMode::analytic) {
        out.analytic = [parts](double t, double p) {
            AngularDerivatives s;
            for (const auto& [w, prof] : parts) {
                const auto a = prof.analytic(t, p);
                s.F += w * a.F;
                s.Ft += w * a.Ft;
                s.Ftt += w * a.Ftt;
                s.Fp += w * a.Fp;
                s.Fpp += w * a.Fpp;
                s.Fpt += w * a.Fpt;
            }
            return s;
        };
    }
    return out;
}

/// F and derivatives at (theta, phi): analytic, or 5-point central
/// differences with step h (mixed derivative: nested 5-point stencils).
inline AngularDerivatives angular_derivatives(const SphericalProfile& prof, double t, double p, double h) {
    if (prof.mode == DerivativeMode::analytic) {
        require(static_cast<bool>(prof.analytic), "analytic profile without derivative callable");
        return prof.analytic(t, p);
    }
    const auto& F = prof.F;
    auto d1 = [h](auto&& f, double x) {
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
    };
    auto d2 = [h](auto&& f, double x) {
        return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
    };
    auto along_t = [&](double x) { return F(x, p); };
    AngularDerivatives a;
    a.F = F(t, p);
    a.Ft = d1(along_t, t);
    a.Ftt = d2(along_t, t);
    if (prof.dim == 3) {
        auto along_p = [&](double x) { return F(t, x); };
        a.Fp = d1(along_p, p);
        a.Fpp = d2(along_p, p);
        auto dt_at = [&](double x) { return d1([&](double y) { return F(y, x); }, t); };
        a.Fpt = d1(dt_at, p);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Verdict { convex, not_convex, inconclusive };
enum class Criterion { fplusfpp_2d, a_ge_b_3d, cartesian_eigen };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::convex: return "convex";
        case Verdict::not_convex: return "not_convex";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline const char* to_string(Criterion c) {
    switch (c) {
        case Criterion::fplusfpp_2d: return "2d_FplusFpp";
        case Criterion::a_ge_b_3d: return "3d_AgeB";
        case Criterion::cartesian_eigen: return "cartesian_eigen";
    }
    return "?";
}

struct ConvexityReport {
    Verdict verdict = Verdict::inconclusive;
    /// Smallest margin, normalized by max(1, |F|).
    double min_margin = 0.0;
    /// (theta, phi) of the smallest margin; phi = pi/2 in 2D.
    std::array<double, 2> argmin_angles{0.0, 0.5 * pi};
    long samples = 0;
    Criterion criterion = Criterion::fplusfpp_2d;
    /// Samples dropped near the poles (3D) or at singular points (Cartesian).
    long skipped = 0;
    /// Samples where F or the Hessian was not a finite real number.
    long invalid = 0;
    /// More than 1% of the samples were skipped.
    bool skip_flag = false;
    /// 3D only: the two halves of min(A - B, B), each normalized.
    double min_a_minus_b = 0.0;
    double min_b = 0.0;
};

/// One evaluated sample, for CSV dumps. In 2D, A = F + F'' and B = 0.
struct ConvexitySample {
    double theta = 0.0;
    double phi = 0.5 * pi;
    double F = 0.0;
    double A = 0.0;
    double B = 0.0;
    double margin = 0.0;
    bool valid = true;
};

struct ConvexityOptions {
    double tol = default_convexity_tolerance;
    bool refine_kinks = true;
    /// When set, every evaluated sample is appended here.
    std::vector<ConvexitySample>* dump = nullptr;
};

namespace detail {

inline constexpr std::array<double, 2> kink_offsets{1e-3, 1e-4};

inline Verdict decide(double min_margin, long invalid, double tol, bool finite_difference) {
    if (invalid > 0 || min_margin < -tol) return Verdict::not_convex;
    if (finite_difference && std::abs(min_margin) < tol) return Verdict::inconclusive;
    return Verdict::convex;
}

inline double wrap_angle(double t) {
    t = std::fmod(t, 2.0 * pi);
    return t < 0.0 ? t + 2.0 * pi : t;
}

// Offsets next to a kink, pushed out of the finite-difference stencil width.
inline std::vector<double> near_kink(const std::vector<double>& kinks, double h, bool fd) {
    std::vector<double> out;
    for (double k : kinks)
        for (double off : kink_offsets) {
            const double o = fd ? std::max(off, 3.0 * h) : off;
            out.push_back(k - o);
            out.push_back(k + o);
        }
    return out;
}

// Sequential reduction: first strictly smaller margin wins, so ties go to
// the earliest sample in (theta, phi) order.
inline void reduce(const std::vector<ConvexitySample>& s, ConvexityReport& rep) {
    bool first = true;
    for (const auto& x : s) {
        if (!x.valid) {
            ++rep.invalid;
            continue;
        }
        if (first || x.margin < rep.min_margin) {
            rep.min_margin = x.margin;
            rep.argmin_angles = {x.theta, x.phi};
            first = false;
        }
    }
}

}  // namespace detail

/**
 * Samples F + F'' on theta_i = (i + 1/2) 2 pi / n_theta plus a refinement
 * pass next to known kinks. Verdict convex iff the normalized margin is
 * >= -tol everywhere (inconclusive if within tol in finite-difference mode).
 */
inline ConvexityReport check_convexity_2d(const SphericalProfile& prof, int n_theta,
                                          const ConvexityOptions& opt = {}) {
    require(prof.dim == 2, "check_convexity_2d needs a 2D profile");
    require(n_theta >= 8, "n_theta must be >= 8");
    const bool fd = prof.mode == DerivativeMode::finite_difference;
    const double h = prof.h_angle > 0.0 ? prof.h_angle : 2.0 * pi / (8.0 * n_theta);

    std::vector<double> thetas;
    for (int i = 0; i < n_theta; ++i) thetas.push_back(2.0 * pi * (i + 0.5) / n_theta);
    if (opt.refine_kinks)
        for (double t : detail::near_kink(prof.theta_kinks, h, fd)) thetas.push_back(detail::wrap_angle(t));
    std::sort(thetas.begin(), thetas.end());

    std::vector<ConvexitySample> s(thetas.size());
    parallel_for(thetas.size(), [&](std::size_t i) {
        const auto a = angular_derivatives(prof, thetas[i], 0.0, h);
        auto& x = s[i];
        x.theta = thetas[i];
        x.F = a.F;
        x.A = a.F + a.Ftt;
        x.B = 0.0;
        x.margin = x.A / std::max(1.0, std::abs(a.F));
        x.valid = std::isfinite(x.F) && std::isfinite(x.margin);
    });

    ConvexityReport rep;
    rep.criterion = Criterion::fplusfpp_2d;
    rep.samples = static_cast<long>(s.size());
    detail::reduce(s, rep);
    rep.verdict = detail::decide(rep.min_margin, rep.invalid, opt.tol, fd);
    if (opt.dump) opt.dump->insert(opt.dump->end(), s.begin(), s.end());
    return rep;
}

/// Radicand R of B = sqrt(2) csc^2 p sqrt(R) in expanded polynomial form,
/// including the F_pp terms. Clamped to 0 when negative by less than 1e-12
/// of its largest term; nullopt when more negative than that.
inline std::optional<double> radicand_expanded(const AngularDerivatives& a, double phi) {
    const double s = std::sin(phi), c = std::cos(phi);
    const double s2 = s * s;
    const double terms[] = {
        a.Fp * a.Fp * (1.0 - std::cos(4.0 * phi)),
        32.0 * a.Ft * a.Ft,
        8.0 * a.Ftt * a.Ftt,
        32.0 * (a.Fpt * a.Fpt - a.Ft * a.Ft) * s2,
        8.0 * (a.Fp * a.Ftt - 4.0 * a.Fpt * a.Ft) * std::sin(2.0 * phi),
        8.0 * s2 * s2 * a.Fpp * a.Fpp,
        -16.0 * s2 * a.Fpp * (a.Ftt + s * c * a.Fp),
    };
    double R = 0.0, scale = 1.0;
    for (double t : terms) {
        R += t;
        scale = std::max(scale, std::abs(t));
    }
    if (R < 0.0) {
        if (R < -1e-12 * scale) return std::nullopt;
        R = 0.0;
    }
    return R;
}

/**
 * A and B at one direction, so that (A -+ B) / (8 r) are the two nonzero
 * Hessian eigenvalues. With the tangent-frame matrix
 *   M11 = F + F_pp,  M22 = F + F_tt csc^2 p + F_p cot p,
 *   M12 = (F_pt - F_t cot p) / sin p,
 * A = 4 (M11 + M22) and B = 4 sqrt((M11 - M22)^2 + 4 M12^2), which equals
 * sqrt(2) csc^2 p sqrt(R) but stays accurate when R is near 0.
 */
inline std::optional<std::pair<double, double>> a_and_b(const AngularDerivatives& a, double phi) {
    const double s = std::sin(phi), cot = std::cos(phi) / s;
    const double m11 = a.F + a.Fpp;
    const double m22 = a.F + a.Ftt / (s * s) + a.Fp * cot;
    const double m12 = (a.Fpt - a.Ft * cot) / s;
    const double A = 4.0 * (m11 + m22);
    const double B = 4.0 * std::hypot(m11 - m22, 2.0 * m12);
    if (!std::isfinite(A) || !std::isfinite(B)) return std::nullopt;
    return std::make_pair(A, B);
}

/**
 * Samples the A >= B >= 0 criterion on theta_i = (i + 1/2) 2 pi / n_theta,
 * phi_j = (j + 1/2) pi / n_phi, plus refinement next to kinks. The margin
 * is min(A - B, B) / max(1, |F|). Samples with sin(phi) < 1e-6 are skipped.
 */
inline ConvexityReport check_convexity_3d(const SphericalProfile& prof, int n_theta, int n_phi,
                                          const ConvexityOptions& opt = {}) {
    require(prof.dim == 3, "check_convexity_3d needs a 3D profile");
    require(n_theta >= 8 && n_phi >= 8, "n_theta and n_phi must be >= 8");
    const bool fd = prof.mode == DerivativeMode::finite_difference;
    const double h = prof.h_angle > 0.0 ? prof.h_angle : 2.0 * pi / (8.0 * n_theta);

    std::vector<double> thetas, phis;
    for (int i = 0; i < n_theta; ++i) thetas.push_back(2.0 * pi * (i + 0.5) / n_theta);
    for (int j = 0; j < n_phi; ++j) phis.push_back(pi * (j + 0.5) / n_phi);
    std::vector<std::pair<double, double>> pts;
    for (double t : thetas)
        for (double p : phis) pts.emplace_back(t, p);
    if (opt.refine_kinks) {
        for (double t : detail::near_kink(prof.theta_kinks, h, fd))
            for (double p : phis) pts.emplace_back(detail::wrap_angle(t), p);
        for (double p : detail::near_kink(prof.phi_kinks, h, fd))
            for (double t : thetas)
                if (p > 0.0 && p < pi) pts.emplace_back(t, p);
    }
    std::sort(pts.begin(), pts.end());

    std::vector<ConvexitySample> s(pts.size());
    std::vector<char> skipped(pts.size(), 0);
    parallel_for(pts.size(), [&](std::size_t i) {
        auto& x = s[i];
        x.theta = pts[i].first;
        x.phi = pts[i].second;
        if (std::sin(x.phi) < 1e-6) {
            skipped[i] = 1;
            return;
        }
        const auto a = angular_derivatives(prof, x.theta, x.phi, h);
        x.F = a.F;
        const auto ab = a_and_b(a, x.phi);
        if (!ab || !std::isfinite(a.F)) {
            x.valid = false;
            return;
        }
        x.A = ab->first;
        x.B = ab->second;
        x.margin = std::min(x.A - x.B, x.B) / std::max(1.0, std::abs(a.F));
        x.valid = std::isfinite(x.margin);
    });

    ConvexityReport rep;
    rep.criterion = Criterion::a_ge_b_3d;
    std::vector<ConvexitySample> kept;
    kept.reserve(s.size());
    bool first = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (skipped[i]) {
            ++rep.skipped;
            continue;
        }
        kept.push_back(s[i]);
        if (!s[i].valid) continue;
        const double norm = std::max(1.0, std::abs(s[i].F));
        const double amb = (s[i].A - s[i].B) / norm, b = s[i].B / norm;
        rep.min_a_minus_b = first ? amb : std::min(rep.min_a_minus_b, amb);
        rep.min_b = first ? b : std::min(rep.min_b, b);
        first = false;
    }
    rep.samples = static_cast<long>(kept.size());
    rep.skip_flag = rep.skipped * 100 > static_cast<long>(pts.size());
    detail::reduce(kept, rep);
    rep.verdict = detail::decide(rep.min_margin, rep.invalid, opt.tol, fd);
    if (opt.dump) opt.dump->insert(opt.dump->end(), kept.begin(), kept.end());
    return rep;
}

/// Dispatches to the 2D or 3D criterion.
inline ConvexityReport check_convexity(const SphericalProfile& prof, int n_theta, int n_phi,
                                       const ConvexityOptions& opt = {}) {
    return prof.dim == 2 ? check_convexity_2d(prof, n_theta, opt) : check_convexity_3d(prof, n_theta, n_phi, opt);
}

/**
 * Independent oracle: minimum eigenvalue of the Cartesian Hessian at
 * `samples` random points g = r u (u uniform on the sphere, r uniform in
 * [0.1, 10]). The reported margin is lambda_min r / max(1, |eta(u)|), which
 * is scale-free for homogeneous entropies and comparable with the angular
 * criteria.
 */
inline ConvexityReport cartesian_eigen_check(const EntropySpec& spec, int samples, std::uint64_t seed,
                                             const ConvexityOptions& opt = {}) {
    require(samples >= 1, "samples must be >= 1");
    const int d = spec.dim();
    Rng rng(seed);
    std::vector<Vec> pts;
    pts.reserve(samples);
    for (int k = 0; k < samples; ++k) {
        const Vec u = rng.unit_vector(d);
        pts.push_back(rng.uniform(0.1, 10.0) * u);
    }

    std::vector<ConvexitySample> s(pts.size());
    std::vector<char> singular(pts.size(), 0);
    parallel_for(pts.size(), [&](std::size_t i) {
        const Vec& g = pts[i];
        const double r = g.norm();
        auto& x = s[i];
        x.theta = d >= 2 ? detail::wrap_angle(std::atan2(g[1], g[0])) : (g[0] >= 0.0 ? 0.0 : pi);
        x.phi = d == 3 ? std::acos(std::clamp(g[2] / r, -1.0, 1.0)) : 0.5 * pi;
        Mat H;
        try {
            H = hess(spec, g);
        } catch (const SingularPoint&) {
            singular[i] = 1;
            return;
        }
        x.F = eval(spec, g) / r;
        if (!H.allFinite() || !std::isfinite(x.F)) {
            x.valid = false;
            return;
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
        x.A = es.eigenvalues().minCoeff();
        x.margin = x.A * r / std::max(1.0, std::abs(x.F));
    });

    ConvexityReport rep;
    rep.criterion = Criterion::cartesian_eigen;
    std::vector<ConvexitySample> kept;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (singular[i]) ++rep.skipped;
        else kept.push_back(s[i]);
    }
    rep.samples = static_cast<long>(kept.size());
    rep.skip_flag = rep.skipped * 100 > samples;
    detail::reduce(kept, rep);
    rep.verdict = detail::decide(rep.min_margin, rep.invalid, opt.tol, false);
    if (opt.dump) opt.dump->insert(opt.dump->end(), kept.begin(), kept.end());
    return rep;
}

}  // namespace varentropy

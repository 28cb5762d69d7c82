/**
 * @file evolution.hpp
 * @brief Entropy evolution terms on gridded fields, the entropy-condition
 * residual and total-variation diagnostics.
 *
 * With g = grad phi, w = d eta/d g, K = df/dg and kappa = eta - w.g, smooth
 * solutions of d_t phi + div f = s satisfy
 *
 *   d_t eta + div q = D + S + R,
 *   q = eta df/dphi + K grad(eta),       grad(eta) = H_x w,
 *   D = K : (H_x H_eta H_x)  (<= 0 for convex eta and K <= 0),
 *   S = s' eta,
 *   R = kappa (div df/dphi - s')         (0 for homogeneous eta).
 *
 * A = (H_eta g).(H_x df/dphi) is the non-conservative transport term that
 * appears with the flux (w.g) df/dphi; it vanishes identically for
 * homogeneous eta and is reported as a diagnostic.
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/entropy.hpp"
#include "varentropy/fields.hpp"
#include "varentropy/flux.hpp"

#include <string>
#include <vector>

namespace varentropy {

struct EvolutionTerms {
    Grid grid;
    double time = 0.0;
    /// Regularization of the entropy; 0 for exact norms.
    double eps = 0.0;
    std::string entropy;
    std::string model;

    std::vector<double> eta;
    std::vector<Vec> q;
    std::vector<double> div_q;
    /// d_t eta implied by the PDE at this snapshot: w . grad(s - div f).
    std::vector<double> dt_eta;
    std::vector<double> A_term;
    /// Discrete transport defect div((w.g) f_phi) - w . grad(f_phi . g);
    /// tends to A under refinement.
    std::vector<double> A_discrete;
    std::vector<double> D_term;
    /// |K|_F |H_x|_F^2 |H_eta|_F, the size D is compared against.
    std::vector<double> D_scale;
    std::vector<double> S_term;
    std::vector<double> R_term;
    /// dt_eta + div_q - (D + S + R).
    std::vector<double> residual;
    std::vector<char> masked;
    double masked_fraction = 0.0;

    std::size_t size() const { return eta.size(); }
};

namespace detail {

inline std::vector<double> component(const VectorField& v, int a) {
    std::vector<double> out(v.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.values[i][a];
    return out;
}

// Per-point quantities shared by the exact and regularized paths.
struct PointData {
    VectorField grad_phi;
    MatrixField hess_phi;
    VectorField speed;        // df/dphi
    std::vector<Mat> K;       // df/dgrad
    std::vector<double> ds;   // s'
    ScalarField div_speed;    // div df/dphi
    ScalarField dt_phi;       // s - div f
    VectorField grad_dt_phi;
};

inline PointData point_data(const ScalarField& phi, const FluxModel& model) {
    const Grid& g = phi.grid;
    require(model.dim() == g.dim, "flux model dimension does not match the field");
    PointData p;
    p.grad_phi = gradient(phi);
    p.hess_phi = hessian(phi);
    const std::size_t n = g.size();
    p.speed = VectorField{g, std::vector<Vec>(n)};
    p.K.resize(n);
    p.ds.resize(n);
    VectorField f{g, std::vector<Vec>(n)};
    std::vector<double> src(n);
    parallel_for(n, [&](std::size_t i) {
        const double v = phi.values[i];
        const Vec& gi = p.grad_phi.values[i];
        p.speed.values[i] = model.advective_speed(v, gi);
        p.K[i] = model.diffusion_matrix(v, gi);
        p.ds[i] = model.source_derivative(v);
        f.values[i] = model.flux(v, gi);
        src[i] = model.source(v);
    });
    p.div_speed = divergence(p.speed, phi.time);
    const ScalarField div_f = divergence(f, phi.time);
    std::vector<double> dt(n);
    for (std::size_t i = 0; i < n; ++i) dt[i] = src[i] - div_f.values[i];
    p.dt_phi = ScalarField(g, std::move(dt), phi.time);
    p.grad_dt_phi = gradient(p.dt_phi);
    return p;
}

inline EvolutionTerms allocate_terms(const Grid& g, double time) {
    EvolutionTerms t;
    const std::size_t n = g.size();
    t.grid = g;
    t.time = time;
    t.eta.assign(n, 0.0);
    t.q.assign(n, Vec::Zero(g.dim));
    t.dt_eta.assign(n, 0.0);
    t.A_term.assign(n, 0.0);
    t.A_discrete.assign(n, 0.0);
    t.D_term.assign(n, 0.0);
    t.D_scale.assign(n, 0.0);
    t.S_term.assign(n, 0.0);
    t.R_term.assign(n, 0.0);
    t.residual.assign(n, 0.0);
    t.masked.assign(n, 0);
    return t;
}

// div q, A_discrete, R and the residual once the pointwise terms are set.
// `wg` holds w.g and `w` the entropy gradient per point.
inline void finish_terms(EvolutionTerms& t, const PointData& p, const std::vector<double>& wg,
                         const std::vector<Vec>& w, const std::vector<double>& kappa, bool regularized_split) {
    const Grid& g = t.grid;
    const std::size_t n = g.size();
    t.div_q = divergence(VectorField{g, t.q}, t.time).values;

    VectorField transport{g, std::vector<Vec>(n)};
    std::vector<double> fg(n);
    for (std::size_t i = 0; i < n; ++i) {
        transport.values[i] = wg[i] * p.speed.values[i];
        fg[i] = p.speed.values[i].dot(p.grad_phi.values[i]);
    }
    const auto div_transport = divergence(transport, t.time).values;
    const auto grad_fg = gradient(ScalarField(g, fg, t.time));

    std::size_t masked = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t.masked[i]) {
            ++masked;
            continue;
        }
        t.A_discrete[i] = div_transport[i] - w[i].dot(grad_fg.values[i]);
        if (!regularized_split) t.R_term[i] = kappa[i] * (p.div_speed.values[i] - p.ds[i]);
        t.dt_eta[i] = w[i].dot(p.grad_dt_phi.values[i]);
        t.residual[i] = t.dt_eta[i] + t.div_q[i] - (t.D_term[i] + t.S_term[i] + t.R_term[i]);
    }
    t.masked_fraction = n ? static_cast<double>(masked) / static_cast<double>(n) : 0.0;
}

}  // namespace detail

/**
 * Evolution terms of an arbitrary entropy on a field. Points where an exact
 * norm is not differentiable (|grad phi|_2 below the spec's cutoff) are
 * masked: q = eta df/dphi there and every other term is 0.
 */
inline EvolutionTerms compute_terms(const ScalarField& phi, const EntropySpec& spec, const FluxModel& model) {
    const Grid& g = phi.grid;
    require(spec.dim() == g.dim, "entropy dimension does not match the field");
    const auto p = detail::point_data(phi, model);
    auto t = detail::allocate_terms(g, phi.time);
    t.entropy = format_entropy(spec);
    t.model = describe(model);
    const std::size_t n = g.size();
    std::vector<double> wg(n, 0.0), kappa(n, 0.0);
    std::vector<Vec> w(n, Vec::Zero(g.dim));

    parallel_for(n, [&](std::size_t i) {
        const Vec& gi = p.grad_phi.values[i];
        const Mat& Hx = p.hess_phi.values[i];
        const Vec& fp = p.speed.values[i];
        const Mat& K = p.K[i];
        t.eta[i] = eval(spec, gi);
        Mat He;
        try {
            w[i] = grad(spec, gi);
            He = hess(spec, gi);
        } catch (const SingularPoint&) {
            t.masked[i] = 1;
            w[i].setZero();
            t.q[i] = t.eta[i] * fp;
            return;
        }
        wg[i] = w[i].dot(gi);
        kappa[i] = -homogeneity_residual(spec, gi);
        t.q[i] = t.eta[i] * fp + K * (Hx * w[i]);
        t.A_term[i] = (He * gi).dot(Hx * fp);
        const Mat HHH = Hx * He * Hx;
        t.D_term[i] = (K.array() * HHH.array()).sum();
        t.D_scale[i] = K.norm() * Hx.squaredNorm() * He.norm();
        t.S_term[i] = p.ds[i] * t.eta[i];
    });
    if (spec.kind() == EntropySpec::Kind::regularized_2norm) t.eps = spec.eps();
    detail::finish_terms(t, p, wg, w, kappa, false);
    return t;
}

/// g1 = eps^2 / ||g||_{eps,2}, the weight of the regularization remainder.
/// Written as eps (eps / n) so that g1(0) = eps exactly.
inline double g1_profile(double gx, double eps) { return eps * (eps / std::hypot(gx, eps)); }

/// g2 = eps^2 / ||g||_{eps,2}^3; g2(0) = 1/eps exactly.
inline double g2_profile(double gx, double eps) {
    const double n = std::hypot(gx, eps);
    const double r = eps / n;
    return r * r / n;
}

inline double g2_integral(double L, double eps) { return 2.0 * L / std::sqrt(L * L + eps * eps); }

/**
 * Terms for eta = ||grad phi||_{eps,2} in closed form:
 *   q_eps = eta df/dphi + K H_x g / eta,
 *   D_eps = ((|g|^2 I - g g^T) H_x) : (K H_x) / eta^3,
 *   S_eps = s' eta,
 *   R_eps = (eps^2 / eta) (div df/dphi + H_x : (K H_x) / eta^2 - s').
 * D_eps + R_eps equals D + R of compute_terms with the same entropy.
 */
inline EvolutionTerms compute_regularized_terms(const ScalarField& phi, double eps, const FluxModel& model) {
    require(std::isfinite(eps) && eps > 0.0, "regularization eps must be > 0");
    const Grid& g = phi.grid;
    const auto p = detail::point_data(phi, model);
    auto t = detail::allocate_terms(g, phi.time);
    t.eps = eps;
    t.entropy = format_entropy(EntropySpec::regularized_2norm(eps, g.dim));
    t.model = describe(model);
    const std::size_t n = g.size();
    std::vector<double> wg(n), kappa(n);
    std::vector<Vec> w(n);
    const Mat I = Mat::Identity(g.dim, g.dim);

    parallel_for(n, [&](std::size_t i) {
        const Vec& gi = p.grad_phi.values[i];
        const Mat& Hx = p.hess_phi.values[i];
        const Vec& fp = p.speed.values[i];
        const Mat& K = p.K[i];
        const double g2 = gi.squaredNorm();
        const double e = std::sqrt(g2 + eps * eps);
        const double e3 = e * e * e;
        t.eta[i] = e;
        w[i] = gi / e;
        wg[i] = g2 / e;
        kappa[i] = eps * eps / e;
        t.q[i] = e * fp + K * (Hx * gi) / e;
        t.A_term[i] = eps * eps / e3 * gi.dot(Hx * fp);
        const Mat KH = K * Hx;
        const Mat P = (g2 * I - gi * gi.transpose()) * Hx;
        t.D_term[i] = (P.array() * KH.array()).sum() / e3;
        const double HKH = (Hx.array() * KH.array()).sum();
        t.D_scale[i] = K.norm() * Hx.squaredNorm() * (I - gi * gi.transpose() / (e * e)).norm() / e;
        t.S_term[i] = p.ds[i] * e;
        t.R_term[i] = eps * eps / e * (p.div_speed.values[i] + HKH / (e * e) - p.ds[i]);
    });
    detail::finish_terms(t, p, wg, w, kappa, true);
    return t;
}

/**
 * Entropy-condition residual between two snapshots:
 *   r = (eta(next) - eta(prev)) / dt + div q(mid)  [- (D + S)(mid) if augmented]
 * with mid the average field. Positive values mark entropy production.
 */
inline ScalarField ve_condition_residual(const ScalarField& prev, const ScalarField& next, const EntropySpec& spec,
                                         const FluxModel& model, bool augmented = false) {
    require(prev.grid == next.grid, "snapshots must share one grid");
    require(next.time > prev.time, "next snapshot must be later than the previous one");
    const double dt = next.time - prev.time;
    std::vector<double> mid_v(prev.values.size());
    for (std::size_t i = 0; i < mid_v.size(); ++i) mid_v[i] = 0.5 * (prev.values[i] + next.values[i]);
    const ScalarField mid(prev.grid, std::move(mid_v), 0.5 * (prev.time + next.time));
    const auto terms = compute_terms(mid, spec, model);
    const auto gp = gradient(prev), gn = gradient(next);
    std::vector<double> r(mid.values.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = (eval(spec, gn.values[i]) - eval(spec, gp.values[i])) / dt + terms.div_q[i];
        if (augmented) r[i] -= terms.D_term[i] + terms.S_term[i];
    }
    return {prev.grid, std::move(r), mid.time};
}

/// Midpoint-rule cell weights: 1, or 1/2 per outflow axis in end cells.
inline std::vector<double> quadrature_weights(const Grid& g) {
    std::vector<double> w(g.size(), g.cell_volume());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto ijk = g.unflatten(i);
        for (int a = 0; a < g.dim; ++a)
            if (g.bc[a] == Boundary::outflow_extrapolate && (ijk[a] == 0 || ijk[a] == g.n[a] - 1)) w[i] *= 0.5;
    }
    return w;
}

/**
 * Integral of eta(grad phi) by the midpoint rule with pairwise summation in
 * row-major order. For exact norms, points with |grad phi|_2 below the
 * singularity cutoff are excluded.
 */
inline double total_variation(const ScalarField& phi, const EntropySpec& spec) {
    require(spec.dim() == phi.grid.dim, "entropy dimension does not match the field");
    const auto gphi = gradient(phi);
    const auto w = quadrature_weights(phi.grid);
    const bool exact = spec.homogeneous();
    std::vector<double> terms(w.size());
    parallel_for(w.size(), [&](std::size_t i) {
        const Vec& gi = gphi.values[i];
        terms[i] = exact && gi.norm() < spec.singularity_cutoff() ? 0.0 : eval(spec, gi) * w[i];
    });
    return pairwise_sum(terms);
}

/**
 * Grid total variation: sum over axes a and neighbour pairs along a of
 * |phi_{i+1} - phi_i| h^d / h_a. Periodic axes include the wrap-around pair.
 */
inline double grid_total_variation(const ScalarField& phi) {
    const Grid& g = phi.grid;
    std::vector<double> terms;
    terms.reserve(g.size() * g.dim);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto ijk = g.unflatten(i);
        for (int a = 0; a < g.dim; ++a) {
            const bool last = ijk[a] == g.n[a] - 1;
            if (last && g.bc[a] != Boundary::periodic) continue;
            const std::size_t j = last ? i - static_cast<std::size_t>(g.n[a] - 1) * g.stride(a) : i + g.stride(a);
            terms.push_back(std::abs(phi.values[j] - phi.values[i]) * g.cell_volume() / g.h[a]);
        }
    }
    return pairwise_sum(terms);
}

struct TvdStep {
    double time = 0.0;
    double tv = 0.0;
    /// TV did not grow from the previous snapshot by more than 1e-10 TV(0).
    bool decayed = true;
};

inline std::vector<TvdStep> discrete_tvd_check(const std::vector<ScalarField>& series, const EntropySpec& spec) {
    require(series.size() >= 2, "discrete_tvd_check needs at least two snapshots");
    for (const auto& f : series) require(f.grid == series.front().grid, "snapshots must share one grid");
    std::vector<TvdStep> out;
    for (const auto& f : series) out.push_back({f.time, total_variation(f, spec), true});
    const double tol = 1e-10 * out.front().tv;
    for (std::size_t k = 1; k < out.size(); ++k) out[k].decayed = out[k].tv <= out[k - 1].tv + tol;
    return out;
}

}  // namespace varentropy

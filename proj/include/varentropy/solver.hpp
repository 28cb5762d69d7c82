/**
 * @file solver.hpp
 * @brief Explicit solver for d_t phi + div f(phi, grad phi) = s(phi) + eps_v lap phi.
 *
 * Two-stage Heun time stepping with
 *   dt = cfl min(h / max|df/dphi|, h^2 / (2 d (k + eps_v)))
 * recomputed every step. Space discretization:
 *   central: central differences of the pointwise flux, 3-point Laplacian;
 *   tvd:     MUSCL minmod reconstruction with the Rusanov flux for the
 *            advective part (built-in models only), 3-point Laplacian for
 *            k + eps_v.
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/fields.hpp"
#include "varentropy/flux.hpp"
#include "varentropy/heaviside.hpp"

#include <limits>
#include <string>
#include <vector>

namespace varentropy {

enum class Scheme { central, tvd };

inline const char* to_string(Scheme s) { return s == Scheme::central ? "central" : "tvd"; }

inline Scheme parse_scheme(std::string_view s) {
    if (s == "central") return Scheme::central;
    if (s == "tvd") return Scheme::tvd;
    throw ContractViolation("unknown scheme '" + std::string(s) + "'");
}

struct InitialCondition {
    enum class Kind { sine, gaussian, linear_heaviside, smooth_heaviside, custom };
    Kind kind = Kind::sine;
    /// sine: amplitude prod sin(2 pi (x - lo) / L); gaussian: peak value.
    double amplitude = 1.0;
    /// Gaussian standard deviation.
    double width = 0.1;
    /// Gaussian center; empty means the domain center.
    std::vector<double> center;
    /// Heaviside ramp half-width.
    double E = 0.1;
    /// Cell values for custom data, row-major.
    std::vector<double> samples;
};

struct SolverConfig {
    FluxModel model;
    /// eps_v >= 0.
    double viscosity = 0.0;
    double cfl = 0.4;
    double t_end = 1.0;
    /// Store a snapshot every this many steps; 0 keeps only the first and last.
    int snapshot_every = 0;
    InitialCondition initial;
    Grid grid;
    Scheme scheme = Scheme::central;
    long max_steps = 10'000'000;
};

/// Non-finite values appeared; carries the snapshots taken so far.
class RunAborted : public Error {
public:
    RunAborted(std::string what, std::vector<ScalarField> snapshots, long last_stable_step)
        : Error(std::move(what)), snapshots_(std::move(snapshots)), last_stable_step_(last_stable_step) {}
    const std::vector<ScalarField>& snapshots() const noexcept { return snapshots_; }
    long last_stable_step() const noexcept { return last_stable_step_; }

private:
    std::vector<ScalarField> snapshots_;
    long last_stable_step_;
};

/// Linear or smooth Heaviside ramp sampled at cell centers of a 1D grid
/// that extends beyond [-E, E].
inline ScalarField heaviside_initials(HeavisideKind kind, double E, const Grid& grid) {
    require(std::isfinite(E) && E > 0.0, "ramp half-width E must be > 0");
    require(grid.dim == 1, "Heaviside initial data needs a 1D grid");
    require(grid.lo[0] < -E && grid.lo[0] + grid.length(0) > E, "grid must extend beyond [-E, E]");
    return sample(grid, [&](const Vec& x) { return heaviside_profile(kind, E, x[0]); });
}

inline ScalarField initial_field(const InitialCondition& ic, const Grid& g) {
    using K = InitialCondition::Kind;
    switch (ic.kind) {
        case K::sine:
            return sample(g, [&](const Vec& x) {
                double v = ic.amplitude;
                for (int a = 0; a < g.dim; ++a) v *= std::sin(2.0 * pi * (x[a] - g.lo[a]) / g.length(a));
                return v;
            });
        case K::gaussian: {
            require(ic.width > 0.0, "gaussian width must be > 0");
            Vec c(g.dim);
            for (int a = 0; a < g.dim; ++a)
                c[a] = ic.center.empty() ? g.lo[a] + 0.5 * g.length(a) : ic.center.at(a);
            return sample(g, [&](const Vec& x) {
                return ic.amplitude * std::exp(-(x - c).squaredNorm() / (2.0 * ic.width * ic.width));
            });
        }
        case K::linear_heaviside: return heaviside_initials(HeavisideKind::linear, ic.E, g);
        case K::smooth_heaviside: return heaviside_initials(HeavisideKind::smooth, ic.E, g);
        case K::custom:
            require(ic.samples.size() == g.size(), "custom initial data size does not match the grid");
            return {g, ic.samples, 0.0};
    }
    return ScalarField::zeros(g);
}

namespace detail {

inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

// Advective flux along axis a for built-in models, and its derivative.
inline double axis_flux(const FluxModel& m, double phi, int a) {
    const double c = m.velocity()[a];
    return m.kind() == FluxModel::Kind::burgers ? 0.5 * phi * phi * c : c * phi;
}
inline double axis_speed(const FluxModel& m, double phi, int a) {
    const double c = m.velocity()[a];
    return m.kind() == FluxModel::Kind::burgers ? phi * c : c;
}

// -d/dx_a of the advective flux by MUSCL-minmod + Rusanov. Outflow ends use
// zero-gradient ghost cells.
inline void tvd_advection(const FluxModel& m, const Grid& g, const std::vector<double>& u, int a,
                          std::vector<double>& rhs) {
    const std::size_t s = g.stride(a);
    const int n = g.n[a];
    const bool periodic = g.bc[a] == Boundary::periodic;
    const double inv_h = 1.0 / g.h[a];
    const std::size_t lines = u.size() / n;
    parallel_for(lines, [&](std::size_t line) {
        // Base index of this line: all indices with axis-a coordinate 0.
        const std::size_t outer = line / s, inner = line % s;
        const std::size_t base = outer * s * n + inner;
        auto at = [&](int i) {
            if (periodic) i = ((i % n) + n) % n;
            else i = std::clamp(i, 0, n - 1);
            return u[base + static_cast<std::size_t>(i) * s];
        };
        auto slope = [&](int i) { return minmod(at(i) - at(i - 1), at(i + 1) - at(i)); };
        std::vector<double> face(n + 1);
        for (int f = 0; f <= n; ++f) {
            // Face between cells f-1 and f.
            const double left = at(f - 1) + 0.5 * slope(f - 1);
            const double right = at(f) - 0.5 * slope(f);
            const double alpha = std::max(std::abs(axis_speed(m, left, a)), std::abs(axis_speed(m, right, a)));
            face[f] = 0.5 * (axis_flux(m, left, a) + axis_flux(m, right, a)) - 0.5 * alpha * (right - left);
        }
        for (int i = 0; i < n; ++i) rhs[base + static_cast<std::size_t>(i) * s] -= (face[i + 1] - face[i]) * inv_h;
    });
}

}  // namespace detail

/// Semi-discrete right-hand side L(phi).
inline std::vector<double> solver_rhs(const SolverConfig& cfg, const ScalarField& phi) {
    const Grid& g = phi.grid;
    const FluxModel& m = cfg.model;
    const std::size_t n = g.size();
    std::vector<double> rhs(n, 0.0);
    double nu = cfg.viscosity;
    if (m.builtin()) {
        nu += m.diffusivity();
        if (cfg.scheme == Scheme::tvd) {
            for (int a = 0; a < g.dim; ++a) detail::tvd_advection(m, g, phi.values, a, rhs);
        } else {
            for (int a = 0; a < g.dim; ++a) {
                std::vector<double> fa(n);
                for (std::size_t i = 0; i < n; ++i) fa[i] = detail::axis_flux(m, phi.values[i], a);
                const auto d = diff(g, fa, a);
                for (std::size_t i = 0; i < n; ++i) rhs[i] -= d[i];
            }
        }
    } else {
        require(cfg.scheme == Scheme::central, "the tvd scheme supports built-in flux models only");
        const auto gp = gradient(phi);
        VectorField f{g, std::vector<Vec>(n)};
        parallel_for(n, [&](std::size_t i) { f.values[i] = m.flux(phi.values[i], gp.values[i]); });
        const auto d = divergence(f);
        for (std::size_t i = 0; i < n; ++i) rhs[i] -= d.values[i];
    }
    if (nu > 0.0) {
        const auto lap = laplacian(phi);
        for (std::size_t i = 0; i < n; ++i) rhs[i] += nu * lap.values[i];
    }
    if (m.source_kind() != FluxModel::SourceKind::none)
        for (std::size_t i = 0; i < n; ++i) rhs[i] += m.source(phi.values[i]);
    return rhs;
}

/// Stable step cfl min(h / max|df/dphi|, h^2 / (2 d (k + eps_v))).
inline double stable_dt(const SolverConfig& cfg, const ScalarField& phi) {
    const Grid& g = phi.grid;
    const auto gp = gradient(phi);
    double adv = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec sp = cfg.model.advective_speed(phi.values[i], gp.values[i]);
        for (int a = 0; a < g.dim; ++a)
            if (sp[a] != 0.0) adv = std::min(adv, g.h[a] / std::abs(sp[a]));
    }
    double hmin = g.h[0];
    for (int a = 1; a < g.dim; ++a) hmin = std::min(hmin, g.h[a]);
    const double nu = cfg.viscosity + cfg.model.diffusivity();
    const double diffusive = nu > 0.0 ? hmin * hmin / (2.0 * g.dim * nu) : std::numeric_limits<double>::infinity();
    const double bound = std::min(adv, diffusive);
    return cfg.cfl * (std::isfinite(bound) ? bound : hmin);
}

inline void validate(const SolverConfig& cfg) {
    cfg.grid.validate();
    require(cfg.model.dim() == cfg.grid.dim, "flux model dimension does not match the grid");
    require(std::isfinite(cfg.viscosity) && cfg.viscosity >= 0.0, "viscosity must be >= 0");
    require(cfg.cfl > 0.0 && cfg.cfl < 1.0, "cfl must lie in (0, 1)");
    require(std::isfinite(cfg.t_end) && cfg.t_end >= 0.0, "t_end must be >= 0");
    require(cfg.snapshot_every >= 0, "snapshot_every must be >= 0");
    require(cfg.scheme == Scheme::central || cfg.model.builtin(), "the tvd scheme supports built-in flux models only");
}

/// Snapshots at t = 0, every `snapshot_every` steps and at t_end, starting
/// from the given field.
inline std::vector<ScalarField> run_from(const SolverConfig& cfg, ScalarField phi) {
    validate(cfg);
    require(phi.grid == cfg.grid, "initial field grid does not match the config");
    std::vector<ScalarField> snaps{phi};
    long step = 0;
    while (phi.time < cfg.t_end) {
        require(step < cfg.max_steps, "step limit reached before t_end");
        double dt = stable_dt(cfg, phi);
        const double remaining = cfg.t_end - phi.time;
        // Avoid a sliver step at the end.
        if (dt >= remaining * (1.0 - 1e-12)) dt = remaining;
        const auto k1 = solver_rhs(cfg, phi);
        ScalarField stage = phi;
        for (std::size_t i = 0; i < k1.size(); ++i) stage.values[i] += dt * k1[i];
        stage.time = phi.time + dt;
        const auto k2 = solver_rhs(cfg, stage);
        ScalarField next = phi;
        for (std::size_t i = 0; i < k1.size(); ++i) next.values[i] += 0.5 * dt * (k1[i] + k2[i]);
        next.time = dt == remaining ? cfg.t_end : phi.time + dt;
        bool finite = true;
        for (double v : next.values) finite = finite && std::isfinite(v);
        if (!finite)
            throw RunAborted("non-finite values at step " + std::to_string(step + 1) + ", t = " +
                                 std::to_string(next.time),
                             std::move(snaps), step);
        phi = std::move(next);
        ++step;
        const bool last = phi.time >= cfg.t_end;
        if (last || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0)) snaps.push_back(phi);
    }
    return snaps;
}

inline std::vector<ScalarField> run(const SolverConfig& cfg) {
    validate(cfg);
    return run_from(cfg, initial_field(cfg.initial, cfg.grid));
}

}  // namespace varentropy

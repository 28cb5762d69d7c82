/**
 * @file fields.hpp
 * @brief Uniform structured grids, gridded fields and second-order
 * finite-difference operators.
 *
 * Values live at cell centers x_i = lo + (i + 1/2) h, stored row-major with
 * the last axis fastest. Periodic axes wrap; outflow axes use second-order
 * one-sided stencils in the first and last cells.
 */
#pragma once

#include "varentropy/core.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace varentropy {

enum class Boundary { periodic, outflow_extrapolate };

inline const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "outflow"; }

inline Boundary parse_boundary(std::string_view s) {
    if (s == "periodic") return Boundary::periodic;
    if (s == "outflow" || s == "outflow_extrapolate") return Boundary::outflow_extrapolate;
    throw ContractViolation("unknown boundary '" + std::string(s) + "'");
}

struct Grid {
    int dim = 1;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> h{1.0, 1.0, 1.0};
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<Boundary, 3> bc{Boundary::periodic, Boundary::periodic, Boundary::periodic};

    /// Grid of n[a] cells spanning [lo[a], hi[a]] on each of the first dim axes.
    static Grid make(int dim, std::array<int, 3> n, std::array<double, 3> lo, std::array<double, 3> hi,
                     Boundary bc = Boundary::periodic) {
        Grid g;
        g.dim = dim;
        for (int a = 0; a < dim; ++a) {
            g.n[a] = n[a];
            g.lo[a] = lo[a];
            g.h[a] = (hi[a] - lo[a]) / n[a];
            g.bc[a] = bc;
        }
        g.validate();
        return g;
    }

    /// Same cell count and extent on every axis.
    static Grid cube(int dim, int n, double lo, double hi, Boundary bc = Boundary::periodic) {
        return make(dim, {n, n, n}, {lo, lo, lo}, {hi, hi, hi}, bc);
    }

    void validate() const {
        require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
        for (int a = 0; a < dim; ++a) {
            require(n[a] >= 4, "grid needs at least 4 cells per axis");
            require(std::isfinite(h[a]) && h[a] > 0.0, "grid spacing must be positive");
            require(std::isfinite(lo[a]), "grid origin must be finite");
        }
        for (int a = dim; a < 3; ++a) require(n[a] == 1, "unused grid axes must have one cell");
    }

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= h[a];
        return v;
    }
    double length(int a) const { return n[a] * h[a]; }
    std::size_t stride(int a) const {
        std::size_t s = 1;
        for (int b = dim - 1; b > a; --b) s *= n[b];
        return s;
    }
    std::size_t index(int i, int j = 0, int k = 0) const {
        const std::array<int, 3> ijk{i, j, k};
        std::size_t idx = 0;
        for (int a = 0; a < dim; ++a) idx = idx * n[a] + ijk[a];
        return idx;
    }
    std::array<int, 3> unflatten(std::size_t idx) const {
        std::array<int, 3> ijk{0, 0, 0};
        for (int a = dim - 1; a >= 0; --a) {
            ijk[a] = static_cast<int>(idx % n[a]);
            idx /= n[a];
        }
        return ijk;
    }
    double coord(int a, int i) const { return lo[a] + (i + 0.5) * h[a]; }
    Vec center(std::size_t idx) const {
        const auto ijk = unflatten(idx);
        Vec x(dim);
        for (int a = 0; a < dim; ++a) x[a] = coord(a, ijk[a]);
        return x;
    }

    bool operator==(const Grid& o) const {
        if (dim != o.dim) return false;
        for (int a = 0; a < 3; ++a)
            if (n[a] != o.n[a] || h[a] != o.h[a] || lo[a] != o.lo[a] || (a < dim && bc[a] != o.bc[a])) return false;
        return true;
    }
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;

    ScalarField() = default;
    ScalarField(Grid g, std::vector<double> v, double t = 0.0) : grid(g), values(std::move(v)), time(t) {
        grid.validate();
        require(values.size() == grid.size(), "field size does not match grid");
    }
    static ScalarField zeros(const Grid& g, double t = 0.0) { return {g, std::vector<double>(g.size(), 0.0), t}; }

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

/// Per-point vector (d-vector) or matrix (d x d) data on a grid.
template <class T>
struct PointField {
    Grid grid;
    std::vector<T> values;
    const T& operator[](std::size_t i) const { return values[i]; }
    T& operator[](std::size_t i) { return values[i]; }
};
using VectorField = PointField<Vec>;
using MatrixField = PointField<Mat>;

/// Samples f at every cell center.
inline ScalarField sample(const Grid& g, const std::function<double(const Vec&)>& f, double time = 0.0) {
    std::vector<double> v(g.size());
    parallel_for(v.size(), [&](std::size_t i) { v[i] = f(g.center(i)); });
    return {g, std::move(v), time};
}

inline VectorField sample_vector(const Grid& g, const std::function<Vec(const Vec&)>& f) {
    VectorField out{g, std::vector<Vec>(g.size())};
    parallel_for(g.size(), [&](std::size_t i) { out.values[i] = f(g.center(i)); });
    return out;
}

// ---------------------------------------------------------------------------
// One-axis difference operators on raw arrays
// ---------------------------------------------------------------------------

/// First derivative along axis a: central (f[i+1] - f[i-1]) / 2h; on outflow
/// axes the end cells use (-3, 4, -1) / 2h one-sided stencils.
inline std::vector<double> diff(const Grid& g, const std::vector<double>& f, int a) {
    std::vector<double> out(f.size());
    const std::size_t s = g.stride(a);
    const int n = g.n[a];
    const double inv = 1.0 / (2.0 * g.h[a]);
    const bool periodic = g.bc[a] == Boundary::periodic;
    parallel_for(f.size(), [&](std::size_t idx) {
        const int i = static_cast<int>((idx / s) % n);
        const std::size_t base = idx - static_cast<std::size_t>(i) * s;
        auto at = [&](int k) { return f[base + static_cast<std::size_t>(k) * s]; };
        if (i > 0 && i < n - 1) {
            out[idx] = (at(i + 1) - at(i - 1)) * inv;
        } else if (periodic) {
            out[idx] = (at((i + 1) % n) - at((i - 1 + n) % n)) * inv;
        } else if (i == 0) {
            out[idx] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv;
        } else {
            out[idx] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv;
        }
    });
    return out;
}

/// Second derivative along axis a: (1, -2, 1) / h^2; on outflow axes the end
/// cells use (2, -5, 4, -1) / h^2.
inline std::vector<double> diff2(const Grid& g, const std::vector<double>& f, int a) {
    std::vector<double> out(f.size());
    const std::size_t s = g.stride(a);
    const int n = g.n[a];
    const double inv = 1.0 / (g.h[a] * g.h[a]);
    const bool periodic = g.bc[a] == Boundary::periodic;
    parallel_for(f.size(), [&](std::size_t idx) {
        const int i = static_cast<int>((idx / s) % n);
        const std::size_t base = idx - static_cast<std::size_t>(i) * s;
        auto at = [&](int k) { return f[base + static_cast<std::size_t>(k) * s]; };
        if (i > 0 && i < n - 1) {
            out[idx] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) * inv;
        } else if (periodic) {
            out[idx] = (at((i + 1) % n) - 2.0 * at(i) + at((i - 1 + n) % n)) * inv;
        } else if (i == 0) {
            out[idx] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv;
        } else {
            out[idx] = (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * inv;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Field operators
// ---------------------------------------------------------------------------

inline VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    VectorField out{g, std::vector<Vec>(g.size(), Vec::Zero(g.dim))};
    for (int a = 0; a < g.dim; ++a) {
        const auto d = diff(g, f.values, a);
        for (std::size_t i = 0; i < d.size(); ++i) out.values[i][a] = d[i];
    }
    return out;
}

/// Hessian with 3-point diagonal entries and nested central differences for
/// the mixed entries, symmetrized.
inline MatrixField hessian(const ScalarField& f) {
    const Grid& g = f.grid;
    MatrixField out{g, std::vector<Mat>(g.size(), Mat::Zero(g.dim, g.dim))};
    std::vector<std::vector<double>> first(g.dim);
    for (int a = 0; a < g.dim; ++a) {
        first[a] = diff(g, f.values, a);
        const auto d2 = diff2(g, f.values, a);
        for (std::size_t i = 0; i < d2.size(); ++i) out.values[i](a, a) = d2[i];
    }
    for (int a = 0; a < g.dim; ++a)
        for (int b = a + 1; b < g.dim; ++b) {
            const auto ab = diff(g, first[b], a);
            const auto ba = diff(g, first[a], b);
            for (std::size_t i = 0; i < ab.size(); ++i) out.values[i](a, b) = out.values[i](b, a) = 0.5 * (ab[i] + ba[i]);
        }
    return out;
}

inline ScalarField divergence(const VectorField& v, double time = 0.0) {
    const Grid& g = v.grid;
    std::vector<double> out(g.size(), 0.0), comp(g.size());
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = v.values[i][a];
        const auto d = diff(g, comp, a);
        for (std::size_t i = 0; i < d.size(); ++i) out[i] += d[i];
    }
    return {g, std::move(out), time};
}

inline ScalarField laplacian(const ScalarField& f) {
    const Grid& g = f.grid;
    std::vector<double> out(g.size(), 0.0);
    for (int a = 0; a < g.dim; ++a) {
        const auto d = diff2(g, f.values, a);
        for (std::size_t i = 0; i < d.size(); ++i) out[i] += d[i];
    }
    return {g, std::move(out), f.time};
}

/// Integral sum(v) h^d with pairwise summation in row-major order.
inline double integrate(const ScalarField& f) { return pairwise_sum(f.values) * f.grid.cell_volume(); }

// ---------------------------------------------------------------------------
// CSV field files
//   # varentropy-field v1;lo=x0[,y0[,z0]];bc=periodic|outflow[,...]   (optional)
//   # dim,n1[,n2[,n3]],h1[,h2[,h3]],time
//   one value per line, row-major, %.17g
// ---------------------------------------------------------------------------

inline constexpr std::string_view field_schema = "varentropy-field v1";

namespace detail {

inline std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double read_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError("field file: cannot parse number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t p = s.find(sep, start);
        out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

}  // namespace detail

inline void write_field(std::ostream& os, const ScalarField& f) {
    const Grid& g = f.grid;
    os << "# " << field_schema << ";lo=";
    for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << detail::g17(g.lo[a]);
    os << ";bc=";
    for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << to_string(g.bc[a]);
    os << "\n# " << g.dim;
    for (int a = 0; a < g.dim; ++a) os << ',' << g.n[a];
    for (int a = 0; a < g.dim; ++a) os << ',' << detail::g17(g.h[a]);
    os << ',' << detail::g17(f.time) << '\n';
    for (double v : f.values) os << detail::g17(v) << '\n';
}

/// Reads a field file. Without the schema line the grid starts at 0 and is
/// periodic; a schema line with another version is rejected.
inline ScalarField read_field(std::istream& is) {
    std::string line;
    Grid g;
    bool have_schema = false, have_header = false;
    std::vector<double> lo, values;
    std::vector<Boundary> bcs;
    double time = 0.0;
    while (std::getline(is, line)) {
        std::string_view l(line);
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (l.empty()) continue;
        if (l.front() == '#') {
            l.remove_prefix(1);
            while (!l.empty() && l.front() == ' ') l.remove_prefix(1);
            if (l.rfind("varentropy-field", 0) == 0) {
                const auto parts = detail::split(l, ';');
                if (parts[0] != field_schema)
                    throw DataError("unsupported field schema '" + std::string(parts[0]) + "'");
                for (std::size_t k = 1; k < parts.size(); ++k) {
                    const auto kv = parts[k];
                    if (kv.rfind("lo=", 0) == 0)
                        for (auto x : detail::split(kv.substr(3), ',')) lo.push_back(detail::read_double(x));
                    else if (kv.rfind("bc=", 0) == 0)
                        for (auto x : detail::split(kv.substr(3), ',')) bcs.push_back(parse_boundary(x));
                }
                have_schema = true;
            } else if (!have_header) {
                const auto parts = detail::split(l, ',');
                const double dd = detail::read_double(parts[0]);
                const int d = static_cast<int>(dd);
                if (d < 1 || d > 3 || d != dd || parts.size() != static_cast<std::size_t>(2 * d + 2))
                    throw DataError("field file: malformed header");
                g.dim = d;
                for (int a = 0; a < d; ++a) {
                    const double na = detail::read_double(parts[1 + a]);
                    if (na != std::floor(na) || na < 1) throw DataError("field file: bad cell count");
                    g.n[a] = static_cast<int>(na);
                    g.h[a] = detail::read_double(parts[1 + d + a]);
                }
                time = detail::read_double(parts[2 * d + 1]);
                have_header = true;
            }
            continue;
        }
        if (!have_header) throw DataError("field file: data before header");
        values.push_back(detail::read_double(l));
    }
    if (!have_header) throw DataError("field file: missing header");
    if (have_schema) {
        if (!lo.empty() && lo.size() != static_cast<std::size_t>(g.dim)) throw DataError("field file: lo size");
        if (!bcs.empty() && bcs.size() != static_cast<std::size_t>(g.dim)) throw DataError("field file: bc size");
    }
    for (int a = 0; a < g.dim; ++a) {
        if (!lo.empty()) g.lo[a] = lo[a];
        if (!bcs.empty()) g.bc[a] = bcs[a];
    }
    try {
        g.validate();
    } catch (const ContractViolation& e) {
        throw DataError(std::string("field file: ") + e.what());
    }
    if (values.size() != g.size())
        throw DataError("field file: expected " + std::to_string(g.size()) + " values, got " +
                        std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("field file: non-finite value");
    return {g, std::move(values), time};
}

inline std::string field_to_string(const ScalarField& f) {
    std::ostringstream os;
    write_field(os, f);
    return os.str();
}

inline ScalarField field_from_string(const std::string& s) {
    std::istringstream is(s);
    return read_field(is);
}

}  // namespace varentropy

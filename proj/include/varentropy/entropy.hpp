/**
 * @file entropy.hpp
 * @brief Candidate variation entropies eta(grad phi) with exact first and
 * second derivatives.
 *
 * Supported families: linear a.g, quadratic forms sqrt(g^T A g), p-norms,
 * the regularized 2-norm sqrt(g.g + eps^2), and non-negative combinations of
 * these. All are positively 1-homogeneous and convex except the regularized
 * norm, which is convex but only homogeneous up to an O(eps^2) defect.
 */
#pragma once

#include "varentropy/core.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varentropy {

class EntropySpec {
public:
    enum class Kind { linear, quadratic_form, p_norm, regularized_2norm, combination };

    struct Term;

    /// eta(g) = a . g
    static EntropySpec linear(Vec a);
    /// eta(g) = sqrt(g^T A g); A must be symmetric positive semi-definite.
    static EntropySpec quadratic_form(Mat A);
    /// eta(g) = ||g||_p with p >= 1.
    static EntropySpec p_norm(double p, int dim);
    /// eta(g) = ||g||_{eps,2} = sqrt(g.g + eps^2), eps > 0.
    static EntropySpec regularized_2norm(double eps, int dim);
    /// eta = sum_k w_k eta_k with w_k >= 0 and a common dimension.
    static EntropySpec combination(std::vector<Term> terms);

    /// Skip the convexity validation (p < 1 or indefinite A) so that the
    /// certification routines can be shown failing cases.
    static EntropySpec unchecked_p_norm(double p, int dim);
    static EntropySpec unchecked_quadratic_form(Mat A);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    const Vec& coefficients() const noexcept { return a_; }
    const Mat& matrix() const noexcept { return A_; }
    double p() const noexcept { return p_; }
    double eps() const noexcept { return eps_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    bool validated() const noexcept { return validated_; }

    /// Gradient 2-norm below which exact norms report SingularPoint.
    double singularity_cutoff() const noexcept { return cutoff_; }
    EntropySpec with_singularity_cutoff(double cutoff) const;

    /// True when eta(alpha g) = alpha eta(g) holds exactly (all kinds but the
    /// regularized norm, recursively).
    bool homogeneous() const;

private:
    EntropySpec() = default;

    Kind kind_ = Kind::linear;
    int dim_ = 0;
    Vec a_;
    Mat A_;
    double p_ = 2.0;
    double eps_ = 0.0;
    std::vector<Term> terms_;
    bool validated_ = true;
    double cutoff_ = default_singularity_cutoff;
};

struct EntropySpec::Term {
    double weight;
    EntropySpec spec;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

inline void check_dim(int dim) {
    require(dim >= 1 && dim <= 3, "entropy dimension must be 1, 2 or 3, got " + std::to_string(dim));
}

inline void check_psd(const Mat& A) {
    require(A.rows() == A.cols(), "quadratic form matrix must be square");
    check_dim(static_cast<int>(A.rows()));
    require(A.allFinite(), "quadratic form matrix has non-finite entries");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale,
            "quadratic form matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-12 * A.norm(),
            "quadratic form matrix is not positive semi-definite");
}

}  // namespace detail

inline EntropySpec EntropySpec::linear(Vec a) {
    detail::check_dim(static_cast<int>(a.size()));
    require(a.allFinite(), "linear coefficients must be finite");
    EntropySpec s;
    s.kind_ = Kind::linear;
    s.dim_ = static_cast<int>(a.size());
    s.a_ = std::move(a);
    return s;
}

inline EntropySpec EntropySpec::quadratic_form(Mat A) {
    detail::check_psd(A);
    EntropySpec s = unchecked_quadratic_form(std::move(A));
    s.validated_ = true;
    return s;
}

inline EntropySpec EntropySpec::unchecked_quadratic_form(Mat A) {
    require(A.rows() == A.cols(), "quadratic form matrix must be square");
    detail::check_dim(static_cast<int>(A.rows()));
    EntropySpec s;
    s.kind_ = Kind::quadratic_form;
    s.dim_ = static_cast<int>(A.rows());
    s.A_ = 0.5 * (A + A.transpose());
    s.validated_ = false;
    return s;
}

inline EntropySpec EntropySpec::p_norm(double p, int dim) {
    require(std::isfinite(p) && p >= 1.0, "p-norm requires p >= 1, got " + std::to_string(p));
    EntropySpec s = unchecked_p_norm(p, dim);
    s.validated_ = true;
    return s;
}

inline EntropySpec EntropySpec::unchecked_p_norm(double p, int dim) {
    detail::check_dim(dim);
    require(std::isfinite(p) && p > 0.0, "p-norm exponent must be positive");
    EntropySpec s;
    s.kind_ = Kind::p_norm;
    s.dim_ = dim;
    s.p_ = p;
    s.validated_ = false;
    return s;
}

inline EntropySpec EntropySpec::regularized_2norm(double eps, int dim) {
    detail::check_dim(dim);
    require(std::isfinite(eps) && eps > 0.0, "regularization eps must be > 0");
    EntropySpec s;
    s.kind_ = Kind::regularized_2norm;
    s.dim_ = dim;
    s.eps_ = eps;
    return s;
}

inline EntropySpec EntropySpec::combination(std::vector<Term> terms) {
    require(!terms.empty(), "combination needs at least one term");
    const int dim = terms.front().spec.dim();
    bool validated = true;
    for (const auto& t : terms) {
        require(std::isfinite(t.weight) && t.weight >= 0.0, "combination weights must be >= 0");
        require(t.spec.dim() == dim, "combination terms must share one dimension");
        validated = validated && t.spec.validated();
    }
    EntropySpec s;
    s.kind_ = Kind::combination;
    s.dim_ = dim;
    s.terms_ = std::move(terms);
    s.validated_ = validated;
    return s;
}

inline EntropySpec EntropySpec::with_singularity_cutoff(double cutoff) const {
    require(cutoff >= 0.0, "singularity cutoff must be >= 0");
    EntropySpec s = *this;
    s.cutoff_ = cutoff;
    for (auto& t : s.terms_) t.spec = t.spec.with_singularity_cutoff(cutoff);
    return s;
}

inline bool EntropySpec::homogeneous() const {
    switch (kind_) {
        case Kind::regularized_2norm:
            return false;
        case Kind::combination:
            return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
                return t.weight == 0.0 || t.spec.homogeneous();
            });
        default:
            return true;
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_arg(const EntropySpec& spec, const Vec& g) {
    if (g.size() != spec.dim())
        throw ContractViolation("gradient has length " + std::to_string(g.size()) +
                                " but entropy dimension is " + std::to_string(spec.dim()));
}

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ||g||_p computed on g / max|g_i| to avoid overflow and keep homogeneity tight.
inline double p_norm_value(const Vec& g, double p) {
    const double m = g.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    if (p == 2.0) return g.norm();
    if (p == 1.0) return g.cwiseAbs().sum();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) s += std::pow(std::abs(g[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

}  // namespace detail

/// eta(g).
inline double eval(const EntropySpec& spec, const Vec& g) {
    detail::check_arg(spec, g);
    using K = EntropySpec::Kind;
    switch (spec.kind()) {
        case K::linear:
            return spec.coefficients().dot(g);
        case K::quadratic_form: {
            const double q = g.dot(spec.matrix() * g);
            // Rounding can push a PSD form slightly negative; an unchecked
            // indefinite form yields NaN outside its positive cone.
            if (spec.validated() && q < 0.0) return 0.0;
            return std::sqrt(q);
        }
        case K::p_norm:
            return detail::p_norm_value(g, spec.p());
        case K::regularized_2norm:
            return std::sqrt(g.squaredNorm() + spec.eps() * spec.eps());
        case K::combination: {
            double s = 0.0;
            for (const auto& t : spec.terms()) s += t.weight * eval(t.spec, g);
            return s;
        }
    }
    return 0.0;
}

/**
 * d eta / d g.
 *
 * Exact norms (quadratic forms, p-norms) throw SingularPoint when ||g||_2 is
 * below spec.singularity_cutoff(). For p-norms with p < 2, a zero component
 * takes the subgradient selection sign(0) = 0.
 */
inline Vec grad(const EntropySpec& spec, const Vec& g) {
    detail::check_arg(spec, g);
    using K = EntropySpec::Kind;
    const int d = spec.dim();
    switch (spec.kind()) {
        case K::linear:
            return spec.coefficients();
        case K::quadratic_form: {
            const double gn = g.norm();
            const double eta = eval(spec, g);
            if (gn < spec.singularity_cutoff() || !(eta >= spec.singularity_cutoff() * gn))
                throw SingularPoint(gn);
            return spec.matrix() * g / eta;
        }
        case K::p_norm: {
            const double gn = g.norm();
            if (gn < spec.singularity_cutoff()) throw SingularPoint(gn);
            const double p = spec.p();
            const double eta = detail::p_norm_value(g, p);
            Vec out(d);
            for (int i = 0; i < d; ++i) {
                const double u = std::abs(g[i]) / eta;
                out[i] = detail::sign0(g[i]) * (p == 1.0 ? 1.0 : std::pow(u, p - 1.0));
            }
            return out;
        }
        case K::regularized_2norm:
            return g / eval(spec, g);
        case K::combination: {
            Vec out = Vec::Zero(d);
            for (const auto& t : spec.terms())
                if (t.weight != 0.0) out += t.weight * grad(t.spec, g);
            return out;
        }
    }
    return Vec::Zero(d);
}

/// Hessian d^2 eta / d g^2 (symmetric). Same singularity rules as grad(); a
/// p-norm with 1 < p < 2 is also singular at points with a zero component.
inline Mat hess(const EntropySpec& spec, const Vec& g) {
    detail::check_arg(spec, g);
    using K = EntropySpec::Kind;
    const int d = spec.dim();
    switch (spec.kind()) {
        case K::linear:
            return Mat::Zero(d, d);
        case K::quadratic_form: {
            const Vec w = grad(spec, g);
            const double eta = eval(spec, g);
            return (spec.matrix() - w * w.transpose()) / eta;
        }
        case K::p_norm: {
            const double gn = g.norm();
            if (gn < spec.singularity_cutoff()) throw SingularPoint(gn);
            const double p = spec.p();
            if (p == 1.0) return Mat::Zero(d, d);
            const double eta = detail::p_norm_value(g, p);
            // H = (p-1)/eta [diag(|u_i|^{p-2}) - v v^T], u = g/eta, v_i = sign(g_i)|u_i|^{p-1}
            Vec v(d);
            Mat H = Mat::Zero(d, d);
            for (int i = 0; i < d; ++i) {
                const double u = std::abs(g[i]) / eta;
                if (u == 0.0 && p < 2.0) throw SingularPoint(gn);
                H(i, i) = p == 2.0 ? 1.0 : std::pow(u, p - 2.0);
                v[i] = detail::sign0(g[i]) * std::pow(u, p - 1.0);
            }
            H -= v * v.transpose();
            return (p - 1.0) / eta * H;
        }
        case K::regularized_2norm: {
            const double eta = eval(spec, g);
            return (Mat::Identity(d, d) - g * g.transpose() / (eta * eta)) / eta;
        }
        case K::combination: {
            Mat out = Mat::Zero(d, d);
            for (const auto& t : spec.terms())
                if (t.weight != 0.0) out += t.weight * hess(t.spec, g);
            return out;
        }
    }
    return Mat::Zero(d, d);
}

/**
 * Signed homogeneity residual g . grad(g) - eta(g).
 *
 * Zero for exactly homogeneous entropies. For the regularized 2-norm it
 * equals -eps^2 / ||g||_{eps,2} (negative: the regularized norm grows slower
 * than linearly along rays near the origin).
 */
inline double homogeneity_residual(const EntropySpec& spec, const Vec& g) {
    switch (spec.kind()) {
        case EntropySpec::Kind::regularized_2norm: {
            // g.g/n - n = -eps^2/n; the difference form cancels badly when
            // |g| >> eps.
            detail::check_arg(spec, g);
            return -spec.eps() * spec.eps() / eval(spec, g);
        }
        case EntropySpec::Kind::combination: {
            double r = 0.0;
            for (const auto& t : spec.terms())
                if (t.weight != 0.0) r += t.weight * homogeneity_residual(t.spec, g);
            return r;
        }
        default:
            return g.dot(grad(spec, g)) - eval(spec, g);
    }
}

/**
 * Largest sub-additivity violation eta(v1+v2) - eta(v1) - eta(v2) over
 * `trials` pairs. The pairs have i.i.d. components uniform on [-1, 1] drawn
 * from Rng(seed), v1 components first. Non-positive for convex homogeneous
 * functions.
 */
inline double subadditivity_check(const std::function<double(const Vec&)>& eta, int dim, int trials,
                                  std::uint64_t seed) {
    require(trials >= 1, "subadditivity_check needs trials >= 1");
    require(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3");
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    Vec v1(dim), v2(dim);
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < dim; ++i) v1[i] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < dim; ++i) v2[i] = rng.uniform(-1.0, 1.0);
        worst = std::max(worst, eta(v1 + v2) - eta(v1) - eta(v2));
    }
    return worst;
}

inline double subadditivity_check(const EntropySpec& spec, int trials, std::uint64_t seed) {
    return subadditivity_check([&](const Vec& v) { return eval(spec, v); }, spec.dim(), trials, seed);
}

// ---------------------------------------------------------------------------
// Text form used by the CLI
//   linear:a1,a2[,a3]   quad:a11,a12,a22 | quad:a11,a12,a13,a22,a23,a33
//   pnorm:p             reg2:eps            sum:w1*SPEC1+w2*SPEC2
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ContractViolation("cannot parse number '" + std::string(s) + "'");
    return v;
}

inline std::vector<double> parse_list(std::string_view s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        out.push_back(parse_double(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Splits "w1*A+w2*B" at '+' signs that are not exponent signs.
inline std::vector<std::string_view> split_sum(std::string_view s) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+' && i > start && s[i - 1] != 'e' && s[i - 1] != 'E') {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(s.substr(start));
    return parts;
}

}  // namespace detail

/// Parses the CLI grammar. `dim` fixes the dimension of pnorm/reg2 and is
/// checked against the length of linear/quad coefficient lists. With
/// `validate` off, pnorm and quad skip their convexity checks (p >= 1, PSD)
/// so that candidates can be fed to the convexity checkers.
inline EntropySpec parse_entropy(std::string_view text, int dim, bool validate = true) {
    const std::size_t colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string_view body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    auto check = [&](int d) {
        require(d == dim, "entropy '" + std::string(text) + "' has dimension " + std::to_string(d) +
                              " but --dim is " + std::to_string(dim));
    };
    if (head == "linear") {
        const auto c = detail::parse_list(body);
        Vec a(static_cast<int>(c.size()));
        for (std::size_t i = 0; i < c.size(); ++i) a[static_cast<int>(i)] = c[i];
        check(static_cast<int>(c.size()));
        return EntropySpec::linear(a);
    }
    if (head == "quad") {
        const auto c = detail::parse_list(body);
        int d = 0;
        if (c.size() == 1) d = 1;
        else if (c.size() == 3) d = 2;
        else if (c.size() == 6) d = 3;
        else throw ContractViolation("quad needs 1, 3 or 6 upper-triangle entries");
        check(d);
        Mat A(d, d);
        std::size_t k = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) A(i, j) = A(j, i) = c[k++];
        return validate ? EntropySpec::quadratic_form(A) : EntropySpec::unchecked_quadratic_form(A);
    }
    if (head == "pnorm") {
        const double p = detail::parse_double(body);
        return validate ? EntropySpec::p_norm(p, dim) : EntropySpec::unchecked_p_norm(p, dim);
    }
    if (head == "reg2") return EntropySpec::regularized_2norm(detail::parse_double(body), dim);
    if (head == "sum") {
        std::vector<EntropySpec::Term> terms;
        for (auto part : detail::split_sum(body)) {
            const std::size_t star = part.find('*');
            require(star != std::string_view::npos, "sum term '" + std::string(part) + "' lacks 'w*'");
            terms.push_back({detail::parse_double(part.substr(0, star)), parse_entropy(part.substr(star + 1), dim, validate)});
        }
        return EntropySpec::combination(std::move(terms));
    }
    throw ContractViolation("unknown entropy '" + std::string(text) + "'");
}

inline std::string format_entropy(const EntropySpec& spec) {
    using K = EntropySpec::Kind;
    using detail::fmt17;
    std::ostringstream os;
    switch (spec.kind()) {
        case K::linear:
            os << "linear:";
            for (int i = 0; i < spec.dim(); ++i) os << (i ? "," : "") << fmt17(spec.coefficients()[i]);
            break;
        case K::quadratic_form: {
            os << "quad:";
            bool first = true;
            for (int i = 0; i < spec.dim(); ++i)
                for (int j = i; j < spec.dim(); ++j) {
                    os << (first ? "" : ",") << fmt17(spec.matrix()(i, j));
                    first = false;
                }
            break;
        }
        case K::p_norm:
            os << "pnorm:" << fmt17(spec.p());
            break;
        case K::regularized_2norm:
            os << "reg2:" << fmt17(spec.eps());
            break;
        case K::combination: {
            os << "sum:";
            bool first = true;
            for (const auto& t : spec.terms()) {
                os << (first ? "" : "+") << fmt17(t.weight) << "*" << format_entropy(t.spec);
                first = false;
            }
            break;
        }
    }
    return os.str();
}

}  // namespace varentropy

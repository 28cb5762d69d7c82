/**
 * @file flux.hpp
 * @brief Closures f(phi, grad phi) and sources s(phi) of the scalar law
 *   d_t phi + div f(phi, grad phi) = s(phi)
 * with the partial derivatives the entropy evolution terms need.
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/entropy.hpp"

#include <functional>
#include <string>
#include <string_view>

namespace varentropy {

class FluxModel {
public:
    enum class Kind { linear_advection, burgers, advection_diffusion, custom };
    enum class SourceKind { none, linear, custom };

    using VectorFn = std::function<Vec(double, const Vec&)>;
    using MatrixFn = std::function<Mat(double, const Vec&)>;
    using ScalarFn = std::function<double(double)>;

    /// 1D advection with zero velocity.
    FluxModel() : FluxModel(1) {}

    /// f = c phi.
    static FluxModel linear_advection(Vec c) {
        FluxModel m(static_cast<int>(c.size()));
        require(c.allFinite(), "advection velocity must be finite");
        m.kind_ = Kind::linear_advection;
        m.c_ = std::move(c);
        return m;
    }

    /// f = phi^2 / 2 (1, ..., 1) / sqrt(d).
    static FluxModel burgers(int dim) {
        FluxModel m(dim);
        m.kind_ = Kind::burgers;
        m.c_ = Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
        return m;
    }

    /// f = c phi - k grad phi, so df/dgrad phi = -k I.
    static FluxModel advection_diffusion(Vec c, double k) {
        require(std::isfinite(k) && k >= 0.0, "diffusivity k must be >= 0");
        FluxModel m = linear_advection(std::move(c));
        m.kind_ = Kind::advection_diffusion;
        m.k_ = k;
        return m;
    }

    /**
     * User closure with its derivatives. df/dgrad phi is checked for negative
     * semi-definiteness at `samples` seeded states (phi uniform on [-2, 2],
     * grad phi standard normal) and again at every evaluation.
     */
    static FluxModel custom(int dim, VectorFn f, VectorFn df_dphi, MatrixFn df_dgrad, int samples = 64,
                            std::uint64_t seed = 42) {
        require(f && df_dphi && df_dgrad, "custom flux needs f, df/dphi and df/dgrad");
        FluxModel m(dim);
        m.kind_ = Kind::custom;
        m.f_ = std::move(f);
        m.df_dphi_ = std::move(df_dphi);
        m.df_dgrad_ = std::move(df_dgrad);
        Rng rng(seed);
        Vec g(dim);
        for (int s = 0; s < samples; ++s) {
            const double phi = rng.uniform(-2.0, 2.0);
            for (int i = 0; i < dim; ++i) g[i] = rng.normal();
            const Mat K = m.diffusion_matrix(phi, g);
            m.k_ = std::max(m.k_, K.cwiseAbs().rowwise().sum().maxCoeff());
        }
        return m;
    }

    FluxModel with_linear_source(double beta) const {
        require(std::isfinite(beta), "source coefficient must be finite");
        FluxModel m = *this;
        m.source_kind_ = beta == 0.0 ? SourceKind::none : SourceKind::linear;
        m.beta_ = beta;
        return m;
    }

    FluxModel with_source(ScalarFn s, ScalarFn ds_dphi) const {
        require(s && ds_dphi, "custom source needs s and ds/dphi");
        FluxModel m = *this;
        m.source_kind_ = SourceKind::custom;
        m.s_ = std::move(s);
        m.ds_ = std::move(ds_dphi);
        return m;
    }

    Kind kind() const noexcept { return kind_; }
    SourceKind source_kind() const noexcept { return source_kind_; }
    int dim() const noexcept { return dim_; }
    /// Velocity c (advection kinds) or the Burgers direction (1,..,1)/sqrt(d).
    const Vec& velocity() const noexcept { return c_; }
    /// k for advection-diffusion; for custom, a sampled bound on |df/dgrad|.
    double diffusivity() const noexcept { return k_; }
    double source_coefficient() const noexcept { return beta_; }
    /// True when f depends on grad phi only through -k grad phi (or not at all).
    bool builtin() const noexcept { return kind_ != Kind::custom; }

    Vec flux(double phi, const Vec& g) const {
        check(g);
        switch (kind_) {
            case Kind::linear_advection: return c_ * phi;
            case Kind::burgers: return 0.5 * phi * phi * c_;
            case Kind::advection_diffusion: return c_ * phi - k_ * g;
            case Kind::custom: return f_(phi, g);
        }
        return Vec::Zero(dim_);
    }

    /// df/dphi.
    Vec advective_speed(double phi, const Vec& g) const {
        check(g);
        switch (kind_) {
            case Kind::linear_advection:
            case Kind::advection_diffusion: return c_;
            case Kind::burgers: return phi * c_;
            case Kind::custom: return df_dphi_(phi, g);
        }
        return Vec::Zero(dim_);
    }

    /// df/dgrad phi; IllPosedModel if it has an eigenvalue above 1e-10.
    Mat diffusion_matrix(double phi, const Vec& g) const {
        check(g);
        switch (kind_) {
            case Kind::linear_advection:
            case Kind::burgers: return Mat::Zero(dim_, dim_);
            case Kind::advection_diffusion: return -k_ * Mat::Identity(dim_, dim_);
            case Kind::custom: {
                Mat K = df_dgrad_(phi, g);
                require(K.rows() == dim_ && K.cols() == dim_, "custom df/dgrad has wrong size");
                if (!K.allFinite()) throw IllPosedModel("custom df/dgrad is not finite");
                const Mat sym = 0.5 * (K + K.transpose());
                Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
                const double top = es.eigenvalues().maxCoeff();
                if (top > 1e-10)
                    throw IllPosedModel("df/dgrad has positive eigenvalue " + std::to_string(top) +
                                        ": variation entropy would be produced");
                return K;
            }
        }
        return Mat::Zero(dim_, dim_);
    }

    double source(double phi) const {
        switch (source_kind_) {
            case SourceKind::none: return 0.0;
            case SourceKind::linear: return beta_ * phi;
            case SourceKind::custom: return s_(phi);
        }
        return 0.0;
    }

    /// ds/dphi.
    double source_derivative(double phi) const {
        switch (source_kind_) {
            case SourceKind::none: return 0.0;
            case SourceKind::linear: return beta_;
            case SourceKind::custom: return ds_(phi);
        }
        return 0.0;
    }

private:
    explicit FluxModel(int dim) : dim_(dim), c_(Vec::Zero(dim)) {
        require(dim >= 1 && dim <= 3, "flux dimension must be 1, 2 or 3");
    }
    void check(const Vec& g) const {
        if (g.size() != dim_)
            throw ContractViolation("gradient has length " + std::to_string(g.size()) + ", model dimension is " +
                                    std::to_string(dim_));
    }

    int dim_;
    Kind kind_ = Kind::linear_advection;
    SourceKind source_kind_ = SourceKind::none;
    Vec c_;
    double k_ = 0.0;
    double beta_ = 0.0;
    VectorFn f_, df_dphi_;
    MatrixFn df_dgrad_;
    ScalarFn s_, ds_;
};

/**
 * Text form: `advect:c1[,c2[,c3]]`, `burgers`, `advdiff:c1[,..]:k`, with an
 * optional source `lin:beta` given separately.
 */
inline FluxModel parse_flux(std::string_view text, int dim, std::string_view source = {}) {
    FluxModel m = [&] {
        if (text == "burgers") return FluxModel::burgers(dim);
        const auto colon = text.find(':');
        require(colon != std::string_view::npos, "unknown flux '" + std::string(text) + "'");
        const auto head = text.substr(0, colon);
        auto rest = text.substr(colon + 1);
        if (head == "advect") {
            const auto c = detail::parse_list(rest);
            require(static_cast<int>(c.size()) == dim, "advect needs " + std::to_string(dim) + " components");
            return FluxModel::linear_advection(Eigen::Map<const Eigen::VectorXd>(c.data(), dim));
        }
        if (head == "advdiff") {
            const auto k_at = rest.rfind(':');
            require(k_at != std::string_view::npos, "advdiff needs ':k'");
            const auto c = detail::parse_list(rest.substr(0, k_at));
            require(static_cast<int>(c.size()) == dim, "advdiff needs " + std::to_string(dim) + " components");
            return FluxModel::advection_diffusion(Eigen::Map<const Eigen::VectorXd>(c.data(), dim),
                                                  detail::parse_double(rest.substr(k_at + 1)));
        }
        throw ContractViolation("unknown flux '" + std::string(text) + "'");
    }();
    if (!source.empty() && source != "none") {
        require(source.rfind("lin:", 0) == 0, "unknown source '" + std::string(source) + "'");
        m = m.with_linear_source(detail::parse_double(source.substr(4)));
    }
    return m;
}

inline std::string describe(const FluxModel& m) {
    auto list = [](const Vec& v) {
        std::string s;
        for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + detail::fmt17(v[i]);
        return s;
    };
    std::string s;
    switch (m.kind()) {
        case FluxModel::Kind::linear_advection: s = "advect:" + list(m.velocity()); break;
        case FluxModel::Kind::burgers: s = "burgers"; break;
        case FluxModel::Kind::advection_diffusion:
            s = "advdiff:" + list(m.velocity()) + ":" + detail::fmt17(m.diffusivity());
            break;
        case FluxModel::Kind::custom: s = "custom"; break;
    }
    if (m.source_kind() == FluxModel::SourceKind::linear) s += ";source=lin:" + detail::fmt17(m.source_coefficient());
    if (m.source_kind() == FluxModel::SourceKind::custom) s += ";source=custom";
    return s;
}

}  // namespace varentropy

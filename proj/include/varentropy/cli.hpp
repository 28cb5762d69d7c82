/**
 * @file cli.hpp
 * @brief Subcommand front end. `dispatch` takes argv without the program
 * name and writes to the given streams, so tests can drive it in-process.
 *
 * Exit codes: 0 success, 1 simulation aborted on non-finite values,
 * 2 parse/contract/data errors, 64 unknown or missing subcommand.
 */
#pragma once

#include "varentropy/core.hpp"
#include "varentropy/entropy.hpp"
#include "varentropy/evolution.hpp"
#include "varentropy/fields.hpp"
#include "varentropy/flux.hpp"
#include "varentropy/heaviside.hpp"
#include "varentropy/objectivity.hpp"
#include "varentropy/solver.hpp"
#include "varentropy/spherical.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace varentropy::cli {

using nlohmann::json;

inline constexpr const char* snapshot_schema = "varentropy-snapshots v1";

inline const char* usage() {
    return "usage: varentropy <subcommand> [options]\n"
           "subcommands:\n"
           "  check-entropy   convexity verdict for an entropy (JSON)\n"
           "  analyze         evolution terms of a field file (CSV per point, JSON summary)\n"
           "  simulate        run the solver from a JSON config, write snapshots + manifest\n"
           "  tv-report       total variation of Heaviside ramps (CSV); alias heaviside-report\n"
           "  objectivity     rotation invariance of an entropy (JSON)\n"
           "global options: --seed N (42), --tol-convexity T, --delta-singularity D\n"
           "run `varentropy <subcommand> --help` for details\n";
}

struct GlobalOptions {
    std::uint64_t seed = 42;
    double tol_convexity = default_convexity_tolerance;
    double delta_singularity = default_singularity_cutoff;
};

namespace detail {

inline double finite_or_nan(double x) { return std::isfinite(x) ? x : std::numeric_limits<double>::quiet_NaN(); }

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write '" + path + "'");
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read '" + path + "'");
    return f;
}

inline EntropySpec entropy_arg(const std::string& text, int dim, const GlobalOptions& g, bool validate = true) {
    return parse_entropy(text, dim, validate).with_singularity_cutoff(g.delta_singularity);
}

inline json report_json(const ConvexityReport& r) {
    json j{{"verdict", to_string(r.verdict)},
           {"criterion", to_string(r.criterion)},
           {"min_margin", r.min_margin},
           {"argmin_theta", r.argmin_angles[0]},
           {"argmin_phi", r.argmin_angles[1]},
           {"samples", r.samples},
           {"skipped", r.skipped},
           {"invalid", r.invalid},
           {"skip_flag", r.skip_flag}};
    if (r.criterion == Criterion::a_ge_b_3d) {
        j["min_a_minus_b"] = r.min_a_minus_b;
        j["min_b"] = r.min_b;
    }
    return j;
}

inline void write_samples_csv(const std::string& path, const std::vector<ConvexitySample>& samples) {
    auto f = open_out(path);
    f << "theta,phi,F,A,B,margin,valid\n";
    for (const auto& s : samples)
        f << varentropy::detail::g17(s.theta) << ',' << varentropy::detail::g17(s.phi) << ','
          << varentropy::detail::g17(s.F) << ',' << varentropy::detail::g17(s.A) << ','
          << varentropy::detail::g17(s.B) << ',' << varentropy::detail::g17(s.margin) << ',' << (s.valid ? 1 : 0)
          << '\n';
}

}  // namespace detail

// ---- check-entropy ---------------------------------------------------------

struct CheckEntropyArgs {
    std::string entropy;
    int dim = 2;
    int n_theta = 720;
    int n_phi = 360;
    int oracle_samples = 2000;
    std::string dump;
    bool unchecked = false;
};

inline int run_check_entropy(const CheckEntropyArgs& a, const GlobalOptions& g, std::ostream& out) {
    const EntropySpec spec = detail::entropy_arg(a.entropy, a.dim, g, !a.unchecked);
    ConvexityOptions opt;
    opt.tol = g.tol_convexity;
    std::vector<ConvexitySample> dump;
    json j{{"entropy", format_entropy(spec)}, {"dim", a.dim}, {"homogeneous", spec.homogeneous()}};

    ConvexityOptions oracle_opt = opt;
    const bool angular = spec.homogeneous() && a.dim >= 2;
    if (!angular && !a.dump.empty()) oracle_opt.dump = &dump;
    const ConvexityReport oracle = cartesian_eigen_check(spec, a.oracle_samples, g.seed, oracle_opt);

    if (angular) {
        if (!a.dump.empty()) opt.dump = &dump;
        const ConvexityReport rep = check_convexity(profile_from_spec(spec), a.n_theta, a.n_phi, opt);
        j.update(detail::report_json(rep));
        j["oracle"] = detail::report_json(oracle);
        j["agree"] = rep.verdict == oracle.verdict;
    } else {
        j.update(detail::report_json(oracle));
    }
    if (!a.dump.empty()) detail::write_samples_csv(a.dump, dump);
    out << j.dump(2) << '\n';
    return 0;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string field;
    std::string next;
    std::string entropy;
    std::string flux;
    std::string source;
    double eps = -1.0;
    std::string out;
    std::string summary;
};

inline void write_terms_csv(std::ostream& os, const EvolutionTerms& t) {
    const int d = t.grid.dim;
    static const char* axes[] = {"x", "y", "z"};
    for (int a = 0; a < d; ++a) os << axes[a] << ',';
    os << "eta";
    for (int a = 0; a < d; ++a) os << ",q" << axes[a];
    os << ",div_q,dt_eta,A,A_discrete,D,S,R,residual,masked\n";
    using varentropy::detail::g17;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Vec x = t.grid.center(i);
        for (int a = 0; a < d; ++a) os << g17(x[a]) << ',';
        os << g17(t.eta[i]);
        for (int a = 0; a < d; ++a) os << ',' << g17(t.q[i][a]);
        os << ',' << g17(t.div_q[i]) << ',' << g17(t.dt_eta[i]) << ',' << g17(t.A_term[i]) << ','
           << g17(t.A_discrete[i]) << ',' << g17(t.D_term[i]) << ',' << g17(t.S_term[i]) << ',' << g17(t.R_term[i])
           << ',' << g17(t.residual[i]) << ',' << (t.masked[i] ? 1 : 0) << '\n';
    }
}

inline json terms_summary(const EvolutionTerms& t, const EntropySpec& spec, const ScalarField& phi) {
    double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin, dmax = -rmin, rabs = 0.0;
    long unmasked = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.masked[i]) continue;
        ++unmasked;
        rmin = std::min(rmin, t.residual[i]);
        rmax = std::max(rmax, t.residual[i]);
        rabs = std::max(rabs, std::abs(t.residual[i]));
        dmax = std::max(dmax, t.D_term[i]);
    }
    return json{{"entropy", t.entropy},
                {"flux", t.model},
                {"time", phi.time},
                {"points", t.size()},
                {"unmasked_points", unmasked},
                {"masked_fraction", t.masked_fraction},
                {"tv", detail::finite_or_nan(total_variation(phi, spec))},
                {"residual_min", detail::finite_or_nan(rmin)},
                {"residual_max", detail::finite_or_nan(rmax)},
                {"residual_max_abs", rabs},
                {"D_max", detail::finite_or_nan(dmax)}};
}

inline int run_analyze(const AnalyzeArgs& a, const GlobalOptions& g, std::ostream& out) {
    auto in = detail::open_in(a.field);
    const ScalarField phi = read_field(in);
    const int d = phi.grid.dim;
    const FluxModel model = parse_flux(a.flux, d, a.source);
    require(!a.entropy.empty() || a.eps > 0.0, "analyze needs --entropy or --eps");
    const EntropySpec spec = a.entropy.empty() ? EntropySpec::regularized_2norm(a.eps, d).with_singularity_cutoff(g.delta_singularity)
                                               : detail::entropy_arg(a.entropy, d, g);
    require(a.eps < 0.0 || spec.kind() == EntropySpec::Kind::regularized_2norm,
            "--eps applies to the regularized 2-norm only");
    if (a.eps > 0.0 && !a.entropy.empty())
        require(spec.eps() == a.eps, "--eps disagrees with the entropy's regularization");

    const EvolutionTerms t = spec.kind() == EntropySpec::Kind::regularized_2norm
                                 ? compute_regularized_terms(phi, spec.eps(), model)
                                 : compute_terms(phi, spec, model);
    json summary = terms_summary(t, spec, phi);

    if (!a.next.empty()) {
        auto in2 = detail::open_in(a.next);
        const ScalarField nxt = read_field(in2);
        const ScalarField ve = ve_condition_residual(phi, nxt, spec, model, true);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : ve.values)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
        summary["ve_residual_min"] = detail::finite_or_nan(lo);
        summary["ve_residual_max"] = detail::finite_or_nan(hi);
    }

    const bool csv_to_stdout = a.out.empty() || a.out == "-";
    if (csv_to_stdout) {
        write_terms_csv(out, t);
    } else {
        auto f = detail::open_out(a.out);
        write_terms_csv(f, t);
    }
    if (!a.summary.empty()) {
        auto f = detail::open_out(a.summary);
        f << summary.dump(2) << '\n';
    } else if (!csv_to_stdout) {
        out << summary.dump(2) << '\n';
    }
    return 0;
}

// ---- simulate --------------------------------------------------------------

/**
 * Config keys: dim, n (int or list), lo, hi (number or list), bc
 * ("periodic"|"outflow"), flux, source, viscosity, cfl, t_end,
 * snapshot_every, scheme ("central"|"tvd"), max_steps, and initial
 * {kind: sine|gaussian|linear_heaviside|smooth_heaviside|file, amplitude,
 * width, center, E, file}.
 */
inline SolverConfig parse_solver_config(const json& j, const std::filesystem::path& base = {}) {
    require(j.is_object(), "config must be a JSON object");
    static const std::vector<std::string> known{"dim", "n", "lo", "hi", "bc", "flux", "source", "viscosity", "cfl",
                                                "t_end", "snapshot_every", "scheme", "max_steps", "initial"};
    for (const auto& [k, v] : j.items())
        require(std::find(known.begin(), known.end(), k) != known.end(), "unknown config key '" + k + "'");
    const int dim = j.value("dim", 1);
    require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    auto triple_int = [&](const char* key, int fallback) {
        std::array<int, 3> out{1, 1, 1};
        const json v = j.value(key, json(fallback));
        for (int a = 0; a < dim; ++a) out[a] = v.is_array() ? v.at(a).get<int>() : v.get<int>();
        if (v.is_array()) require(static_cast<int>(v.size()) == dim, std::string(key) + " needs dim entries");
        return out;
    };
    auto triple = [&](const char* key, double fallback) {
        std::array<double, 3> out{0, 0, 0};
        const json v = j.value(key, json(fallback));
        for (int a = 0; a < dim; ++a) out[a] = v.is_array() ? v.at(a).get<double>() : v.get<double>();
        if (v.is_array()) require(static_cast<int>(v.size()) == dim, std::string(key) + " needs dim entries");
        return out;
    };
    SolverConfig cfg;
    cfg.grid = Grid::make(dim, triple_int("n", 64), triple("lo", 0.0), triple("hi", 1.0),
                          parse_boundary(j.value("bc", std::string("periodic"))));
    cfg.model = parse_flux(j.value("flux", std::string("burgers")), dim, j.value("source", std::string()));
    cfg.viscosity = j.value("viscosity", 0.0);
    cfg.cfl = j.value("cfl", 0.4);
    cfg.t_end = j.value("t_end", 1.0);
    cfg.snapshot_every = j.value("snapshot_every", 0);
    cfg.scheme = parse_scheme(j.value("scheme", std::string("central")));
    cfg.max_steps = j.value("max_steps", cfg.max_steps);

    const json ic = j.value("initial", json::object());
    require(ic.is_object(), "initial must be an object");
    const std::string kind = ic.value("kind", std::string("sine"));
    using K = InitialCondition::Kind;
    if (kind == "sine") cfg.initial.kind = K::sine;
    else if (kind == "gaussian") cfg.initial.kind = K::gaussian;
    else if (kind == "linear_heaviside") cfg.initial.kind = K::linear_heaviside;
    else if (kind == "smooth_heaviside") cfg.initial.kind = K::smooth_heaviside;
    else if (kind == "file") cfg.initial.kind = K::custom;
    else throw ContractViolation("unknown initial kind '" + kind + "'");
    cfg.initial.amplitude = ic.value("amplitude", 1.0);
    cfg.initial.width = ic.value("width", 0.1);
    cfg.initial.center = ic.value("center", std::vector<double>{});
    cfg.initial.E = ic.value("E", 0.1);
    if (cfg.initial.kind == K::custom) {
        require(ic.contains("file"), "initial kind 'file' needs a file");
        std::filesystem::path p = ic.at("file").get<std::string>();
        if (p.is_relative()) p = base / p;
        auto in = detail::open_in(p.string());
        const ScalarField f = read_field(in);
        require(f.grid == cfg.grid, "initial field file does not match the configured grid");
        cfg.initial.samples = f.values;
    }
    return cfg;
}

inline json config_json(const SolverConfig& c) {
    json n = json::array(), lo = json::array(), h = json::array();
    for (int a = 0; a < c.grid.dim; ++a) {
        n.push_back(c.grid.n[a]);
        lo.push_back(c.grid.lo[a]);
        h.push_back(c.grid.h[a]);
    }
    return json{{"dim", c.grid.dim}, {"n", n},          {"lo", lo},
                {"h", h},            {"bc", to_string(c.grid.bc[0])},
                {"flux", describe(c.model)},
                {"viscosity", c.viscosity},
                {"cfl", c.cfl},
                {"t_end", c.t_end},
                {"snapshot_every", c.snapshot_every},
                {"scheme", to_string(c.scheme)}};
}

struct SimulateArgs {
    std::string config;
    std::string out_dir = "snapshots";
};

inline int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    auto in = detail::open_in(a.config);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    const SolverConfig cfg = parse_solver_config(j, std::filesystem::path(a.config).parent_path());

    std::vector<ScalarField> snaps;
    bool aborted = false;
    long last_stable = -1;
    std::string why;
    try {
        snaps = run(cfg);
    } catch (const RunAborted& e) {
        snaps = e.snapshots();
        aborted = true;
        last_stable = e.last_stable_step();
        why = e.what();
    }

    std::filesystem::create_directories(a.out_dir);
    json list = json::array();
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%05zu.csv", k);
        auto f = detail::open_out((std::filesystem::path(a.out_dir) / name).string());
        write_field(f, snaps[k]);
        list.push_back({{"index", k}, {"time", snaps[k].time}, {"file", name}});
    }
    json manifest{{"schema", snapshot_schema}, {"config", config_json(cfg)}, {"snapshots", list}, {"aborted", aborted}};
    if (aborted) {
        manifest["last_stable_step"] = last_stable;
        manifest["reason"] = why;
    }
    {
        auto f = detail::open_out((std::filesystem::path(a.out_dir) / "manifest.json").string());
        f << manifest.dump(2) << '\n';
    }
    out << manifest.dump(2) << '\n';
    if (aborted) {
        err << "error: " << why << '\n';
        return 1;
    }
    return 0;
}

// ---- tv-report -------------------------------------------------------------

struct TvReportArgs {
    std::string kind = "linear";
    std::string E = "0.1";
    std::string eps_list = "0";
    std::string method = "auto";
    int panels = 64;
};

inline int run_tv_report(const TvReportArgs& a, std::ostream& out) {
    std::vector<HeavisideKind> kinds;
    if (a.kind == "both") kinds = {HeavisideKind::linear, HeavisideKind::smooth};
    else kinds = {parse_heaviside_kind(a.kind)};
    require(a.method == "auto" || a.method == "closed" || a.method == "quadrature",
            "method must be closed, quadrature or auto");
    const auto Es = varentropy::detail::parse_list(a.E);
    const auto epss = varentropy::detail::parse_list(a.eps_list);
    using varentropy::detail::g17;
    out << "kind,E,eps,tv,tv_eps,tv_bar_eps,method\n";
    for (auto kind : kinds)
        for (double E : Es)
            for (double eps : epss) {
                TVMethod m = a.method == "quadrature" ? TVMethod::quadrature : TVMethod::closed_form;
                if (a.method == "auto" && kind == HeavisideKind::smooth && eps > 0.0) m = TVMethod::quadrature;
                const TVReport r = tv_report(kind, E, eps, m, a.panels);
                out << to_string(kind) << ',' << g17(E) << ',' << g17(eps) << ',' << g17(r.tv) << ',' << g17(r.tv_eps)
                    << ',' << g17(r.tv_bar_eps) << ',' << to_string(r.method) << '\n';
            }
    return 0;
}

// ---- objectivity -----------------------------------------------------------

struct ObjectivityArgs {
    std::string entropy;
    int dim = 2;
    int n_angles = 64;
    int samples = 1000;
};

inline int run_objectivity(const ObjectivityArgs& a, const GlobalOptions& g, std::ostream& out) {
    const EntropySpec spec = detail::entropy_arg(a.entropy, a.dim, g);
    const ObjectivityReport r = rotation_invariance_report(spec, a.n_angles, a.samples, g.seed);
    out << json{{"entropy", format_entropy(spec)},
                {"max_deviation", r.max_deviation},
                {"n_angles", a.n_angles},
                {"samples", a.samples},
                {"verdict", r.objective() ? "objective" : "not_objective"}}
               .dump(2)
        << '\n';
    return 0;
}

// ---- dispatch --------------------------------------------------------------

inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> subcommands{"check-entropy", "analyze", "simulate", "tv-report",
                                                      "heaviside-report", "objectivity"};
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
        (args.empty() ? err : out) << usage();
        return args.empty() ? 64 : 0;
    }
    if (std::find(subcommands.begin(), subcommands.end(), args[0]) == subcommands.end()) {
        err << "error: unknown subcommand '" << args[0] << "'\n" << usage();
        return 64;
    }

    CLI::App app{"variation entropy toolkit", "varentropy"};
    app.require_subcommand(1);
    GlobalOptions g;
    auto add_globals = [&](CLI::App* s) {
        s->add_option("--seed", g.seed, "random seed")->capture_default_str();
        s->add_option("--tol-convexity", g.tol_convexity, "convexity margin tolerance")->capture_default_str();
        s->add_option("--delta-singularity", g.delta_singularity, "gradient-norm cutoff for exact norms")
            ->capture_default_str();
    };

    CheckEntropyArgs ce;
    auto* s_ce = app.add_subcommand("check-entropy", "convexity verdict for an entropy");
    s_ce->add_option("--entropy", ce.entropy, "entropy spec, e.g. pnorm:2")->required();
    s_ce->add_option("--dim", ce.dim, "gradient dimension")->capture_default_str();
    s_ce->add_option("--n-theta", ce.n_theta, "azimuthal samples")->capture_default_str();
    s_ce->add_option("--n-phi", ce.n_phi, "polar samples (3D)")->capture_default_str();
    s_ce->add_option("--oracle-samples", ce.oracle_samples, "Cartesian Hessian samples")->capture_default_str();
    s_ce->add_option("--dump", ce.dump, "CSV of evaluated samples");
    s_ce->add_flag("--unchecked", ce.unchecked, "accept pnorm p < 1 and indefinite quad, to test them");
    add_globals(s_ce);

    AnalyzeArgs an;
    auto* s_an = app.add_subcommand("analyze", "evolution terms of a field file");
    s_an->add_option("--field", an.field, "field CSV")->required();
    s_an->add_option("--next", an.next, "later snapshot, for the VE-condition residual");
    s_an->add_option("--entropy", an.entropy, "entropy spec");
    s_an->add_option("--flux", an.flux, "flux model")->required();
    s_an->add_option("--source", an.source, "source term, lin:beta");
    s_an->add_option("--eps", an.eps, "use the regularized 2-norm with this eps");
    s_an->add_option("--out", an.out, "per-point CSV (default stdout)");
    s_an->add_option("--summary", an.summary, "JSON summary (default stdout when --out is a file)");
    add_globals(s_an);

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "run the solver from a JSON config");
    s_sim->add_option("--config", sim.config, "JSON config")->required();
    s_sim->add_option("--out", sim.out_dir, "output directory")->capture_default_str();
    add_globals(s_sim);

    TvReportArgs tv;
    auto* s_tv = app.add_subcommand("tv-report", "total variation of Heaviside ramps");
    s_tv->alias("heaviside-report");
    s_tv->add_option("--kind", tv.kind, "linear, smooth or both")->capture_default_str();
    s_tv->add_option("--E", tv.E, "ramp half-widths, comma separated")->capture_default_str();
    s_tv->add_option("--eps-list", tv.eps_list, "regularizations, comma separated")->capture_default_str();
    s_tv->add_option("--method", tv.method, "closed, quadrature or auto")->capture_default_str();
    s_tv->add_option("--panels", tv.panels, "initial quadrature panels")->capture_default_str();
    add_globals(s_tv);

    ObjectivityArgs ob;
    auto* s_ob = app.add_subcommand("objectivity", "rotation invariance of an entropy");
    s_ob->add_option("--entropy", ob.entropy, "entropy spec")->required();
    s_ob->add_option("--dim", ob.dim, "gradient dimension")->capture_default_str();
    s_ob->add_option("--n-angles", ob.n_angles, "rotations")->capture_default_str();
    s_ob->add_option("--samples", ob.samples, "random probe vectors")->capture_default_str();
    add_globals(s_ob);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (s_ce->parsed()) return run_check_entropy(ce, g, out);
        if (s_an->parsed()) return run_analyze(an, g, out);
        if (s_sim->parsed()) return run_simulate(sim, out, err);
        if (s_tv->parsed()) return run_tv_report(tv, out);
        if (s_ob->parsed()) return run_objectivity(ob, g, out);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << msg << '\n';
        return 2;
    }
    err << usage();
    return 64;
}

}  // namespace varentropy::cli

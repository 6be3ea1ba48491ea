#pragma once

// Error-decay benchmarking: run a propagation method over a decreasing
// time-step list, record relative error against a reference solution versus
// the exact operator-application count, fit the linear region of the log-log
// curve, and emit plot-ready CSV/JSON.

#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "atom1d.hpp"
#include "propagator.hpp"
#include "reference.hpp"

namespace semiglobal {
namespace bench {

enum class Problem { Atom1D, TwoLevel, ForcedScalar, CustomFromFile };
enum class Method { SemiGlobal, RK4, Euler };

struct BenchConfig {
    Problem problem = Problem::Atom1D;
    std::string problem_file;  // CustomFromFile definition (JSON)
    Method method = Method::SemiGlobal;
    int m_terms = 7;
    int k_terms = 7;
    std::vector<double> dt_list;  // strictly decreasing
    double eps = 1e-15;
    bool single_iteration = true;
    std::string reference = "auto";  // "auto" or a solution file
    std::string absorber = "fallback";  // "fallback" or a 64-line profile file
    std::string out_path;
    std::string format = "csv";  // "csv" | "json"
    int fit_first = -1;          // optional fit-range override (row indices)
    int fit_last = -1;
};

struct DecayRow {
    double dt = 0.0;
    std::uint64_t n_ops = 0;
    double rel_error = 0.0;
    std::string flags;  // "", "divergent", "fm_stability", ...
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    int first = 0;  // row range used
    int last = -1;
};

struct DecayCurve {
    std::vector<DecayRow> rows;
    LinearFit fit;
    bool fit_valid = false;
};

// ---------------------------------------------------------------------------
// Problem instances

struct ProblemInstance {
    GeneratorSpec gen;
    Eigen::VectorXcd u0;
    double t_start = 0.0;
    double t_end = 0.0;
    FunMatBackend backend;  // backend a semi-global run should use
    std::string hash;       // cache key material
    // exact/analytic final state when one exists
    std::function<Eigen::VectorXcd()> closed_form;
    std::shared_ptr<void> keepalive;
};

namespace detail {

inline std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

inline ProblemInstance make_atom1d(const std::string& absorber_source) {
    atom1d::AbsorberProfile prof;
    std::string tag;
    if (absorber_source == "fallback" || absorber_source.empty()) {
        prof = atom1d::build_absorber_fallback();
        tag = "fallback";
    } else {
        prof = atom1d::load_absorber(absorber_source);
        std::ostringstream os;
        for (auto v : prof) os << v.real() << ' ' << v.imag() << ';';
        tag = os.str();
    }
    auto problem = std::make_shared<atom1d::Atom1DProblem>(prof);

    ProblemInstance p;
    p.gen = problem->generator();
    p.u0 = problem->ground_state();
    p.t_start = 0.0;
    p.t_end = 1000.0;
    p.backend.kind = FunMatKind::Arnoldi;
    p.hash = detail::fnv1a("atom1d|768|-240|240|pulse0.1/500/170/0.06|" + tag);
    p.keepalive = problem;
    return p;
}

inline ProblemInstance make_two_level() {
    auto sx = std::make_shared<Eigen::Matrix2cd>();
    (*sx) << 0, 1, 1, 0;

    ProblemInstance p;
    p.gen.dim = 2;
    p.gen.apply_G = [sx](const Eigen::VectorXcd&, double t, const Eigen::VectorXcd& w,
                         Eigen::VectorXcd& y) {
        Eigen::Matrix2cd h;
        const double c = 0.2 * std::cos(t);
        h << 1, c, c, -1;
        y = std::complex<double>(0, -1) * (h * w);
    };
    p.gen.diag_difference = [sx](const Eigen::VectorXcd&, double t1, const Eigen::VectorXcd&,
                                 double t2, const Eigen::VectorXcd& w, Eigen::VectorXcd& y) {
        const double d = 0.2 * (std::cos(t1) - std::cos(t2));
        y = std::complex<double>(0, -1) * d * ((*sx) * w);
    };
    p.gen.is_hermitian_generator = true;
    p.u0 = Eigen::Vector2cd(1.0, 0.0);
    p.t_start = 0.0;
    p.t_end = 20.0;
    p.backend.kind = FunMatKind::NewtonCheb;
    p.backend.domain = {SpectralAxis::Imaginary, -1.25, 1.25};
    p.hash = detail::fnv1a("twolevel|sz+0.2cos(t)sx|T20");
    return p;
}

inline ProblemInstance make_forced_scalar() {
    ProblemInstance p;
    p.gen.dim = 1;
    p.gen.apply_G = [](const Eigen::VectorXcd&, double, const Eigen::VectorXcd& w,
                       Eigen::VectorXcd& y) { y = std::complex<double>(0, -1) * w; };
    p.gen.source = [](double t) {
        Eigen::VectorXcd s(1);
        s[0] = std::sin(t);
        return s;
    };
    p.u0 = Eigen::VectorXcd::Zero(1);
    p.t_start = 0.0;
    p.t_end = 20.0;
    p.backend.kind = FunMatKind::NewtonCheb;
    p.backend.domain = {SpectralAxis::Imaginary, -1.5, -0.5};
    p.hash = detail::fnv1a("forced_scalar|du=-iu+sin|T20");
    // u(t) = e^{-it}(1/4 + it/2) - e^{it}/4
    p.closed_form = [t = p.t_end] {
        const std::complex<double> i(0, 1);
        Eigen::VectorXcd u(1);
        u[0] = std::exp(-i * t) * (0.25 + i * t / 2.0) - std::exp(i * t) / 4.0;
        return u;
    };
    return p;
}

// Time-independent dense system from a JSON file; see README for the schema.
inline ProblemInstance make_custom(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("custom problem: cannot open " + path);
    nlohmann::json j;
    in >> j;

    const int n = j.at("n").get<int>();
    auto g = std::make_shared<Eigen::MatrixXcd>(n, n);
    const auto& gre = j.at("g_real");
    const auto& gim = j.at("g_imag");
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            (*g)(r, c) = {gre.at(r).at(c).get<double>(), gim.at(r).at(c).get<double>()};

    ProblemInstance p;
    p.gen.dim = n;
    p.gen.apply_G = [g](const Eigen::VectorXcd&, double, const Eigen::VectorXcd& w,
                        Eigen::VectorXcd& y) { y = (*g) * w; };
    p.u0.resize(n);
    for (int r = 0; r < n; ++r)
        p.u0[r] = {j.at("u0_real").at(r).get<double>(), j.at("u0_imag").at(r).get<double>()};
    p.t_start = j.value("t_start", 0.0);
    p.t_end = j.at("t_end").get<double>();

    const std::string kind = j.value("backend", std::string("arnoldi"));
    if (kind == "arnoldi")
        p.backend.kind = FunMatKind::Arnoldi;
    else {
        p.backend.kind = (kind == "cheb") ? FunMatKind::ChebSeries : FunMatKind::NewtonCheb;
        p.backend.domain.axis =
            j.value("axis", std::string("real")) == "imaginary" ? SpectralAxis::Imaginary
                                                                : SpectralAxis::Real;
        p.backend.domain.x_min = j.at("domain").at(0).get<double>();
        p.backend.domain.x_max = j.at("domain").at(1).get<double>();
    }
    p.hash = detail::fnv1a("custom|" + j.dump());
    p.keepalive = g;

    // time-independent: exp(G (t_end - t_start)) u0 by dense eigensolve
    p.closed_form = [g, u0 = p.u0, dt = p.t_end - p.t_start] {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(*g);
        Eigen::VectorXcd y = es.eigenvectors().partialPivLu().solve(u0);
        for (Eigen::Index k = 0; k < y.size(); ++k)
            y[k] *= std::exp(es.eigenvalues()[k] * dt);
        return Eigen::VectorXcd(es.eigenvectors() * y);
    };
    return p;
}

inline ProblemInstance make_problem(const BenchConfig& cfg) {
    switch (cfg.problem) {
        case Problem::Atom1D: return make_atom1d(cfg.absorber);
        case Problem::TwoLevel: return make_two_level();
        case Problem::ForcedScalar: return make_forced_scalar();
        case Problem::CustomFromFile: return make_custom(cfg.problem_file);
    }
    throw std::logic_error("make_problem: unknown problem");
}

// ---------------------------------------------------------------------------
// Reference solutions

namespace detail {

inline std::filesystem::path cache_dir() {
    if (const char* env = std::getenv("SEMIGLOBAL_CACHE_DIR")) return env;
    return "semiglobal_cache";
}

inline void save_state(const std::filesystem::path& p, const Eigen::VectorXcd& u) {
    std::ofstream out(p);
    out.precision(17);
    for (Eigen::Index i = 0; i < u.size(); ++i)
        out << u[i].real() << ' ' << u[i].imag() << '\n';
}

inline std::optional<Eigen::VectorXcd> load_state(const std::filesystem::path& p,
                                                  Eigen::Index n) {
    std::ifstream in(p);
    if (!in) return std::nullopt;
    Eigen::VectorXcd u(n);
    double re, im;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(in >> re >> im)) return std::nullopt;
        u[i] = {re, im};
    }
    return u;
}

}  // namespace detail

// The paper-grade reference run for problems without a closed form:
// semi-global, M=9, K=13, dt=1/30, unlimited iterations at machine tolerance.
inline Eigen::VectorXcd build_reference(const ProblemInstance& p) {
    if (p.closed_form) return p.closed_form();

    const double span = p.t_end - p.t_start;
    const int n_steps = int(std::lround(span * 30.0));
    TimeStepPlan plan = equidistant_plan(p.t_start, p.t_end, n_steps, 9, 13, p.backend,
                                         1e-15, /*max_iterations=*/0, {p.t_end});
    auto report = propagate(p.u0, p.gen, plan);
    return report.solutions.at(0);
}

inline Eigen::VectorXcd get_reference(const BenchConfig& cfg, const ProblemInstance& p) {
    if (cfg.reference != "auto") {
        auto loaded = detail::load_state(cfg.reference, p.u0.size());
        if (!loaded) throw std::runtime_error("reference: cannot read " + cfg.reference);
        return *loaded;
    }
    if (p.closed_form) return p.closed_form();

    const auto dir = detail::cache_dir();
    const auto file = dir / ("ref_" + p.hash + ".txt");
    if (auto cached = detail::load_state(file, p.u0.size())) return *cached;
    Eigen::VectorXcd u = build_reference(p);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) detail::save_state(file, u);
    return u;
}

// ---------------------------------------------------------------------------
// Sweeps and fitting

struct RunOutcome {
    Eigen::VectorXcd u;
    std::uint64_t n_ops = 0;
    bool diverged = false;
    bool fm_flagged = false;
    double dt_actual = 0.0;
};

inline RunOutcome run_once(const BenchConfig& cfg, const ProblemInstance& p, double dt) {
    RunOutcome out;
    const double span = p.t_end - p.t_start;
    const long n_steps = std::max<long>(1, std::lround(span / dt));
    out.dt_actual = span / double(n_steps);
    const std::uint64_t c0 = p.gen.apply_count;
    try {
        if (cfg.method == Method::SemiGlobal) {
            TimeStepPlan plan = equidistant_plan(
                p.t_start, p.t_end, int(n_steps), cfg.m_terms, cfg.k_terms, p.backend,
                cfg.single_iteration ? std::max(cfg.eps, 1e-15) : cfg.eps,
                cfg.single_iteration ? 1 : 0, {p.t_end});
            auto report = propagate(p.u0, p.gen, plan);
            out.u = report.solutions.at(0);
            for (const auto& s : report.steps)
                if (s.stability_flagged) out.fm_flagged = true;
        } else if (cfg.method == Method::RK4) {
            FixedStepPlan plan{p.t_start, out.dt_actual, n_steps, 0};
            out.u = rk4_propagate(p.u0, p.gen, plan).states.back();
        } else {
            Eigen::VectorXcd u = p.u0;
            double t = p.t_start;
            for (long i = 0; i < n_steps; ++i) {
                u = euler_step(u, t, out.dt_actual, p.gen);
                t = p.t_start + (i + 1) * out.dt_actual;
                if (!u.allFinite()) throw std::runtime_error("euler divergence");
            }
            out.u = u;
        }
    } catch (const std::exception&) {
        out.diverged = true;
    }
    out.n_ops = p.gen.apply_count - c0;
    return out;
}

struct TooFewPoints : std::runtime_error {
    TooFewPoints() : std::runtime_error("fit_linear_region: fewer than 4 usable points") {}
};

// Least-squares fit of log10(error) vs log10(n_ops) over the pre-plateau
// region. Trailing points sitting 10x above the fitted decay are treated as
// the round-off plateau and excluded.
inline LinearFit fit_linear_region(const DecayCurve& curve, int first = -1, int last = -1) {
    std::vector<double> xs, ys;
    std::vector<int> idx;
    for (int i = 0; i < int(curve.rows.size()); ++i) {
        const auto& r = curve.rows[i];
        if (r.flags.find("divergent") != std::string::npos) continue;
        if (!(r.rel_error > 0.0) || !std::isfinite(r.rel_error)) continue;
        xs.push_back(std::log10(double(r.n_ops)));
        ys.push_back(std::log10(r.rel_error));
        idx.push_back(i);
    }

    int lo = 0, hi = int(xs.size()) - 1;
    if (first >= 0) {
        // explicit override in original row indices
        lo = hi = -1;
        for (int k = 0; k < int(idx.size()); ++k) {
            if (idx[k] >= first && lo < 0) lo = k;
            if (idx[k] <= ((last >= 0) ? last : idx.back())) hi = k;
        }
        if (lo < 0 || hi < lo) throw TooFewPoints();
    }

    auto lsq = [&](int a, int b, double& slope, double& icpt) {
        const int n = b - a + 1;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int k = a; k <= b; ++k) {
            sx += xs[k];
            sy += ys[k];
            sxx += xs[k] * xs[k];
            sxy += xs[k] * ys[k];
        }
        const double det = n * sxx - sx * sx;
        slope = (n * sxy - sx * sy) / det;
        icpt = (sy * sxx - sx * sxy) / det;
    };

    LinearFit fit;
    if (first < 0) {
        // plateau tail: trailing rows whose error stopped decreasing
        while (hi - lo + 1 > 4 && ys[hi] >= ys[hi - 1] - 0.1) --hi;
        // backstop: trailing rows sitting 10x above the fitted decay
        while (hi - lo + 1 > 4) {
            double s, c;
            lsq(lo, hi, s, c);
            const double resid = ys[hi] - (s * xs[hi] + c);
            if (resid > 1.0)
                --hi;
            else
                break;
        }
    }
    if (hi - lo + 1 < 4) throw TooFewPoints();
    lsq(lo, hi, fit.slope, fit.intercept);
    fit.first = idx[lo];
    fit.last = idx[hi];
    return fit;
}

inline DecayCurve run_sweep(const BenchConfig& cfg) {
    if (cfg.dt_list.size() < 2)
        throw std::invalid_argument("run_sweep: need at least two dt values");
    for (std::size_t i = 1; i < cfg.dt_list.size(); ++i)
        if (!(cfg.dt_list[i] < cfg.dt_list[i - 1]))
            throw std::invalid_argument("run_sweep: dt list must be strictly decreasing");

    ProblemInstance p = make_problem(cfg);
    const Eigen::VectorXcd u_ref = get_reference(cfg, p);
    const double ref_norm = u_ref.norm();

    DecayCurve curve;
    for (double dt : cfg.dt_list) {
        RunOutcome r = run_once(cfg, p, dt);
        DecayRow row;
        row.dt = r.dt_actual;
        row.n_ops = r.n_ops;
        if (r.diverged) {
            row.rel_error = std::numeric_limits<double>::quiet_NaN();
            row.flags = "divergent";
        } else {
            row.rel_error = (r.u - u_ref).norm() / ref_norm;
            if (r.fm_flagged) row.flags = "fm_stability";
        }
        curve.rows.push_back(row);
    }
    try {
        curve.fit = fit_linear_region(curve, cfg.fit_first, cfg.fit_last);
        curve.fit_valid = true;
    } catch (const TooFewPoints&) {
        curve.fit_valid = false;
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Output

inline void to_json(nlohmann::json& j, const BenchConfig& c) {
    static const char* problems[] = {"atom1d", "two_level", "forced_scalar", "custom"};
    static const char* methods[] = {"semi_global", "rk4", "euler"};
    j = {{"problem", problems[int(c.problem)]},
         {"problem_file", c.problem_file},
         {"method", methods[int(c.method)]},
         {"M", c.m_terms},
         {"K", c.k_terms},
         {"dt_list", c.dt_list},
         {"eps", c.eps},
         {"single_iter", c.single_iteration},
         {"reference", c.reference},
         {"absorber", c.absorber},
         {"out", c.out_path},
         {"format", c.format},
         {"fit_range", {c.fit_first, c.fit_last}}};
}

inline void from_json(const nlohmann::json& j, BenchConfig& c) {
    const std::string prob = j.at("problem").get<std::string>();
    c.problem = prob == "atom1d"          ? Problem::Atom1D
                : prob == "two_level"     ? Problem::TwoLevel
                : prob == "forced_scalar" ? Problem::ForcedScalar
                                          : Problem::CustomFromFile;
    const std::string meth = j.at("method").get<std::string>();
    c.method = meth == "semi_global" ? Method::SemiGlobal
               : meth == "rk4"       ? Method::RK4
                                     : Method::Euler;
    c.problem_file = j.value("problem_file", std::string{});
    c.m_terms = j.at("M").get<int>();
    c.k_terms = j.at("K").get<int>();
    c.dt_list = j.at("dt_list").get<std::vector<double>>();
    c.eps = j.at("eps").get<double>();
    c.single_iteration = j.at("single_iter").get<bool>();
    c.reference = j.at("reference").get<std::string>();
    c.absorber = j.at("absorber").get<std::string>();
    c.out_path = j.value("out", std::string{});
    c.format = j.value("format", std::string{"csv"});
    c.fit_first = j.at("fit_range").at(0).get<int>();
    c.fit_last = j.at("fit_range").at(1).get<int>();
}

inline std::string format_csv(const DecayCurve& curve) {
    std::ostringstream os;
    os << "dt,n_ops,rel_error,flags\n";
    char buf[64];
    for (const auto& r : curve.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.dt);
        os << buf << ',' << r.n_ops << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.rel_error);
        os << buf << ',' << r.flags << '\n';
    }
    return os.str();
}

inline nlohmann::json format_json(const DecayCurve& curve, const BenchConfig& cfg) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : curve.rows)
        rows.push_back({{"dt", r.dt},
                        {"n_ops", r.n_ops},
                        {"rel_error", r.rel_error},
                        {"flags", r.flags}});
    nlohmann::json j = {{"config", cfg}, {"rows", rows}};
    if (curve.fit_valid)
        j["fit"] = {{"slope", curve.fit.slope},
                    {"intercept", curve.fit.intercept},
                    {"first", curve.fit.first},
                    {"last", curve.fit.last}};
    return j;
}

inline void emit_results(const DecayCurve& curve, const BenchConfig& cfg,
                         const std::string& path) {
    if (curve.rows.empty()) throw std::invalid_argument("emit_results: empty curve");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot write " + path);
    if (cfg.format == "json")
        out << format_json(curve, cfg).dump(2) << '\n';
    else
        out << format_csv(curve);
    if (!out) throw std::runtime_error("emit_results: write failed for " + path);
}

}  // namespace bench
}  // namespace semiglobal

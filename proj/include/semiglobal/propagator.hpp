#pragma once

// Semi-global time stepping for du/dt = G(u,t) u + s(t).
//
// Each step covers a comparatively large interval [t_k, t_k + dt_k] sampled
// at M_k boundary-including Chebyshev points. One iteration freezes the
// generator at the interval midpoint, moves everything else into an extended
// source term s_ext, expands s_ext in time, converts to the stable
// Taylor-like coefficients stilde_m, builds the vtilde_j vectors, and
// assembles the solution
//     u(t) = ftilde_M(Gtilde, t-t_k) vtilde_M + sum_j (t-t_k)^j vtilde_j
// at every node through a single function-of-matrix expansion. The iteration
// repeats until the step edge stops moving (or exactly once in benchmark
// mode), and the converged expansion supplies dense output inside the step
// plus the extrapolated starting guess for the next one.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cheb.hpp"
#include "fmt.hpp"
#include "funmat.hpp"
#include "newton.hpp"
#include "taylor_convert.hpp"

namespace semiglobal {

struct GeneratorSpec {
    using ApplyFn = std::function<void(const Eigen::VectorXcd& u, double t,
                                       const Eigen::VectorXcd& w, Eigen::VectorXcd& y)>;
    using SourceFn = std::function<Eigen::VectorXcd(double t)>;
    using DiffFn = std::function<void(const Eigen::VectorXcd& u1, double t1,
                                      const Eigen::VectorXcd& u2, double t2,
                                      const Eigen::VectorXcd& w, Eigen::VectorXcd& y)>;

    Eigen::Index dim = 0;
    ApplyFn apply_G;          // y = G(u,t) w
    SourceFn source;          // empty: s(t) == 0
    DiffFn diag_difference;   // optional: y = [G(u1,t1)-G(u2,t2)] w without full applies
    bool is_hermitian_generator = false;

    mutable std::uint64_t apply_count = 0;

    void apply(const Eigen::VectorXcd& u, double t, const Eigen::VectorXcd& w,
               Eigen::VectorXcd& y) const {
        ++apply_count;
        apply_G(u, t, w, y);
    }

    Eigen::VectorXcd source_at(double t) const {
        return source ? source(t) : Eigen::VectorXcd::Zero(dim);
    }
};

enum class FunMatKind { NewtonCheb, ChebSeries, Arnoldi };

struct FunMatBackend {
    FunMatKind kind = FunMatKind::Arnoldi;
    SpectralDomain domain;  // polynomial kinds only; must cover the spectrum
};

enum class TimeBasis { Chebyshev, Newton };

struct StepSpec {
    double dt = 0.0;
    int m_terms = 0;  // Chebyshev time points per step, M in [2,20]
    int k_terms = 0;  // function-of-matrix expansion terms, K in [1,40]
};

struct TimeStepPlan {
    double t_start = 0.0;
    std::vector<StepSpec> steps;
    FunMatBackend backend;
    double tolerance = 1e-10;
    int max_iterations = 0;  // 0: iterate to tolerance; 1: single-iteration benchmark mode
    int iteration_cap = 50;
    std::vector<double> output_times;  // sorted, inside [t_start, t_end]
    TimeBasis time_basis = TimeBasis::Chebyshev;

    double t_end() const {
        double t = t_start;
        for (const auto& s : steps) t += s.dt;
        return t;
    }
};

inline void validate_plan(const TimeStepPlan& plan);

inline TimeStepPlan equidistant_plan(double t_start, double t_end, int n_steps, int m_terms,
                                     int k_terms, FunMatBackend backend, double tolerance,
                                     int max_iterations,
                                     std::vector<double> output_times = {}) {
    TimeStepPlan p;
    p.t_start = t_start;
    p.steps.assign(n_steps, StepSpec{(t_end - t_start) / n_steps, m_terms, k_terms});
    p.backend = backend;
    p.tolerance = tolerance;
    p.max_iterations = max_iterations;
    p.output_times = std::move(output_times);
    validate_plan(p);
    return p;
}

inline void validate_plan(const TimeStepPlan& plan) {
    if (plan.steps.empty()) throw std::invalid_argument("plan: no steps");
    for (const auto& s : plan.steps) {
        if (!(s.dt > 0.0)) throw std::invalid_argument("plan: dt <= 0");
        if (s.m_terms < 2 || s.m_terms > 20) throw std::invalid_argument("plan: M outside [2,20]");
        if (s.k_terms < 1 || s.k_terms > 40) throw std::invalid_argument("plan: K outside [1,40]");
    }
    if (!(plan.tolerance > 0.0)) throw std::invalid_argument("plan: tolerance <= 0");
    const double tend = plan.t_end();
    double prev = plan.t_start;
    for (double t : plan.output_times) {
        if (t < prev) throw std::invalid_argument("plan: output times unsorted or early");
        if (t > tend + 1e-9 * (tend - plan.t_start))
            throw std::invalid_argument("plan: output time beyond final time");
        prev = t;
    }
}

// Per-step internal grids: boundary-including Chebyshev nodes in ascending
// order; the last node of step k is bitwise the first node of step k+1.
inline std::vector<Eigen::VectorXd> build_time_grid(const TimeStepPlan& plan) {
    validate_plan(plan);
    std::vector<Eigen::VectorXd> grid;
    grid.reserve(plan.steps.size());
    double start = plan.t_start;
    for (const auto& s : plan.steps) {
        Eigen::VectorXd tau = cheb_nodes(ChebKind::Lobatto, s.m_terms, 0.0, s.dt, true).nodes;
        grid.push_back(tau.array() + start);
        start += s.dt;
    }
    return grid;
}

struct PropagationError : std::runtime_error {
    PropagationError(const std::string& what, int step_index, int iteration)
        : std::runtime_error(what), step(step_index), iteration(iteration) {}
    int step;
    int iteration;
};

struct StepDiagnostics {
    int iterations = 0;
    double conv_error = 0.0;      // relative edge movement of the last iteration
    double e_int_rel = 0.0;       // time-discretization estimate
    double e_fm_rel = 0.0;        // function-of-matrix estimate, relative to ||u||
    double fm_stability_ratio = 0.0;  // E^fm / ||ftilde_M vtilde_M||
    bool stability_flagged = false;   // ratio >= 1e-5
    double norm = 0.0;            // ||u|| at the step edge
};

struct PropagationReport {
    std::vector<Eigen::VectorXcd> solutions;  // one per requested output time
    std::vector<StepDiagnostics> steps;
    std::uint64_t operator_applications = 0;
};

struct StepWorkspace {
    // geometry
    int index = 0;
    double t0 = 0.0, dt = 0.0;
    int m_terms = 0, k_terms = 0;
    Eigen::VectorXd tau;  // local node offsets, tau[0] = 0, tau[M-1] = dt
    int mid = 0;          // M \ 2

    // iterate state
    std::vector<Eigen::VectorXcd> u_nodes;
    Eigen::VectorXcd u_mid_frozen;      // midpoint iterate the operator was frozen at
    Eigen::MatrixXcd s_ext;             // sampled extended source, N x M
    Eigen::MatrixXcd expansion_coeffs;  // time-expansion coefficients of s_ext
    Eigen::MatrixXcd s_tilde;           // N x M
    Eigen::MatrixXcd v_tilde;           // N x (M+1)
    FunmatExpansion fm;                 // built on vtilde_M, reused for every offset
    ChebGrid time_grid;                 // Chebyshev time basis only

    int iterations = 0;
    double conv_error = std::numeric_limits<double>::infinity();
    double fm_rel_probe = 0.0;      // scalar-probe / Arnoldi estimate at the edge
    double fm_term_edge_norm = 0.0; // ||ftilde_M(Gtilde, dt) vtilde_M||
};

namespace sg_detail {

inline void extended_source(const GeneratorSpec& gen, const Eigen::VectorXcd& u, double t,
                            const Eigen::VectorXcd& u_mid, double t_mid,
                            Eigen::VectorXcd& out) {
    out = gen.source_at(t);
    Eigen::VectorXcd tmp(gen.dim);
    if (gen.diag_difference) {
        gen.diag_difference(u, t, u_mid, t_mid, u, tmp);
        out += tmp;
    } else {
        gen.apply(u, t, u, tmp);
        out += tmp;
        gen.apply(u_mid, t_mid, u, tmp);
        out -= tmp;
    }
}

// u(tau) for the current expansion: funmat term plus the tau-power sum.
inline Eigen::VectorXcd eval_solution(const StepWorkspace& ws, double tau) {
    const int m = ws.m_terms;
    Eigen::VectorXcd u =
        funmat_apply(ws.fm, [&](Complex z) { return fmt_eval(m, z, tau); });
    double pw = 1.0;
    for (int j = 0; j < m; ++j) {
        u += pw * ws.v_tilde.col(j);
        pw *= tau;
    }
    return u;
}

inline Eigen::VectorXcd newton_interp_at(const StepWorkspace& ws, double tau) {
    NewtonTable<Eigen::VectorXcd> t;
    const double scale = 4.0 / ws.dt;
    t.scale = scale;
    t.points = (ws.tau * scale).cast<Complex>();
    t.dd.reserve(ws.m_terms);
    for (int n = 0; n < ws.m_terms; ++n) t.dd.push_back(ws.expansion_coeffs.col(n));
    return newton_eval(t, Complex(tau, 0.0));
}

}  // namespace sg_detail

// One fixed-point iteration of a step. u_nodes must hold the current guess or
// the previous iterate; afterwards it holds the refreshed solution at the
// internal nodes and ws.fm/v_tilde describe the refreshed expansion.
inline void step_once(StepWorkspace& ws, const GeneratorSpec& gen,
                      const FunMatBackend& backend, ConversionCache& cache,
                      TimeBasis basis) {
    const int m = ws.m_terms;
    const int k = ws.k_terms;
    const Eigen::Index n = gen.dim;
    const double t_mid = ws.t0 + ws.tau[ws.mid];

    ws.u_mid_frozen = ws.u_nodes[ws.mid];

    // (i) extended source at the nodes; exactly s(t_mid) at the midpoint
    Eigen::MatrixXcd& s_ext = ws.s_ext;
    s_ext.resize(n, m);
    Eigen::VectorXcd col(n);
    for (int l = 0; l < m; ++l) {
        if (l == ws.mid) {
            s_ext.col(l) = gen.source_at(t_mid);
            continue;
        }
        sg_detail::extended_source(gen, ws.u_nodes[l], ws.t0 + ws.tau[l], ws.u_mid_frozen,
                                   t_mid, col);
        s_ext.col(l) = col;
    }

    // (ii)+(iii) time expansion of s_ext and conversion to stilde_m
    if (basis == TimeBasis::Chebyshev) {
        ws.time_grid = cheb_nodes(ChebKind::Lobatto, m, 0.0, ws.dt, true);
        ws.expansion_coeffs = cheb_coeffs<Complex>(s_ext, ws.time_grid).coeffs;
        const ConversionMatrix& conv = cache.cheb(0.0, ws.dt, m, /*tilde=*/true);
        ws.s_tilde = apply_conversion<Complex>(conv, ws.expansion_coeffs);
    } else {
        std::vector<Eigen::VectorXcd> vals(m);
        for (int l = 0; l < m; ++l) vals[l] = s_ext.col(l);
        auto table =
            divided_differences(Eigen::VectorXcd(ws.tau.cast<Complex>()), vals, 4.0 / ws.dt);
        ws.expansion_coeffs.resize(n, m);
        for (int l = 0; l < m; ++l) ws.expansion_coeffs.col(l) = table.dd[l];
        const ConversionMatrix& conv = cache.newton(ws.tau, ws.dt, m, /*tilde=*/true);
        ws.s_tilde = apply_conversion<Complex>(conv, ws.expansion_coeffs);
    }

    // (iv) vtilde recursion with the frozen midpoint operator
    OperatorHandle frozen(n, [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        gen.apply(ws.u_mid_frozen, t_mid, x, y);
    });
    ws.v_tilde.resize(n, m + 1);
    ws.v_tilde.col(0) = ws.u_nodes[0];
    for (int j = 1; j <= m; ++j)
        ws.v_tilde.col(j) = (frozen(ws.v_tilde.col(j - 1)) + ws.s_tilde.col(j - 1)) / double(j);

    // (v) one function-of-matrix expansion reused for every time offset
    switch (backend.kind) {
        case FunMatKind::NewtonCheb:
            ws.fm = funmat_newton_expansion(frozen, ws.v_tilde.col(m), backend.domain, k);
            break;
        case FunMatKind::ChebSeries:
            ws.fm = funmat_cheb_expansion(frozen, ws.v_tilde.col(m), backend.domain, k);
            break;
        case FunMatKind::Arnoldi:
            ws.fm = arnoldi_expansion(arnoldi_decompose(frozen, ws.v_tilde.col(m), k - 1));
            break;
    }

    const Eigen::VectorXcd u_old_edge = ws.u_nodes[m - 1];

    // (vi) refresh the nodes; tau = 0 reproduces u_nodes[0] identically
    for (int l = 1; l < m; ++l) ws.u_nodes[l] = sg_detail::eval_solution(ws, ws.tau[l]);

    const double old_norm = u_old_edge.norm();
    const double diff = (ws.u_nodes[m - 1] - u_old_edge).norm();
    ws.conv_error = old_norm > 0.0 ? diff / old_norm : diff;
    ++ws.iterations;

    // function-of-matrix quality at the edge, for App-D style diagnostics
    auto fmt_edge = [&](Complex z) { return fmt_eval(m, z, ws.dt); };
    if (backend.kind == FunMatKind::Arnoldi) {
        auto applied = funmat_apply_estimate(ws.fm, fmt_edge);
        ws.fm_term_edge_norm = applied.u.norm();
        ws.fm_rel_probe = applied.rel_error;
    } else {
        const auto& nodes = ws.fm.grid.nodes;
        Eigen::VectorXcd test(std::max<Eigen::Index>(nodes.size() - 1, 1));
        if (nodes.size() < 2)
            test[0] = ws.fm.sample_points[0];
        else
            for (Eigen::Index i = 0; i + 1 < nodes.size(); ++i)
                test[i] = backend.domain.point(0.5 * (nodes[i] + nodes[i + 1]));
        ws.fm_rel_probe = funmat_scalar_rel_error(ws.fm, fmt_edge, test);
        ws.fm_term_edge_norm = funmat_apply(ws.fm, fmt_edge).norm();
    }

    if (!ws.u_nodes[m - 1].allFinite())
        throw PropagationError("semi-global iteration produced non-finite state", ws.index,
                               ws.iterations);
}

struct StepErrorEstimates {
    double e_conv = 0.0;
    double e_int_rel = 0.0;
    double e_fm_rel = 0.0;
    double fm_stability_ratio = 0.0;
};

// Appendix-D three-way local error split. Costs one extra s_ext evaluation
// at a probe point between t_mid and its neighbouring node.
inline StepErrorEstimates estimate_step_errors(StepWorkspace& ws, const GeneratorSpec& gen,
                                               TimeBasis basis) {
    StepErrorEstimates e;
    e.e_conv = ws.conv_error;

    const int m = ws.m_terms;
    const int probe_hi = (ws.mid + 1 < m) ? ws.mid + 1 : ws.mid;
    const int probe_lo = (ws.mid + 1 < m) ? ws.mid : ws.mid - 1;
    const double tau_max = 0.5 * (ws.tau[probe_lo] + ws.tau[probe_hi]);
    const double t_mid = ws.t0 + ws.tau[ws.mid];

    const Eigen::VectorXcd u_probe = sg_detail::eval_solution(ws, tau_max);
    Eigen::VectorXcd s_exact(gen.dim);
    sg_detail::extended_source(gen, u_probe, ws.t0 + tau_max, ws.u_mid_frozen, t_mid,
                               s_exact);

    Eigen::VectorXcd s_interp;
    if (basis == TimeBasis::Chebyshev) {
        ChebSeries<Complex> series;
        series.coeffs = ws.expansion_coeffs;
        series.kind = ws.time_grid.kind;
        series.reversed = ws.time_grid.reversed;
        series.x_min = ws.time_grid.x_min;
        series.x_max = ws.time_grid.x_max;
        s_interp = cheb_eval(series, tau_max).value;
    } else {
        s_interp = sg_detail::newton_interp_at(ws, tau_max);
    }

    const double u_edge_norm = ws.u_nodes[m - 1].norm();
    const double denom = u_edge_norm > 0.0 ? u_edge_norm : 1.0;
    e.e_int_rel = (s_interp - s_exact).norm() * ws.dt / denom;
    e.fm_stability_ratio = ws.fm_rel_probe;
    e.e_fm_rel = ws.fm_rel_probe * ws.fm_term_edge_norm / denom;
    return e;
}

// Full propagation. Benchmark mode (max_iterations = 1) performs a single
// iteration per step except the first, which iterates to the round-off floor.
inline PropagationReport propagate(const Eigen::VectorXcd& u0, const GeneratorSpec& gen,
                                   const TimeStepPlan& plan) {
    validate_plan(plan);
    if (!u0.allFinite()) throw std::invalid_argument("propagate: non-finite initial state");

    const bool benchmark = plan.max_iterations == 1;
    const std::uint64_t count_at_entry = gen.apply_count;
    const double norm0 = u0.norm();

    ConversionCache cache;
    PropagationReport report;
    report.solutions.reserve(plan.output_times.size());
    std::size_t out_idx = 0;

    StepWorkspace ws;
    double t_cursor = plan.t_start;
    Eigen::VectorXcd u_entry = u0;
    std::vector<Eigen::VectorXcd> guess;  // nodes of the upcoming step

    for (std::size_t k = 0; k < plan.steps.size(); ++k) {
        const StepSpec& spec = plan.steps[k];
        ws.index = int(k);
        ws.t0 = t_cursor;
        ws.dt = spec.dt;
        ws.m_terms = spec.m_terms;
        ws.k_terms = spec.k_terms;
        ws.tau = cheb_nodes(ChebKind::Lobatto, spec.m_terms, 0.0, spec.dt, true).nodes;
        ws.mid = spec.m_terms / 2;
        ws.iterations = 0;
        ws.conv_error = std::numeric_limits<double>::infinity();

        if (k == 0 || int(guess.size()) != spec.m_terms) {
            ws.u_nodes.assign(spec.m_terms, u_entry);  // constant first guess
        } else {
            ws.u_nodes = guess;
            ws.u_nodes[0] = u_entry;
        }

        const bool first = (k == 0);
        const int allowed = (first || !benchmark) ? plan.iteration_cap : 1;
        const double eps = (first && benchmark) ? 1e-15 : plan.tolerance;

        double prev_metric = std::numeric_limits<double>::infinity();
        // growth is judged against the step entry; a forced problem may start
        // from an exactly zero state, whose scale is set by the first iterate
        double step_scale = std::max(norm0, u_entry.norm());
        bool converged = false;
        for (int it = 0; it < allowed; ++it) {
            step_once(ws, gen, plan.backend, cache, plan.time_basis);
            const double edge_norm = ws.u_nodes[spec.m_terms - 1].norm();
            if (step_scale == 0.0)
                step_scale = edge_norm;
            else if (edge_norm > 1e10 * step_scale)
                throw PropagationError(
                    "divergence with propagation detected (norm growth > 1e10); "
                    "reduce the time step or raise K",
                    int(k), ws.iterations);
            if (ws.conv_error <= eps) {
                converged = true;
                break;
            }
            // round-off floor: the metric stopped improving at a negligible level
            if (ws.conv_error <= 1e-12 && ws.conv_error >= 0.9 * prev_metric) {
                converged = true;
                break;
            }
            prev_metric = ws.conv_error;
        }
        if (!converged && !benchmark && plan.max_iterations == 0)
            throw PropagationError(
                "fixed-point iteration failed to converge within the cap; "
                "the step is likely outside the convergence radius -- reduce dt",
                int(k), ws.iterations);

        auto est = estimate_step_errors(ws, gen, plan.time_basis);
        StepDiagnostics diag;
        diag.iterations = ws.iterations;
        diag.conv_error = est.e_conv;
        diag.e_int_rel = est.e_int_rel;
        diag.e_fm_rel = est.e_fm_rel;
        diag.fm_stability_ratio = est.fm_stability_ratio;
        diag.stability_flagged = est.fm_stability_ratio >= 1e-5;
        diag.norm = ws.u_nodes[spec.m_terms - 1].norm();
        report.steps.push_back(diag);

        // dense output inside this step; a shared boundary belongs to the
        // earlier step
        const double edge_time = ws.t0 + ws.dt;
        const double slack = 1e-12 * std::max(1.0, std::abs(edge_time));
        while (out_idx < plan.output_times.size() &&
               (plan.output_times[out_idx] <= edge_time + slack ||
                k + 1 == plan.steps.size())) {
            const double tp = plan.output_times[out_idx];
            report.solutions.push_back(sg_detail::eval_solution(ws, tp - ws.t0));
            ++out_idx;
        }

        u_entry = ws.u_nodes[spec.m_terms - 1];
        t_cursor += spec.dt;

        // extrapolated guess for the next step's interior nodes
        if (k + 1 < plan.steps.size()) {
            const StepSpec& next = plan.steps[k + 1];
            Eigen::VectorXd next_tau =
                cheb_nodes(ChebKind::Lobatto, next.m_terms, 0.0, next.dt, true).nodes;
            guess.assign(next.m_terms, u_entry);
            for (int l = 1; l < next.m_terms; ++l)
                guess[l] = sg_detail::eval_solution(ws, ws.dt + next_tau[l]);
        }
    }

    report.operator_applications = gen.apply_count - count_at_entry;
    return report;
}

}  // namespace semiglobal

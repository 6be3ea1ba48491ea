#pragma once

// Fixed-step Euler and classical RK4 over the same GeneratorSpec, used as
// baselines and as fine-step oracles. g(u,t) = G(u,t) u + s(t) throughout,
// so operator applications stay directly comparable.

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

#include "propagator.hpp"

namespace semiglobal {

struct FixedStepPlan {
    double t_start = 0.0;
    double dt = 0.0;
    long n_steps = 0;
    long output_stride = 0;  // record every stride'th state; 0 = final only
};

namespace ref_detail {

inline Eigen::VectorXcd rhs(const GeneratorSpec& gen, const Eigen::VectorXcd& u, double t) {
    Eigen::VectorXcd y(gen.dim);
    gen.apply(u, t, u, y);
    if (gen.source) y += gen.source(t);
    return y;
}

}  // namespace ref_detail

inline Eigen::VectorXcd euler_step(const Eigen::VectorXcd& u, double t, double dt,
                                   const GeneratorSpec& gen) {
    return u + dt * ref_detail::rhs(gen, u, t);
}

inline Eigen::VectorXcd rk4_step(const Eigen::VectorXcd& u, double t, double dt,
                                 const GeneratorSpec& gen) {
    const Eigen::VectorXcd k1 = dt * ref_detail::rhs(gen, u, t);
    const Eigen::VectorXcd k2 = dt * ref_detail::rhs(gen, u + 0.5 * k1, t + 0.5 * dt);
    const Eigen::VectorXcd k3 = dt * ref_detail::rhs(gen, u + 0.5 * k2, t + 0.5 * dt);
    const Eigen::VectorXcd k4 = dt * ref_detail::rhs(gen, u + k3, t + dt);
    return u + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXcd> states;  // per stride plus the final state
};

inline Trajectory rk4_propagate(const Eigen::VectorXcd& u0, const GeneratorSpec& gen,
                                const FixedStepPlan& plan) {
    if (!(plan.dt > 0.0) || plan.n_steps < 1)
        throw std::invalid_argument("rk4_propagate: bad plan");
    Trajectory out;
    Eigen::VectorXcd u = u0;
    double t = plan.t_start;
    for (long i = 0; i < plan.n_steps; ++i) {
        u = rk4_step(u, t, plan.dt, gen);
        t = plan.t_start + (i + 1) * plan.dt;
        if (!u.allFinite())
            throw std::runtime_error("rk4_propagate: divergence at step " + std::to_string(i));
        if ((plan.output_stride > 0 && (i + 1) % plan.output_stride == 0) ||
            i + 1 == plan.n_steps) {
            out.times.push_back(t);
            out.states.push_back(u);
        }
    }
    return out;
}

}  // namespace semiglobal

#pragma once

// Divided differences and Newton-form interpolation. Sampling abscissae are
// held in rescaled coordinates (factor 4/dx on a real interval, 1/rho on the
// complex plane) while function values stay unscaled; this keeps the
// divided-difference magnitudes balanced at high orders.

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace semiglobal {

// Value is std::complex<double> for scalar data or Eigen::VectorXcd for
// vector-valued samples; divided differences act componentwise.
template <typename Value>
struct NewtonTable {
    Eigen::VectorXcd points;  // abscissae, already multiplied by `scale`
    std::vector<Value> dd;    // a_n = f[x_0..x_n] in the scaled coordinates
    double scale = 1.0;
};

namespace newton_detail {

inline double magnitude(const std::complex<double>& v) { return std::abs(v); }
inline double magnitude(const Eigen::VectorXcd& v) { return v.norm(); }

}  // namespace newton_detail

// Triangular in-place recursion f[x_i..x_j] = (f[x_{i+1}..x_j]-f[x_i..x_{j-1}])/(x_j-x_i).
template <typename Value>
NewtonTable<Value> divided_differences(const Eigen::VectorXcd& points,
                                       const std::vector<Value>& values,
                                       double scale = 1.0) {
    const int n = int(points.size());
    if (int(values.size()) != n)
        throw std::invalid_argument("divided_differences: points/values length mismatch");
    if (n == 0) throw std::invalid_argument("divided_differences: empty input");

    NewtonTable<Value> t;
    t.scale = scale;
    t.points = points * scale;
    t.dd = values;
    for (int order = 1; order < n; ++order) {
        for (int k = n - 1; k >= order; --k) {
            const std::complex<double> den = t.points[k] - t.points[k - order];
            if (den == std::complex<double>(0.0, 0.0))
                throw std::invalid_argument("divided_differences: repeated abscissa");
            t.dd[k] = (t.dd[k] - t.dd[k - 1]) / den;
        }
    }
    return t;
}

inline NewtonTable<std::complex<double>> divided_differences(
    const Eigen::VectorXd& points, const Eigen::VectorXd& values, double scale = 1.0) {
    std::vector<std::complex<double>> v(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) v[i] = values[i];
    return divided_differences(Eigen::VectorXcd(points.cast<std::complex<double>>()), v,
                               scale);
}

// Horner accumulation a_0 + (xb-xb_0)(a_1 + (xb-xb_1)(...)), xb = scale*x.
template <typename Value>
Value newton_eval(const NewtonTable<Value>& t, std::complex<double> x) {
    const int n = int(t.dd.size());
    const std::complex<double> xb = t.scale * x;
    Value acc = t.dd[n - 1];
    for (int k = n - 2; k >= 0; --k) acc = (xb - t.points[k]) * acc + t.dd[k];
    return acc;
}

struct CapacityResult {
    double rho = 1.0;
    bool degenerate = false;  // reference point coincided with a node
};

// rho = (prod_n |z_p - z_n|)^(1/(N+1)); zero factors are skipped and flagged.
inline CapacityResult capacity(const Eigen::VectorXcd& points,
                               std::complex<double> reference) {
    const int n = int(points.size());
    if (n < 2) throw std::invalid_argument("capacity: need at least 2 points");
    CapacityResult r;
    double log_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(reference - points[i]);
        if (d == 0.0)
            r.degenerate = true;
        else
            log_sum += std::log(d);
    }
    r.rho = std::exp(log_sum / n);
    return r;
}

}  // namespace semiglobal

#pragma once

// Conversion of Newton or Chebyshev expansion coefficients of a time signal
// into Taylor-like coefficients: either s_m (coefficients of t^m/m!) or the
// numerically preferable stilde_m (coefficients of t^m, the m! absorbed).

#include <Eigen/Core>

#include <map>
#include <memory>
#include <stdexcept>
#include <tuple>

namespace semiglobal {

enum class ConversionKind { NewtonLen4, ChebDomain };

// Row n holds the monomial coefficients of the n'th expansion polynomial:
//   P_n(t) = sum_m q(n,m) t^m/m!   (tilde=false)
//   P_n(t) = sum_m q(n,m) t^m      (tilde=true)
// q is lower triangular: q(n,m) = 0 for m > n, and row 0 is [1, 0, ...].
struct ConversionMatrix {
    ConversionKind kind = ConversionKind::ChebDomain;
    int order = 0;
    bool tilde = true;
    Eigen::MatrixXd q;
    double t_min = 0.0, t_max = 0.0;  // ChebDomain metadata
    Eigen::VectorXd points;           // NewtonLen4 sampling points (unscaled)
    double dt = 0.0;
};

// Newton basis R_{n+1}(t) = (4/dt)(t - t_n) R_n(t); the matching divided
// differences must be taken at the rescaled abscissae 4 t_l/dt.
inline ConversionMatrix newton_to_taylor_matrix(const Eigen::VectorXd& points, double dt,
                                                int order, bool tilde) {
    if (order < 1) throw std::invalid_argument("newton_to_taylor_matrix: order < 1");
    if (!(dt > 0.0)) throw std::invalid_argument("newton_to_taylor_matrix: dt <= 0");
    if (int(points.size()) < order)
        throw std::invalid_argument("newton_to_taylor_matrix: too few sampling points");

    ConversionMatrix c;
    c.kind = ConversionKind::NewtonLen4;
    c.order = order;
    c.tilde = tilde;
    c.points = points;
    c.dt = dt;
    c.q = Eigen::MatrixXd::Zero(order, order);
    c.q(0, 0) = 1.0;
    const double fac = 4.0 / dt;
    for (int n = 0; n + 1 < order; ++n) {
        const double tn = points[n];
        c.q(n + 1, 0) = -fac * tn * c.q(n, 0);
        for (int m = 1; m <= n; ++m) {
            const double prev = tilde ? c.q(n, m - 1) : m * c.q(n, m - 1);
            c.q(n + 1, m) = fac * (prev - tn * c.q(n, m));
        }
        c.q(n + 1, n + 1) = fac * (tilde ? c.q(n, n) : (n + 1) * c.q(n, n));
    }
    return c;
}

// phi_n(t) = T_n((2t - t_min - t_max)/dt), three-term recurrences per order.
inline ConversionMatrix cheb_to_taylor_matrix(double t_min, double t_max, int order,
                                              bool tilde) {
    if (order < 1) throw std::invalid_argument("cheb_to_taylor_matrix: order < 1");
    if (!(t_min < t_max)) throw std::domain_error("cheb_to_taylor_matrix: degenerate domain");

    ConversionMatrix c;
    c.kind = ConversionKind::ChebDomain;
    c.order = order;
    c.tilde = tilde;
    c.t_min = t_min;
    c.t_max = t_max;
    c.dt = t_max - t_min;
    c.q = Eigen::MatrixXd::Zero(order, order);

    const double dt = c.dt;
    const double shift = 2.0 * (t_min + t_max) / dt;
    const double fac = 4.0 / dt;
    c.q(0, 0) = 1.0;
    if (order > 1) {
        c.q(1, 0) = -(t_min + t_max) / dt;
        c.q(1, 1) = 2.0 / dt;
    }
    for (int n = 1; n + 1 < order; ++n) {
        c.q(n + 1, 0) = -shift * c.q(n, 0) - c.q(n - 1, 0);
        for (int m = 1; m <= n - 1; ++m) {
            const double prev = tilde ? c.q(n, m - 1) : m * c.q(n, m - 1);
            c.q(n + 1, m) = fac * prev - shift * c.q(n, m) - c.q(n - 1, m);
        }
        if (n >= 1) {
            const double prev = tilde ? c.q(n, n - 1) : n * c.q(n, n - 1);
            c.q(n + 1, n) = fac * prev - shift * c.q(n, n);
        }
        c.q(n + 1, n + 1) = fac * (tilde ? c.q(n, n) : (n + 1) * c.q(n, n));
    }
    return c;
}

// s_m = sum_{n>=m} q(n,m) b_n, componentwise for vector-valued b (columns).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> apply_conversion(
    const ConversionMatrix& c,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
    if (int(b.cols()) != c.order)
        throw std::invalid_argument("apply_conversion: coefficient count != order");
    return b * c.q.cast<Scalar>();
}

inline Eigen::VectorXd apply_conversion(const ConversionMatrix& c,
                                        const Eigen::VectorXd& b) {
    if (int(b.size()) != c.order)
        throw std::invalid_argument("apply_conversion: coefficient count != order");
    return c.q.transpose() * b;
}

// Matrices depend only on the step geometry, so equidistant plans reuse one
// instance. Lookups are not synchronized; keep one cache per propagation run.
class ConversionCache {
  public:
    const ConversionMatrix& cheb(double t_min, double t_max, int order, bool tilde) {
        auto key = std::make_tuple(t_min, t_max, order, tilde);
        auto it = cheb_.find(key);
        if (it == cheb_.end())
            it = cheb_
                     .emplace(key, std::make_unique<ConversionMatrix>(
                                       cheb_to_taylor_matrix(t_min, t_max, order, tilde)))
                     .first;
        return *it->second;
    }

    const ConversionMatrix& newton(const Eigen::VectorXd& points, double dt, int order,
                                   bool tilde) {
        auto key = std::make_tuple(points[0], points[points.size() - 1], dt, order, tilde);
        auto it = newton_.find(key);
        if (it == newton_.end())
            it = newton_
                     .emplace(key, std::make_unique<ConversionMatrix>(
                                       newton_to_taylor_matrix(points, dt, order, tilde)))
                     .first;
        return *it->second;
    }

  private:
    std::map<std::tuple<double, double, int, bool>, std::unique_ptr<ConversionMatrix>> cheb_;
    std::map<std::tuple<double, double, double, int, bool>,
             std::unique_ptr<ConversionMatrix>>
        newton_;
};

}  // namespace semiglobal

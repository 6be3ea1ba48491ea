#pragma once

// Chebyshev sampling grids (Gauss and Lobatto families, either ordering),
// discrete-cosine coefficient computation and series evaluation on an
// arbitrary interval [x_min, x_max].

#include <Eigen/Core>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace semiglobal {

enum class ChebKind {
    Gauss,    // interior points cos((2j+1)pi/(2n)), endpoints excluded
    Lobatto,  // extrema cos(j pi/(n-1)), both endpoints included
};

struct ChebGrid {
    ChebKind kind = ChebKind::Lobatto;
    bool reversed = true;  // reversed=true -> nodes ascending in x
    int n_points = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    Eigen::VectorXd nodes;
};

// Nodes of the reference domain [-1,1] mapped affinely onto [x_min, x_max]:
//   x_j = (y_j * dx + x_min + x_max) / 2
inline ChebGrid cheb_nodes(ChebKind kind, int n_points, double x_min, double x_max,
                           bool reversed) {
    if (!(x_min < x_max))
        throw std::domain_error("cheb_nodes: degenerate domain (x_min >= x_max)");
    const int min_pts = (kind == ChebKind::Lobatto) ? 2 : 1;
    if (n_points < min_pts)
        throw std::invalid_argument("cheb_nodes: too few points for requested kind");

    ChebGrid g;
    g.kind = kind;
    g.reversed = reversed;
    g.n_points = n_points;
    g.x_min = x_min;
    g.x_max = x_max;
    g.nodes.resize(n_points);
    const double dx = x_max - x_min;
    const double sign = reversed ? -1.0 : 1.0;

    // reference nodes built symmetrically, so mirrored points are exact
    // negations and a reversed grid is the bitwise mirror of the unreversed
    Eigen::VectorXd base(n_points);
    if (kind == ChebKind::Lobatto) {
        const int deg = n_points - 1;
        for (int j = 0; 2 * j <= deg; ++j) {
            const double c = std::cos(double(j) * M_PI / deg);
            base[j] = c;
            base[deg - j] = -c;
        }
        if (deg % 2 == 0) base[deg / 2] = 0.0;
    } else {
        for (int j = 0; 2 * j + 1 < n_points; ++j) {
            const double c = std::cos((2.0 * j + 1.0) * M_PI / (2.0 * n_points));
            base[j] = c;
            base[n_points - 1 - j] = -c;
        }
        if (n_points % 2 == 1) base[n_points / 2] = 0.0;
    }

    for (int j = 0; j < n_points; ++j)
        g.nodes[j] = 0.5 * (sign * base[j] * dx + x_min + x_max);
    return g;
}

// Truncated expansion f(x) ~ sum_n coeffs(:,n) T_n(y(x)). Rows are vector
// components (one row for a scalar function).
template <typename Scalar>
struct ChebSeries {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> coeffs;
    ChebKind kind = ChebKind::Lobatto;
    bool reversed = true;
    double x_min = 0.0;
    double x_max = 0.0;

    int order() const { return int(coeffs.cols()); }
};

using ChebCoeffs = ChebSeries<std::complex<double>>;

namespace detail {

// DCT-I (Lobatto) / DCT-II (Gauss) for samples stored in descending-x order.
// Direct O(n^2) summation up to n=32, FFTW r2r transforms above.
inline void dct_rows_real(Eigen::MatrixXd& data, ChebKind kind) {
    const int n = int(data.cols());
    const auto beta = [n](int j) { return (j == 0 || j == n - 1) ? 2.0 : 1.0; };
    const auto alpha = [](int j) { return j == 0 ? 2.0 : 1.0; };

    if (n <= 32) {
        Eigen::MatrixXd w(n, n);
        if (kind == ChebKind::Lobatto) {
            const int deg = n - 1;
            for (int j = 0; j < n; ++j)
                for (int m = 0; m < n; ++m)
                    w(j, m) = 2.0 / (deg * beta(m) * beta(j)) *
                              std::cos(double(m) * j * M_PI / deg);
        } else {
            for (int j = 0; j < n; ++j)
                for (int m = 0; m < n; ++m)
                    w(j, m) = 2.0 / (n * alpha(m)) *
                              std::cos(double(m) * (2.0 * j + 1.0) * M_PI / (2.0 * n));
        }
        data = (data * w).eval();
        return;
    }

    std::vector<double> buf(n);
    const int fftw_kind = (kind == ChebKind::Lobatto) ? FFTW_REDFT00 : FFTW_REDFT10;
    fftw_plan plan = fftw_plan_r2r_1d(n, buf.data(), buf.data(),
                                      fftw_r2r_kind(fftw_kind), FFTW_ESTIMATE);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (int j = 0; j < n; ++j) buf[j] = data(r, j);
        fftw_execute_r2r(plan, buf.data(), buf.data());
        if (kind == ChebKind::Lobatto) {
            const int deg = n - 1;
            for (int m = 0; m < n; ++m) data(r, m) = buf[m] / (deg * beta(m));
        } else {
            for (int m = 0; m < n; ++m) data(r, m) = buf[m] / (n * alpha(m));
        }
    }
    fftw_destroy_plan(plan);
}

inline void dct_rows(Eigen::MatrixXd& data, ChebKind kind) { dct_rows_real(data, kind); }

inline void dct_rows(Eigen::MatrixXcd& data, ChebKind kind) {
    Eigen::MatrixXd re = data.real(), im = data.imag();
    dct_rows_real(re, kind);
    dct_rows_real(im, kind);
    data = re.cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
}

}  // namespace detail

// Coefficients from samples taken at the grid nodes (column j of `samples`
// is the value at nodes[j]). A reversed grid is handled by restoring the
// descending node order before the transform, which reproduces the
// unreversed coefficients exactly.
template <typename Scalar>
ChebSeries<Scalar> cheb_coeffs(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& samples,
    const ChebGrid& grid) {
    if (int(samples.cols()) != grid.n_points)
        throw std::invalid_argument("cheb_coeffs: sample count differs from grid size");

    ChebSeries<Scalar> out;
    out.kind = grid.kind;
    out.reversed = grid.reversed;
    out.x_min = grid.x_min;
    out.x_max = grid.x_max;
    out.coeffs = grid.reversed ? samples.rowwise().reverse().eval() : samples;
    detail::dct_rows(out.coeffs, grid.kind);
    return out;
}

template <typename Scalar>
ChebSeries<Scalar> cheb_coeffs(const Eigen::Vector<Scalar, Eigen::Dynamic>& samples,
                               const ChebGrid& grid) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m = samples.transpose();
    return cheb_coeffs<Scalar>(m, grid);
}

template <typename Scalar>
struct ChebEval {
    Eigen::Vector<Scalar, Eigen::Dynamic> value;
    bool extrapolated = false;
};

// Forward three-term recurrence T_{n+1}(y) = 2y T_n(y) - T_{n-1}(y).
template <typename Scalar>
ChebEval<Scalar> cheb_eval(const ChebSeries<Scalar>& s, double x) {
    const double dx = s.x_max - s.x_min;
    const double y = (2.0 * x - s.x_min - s.x_max) / dx;

    ChebEval<Scalar> r;
    r.extrapolated = std::abs(y) > 1.0 + 16.0 * std::numeric_limits<double>::epsilon();
    const int n = s.order();
    r.value = s.coeffs.col(0);
    if (n == 1) return r;
    double t_prev = 1.0, t_cur = y;
    r.value += t_cur * s.coeffs.col(1);
    for (int m = 2; m < n; ++m) {
        const double t_next = 2.0 * y * t_cur - t_prev;
        r.value += t_next * s.coeffs.col(m);
        t_prev = t_cur;
        t_cur = t_next;
    }
    return r;
}

template <typename Scalar>
Scalar cheb_eval_scalar(const ChebSeries<Scalar>& s, double x) {
    return cheb_eval(s, x).value(0);
}

}  // namespace semiglobal

#pragma once

// u = f(A) v for a matrix-free linear operator A, via one of three routes:
//   - Newton interpolation at the Chebyshev points of a (real or imaginary)
//     eigenvalue interval, on a length-4 rescaled domain,
//   - Chebyshev series over the same interval,
//   - Arnoldi reduction to a small Krylov subspace, with an a-posteriori
//     error estimate from the next Newton term.
// All routes sample f at a small point set and combine a fixed family of
// expansion vectors, so one set of operator applications serves any number
// of functions f (in the propagator: all output times of a step).

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "cheb.hpp"
#include "newton.hpp"

namespace semiglobal {

using Complex = std::complex<double>;
using ScalarFn = std::function<Complex(Complex)>;

class OperatorHandle {
  public:
    using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

    OperatorHandle(Eigen::Index dim, ApplyFn apply)
        : dim_(dim), apply_(std::move(apply)) {}

    Eigen::Index dim() const { return dim_; }

    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
        ++count_;
        apply_(x, y);
    }

    Eigen::VectorXcd operator()(const Eigen::VectorXcd& x) const {
        Eigen::VectorXcd y(dim_);
        apply(x, y);
        return y;
    }

    std::uint64_t application_count() const { return count_; }

  private:
    Eigen::Index dim_;
    ApplyFn apply_;
    mutable std::uint64_t count_ = 0;
};

inline OperatorHandle make_matrix_operator(Eigen::MatrixXcd a) {
    const Eigen::Index n = a.rows();
    return OperatorHandle(n, [m = std::move(a)](const Eigen::VectorXcd& x,
                                                Eigen::VectorXcd& y) { y = m * x; });
}

enum class SpectralAxis { Real, Imaginary };

// Eigenvalue-interval estimate: the segment unit*[x_min, x_max] with
// unit = 1 (Real) or i (Imaginary). Must cover the spectrum of A.
struct SpectralDomain {
    SpectralAxis axis = SpectralAxis::Real;
    double x_min = 0.0;
    double x_max = 0.0;

    Complex unit() const {
        return axis == SpectralAxis::Real ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
    }
    Complex point(double x) const { return unit() * x; }
    double length() const { return x_max - x_min; }
};

// Crude |lambda|_max bound by power iteration on a random probe.
inline double estimate_spectral_radius(const OperatorHandle& op, int iters = 30,
                                       unsigned seed = 7) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXcd w(op.dim());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = Complex(gauss(rng), gauss(rng));
    w.normalize();
    double r = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXcd aw = op(w);
        r = aw.norm();
        if (r == 0.0) return 0.0;
        w = aw / r;
    }
    return r;
}

struct KrylovDecomposition {
    Eigen::MatrixXcd basis;          // Upsilon, N x n_basis, orthonormal columns
    Eigen::VectorXcd extra;          // upsilon_{L+1} (empty after breakdown)
    Eigen::MatrixXcd hess;           // Gamma, upper Hessenberg, n_basis x n_basis
    Complex hess_next{0.0, 0.0};     // Gamma_{L+1,L}
    double v_norm = 0.0;
    bool breakdown = false;          // Krylov space captured exactly

    int n_basis() const { return int(hess.rows()); }
};

// Modified Gram-Schmidt Arnoldi iteration; L+1 operator applications.
inline KrylovDecomposition arnoldi_decompose(const OperatorHandle& op,
                                             const Eigen::VectorXcd& v, int L) {
    if (L < 0) throw std::invalid_argument("arnoldi_decompose: negative order");
    if (L + 2 > op.dim())
        throw std::invalid_argument("arnoldi_decompose: subspace larger than operator");
    const double beta = v.norm();
    if (beta == 0.0) throw std::invalid_argument("arnoldi_decompose: zero input vector");

    const Eigen::Index n = op.dim();
    Eigen::MatrixXcd ups(n, L + 2);
    Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Zero(L + 2, L + 1);
    ups.col(0) = v / beta;

    KrylovDecomposition d;
    d.v_norm = beta;
    int m = L + 1;  // basis size actually built
    for (int j = 0; j <= L; ++j) {
        Eigen::VectorXcd w = op(ups.col(j));
        for (int i = 0; i <= j; ++i) {
            gamma(i, j) = ups.col(i).dot(w);  // <ups_i, w>, conjugate-linear in ups_i
            w -= gamma(i, j) * ups.col(i);
        }
        const double h = w.norm();
        gamma(j + 1, j) = h;
        if (h < 1e-14 * std::max(1.0, gamma.cwiseAbs().maxCoeff())) {
            d.breakdown = true;
            m = j + 1;
            break;
        }
        ups.col(j + 1) = w / h;
    }

    d.basis = ups.leftCols(m);
    d.hess = gamma.topLeftCorner(m, m);
    if (!d.breakdown) {
        d.extra = ups.col(L + 1);
        d.hess_next = gamma(L + 1, L);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Reusable expansion: N x K combine matrix plus the recipe for turning a
// scalar function into K expansion coefficients.

struct FunmatExpansion {
    enum class Kind { NewtonLine, ChebLine, ArnoldiKrylov };

    Kind kind = Kind::NewtonLine;
    Eigen::MatrixXcd combine;        // u = combine * coeffs(f)
    Eigen::VectorXcd sample_points;  // interpolation points z_j (unscaled)
    double dd_scale = 1.0;           // Newton kinds: 4/dx or 1/rho
    ChebGrid grid;                   // ChebLine only (real parametrization)
    SpectralAxis axis = SpectralAxis::Real;

    // Arnoldi extras for the truncation-error estimate
    Complex z_extra{0.0, 0.0};   // z_{L+1}, average of the Ritz values
    double mu_bar_norm = 0.0;    // f-independent factor of the next-term norm
    bool breakdown = false;
    bool degenerate_nodes = false;  // Ritz values had to be separated

    int terms() const { return int(combine.cols()); }
};

namespace funmat_detail {

inline Eigen::VectorXcd coefficients(const FunmatExpansion& e, const ScalarFn& f) {
    const int k = e.terms();
    if (e.kind == FunmatExpansion::Kind::ChebLine) {
        Eigen::VectorXcd vals(k);
        for (int j = 0; j < k; ++j) vals[j] = f(e.sample_points[j]);
        return cheb_coeffs<Complex>(vals, e.grid).coeffs.row(0).transpose();
    }
    std::vector<Complex> vals(k);
    for (int j = 0; j < k; ++j) vals[j] = f(e.sample_points[j]);
    auto table = divided_differences(e.sample_points, vals, e.dd_scale);
    return Eigen::Map<const Eigen::VectorXcd>(table.dd.data(), k);
}

}  // namespace funmat_detail

inline Eigen::VectorXcd funmat_apply(const FunmatExpansion& e, const ScalarFn& f) {
    return e.combine * funmat_detail::coefficients(e, f);
}

struct FunmatApplied {
    Eigen::VectorXcd u;
    double rel_error = 0.0;  // meaningful for the Arnoldi kind
};

// Arnoldi route with error estimate E = |a_{L+1}| ||mu_bar||, E_rel = E/||eta||.
inline FunmatApplied funmat_apply_estimate(const FunmatExpansion& e, const ScalarFn& f) {
    FunmatApplied r;
    if (e.kind != FunmatExpansion::Kind::ArnoldiKrylov || e.breakdown) {
        r.u = funmat_apply(e, f);
        r.rel_error = 0.0;
        return r;
    }
    const int k = e.terms();
    Eigen::VectorXcd pts(k + 1);
    pts.head(k) = e.sample_points;
    pts[k] = e.z_extra;
    std::vector<Complex> vals(k + 1);
    for (int j = 0; j <= k; ++j) vals[j] = f(pts[j]);
    auto table = divided_differences(pts, vals, e.dd_scale);
    Eigen::VectorXcd a = Eigen::Map<const Eigen::VectorXcd>(table.dd.data(), k);
    r.u = e.combine * a;
    const double eta_norm = r.u.norm();  // basis is orthonormal
    const double err = std::abs(table.dd[k]) * e.mu_bar_norm;
    r.rel_error = eta_norm > 0.0 ? err / eta_norm : err;
    return r;
}

// Interpolation quality of the expansion itself at scalar test points
// (relative to the largest |f| there); used as the E^fm probe.
inline double funmat_scalar_rel_error(const FunmatExpansion& e, const ScalarFn& f,
                                      const Eigen::VectorXcd& test_points) {
    Eigen::VectorXcd coef = funmat_detail::coefficients(e, f);
    double max_err = 0.0, max_mag = 0.0;
    for (Eigen::Index i = 0; i < test_points.size(); ++i) {
        const Complex z = test_points[i];
        Complex approx;
        if (e.kind == FunmatExpansion::Kind::ChebLine) {
            ChebSeries<Complex> s;
            s.coeffs = coef.transpose();
            s.kind = e.grid.kind;
            s.reversed = e.grid.reversed;
            s.x_min = e.grid.x_min;
            s.x_max = e.grid.x_max;
            const double x = (e.axis == SpectralAxis::Real) ? z.real() : z.imag();
            approx = cheb_eval_scalar(s, x);
        } else {
            NewtonTable<Complex> t;
            t.scale = e.dd_scale;
            t.points = e.sample_points * e.dd_scale;
            t.dd.assign(coef.data(), coef.data() + coef.size());
            approx = newton_eval(t, z);
        }
        const Complex exact = f(z);
        max_err = std::max(max_err, std::abs(approx - exact));
        max_mag = std::max(max_mag, std::abs(exact));
    }
    return max_mag > 0.0 ? max_err / max_mag : max_err;
}

namespace funmat_detail {

inline ChebGrid line_grid(const SpectralDomain& dom, int k) {
    // Boundary-including points for k >= 2, the single midpoint for k = 1.
    return (k >= 2) ? cheb_nodes(ChebKind::Lobatto, k, dom.x_min, dom.x_max, true)
                    : cheb_nodes(ChebKind::Gauss, 1, dom.x_min, dom.x_max, true);
}

}  // namespace funmat_detail

// K-term Newton expansion at Chebyshev points of the domain; K-1 applications.
inline FunmatExpansion funmat_newton_expansion(const OperatorHandle& op,
                                               const Eigen::VectorXcd& v,
                                               const SpectralDomain& dom, int terms) {
    if (terms < 1) throw std::invalid_argument("funmat_newton: terms < 1");
    if (!(dom.x_min < dom.x_max))
        throw std::domain_error("funmat_newton: degenerate spectral domain");

    FunmatExpansion e;
    e.kind = FunmatExpansion::Kind::NewtonLine;
    e.axis = dom.axis;
    e.grid = funmat_detail::line_grid(dom, terms);
    e.sample_points = dom.unit() * e.grid.nodes.cast<Complex>();
    e.dd_scale = 4.0 / dom.length();
    e.combine.resize(op.dim(), terms);
    Eigen::VectorXcd w = v;
    e.combine.col(0) = w;
    for (int n = 1; n < terms; ++n) {
        w = (op(w) - e.sample_points[n - 1] * w) * e.dd_scale;
        e.combine.col(n) = w;
    }
    return e;
}

// K-term Chebyshev series in the shifted operator; K-1 applications.
inline FunmatExpansion funmat_cheb_expansion(const OperatorHandle& op,
                                             const Eigen::VectorXcd& v,
                                             const SpectralDomain& dom, int terms) {
    if (terms < 1) throw std::invalid_argument("funmat_cheb: terms < 1");
    if (!(dom.x_min < dom.x_max))
        throw std::domain_error("funmat_cheb: degenerate spectral domain");

    FunmatExpansion e;
    e.kind = FunmatExpansion::Kind::ChebLine;
    e.axis = dom.axis;
    e.grid = funmat_detail::line_grid(dom, terms);
    e.sample_points = dom.unit() * e.grid.nodes.cast<Complex>();
    e.combine.resize(op.dim(), terms);
    const Complex span = dom.unit() * dom.length();
    const Complex center = dom.unit() * (dom.x_min + dom.x_max);
    e.combine.col(0) = v;
    if (terms > 1) e.combine.col(1) = (2.0 * op(v) - center * v) / span;
    for (int n = 2; n < terms; ++n) {
        const Eigen::VectorXcd& w2 = e.combine.col(n - 1);
        e.combine.col(n) =
            2.0 * (2.0 * op(w2) - center * w2) / span - e.combine.col(n - 2);
    }
    return e;
}

// Krylov expansion from an existing decomposition: interpolation at the Ritz
// values, rescaled by the inverse capacity of the Ritz set.
inline FunmatExpansion arnoldi_expansion(const KrylovDecomposition& d) {
    FunmatExpansion e;
    e.kind = FunmatExpansion::Kind::ArnoldiKrylov;
    e.breakdown = d.breakdown;
    const int m = d.n_basis();

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(d.hess, /*computeEigenvectors=*/false);
    Eigen::VectorXcd ritz = es.eigenvalues();

    Complex z_avg = ritz.mean();
    double rho = 1.0;
    if (m >= 2) {
        auto cap = capacity(ritz, z_avg);
        rho = cap.rho;
        double min_dist = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) min_dist = std::min(min_dist, std::abs(z_avg - ritz[j]));
        if (cap.degenerate || min_dist < 1e-12 * std::max(1.0, rho))
            z_avg += Complex(1e-8 * rho, 0.0);
    }
    // Separate coincident Ritz values (defective Hessenberg); confluent
    // interpolation is unsupported, so nudge duplicates apart.
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(ritz[i] - ritz[j]) < 1e-13 * std::max(1.0, rho)) {
                ritz[i] += Complex(0.0, 1e-12 * std::max(1.0, rho) * (i + 1));
                e.degenerate_nodes = true;
            }

    e.sample_points = ritz;
    e.dd_scale = (m >= 2) ? 1.0 / rho : 1.0;
    e.z_extra = z_avg;

    // mu_n = Rbar_n(Gamma) omega, omega = ||v|| e_1
    Eigen::MatrixXcd mu(m, m + 1);
    mu.setZero();
    mu(0, 0) = d.v_norm;
    for (int n = 0; n < m; ++n)
        mu.col(n + 1) = (d.hess * mu.col(n) - ritz[n] * mu.col(n)) * e.dd_scale;
    e.combine = d.basis * mu.leftCols(m);

    if (!d.breakdown) {
        const Complex tail = d.hess_next * mu(m - 1, m - 1) * e.dd_scale;
        // mu.col(m) already holds Rbar_m(Gamma) omega
        e.mu_bar_norm = std::sqrt(mu.col(m).squaredNorm() + std::norm(tail));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Spec-level entry points.

inline Eigen::VectorXcd funmat_newton(const OperatorHandle& op, const Eigen::VectorXcd& v,
                                      const ScalarFn& f, const SpectralDomain& dom,
                                      int terms) {
    return funmat_apply(funmat_newton_expansion(op, v, dom, terms), f);
}

inline Eigen::VectorXcd funmat_cheb(const OperatorHandle& op, const Eigen::VectorXcd& v,
                                    const ScalarFn& f, const SpectralDomain& dom,
                                    int terms) {
    return funmat_apply(funmat_cheb_expansion(op, v, dom, terms), f);
}

using TimeScalarFn = std::function<Complex(Complex, double)>;

struct ArnoldiEvalResult {
    std::vector<Eigen::VectorXcd> values;
    std::vector<double> rel_error;
    bool degenerate_nodes = false;
};

// One decomposition, many time offsets: only the K scalar samples of f and
// the coefficient combination are redone per offset.
inline ArnoldiEvalResult arnoldi_eval(const KrylovDecomposition& d, const TimeScalarFn& f,
                                      const Eigen::VectorXd& t_offsets) {
    FunmatExpansion e = arnoldi_expansion(d);
    ArnoldiEvalResult r;
    r.degenerate_nodes = e.degenerate_nodes;
    r.values.reserve(t_offsets.size());
    r.rel_error.reserve(t_offsets.size());
    for (Eigen::Index i = 0; i < t_offsets.size(); ++i) {
        const double t = t_offsets[i];
        auto applied = funmat_apply_estimate(e, [&](Complex z) { return f(z, t); });
        r.values.push_back(std::move(applied.u));
        r.rel_error.push_back(applied.rel_error);
    }
    return r;
}

// Diagonalization route eta = S f(D) S^{-1} omega for estimate-free calls.
// A Hessenberg matrix that is defective within round-off has an unusable
// eigenvector basis; such calls divert to the Newton route.
inline Eigen::VectorXcd arnoldi_eval_diag(const KrylovDecomposition& d, const ScalarFn& f) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(d.hess, /*computeEigenvectors=*/true);
    const int m = d.n_basis();
    Eigen::VectorXcd omega = Eigen::VectorXcd::Zero(m);
    omega[0] = d.v_norm;
    if (es.info() == Eigen::Success) {
        auto lu = es.eigenvectors().partialPivLu();
        Eigen::VectorXcd y = lu.solve(omega);
        if ((es.eigenvectors() * y - omega).norm() <= 1e-8 * d.v_norm) {
            for (int j = 0; j < m; ++j) y[j] *= f(es.eigenvalues()[j]);
            return d.basis * (es.eigenvectors() * y);
        }
    }
    return funmat_apply(arnoldi_expansion(d), f);
}

}  // namespace semiglobal

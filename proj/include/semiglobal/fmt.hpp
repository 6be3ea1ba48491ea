#pragma once

// The factorial-scaled exponential remainder functions
//   ftilde_m(z,t) = m! z^{-m} [exp(zt) - sum_{j<m} (zt)^j/j!],   ftilde_m(0,t) = t^m,
// evaluated either directly or, for small |zt|, through the Taylor tail
//   ftilde_m(z,t) = m! t^m sum_{j>=0} (zt)^j/(j+m)!

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace semiglobal {

namespace fmt_detail {

// The tail converges once j >> |zt|; switching at |zt| = m + 5 keeps both
// branches in their accurate regime (they overlap around the threshold).
inline double branch_threshold(int m) { return double(m) + 5.0; }

// Extended precision absorbs the cancellation the alternating tail suffers
// as |zt| approaches the branch threshold.
inline std::complex<double> taylor_tail(int m, std::complex<double> z, double t) {
    const std::complex<long double> zt(z.real() * t, z.imag() * t);
    std::complex<long double> term = std::pow(static_cast<long double>(t), m);
    std::complex<long double> sum = term;
    const long double eps = std::numeric_limits<long double>::epsilon();
    for (int j = 1; j <= 400; ++j) {
        term *= zt / static_cast<long double>(m + j);
        sum += term;
        if (std::abs(term) <= eps * std::abs(sum)) break;
    }
    return {double(sum.real()), double(sum.imag())};
}

inline std::complex<double> direct(int m, std::complex<double> z, double t) {
    const std::complex<double> zt = z * t;
    // Kahan summation of the truncated exponential sum_{j<m} (zt)^j/j!;
    // the subtraction against exp(zt) is the round-off hazard here.
    std::complex<double> sum(0.0, 0.0), comp(0.0, 0.0), term(1.0, 0.0);
    for (int j = 0; j < m; ++j) {
        if (j > 0) term *= zt / double(j);
        const std::complex<double> y = term - comp;
        const std::complex<double> s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    std::complex<double> r = std::exp(zt) - sum;
    for (int j = 1; j <= m; ++j) r *= double(j) / z;
    return r;
}

}  // namespace fmt_detail

inline std::complex<double> fmt_eval(int m, std::complex<double> z, double t) {
    if (m < 0) throw std::invalid_argument("fmt_eval: negative order");
    if (m == 0) return std::exp(z * t);
    if (z == std::complex<double>(0.0, 0.0)) return std::pow(t, m);
    if (std::abs(z * t) > fmt_detail::branch_threshold(m))
        return fmt_detail::direct(m, z, t);
    return fmt_detail::taylor_tail(m, z, t);
}

// Table ftilde_m(z_i, t_j); one spatial expansion serves every output time,
// so backends only pay scalar evaluations per extra time point.
inline Eigen::MatrixXcd fmt_batch(int m, const Eigen::VectorXcd& z_samples,
                                  const Eigen::VectorXd& t_offsets) {
    Eigen::MatrixXcd out(z_samples.size(), t_offsets.size());
    for (Eigen::Index i = 0; i < z_samples.size(); ++i)
        for (Eigen::Index j = 0; j < t_offsets.size(); ++j)
            out(i, j) = fmt_eval(m, z_samples[i], t_offsets[j]);
    return out;
}

}  // namespace semiglobal

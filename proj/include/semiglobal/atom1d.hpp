#pragma once

// 1D model atom in an intense laser pulse on a periodic Fourier grid with
// complex absorbing boundaries. Atomic units throughout.
//
//   H(t) = p^2/2 + V_num(x,t),   V_num = V_atom,mod(x) - x_mod(x) zeta(t) + V_abs(x)
//
// The physical potential is flattened near the grid edges with a soft
// rectangle Omega(x) so the absorber sees free motion; flattening is linear
// in the potential, so the static part and the dipole profile are modified
// once and recombined per time.

#include <Eigen/Dense>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "propagator.hpp"

namespace semiglobal {
namespace atom1d {

inline double atom_potential(double x) { return 1.0 - 1.0 / std::sqrt(x * x + 1.0); }

struct PulseField {
    double amplitude = 0.1;
    double center = 500.0;
    double width = 170.0;
    double carrier = 0.06;

    double operator()(double t) const {
        const double arg = (t - center) / width;
        const double sech = 1.0 / std::cosh(arg);
        return amplitude * sech * sech * std::cos(carrier * (t - center));
    }
};

inline double field(double t) { return PulseField{}(t); }

struct FourierGrid1D {
    double x_min = -240.0;
    double x_max = 240.0;  // exclusive
    int n = 768;

    double spacing() const { return (x_max - x_min) / n; }
    double x(int i) const { return x_min + i * spacing(); }

    // FFT-ordered momenta; the Nyquist mode is assigned +p_max.
    Eigen::VectorXd momenta() const {
        Eigen::VectorXd p(n);
        const double dp = 2.0 * M_PI / (n * spacing());
        for (int j = 0; j < n; ++j) p[j] = (j <= n / 2) ? j * dp : (j - n) * dp;
        return p;
    }
};

struct SoftRectangle {
    double a = -197.5;
    double b = 197.5;
    double alpha = 1.0;

    double operator()(double x) const {
        return 0.5 * (std::tanh(alpha * (x - a)) - std::tanh(alpha * (x - b)));
    }
};

namespace detail {

// Adaptive composite Simpson on [lo, hi], refined until the 1/15 Richardson
// estimate drops below tol.
template <typename F>
double integrate(const F& f, double lo, double hi, double tol) {
    if (lo == hi) return 0.0;
    int n = 8;
    auto simpson = [&](int segs) {
        const double h = (hi - lo) / segs;
        double s = f(lo) + f(hi);
        for (int i = 1; i < segs; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
        return s * h / 3.0;
    };
    double prev = simpson(n);
    for (int iter = 0; iter < 24; ++iter) {
        n *= 2;
        const double cur = simpson(n);
        if (std::abs(cur - prev) < 15.0 * tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("atom1d: potential quadrature failed to converge");
}

}  // namespace detail

// V_mod(x) = V_phys(0) + int_0^x V_phys'(xi) Omega(xi) dxi, evaluated on the
// grid by cumulative quadrature cell by cell.
inline Eigen::VectorXd build_modified_potential(const FourierGrid1D& grid,
                                                const SoftRectangle& omega,
                                                const std::function<double(double)>& v_phys,
                                                const std::function<double(double)>& dv_phys,
                                                double tol = 1e-10) {
    if (omega.a < grid.x_min || omega.b >= grid.x_max)
        throw std::invalid_argument("build_modified_potential: Omega outside grid");
    auto integrand = [&](double x) { return dv_phys(x) * omega(x); };

    Eigen::VectorXd v(grid.n);
    // grid indices at and around x = 0
    int i0 = int(std::lround((0.0 - grid.x_min) / grid.spacing()));
    const double v0 = v_phys(0.0);
    const double base = detail::integrate(integrand, 0.0, grid.x(i0), tol);
    v[i0] = v0 + base;
    for (int i = i0 + 1; i < grid.n; ++i)
        v[i] = v[i - 1] + detail::integrate(integrand, grid.x(i - 1), grid.x(i), tol);
    for (int i = i0 - 1; i >= 0; --i)
        v[i] = v[i + 1] - detail::integrate(integrand, grid.x(i), grid.x(i + 1), tol);
    return v;
}

inline constexpr double kAbsorberStart = 200.0;  // |x| >= 200
inline constexpr double kAbsorberLength = 40.0;
inline constexpr int kAbsorberPoints = 64;       // 40 / 0.625 per side

// Absorbing potential per boundary point, right-side order ascending in the
// distance from |x| = 200; the left boundary uses the mirror image.
using AbsorberProfile = std::vector<std::complex<double>>;

// Cosine-series builder: Re = sum_r a_r cos(r w0 d), Im = -(sum_r b_r cos(r w0 d))^2.
inline AbsorberProfile build_absorber_cosine(const std::vector<double>& re_coeffs,
                                             const std::vector<double>& im_coeffs,
                                             double base_wavenumber, double spacing = 0.625) {
    AbsorberProfile prof(kAbsorberPoints);
    for (int i = 0; i < kAbsorberPoints; ++i) {
        const double d = i * spacing;
        double re = 0.0, im_series = 0.0;
        for (std::size_t r = 0; r < re_coeffs.size(); ++r)
            re += re_coeffs[r] * std::cos(double(r) * base_wavenumber * d);
        for (std::size_t r = 0; r < im_coeffs.size(); ++r)
            im_series += im_coeffs[r] * std::cos(double(r) * base_wavenumber * d);
        prof[i] = {re, -im_series * im_series};
    }
    return prof;
}

// Fallback used when no optimized potential file is supplied: a smooth
// quartic negative-imaginary ramp, strength chosen so that a k = 0.5 a.u.
// wavepacket is absorbed to below 1e-3 amplitude (see the scattering test).
inline AbsorberProfile build_absorber_fallback(double eta = 0.4, double spacing = 0.625) {
    AbsorberProfile prof(kAbsorberPoints);
    for (int i = 0; i < kAbsorberPoints; ++i) {
        const double s = (i * spacing) / kAbsorberLength;
        prof[i] = {0.0, -eta * s * s * s * s};
    }
    return prof;
}

// Plain-text format: 64 lines of "Re Im", ascending distance from the
// boundary start.
inline AbsorberProfile load_absorber(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_absorber: cannot open " + path);
    AbsorberProfile prof;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double re, im;
        if (!(ls >> re >> im)) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            throw std::runtime_error("load_absorber: malformed line: " + line);
        }
        prof.push_back({re, im});
    }
    if (int(prof.size()) != kAbsorberPoints)
        throw std::runtime_error("load_absorber: expected 64 lines, got " +
                                 std::to_string(prof.size()));
    return prof;
}

inline void validate_absorber(const AbsorberProfile& prof) {
    for (const auto& v : prof)
        if (v.imag() > 0.0)
            throw std::invalid_argument("absorber: positive imaginary part (gain)");
}

// The assembled numerical problem: FFT kinetic energy, modified static
// potential, modified dipole profile, absorber on both boundaries.
class Atom1DProblem {
  public:
    explicit Atom1DProblem(AbsorberProfile absorber = build_absorber_fallback(),
                           PulseField pulse = {}, bool absorber_on = true,
                           FourierGrid1D grid = {})
        : grid_(grid), pulse_(pulse) {
        validate_absorber(absorber);
        const int n = grid_.n;
        v_static_ = build_modified_potential(
            grid_, rect_, [](double x) { return atom_potential(x); },
            [](double x) { return x / std::pow(x * x + 1.0, 1.5); });
        // dipole profile: x_mod(x) = int_0^x Omega(xi) dxi  (x_mod(0) = 0)
        x_mod_ = build_modified_potential(
            grid_, rect_, [](double) { return 0.0; }, [](double) { return 1.0; });

        v_abs_ = Eigen::VectorXcd::Zero(n);
        if (absorber_on) {
            // profile values are tabulated at the canonical 0.625 spacing
            const double profile_dx = kAbsorberLength / kAbsorberPoints;
            for (int i = 0; i < n; ++i) {
                const double ax = std::abs(grid_.x(i));
                if (ax < kAbsorberStart) continue;
                int idx = int(std::lround((ax - kAbsorberStart) / profile_dx));
                if (idx >= kAbsorberPoints) idx = kAbsorberPoints - 1;  // x = x_min corner
                v_abs_[i] = absorber[idx];
            }
        }

        kinetic_ = grid_.momenta().array().square() * 0.5;
        buf_ = fftw_alloc_complex(n);
        fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    Atom1DProblem(const Atom1DProblem&) = delete;
    Atom1DProblem& operator=(const Atom1DProblem&) = delete;

    ~Atom1DProblem() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    const FourierGrid1D& grid() const { return grid_; }
    const PulseField& pulse() const { return pulse_; }
    const Eigen::VectorXd& static_potential() const { return v_static_; }
    const Eigen::VectorXd& dipole_profile() const { return x_mod_; }
    const Eigen::VectorXcd& absorber_values() const { return v_abs_; }

    // p^2/2 u alone (FFT, multiply, inverse FFT)
    void kinetic_apply(const Eigen::VectorXcd& u, Eigen::VectorXcd& out) const {
        const int n = grid_.n;
        for (int i = 0; i < n; ++i) {
            buf_[i][0] = u[i].real();
            buf_[i][1] = u[i].imag();
        }
        fftw_execute(fwd_);
        for (int i = 0; i < n; ++i) {
            buf_[i][0] *= kinetic_[i];
            buf_[i][1] *= kinetic_[i];
        }
        fftw_execute(bwd_);
        const double inv_n = 1.0 / n;
        for (int i = 0; i < n; ++i)
            out[i] = std::complex<double>(buf_[i][0] * inv_n, buf_[i][1] * inv_n);
    }

    // H(t) u with the field value supplied explicitly
    void hamiltonian_apply(const Eigen::VectorXcd& u, double field_value,
                           Eigen::VectorXcd& out) const {
        const int n = grid_.n;
        for (int i = 0; i < n; ++i) {
            buf_[i][0] = u[i].real();
            buf_[i][1] = u[i].imag();
        }
        fftw_execute(fwd_);
        for (int i = 0; i < n; ++i) {
            buf_[i][0] *= kinetic_[i];
            buf_[i][1] *= kinetic_[i];
        }
        fftw_execute(bwd_);
        const double inv_n = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            const std::complex<double> kin(buf_[i][0] * inv_n, buf_[i][1] * inv_n);
            const std::complex<double> v =
                v_static_[i] - x_mod_[i] * field_value + v_abs_[i];
            out[i] = kin + v * u[i];
        }
    }

    // du/dt = G(t) u = -i H(t) u; the generator difference is diagonal
    // (only the dipole term moves), so the fast path costs no applications.
    GeneratorSpec generator(bool hermitian_hint = false) const {
        GeneratorSpec g;
        g.dim = grid_.n;
        g.is_hermitian_generator = hermitian_hint;
        g.apply_G = [this](const Eigen::VectorXcd&, double t, const Eigen::VectorXcd& w,
                           Eigen::VectorXcd& y) {
            hamiltonian_apply(w, pulse_(t), y);
            y *= std::complex<double>(0.0, -1.0);
        };
        g.diag_difference = [this](const Eigen::VectorXcd&, double t1,
                                   const Eigen::VectorXcd&, double t2,
                                   const Eigen::VectorXcd& w, Eigen::VectorXcd& y) {
            const double dz = pulse_(t1) - pulse_(t2);
            y = std::complex<double>(0.0, 1.0) * dz *
                (x_mod_.array() * w.array()).matrix();
        };
        return g;
    }

    // Field-free generator with the pulse forced to zero (absorber retained
    // as constructed); used for decay and norm tests.
    GeneratorSpec field_free_generator() const {
        GeneratorSpec g;
        g.dim = grid_.n;
        g.is_hermitian_generator = v_abs_.isZero(0.0);
        g.apply_G = [this](const Eigen::VectorXcd&, double, const Eigen::VectorXcd& w,
                           Eigen::VectorXcd& y) {
            hamiltonian_apply(w, 0.0, y);
            y *= std::complex<double>(0.0, -1.0);
        };
        g.diag_difference = [this](const Eigen::VectorXcd&, double, const Eigen::VectorXcd&,
                                   double, const Eigen::VectorXcd& w, Eigen::VectorXcd& y) {
            y = Eigen::VectorXcd::Zero(grid_.n);
            (void)w;
        };
        return g;
    }

    // Dense field-free Hamiltonian (optionally without the absorber) for
    // spectra and the initial state.
    Eigen::MatrixXcd dense_hamiltonian(bool with_absorber) const {
        const int n = grid_.n;
        // circulant kinetic matrix from its first column
        Eigen::VectorXd p2 = kinetic_;
        Eigen::VectorXd col(n);
        for (int d = 0; d < n; ++d) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += p2[j] * std::cos(2.0 * M_PI * j * d / double(n));
            col[d] = s / n;
        }
        Eigen::MatrixXcd h(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) h(r, c) = col[(r - c + n) % n];
        for (int i = 0; i < n; ++i)
            h(i, i) += v_static_[i] + (with_absorber ? v_abs_[i] : std::complex<double>(0.0));
        return h;
    }

    // Normalized ground state of the Hermitian field-free Hamiltonian.
    Eigen::VectorXcd ground_state() const {
        Eigen::MatrixXcd h = dense_hamiltonian(/*with_absorber=*/false);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXcd g = es.eigenvectors().col(0);
        return g / g.norm();
    }

    // Lowest eigenvalues of the Hermitian field-free Hamiltonian.
    Eigen::VectorXd lowest_levels(int count) const {
        Eigen::MatrixXcd h = dense_hamiltonian(/*with_absorber=*/false);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().head(count);
    }

  private:
    FourierGrid1D grid_;
    SoftRectangle rect_;
    PulseField pulse_;
    Eigen::VectorXd v_static_;
    Eigen::VectorXd x_mod_;
    Eigen::VectorXcd v_abs_;
    Eigen::VectorXd kinetic_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

}  // namespace atom1d
}  // namespace semiglobal

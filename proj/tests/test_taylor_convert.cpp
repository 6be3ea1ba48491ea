#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "semiglobal/cheb.hpp"
#include "semiglobal/newton.hpp"
#include "semiglobal/taylor_convert.hpp"

using namespace semiglobal;
using Catch::Approx;

namespace {

// Brute-force polynomial algebra oracle: monomial coefficient arrays with
// multiply-by-(a t + b) and linear combination.
using Poly = std::vector<double>;

Poly poly_mul_linear(const Poly& p, double a, double b) {
    // (a t + b) * p
    Poly r(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        r[i + 1] += a * p[i];
        r[i] += b * p[i];
    }
    return r;
}

double poly_coeff(const Poly& p, std::size_t m) { return m < p.size() ? p[m] : 0.0; }

// Newton basis on the length-4 domain: R_{n+1}(t) = (4/dt)(t - t_n) R_n(t)
std::vector<Poly> newton_basis(const Eigen::VectorXd& pts, double dt, int order) {
    std::vector<Poly> basis{{1.0}};
    for (int n = 0; n + 1 < order; ++n)
        basis.push_back(poly_mul_linear(basis[n], 4.0 / dt, -4.0 / dt * pts[n]));
    return basis;
}

// phi_n(t) = T_n((2t - tmin - tmax)/dt) by the T recurrence on coefficients
std::vector<Poly> cheb_basis(double tmin, double tmax, int order) {
    const double dt = tmax - tmin;
    std::vector<Poly> basis{{1.0}};
    if (order > 1) basis.push_back({-(tmin + tmax) / dt, 2.0 / dt});
    for (int n = 1; n + 1 < order; ++n) {
        Poly two_y_tn = poly_mul_linear(basis[n], 4.0 / dt, -2.0 * (tmin + tmax) / dt);
        Poly next(std::max(two_y_tn.size(), basis[n - 1].size()), 0.0);
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] = poly_coeff(two_y_tn, i) - poly_coeff(basis[n - 1], i);
        basis.push_back(next);
    }
    return basis;
}

}  // namespace

TEST_CASE("newton_to_taylor first rows") {
    Eigen::VectorXd p0(2), p1(2);
    p0 << 0.0, 2.0;
    p1 << 1.0, 2.0;
    auto m0 = newton_to_taylor_matrix(p0, 4.0, 2, true);
    CHECK(m0.q(1, 0) == Approx(0.0).margin(1e-15));
    CHECK(m0.q(1, 1) == Approx(1.0).epsilon(1e-15));

    auto m1 = newton_to_taylor_matrix(p1, 4.0, 2, true);
    CHECK(m1.q(1, 0) == Approx(-1.0).epsilon(1e-15));
    CHECK(m1.q(1, 1) == Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(newton_to_taylor_matrix(p0, 4.0, 0, true), std::invalid_argument);
}

TEST_CASE("newton_to_taylor matches the polynomial multiplication oracle") {
    auto g = cheb_nodes(ChebKind::Lobatto, 6, 0.0, 1.0, true);
    for (bool tilde : {true, false}) {
        auto m = newton_to_taylor_matrix(g.nodes, 1.0, 6, tilde);
        auto basis = newton_basis(g.nodes, 1.0, 6);
        for (int n = 0; n < 6; ++n)
            for (int k = 0; k < 6; ++k) {
                const double mono = poly_coeff(basis[n], k);
                const double expect = tilde ? mono : mono * std::tgamma(k + 1.0);
                INFO("tilde=" << tilde << " n=" << n << " k=" << k);
                CHECK(m.q(n, k) == Approx(expect).margin(1e-12 * std::max(1.0, expect)));
            }
    }
}

TEST_CASE("cheb_to_taylor low-order rows") {
    auto m = cheb_to_taylor_matrix(-1.0, 1.0, 3, true);
    CHECK(m.q(1, 0) == Approx(0.0).margin(1e-15));
    CHECK(m.q(1, 1) == Approx(1.0).epsilon(1e-15));
    CHECK(m.q(2, 0) == Approx(-1.0).epsilon(1e-15));  // T_2 = 2t^2 - 1
    CHECK(m.q(2, 1) == Approx(0.0).margin(1e-15));
    CHECK(m.q(2, 2) == Approx(2.0).epsilon(1e-15));

    auto m01 = cheb_to_taylor_matrix(0.0, 1.0, 2, true);
    CHECK(m01.q(1, 0) == Approx(-1.0).epsilon(1e-15));  // phi_1 = 2t - 1
    CHECK(m01.q(1, 1) == Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(cheb_to_taylor_matrix(1.0, 0.0, 3, true), std::domain_error);
}

TEST_CASE("cheb_to_taylor matches symbolic composition to order 8") {
    const double tmin = 0.0, tmax = 0.25;
    for (bool tilde : {true, false}) {
        auto m = cheb_to_taylor_matrix(tmin, tmax, 8, tilde);
        auto basis = cheb_basis(tmin, tmax, 8);
        for (int n = 0; n < 8; ++n) {
            double row_scale = 0.0;
            for (int k = 0; k <= n; ++k)
                row_scale = std::max(row_scale, std::abs(poly_coeff(basis[n], k)));
            for (int k = 0; k < 8; ++k) {
                const double mono = poly_coeff(basis[n], k);
                const double expect = tilde ? mono : mono * std::tgamma(k + 1.0);
                INFO("tilde=" << tilde << " n=" << n << " k=" << k);
                CHECK(m.q(n, k) ==
                      Approx(expect).margin(1e-11 * std::max(1.0, row_scale)));
            }
        }
    }
}

TEST_CASE("apply_conversion") {
    auto m = cheb_to_taylor_matrix(-1.0, 1.0, 4, true);

    SECTION("row-0 invariant: constant expansion passes through") {
        Eigen::VectorXd b(4);
        b << 3.25, 0, 0, 0;
        Eigen::VectorXd s = apply_conversion(m, b);
        CHECK(s[0] == Approx(3.25));
        for (int k = 1; k < 4; ++k) CHECK(s[k] == Approx(0.0).margin(1e-15));
    }
    SECTION("Chebyshev coefficients of t give the monomial t") {
        Eigen::VectorXd b(4);
        b << 0, 1, 0, 0;
        Eigen::VectorXd s = apply_conversion(m, b);
        CHECK(s[0] == Approx(0.0).margin(1e-15));
        CHECK(s[1] == Approx(1.0).epsilon(1e-15));
        CHECK(s[2] == Approx(0.0).margin(1e-15));
    }
    SECTION("random Newton expansion equals the expanded-polynomial oracle") {
        auto g = cheb_nodes(ChebKind::Lobatto, 7, 0.0, 2.0, true);
        auto conv = newton_to_taylor_matrix(g.nodes, 2.0, 7, true);
        auto basis = newton_basis(g.nodes, 2.0, 7);
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Eigen::VectorXd b(7);
        for (int i = 0; i < 7; ++i) b[i] = u(rng);
        Eigen::VectorXd s = apply_conversion(conv, b);
        for (int k = 0; k < 7; ++k) {
            double expect = 0.0;
            for (int n = 0; n < 7; ++n) expect += b[n] * poly_coeff(basis[n], k);
            CHECK(s[k] == Approx(expect).margin(1e-11 * std::max(1.0, std::abs(expect))));
        }
    }
    SECTION("length mismatch is rejected") {
        Eigen::VectorXd b(3);
        b << 1, 2, 3;
        CHECK_THROWS_AS(apply_conversion(m, b), std::invalid_argument);
    }
}

TEST_CASE("tilde and untilde matrices differ by m!") {
    auto g = cheb_nodes(ChebKind::Lobatto, 12, 0.0, 0.5, true);
    auto nt = newton_to_taylor_matrix(g.nodes, 0.5, 12, true);
    auto nu = newton_to_taylor_matrix(g.nodes, 0.5, 12, false);
    auto ct = cheb_to_taylor_matrix(0.0, 0.5, 12, true);
    auto cu = cheb_to_taylor_matrix(0.0, 0.5, 12, false);
    double fact = 1.0;
    for (int m = 0; m < 12; ++m) {
        if (m > 0) fact *= m;
        for (int n = m; n < 12; ++n) {
            CHECK(nt.q(n, m) * fact ==
                  Approx(nu.q(n, m)).epsilon(1e-12).margin(1e-300));
            CHECK(ct.q(n, m) * fact ==
                  Approx(cu.q(n, m)).epsilon(1e-12).margin(1e-300));
        }
    }
}

TEST_CASE("triangularity and row-0 structure") {
    auto g = cheb_nodes(ChebKind::Lobatto, 9, 0.0, 1.5, true);
    for (const auto& m : {newton_to_taylor_matrix(g.nodes, 1.5, 9, true),
                          cheb_to_taylor_matrix(0.0, 1.5, 9, true)}) {
        CHECK(m.q(0, 0) == 1.0);
        for (int k = 1; k < 9; ++k) CHECK(m.q(0, k) == 0.0);
        for (int n = 0; n < 9; ++n)
            for (int k = n + 1; k < 9; ++k) CHECK(m.q(n, k) == 0.0);
    }
}

TEST_CASE("reconstruction: converted coefficients reproduce the samples") {
    // smooth f sampled at Chebyshev points; sum stilde_m t^m must equal f at
    // the nodes to interpolation accuracy
    const double dt = 0.8;
    auto g = cheb_nodes(ChebKind::Lobatto, 9, 0.0, dt, true);
    Eigen::VectorXd vals(9);
    for (int j = 0; j < 9; ++j) vals[j] = std::exp(-g.nodes[j]) * std::sin(3 * g.nodes[j]);
    auto cc = cheb_coeffs<double>(vals, g);
    auto conv = cheb_to_taylor_matrix(0.0, dt, 9, true);
    Eigen::VectorXd s = apply_conversion(conv, Eigen::VectorXd(cc.coeffs.row(0)));
    for (int j = 0; j < 9; ++j) {
        double acc = 0.0, pw = 1.0;
        for (int m = 0; m < 9; ++m) {
            acc += s[m] * pw;
            pw *= g.nodes[j];
        }
        CHECK(acc == Approx(vals[j]).margin(1e-11));
    }
}

TEST_CASE("conversion cache returns the same matrix object") {
    ConversionCache cache;
    const auto& a = cache.cheb(0.0, 1.0, 7, true);
    const auto& b = cache.cheb(0.0, 1.0, 7, true);
    CHECK(&a == &b);
    const auto& c = cache.cheb(0.0, 2.0, 7, true);
    CHECK(&a != &c);
}

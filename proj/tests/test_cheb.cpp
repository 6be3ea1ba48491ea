#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "semiglobal/cheb.hpp"

using namespace semiglobal;
using Catch::Approx;

namespace {

// Chebyshev coefficients of exp on [-1,1] frozen from a 1e5-point trapezoid
// quadrature of c_n = 2/(pi alpha_n) int_0^pi exp(cos th) cos(n th) dth.
const double kExpCoeffs[16] = {
    1.2660658777520233,     1.130318207984971,      0.27149533953405586,
    0.044336849848657316,   0.0054742404421007423,  0.00054292631191446474,
    4.4977322951372113e-05, 3.1984364635902151e-06, 1.9921248053428985e-07,
    1.1036770070609326e-08, 5.5059049461125819e-10, 2.497909976528767e-11,
    1.0394145988357194e-12, 4.0500327536108213e-14, 8.549894126019808e-16,
    -2.4197199799402823e-16};

Eigen::VectorXd sample(const ChebGrid& g, double (*f)(double)) {
    Eigen::VectorXd v(g.n_points);
    for (int j = 0; j < g.n_points; ++j) v[j] = f(g.nodes[j]);
    return v;
}

}  // namespace

TEST_CASE("cheb_nodes basic node sets") {
    auto lob = cheb_nodes(ChebKind::Lobatto, 3, -1.0, 1.0, true);
    CHECK(lob.nodes[0] == Approx(-1.0).margin(1e-15));
    CHECK(lob.nodes[1] == Approx(0.0).margin(1e-15));
    CHECK(lob.nodes[2] == Approx(1.0).margin(1e-15));

    auto gauss = cheb_nodes(ChebKind::Gauss, 2, -1.0, 1.0, false);
    CHECK(gauss.nodes[0] == Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(gauss.nodes[1] == Approx(-std::sqrt(0.5)).epsilon(1e-14));

    auto unit = cheb_nodes(ChebKind::Lobatto, 3, 0.0, 1.0, true);
    CHECK(unit.nodes[0] == Approx(0.0).margin(1e-16));
    CHECK(unit.nodes[1] == Approx(0.5).epsilon(1e-15));
    CHECK(unit.nodes[2] == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cheb_nodes endpoint inclusion and ordering") {
    auto lob = cheb_nodes(ChebKind::Lobatto, 9, -2.0, 3.0, true);
    CHECK(lob.nodes[0] == -2.0);
    CHECK(lob.nodes[8] == 3.0);
    for (int j = 1; j < 9; ++j) CHECK(lob.nodes[j] > lob.nodes[j - 1]);

    auto gauss = cheb_nodes(ChebKind::Gauss, 9, -2.0, 3.0, false);
    CHECK(gauss.nodes[0] > -2.0);
    CHECK(gauss.nodes[8] < 3.0);
    for (int j = 1; j < 9; ++j) CHECK(gauss.nodes[j] < gauss.nodes[j - 1]);

    CHECK_THROWS_AS(cheb_nodes(ChebKind::Lobatto, 3, 1.0, 1.0, true), std::domain_error);
    CHECK_THROWS_AS(cheb_nodes(ChebKind::Lobatto, 1, 0.0, 1.0, true), std::invalid_argument);
}

TEST_CASE("cheb_coeffs reproduces T_1 and T_2 exactly") {
    auto g = cheb_nodes(ChebKind::Lobatto, 5, -1.0, 1.0, true);
    auto cx = cheb_coeffs<double>(sample(g, [](double x) { return x; }), g);
    for (int m = 0; m < 5; ++m)
        CHECK(cx.coeffs(0, m) == Approx(m == 1 ? 1.0 : 0.0).margin(1e-14));

    auto ct = cheb_coeffs<double>(sample(g, [](double x) { return 2 * x * x - 1; }), g);
    for (int m = 0; m < 5; ++m)
        CHECK(ct.coeffs(0, m) == Approx(m == 2 ? 1.0 : 0.0).margin(1e-14));
}

TEST_CASE("cheb_coeffs of exp matches quadrature oracle") {
    auto g = cheb_nodes(ChebKind::Gauss, 16, -1.0, 1.0, false);
    auto c = cheb_coeffs<double>(sample(g, [](double x) { return std::exp(x); }), g);
    for (int m = 0; m < 16; ++m)
        CHECK(c.coeffs(0, m) == Approx(kExpCoeffs[m]).margin(1e-12));

    SECTION("series evaluation at 0.5 recovers exp(0.5)") {
        CHECK(cheb_eval_scalar(c, 0.5) == Approx(std::exp(0.5)).margin(1e-12));
    }
}

TEST_CASE("cheb_eval basics") {
    ChebSeries<double> lin;
    lin.coeffs.resize(1, 2);
    lin.coeffs << 0.0, 1.0;
    lin.x_min = -1.0;
    lin.x_max = 1.0;
    CHECK(cheb_eval_scalar(lin, 0.3) == Approx(0.3).epsilon(1e-15));

    ChebSeries<double> unity;
    unity.coeffs.resize(1, 3);
    unity.coeffs << 1.0, 0.0, 0.0;
    unity.x_min = -1.0;
    unity.x_max = 1.0;
    for (double x : {-0.9, 0.1, 0.77}) CHECK(cheb_eval_scalar(unity, x) == 1.0);

    CHECK_FALSE(cheb_eval(lin, 0.99).extrapolated);
    CHECK(cheb_eval(lin, 1.25).extrapolated);
}

TEST_CASE("round trip at the nodes, all kinds, n up to 64") {
    auto f = [](double x) { return std::exp(0.8 * x) * std::sin(3.0 * x + 0.4); };
    for (ChebKind kind : {ChebKind::Gauss, ChebKind::Lobatto}) {
        for (bool rev : {false, true}) {
            for (int n : {2, 3, 5, 8, 13, 33, 64}) {
                auto g = cheb_nodes(kind, n, -1.5, 2.5, rev);
                Eigen::VectorXd s(n);
                double fmax = 0;
                for (int j = 0; j < n; ++j) {
                    s[j] = f(g.nodes[j]);
                    fmax = std::max(fmax, std::abs(s[j]));
                }
                auto c = cheb_coeffs<double>(s, g);
                for (int j = 0; j < n; ++j) {
                    INFO("kind=" << int(kind) << " rev=" << rev << " n=" << n << " j=" << j);
                    CHECK(cheb_eval_scalar(c, g.nodes[j]) ==
                          Approx(s[j]).margin(1e-13 * fmax));
                }
            }
        }
    }
}

TEST_CASE("degree exactness: polynomial of degree d leaves c_m = 0 for m > d") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int n : {6, 12, 24, 40}) {
        const int d = n / 2;
        std::vector<double> poly(d + 1);
        for (auto& p : poly) p = coef(rng);
        auto eval_poly = [&](double x) {
            double acc = 0;
            for (int k = d; k >= 0; --k) acc = acc * x + poly[k];
            return acc;
        };
        for (ChebKind kind : {ChebKind::Gauss, ChebKind::Lobatto}) {
            auto g = cheb_nodes(kind, n, -1.0, 1.0, true);
            Eigen::VectorXd s(n);
            for (int j = 0; j < n; ++j) s[j] = eval_poly(g.nodes[j]);
            auto c = cheb_coeffs<double>(s, g);
            const double cmax = c.coeffs.cwiseAbs().maxCoeff();
            for (int m = d + 1; m < n; ++m) {
                INFO("kind=" << int(kind) << " n=" << n << " m=" << m);
                CHECK(std::abs(c.coeffs(0, m)) <= 1e-12 * cmax);
            }
        }
    }
}

TEST_CASE("reversal consistency: reversed grid gives identical coefficients") {
    auto f = [](double x) { return std::cos(2.0 * x) + 0.3 * x; };
    for (ChebKind kind : {ChebKind::Gauss, ChebKind::Lobatto}) {
        for (int n : {2, 7, 20}) {
            auto fw = cheb_nodes(kind, n, 0.0, 2.0, false);
            auto rv = cheb_nodes(kind, n, 0.0, 2.0, true);
            Eigen::VectorXd sf(n), sr(n);
            for (int j = 0; j < n; ++j) {
                sf[j] = f(fw.nodes[j]);
                sr[j] = f(rv.nodes[j]);
            }
            auto cf = cheb_coeffs<double>(sf, fw);
            auto cr = cheb_coeffs<double>(sr, rv);
            for (int m = 0; m < n; ++m) {
                INFO("kind=" << int(kind) << " n=" << n << " m=" << m);
                // mirrored nodes are exact negations, so the sign-flip form
                // reproduces the unreversed coefficients bitwise
                CHECK(cr.coeffs(0, m) == cf.coeffs(0, m));
            }
        }
    }
}

TEST_CASE("vector-valued samples transform componentwise") {
    auto g = cheb_nodes(ChebKind::Lobatto, 6, 0.0, 1.0, true);
    Eigen::MatrixXcd samples(3, 6);
    for (int j = 0; j < 6; ++j) {
        const double x = g.nodes[j];
        samples(0, j) = std::complex<double>(std::sin(x), std::cos(x));
        samples(1, j) = x * x;
        samples(2, j) = std::complex<double>(0.0, std::exp(x));
    }
    auto c = cheb_coeffs<std::complex<double>>(samples, g);
    for (int row = 0; row < 3; ++row) {
        Eigen::VectorXcd one_row = samples.row(row).transpose();
        auto cr = cheb_coeffs<std::complex<double>>(one_row, g);
        for (int m = 0; m < 6; ++m) CHECK(std::abs(c.coeffs(row, m) - cr.coeffs(0, m)) == 0.0);
    }

    Eigen::MatrixXcd bad(3, 5);
    CHECK_THROWS_AS(cheb_coeffs<std::complex<double>>(bad, g), std::invalid_argument);
}

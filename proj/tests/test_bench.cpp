#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "semiglobal/bench.hpp"

using namespace semiglobal;
using namespace semiglobal::bench;
using Catch::Approx;

namespace {

DecayCurve synthetic_power_law(double slope, int n, double jitter = 0.0, unsigned seed = 1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    DecayCurve c;
    for (int i = 0; i < n; ++i) {
        DecayRow r;
        r.dt = 1.0 / (i + 1);
        r.n_ops = std::uint64_t(100.0 * std::pow(1.5, i));
        r.rel_error = std::pow(double(r.n_ops), slope) * (1.0 + (jitter > 0 ? u(rng) : 0.0));
        c.rows.push_back(r);
    }
    return c;
}

}  // namespace

TEST_CASE("fit_linear_region") {
    SECTION("exact power law") {
        auto c = synthetic_power_law(-4.0, 8);
        auto fit = fit_linear_region(c);
        CHECK(fit.slope == Approx(-4.0).margin(1e-6));
    }
    SECTION("plateau tail is excluded") {
        auto c = synthetic_power_law(-4.0, 8);
        const double floor_err = c.rows.back().rel_error;
        for (int i = 0; i < 3; ++i) {
            DecayRow r;
            r.dt = c.rows.back().dt / (2 << i);
            r.n_ops = c.rows.back().n_ops * (2 << i);
            r.rel_error = floor_err;  // stopped decaying
            c.rows.push_back(r);
        }
        auto fit = fit_linear_region(c);
        CHECK(fit.slope == Approx(-4.0).margin(1e-3));
        CHECK(fit.last <= 7);
    }
    SECTION("five percent jitter stays within 0.1 of the slope") {
        auto c = synthetic_power_law(-4.0, 10, 0.05, 77);
        auto fit = fit_linear_region(c);
        CHECK(fit.slope == Approx(-4.0).margin(0.1));
    }
    SECTION("divergent rows are skipped") {
        auto c = synthetic_power_law(-3.0, 7);
        c.rows[2].flags = "divergent";
        c.rows[2].rel_error = std::numeric_limits<double>::quiet_NaN();
        auto fit = fit_linear_region(c);
        CHECK(fit.slope == Approx(-3.0).margin(1e-6));
    }
    SECTION("too few points") {
        auto c = synthetic_power_law(-4.0, 3);
        CHECK_THROWS_AS(fit_linear_region(c), TooFewPoints);
    }
}

TEST_CASE("csv and json emission") {
    auto c = synthetic_power_law(-4.0, 5);
    c.fit = fit_linear_region(c);
    c.fit_valid = true;
    BenchConfig cfg;
    cfg.dt_list = {1.0, 0.5};

    SECTION("single-row curve gives a two-line csv") {
        DecayCurve one;
        one.rows.push_back(c.rows[0]);
        const std::string text = format_csv(one);
        CHECK(text.find("dt,n_ops,rel_error,flags\n") == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    }
    SECTION("csv columns parse back as finite floats") {
        std::istringstream in(format_csv(c));
        std::string line;
        std::getline(in, line);  // header
        int rows = 0;
        while (std::getline(in, line)) {
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double dt, err;
            std::uint64_t ops;
            REQUIRE(bool(ls >> dt >> ops >> err));
            CHECK(std::isfinite(dt));
            CHECK(std::isfinite(err));
            ++rows;
        }
        CHECK(rows == 5);
    }
    SECTION("json config echo round-trips") {
        cfg.problem = Problem::TwoLevel;
        cfg.method = Method::RK4;
        cfg.m_terms = 11;
        cfg.eps = 3e-9;
        cfg.single_iteration = false;
        nlohmann::json j = format_json(c, cfg);
        BenchConfig back = j.at("config").get<BenchConfig>();
        CHECK(back.problem == cfg.problem);
        CHECK(back.method == cfg.method);
        CHECK(back.m_terms == cfg.m_terms);
        CHECK(back.eps == cfg.eps);
        CHECK(back.single_iteration == cfg.single_iteration);
        CHECK(back.dt_list == cfg.dt_list);
        CHECK(j.at("fit").at("slope").get<double>() == Approx(c.fit.slope));
    }
    SECTION("emit_results writes files and rejects empty curves") {
        const auto tmp = std::filesystem::temp_directory_path() / "curve_test.csv";
        emit_results(c, cfg, tmp.string());
        std::ifstream in(tmp);
        CHECK(in.good());
        std::filesystem::remove(tmp);
        DecayCurve empty;
        CHECK_THROWS_AS(emit_results(empty, cfg, tmp.string()), std::invalid_argument);
    }
}

TEST_CASE("rk4 sweep on the rotating scalar reproduces slope -4") {
    BenchConfig cfg;
    cfg.problem = Problem::ForcedScalar;
    cfg.method = Method::RK4;
    cfg.dt_list = {0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625};
    auto curve = run_sweep(cfg);
    REQUIRE(curve.fit_valid);
    CHECK(curve.fit.slope == Approx(-4.0).margin(0.05));
    // application-count honesty: RK4 does 4 applications per step
    for (const auto& r : curve.rows) {
        const long n_steps = std::lround(20.0 / r.dt);
        CHECK(r.n_ops == std::uint64_t(4 * n_steps));
    }
}

TEST_CASE("semi-global sweep on the forced scalar beats RK4 order") {
    BenchConfig cfg;
    cfg.problem = Problem::ForcedScalar;
    cfg.method = Method::SemiGlobal;
    cfg.m_terms = 7;
    cfg.k_terms = 7;
    cfg.dt_list = {2.0, 1.25, 1.0, 0.8, 0.625, 0.5, 0.4};
    cfg.single_iteration = true;
    auto curve = run_sweep(cfg);
    REQUIRE(curve.fit_valid);
    CHECK(curve.fit.slope < -5.0);
}

TEST_CASE("determinism: identical config gives bit-identical csv") {
    BenchConfig cfg;
    cfg.problem = Problem::TwoLevel;
    cfg.method = Method::SemiGlobal;
    cfg.m_terms = 7;
    cfg.k_terms = 7;
    cfg.dt_list = {1.0, 0.5, 0.25, 0.2, 0.125};
    auto a = run_sweep(cfg);
    auto b = run_sweep(cfg);
    CHECK(format_csv(a) == format_csv(b));
}

TEST_CASE("custom problem from file matches its closed form") {
    const auto tmp = std::filesystem::temp_directory_path() / "custom_problem.json";
    {
        nlohmann::json j;
        j["n"] = 3;
        j["t_start"] = 0.0;
        j["t_end"] = 2.0;
        std::mt19937 rng(9);
        std::normal_distribution<double> g;
        Eigen::Matrix3cd h;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) h(r, c) = std::complex<double>(g(rng), g(rng));
        h = (0.5 * (h + h.adjoint())).eval();
        auto gm = (std::complex<double>(0, -1) * h).eval();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                j["g_real"][r][c] = gm(r, c).real();
                j["g_imag"][r][c] = gm(r, c).imag();
            }
        j["u0_real"] = {1.0, 0.0, 0.5};
        j["u0_imag"] = {0.0, 0.25, 0.0};
        j["backend"] = "newton";
        j["axis"] = "imaginary";
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
        j["domain"] = {-es.eigenvalues().maxCoeff() - 0.1,
                       -es.eigenvalues().minCoeff() + 0.1};
        std::ofstream out(tmp);
        out << j.dump();
    }
    BenchConfig cfg;
    cfg.problem = Problem::CustomFromFile;
    cfg.problem_file = tmp.string();
    cfg.method = Method::SemiGlobal;
    cfg.m_terms = 9;
    cfg.k_terms = 9;
    cfg.dt_list = {0.5, 0.25, 0.125, 0.1, 0.0625};
    cfg.single_iteration = false;
    cfg.eps = 1e-12;
    auto curve = run_sweep(cfg);
    // the finest run should be extremely accurate against the dense oracle
    CHECK(curve.rows.back().rel_error < 1e-10);
    std::filesystem::remove(tmp);
}

TEST_CASE("euler sweep shows first order in the asymptotic region") {
    BenchConfig cfg;
    cfg.problem = Problem::ForcedScalar;
    cfg.method = Method::Euler;
    cfg.dt_list = {0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625};
    auto curve = run_sweep(cfg);
    REQUIRE(curve.fit_valid);
    CHECK(curve.fit.slope == Approx(-1.0).margin(0.1));
}

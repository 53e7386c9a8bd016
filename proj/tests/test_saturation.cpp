#include <doctest.h>

#include "moistcol/saturation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

using namespace moistcol;

namespace {

SaturationModel model() { return SaturationModel::linear(1.0, 0.5, 1.0, 0.2); }

double closed_form(double qstar, double a, double b, double c, double w, double z, double t) {
    return (w - qstar + b * z + c * t) / (1.0 + a);
}

SaturationTable linear_table(double qstar, double a, double b, double c, int m) {
    SaturationTable tb;
    for (int i = 0; i < m; ++i) {
        tb.theta.push_back(-3.0 + 6.0 * i / (m - 1));
        tb.z.push_back(static_cast<double>(i) / (m - 1));
        tb.t.push_back(2.0 * i / (m - 1));
    }
    for (double th : tb.theta)
        for (double z : tb.z)
            for (double t : tb.t) tb.q.push_back(qstar + a * th - b * z - c * t);
    return tb;
}

}  // namespace

TEST_CASE("eval_qsat on the linear family") {
    const auto m = model();
    CHECK(eval_qsat(m, 0.0, 0.5, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eval_qsat(m, 0.0, 0.0, 0.0) == 1.0);
    CHECK(eval_qsat(m, 1.0, 1.0, 0.01) == doctest::Approx(0.498).epsilon(1e-15));
}

TEST_CASE("eval_qsat rejects z outside the column") {
    const auto m = model();
    CHECK_THROWS_AS(eval_qsat(m, 0.0, 1.1, 0.0), ConfigError);
    CHECK_THROWS_AS(eval_qsat(m, 0.0, -0.01, 0.0), ConfigError);
    CHECK_NOTHROW(eval_qsat(m, 0.0, 1.0 + 1e-13, 0.0));
}

TEST_CASE("linear model parameters are validated") {
    CHECK_THROWS_AS(SaturationModel::linear(1, 0, 1, 0), ConfigError);
    CHECK_THROWS_AS(SaturationModel::linear(1, 1, 0, 0), ConfigError);
    CHECK_THROWS_AS(SaturationModel::linear(1, 1, 1, -0.1), ConfigError);
}

TEST_CASE("theta_inverse matches the closed form") {
    const auto m = model();
    CHECK(std::abs(theta_inverse(m, 2.5, 0.0, 0.0) - 1.0) <= 1e-12);
    CHECK(std::abs(theta_inverse(m, 0.5, 1.0, 0.01) - 0.3346666666666667) <= 1e-12);

    const double w = 0.3 + eval_qsat(m, 0.3, 0.7, 0.05);
    CHECK(std::abs(theta_inverse(m, w, 0.7, 0.05) - 0.3) <= 1e-12);
}

TEST_CASE("theta_inverse inverse and monotonicity properties on a grid") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SolverConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        const double qs = u(rng), a = 0.1 + 1.9 * u(rng), b = 0.5 + 1.5 * u(rng), c = 0.5 * u(rng);
        const auto m = SaturationModel::linear(qs, a, b, c);
        for (int i = 0; i < 40; ++i) {
            const double w = -3.0 + 6.0 * u(rng), z = u(rng), t = u(rng);
            const double th = theta_inverse(m, w, z, t, cfg);
            CHECK(std::abs(th + m(th, z, t) - w) <= 2.0 * (1.0 + a) * cfg.tolerance);
            CHECK(std::abs(th - closed_form(qs, a, b, c, w, z, t)) <= cfg.tolerance);
            CHECK(theta_inverse(m, w + 1e-3, z, t, cfg) > th - cfg.tolerance);
            CHECK(theta_inverse(m, w, std::min(z + 1e-3, 1.0), t, cfg) > th - cfg.tolerance);
        }
    }
}

TEST_CASE("compute_bounds for linear models") {
    DomainBox box;
    auto b1 = compute_bounds(model(), box);
    CHECK(b1.infDzTheta == doctest::Approx(2.0 / 3.0));
    CHECK(b1.supDtTheta == doctest::Approx(2.0 / 15.0));
    CHECK(b1.infDwTheta == doctest::Approx(2.0 / 3.0));
    CHECK(b1.cfl == doctest::Approx(0.2));

    auto b2 = compute_bounds(SaturationModel::linear(1, 1, 1, 0), box);
    CHECK(b2.supDtTheta == 0.0);
    CHECK(b2.cfl == 0.0);

    auto b3 = compute_bounds(SaturationModel::linear(1, 0.5, 2, 0.2), box);
    CHECK(b3.infDzTheta == doctest::Approx(4.0 / 3.0));
    CHECK(b3.cfl == doctest::Approx(0.1));
}

TEST_CASE("max_timestep") {
    ThetaBounds b;
    b.cfl = 0.2;
    CHECK(max_timestep(b, 2, 1.0) == doctest::Approx(1.25));
    CHECK(max_timestep(b, 1000, 1.0) == doctest::Approx(0.0025));
    b.cfl = 0.0;
    CHECK(max_timestep(b, 10, 1.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(max_timestep(b, 0, 1.0), ConfigError);
}

TEST_CASE("tabulated model reproduces a linear table") {
    const auto tb = linear_table(1.0, 0.5, 1.0, 0.2, 9);
    const auto m = SaturationModel::tabulated(tb);
    CHECK(m(0.3, 0.45, 0.7) == doctest::Approx(1.0 + 0.15 - 0.45 - 0.14).epsilon(1e-12));
    CHECK(std::abs(theta_inverse(m, 2.5, 0.0, 0.0) - 1.0) <= 1e-12);

    DomainBox box;
    box.wMax = 1.0;
    const auto b = compute_bounds(m, box, 8);
    CHECK(b.infDzTheta == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(b.supDtTheta == doctest::Approx(2.0 / 15.0).epsilon(1e-6));
    CHECK(b.cfl == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("tabulated model rejects non-monotone tables") {
    auto tb = linear_table(1.0, 0.5, 1.0, 0.2, 5);
    tb.q[0] = 100.0;
    CHECK_THROWS_AS(SaturationModel::tabulated(tb), ConfigError);
}

TEST_CASE("saturation table CSV round trip") {
    const auto tb = linear_table(1.0, 0.5, 1.0, 0.0, 3);
    const std::string path = "test_saturation_table.csv";
    {
        std::ofstream f(path);
        f.precision(17);
        f << "theta,z,t,q\n";
        for (std::size_t i = 0; i < tb.theta.size(); ++i)
            for (std::size_t j = 0; j < tb.z.size(); ++j)
                for (std::size_t k = 0; k < tb.t.size(); ++k)
                    f << tb.theta[i] << "," << tb.z[j] << "," << tb.t[k] << "," << tb.at(i, j, k) << "\n";
    }
    const auto loaded = load_saturation_table(path);
    CHECK(loaded.theta == tb.theta);
    CHECK(loaded.q == tb.q);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_saturation_table("does_not_exist.csv"), ConfigError);
}

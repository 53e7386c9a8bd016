#include <doctest.h>

#include "fixtures.hpp"
#include "moistcol/ensemble.hpp"
#include "reference_cascade.hpp"

#include <cmath>

using namespace moistcol;
using fixtures::vec;

namespace {

// n=2 column with theta=(0, 0.1); cell 1 has a wet atom (0.5) and a dry atom (0.1) with equal odds.
InitialEnsemble two_branch() {
    InitialEnsemble ens;
    ens.n = 2;
    ens.K = 1.0;
    ProfileEntry p;
    p.theta = vec({0.0, 0.1});
    p.atoms = {{{0.5, 0.5}, {0.1, 0.5}}, {{0.1, 1.0}}};
    ens.profiles.push_back(p);
    return ens;
}

// n=3 column with two atoms per cell and unequal probabilities.
InitialEnsemble three_cell() {
    InitialEnsemble ens;
    ens.n = 3;
    ens.K = 1.0;
    ProfileEntry p;
    p.theta = vec({0.0, 0.05, 0.1});
    p.atoms = {{{2.0 / 3.0, 0.3}, {0.2, 0.7}}, {{0.408333, 0.4}, {0.0, 0.6}}, {{0.1, 0.5}, {0.05, 0.5}}};
    ens.profiles.push_back(p);
    return ens;
}

}  // namespace

TEST_CASE("discretize_profile") {
    CHECK(discretize_profile([](double) { return 0.0; }, 5) == Vector::Zero(5));
    CHECK(discretize_profile([](double z) { return z; }, 4) == vec({0.25, 0.5, 0.75, 1.0}));
    const Vector d = vec({0.1, 0.2, 0.4});
    CHECK(discretize_profile(d, 3) == d);
    CHECK(discretize_profile(vec({0.0, 1.0}), 4) == vec({0.0, 0.0, 1.0, 1.0}));
    CHECK_THROWS_AS(discretize_profile([](double z) { return -z; }, 3), ConfigError);
}

TEST_CASE("discretize_conditional bins and shifts") {
    // Two equal-mass bins, K=1, n=2, C=4: atoms at w_1 - 2 = -2 and w_2 - 2 = -1.
    const auto atoms = discretize_conditional({{-0.5, 0.1}, {0.5, 0.2}, {0.2, 0.9}}, 2, 1.0, 4.0);
    REQUIRE(atoms[0].size() == 2);
    CHECK(atoms[0][0].value == -2.0);
    CHECK(atoms[0][1].value == -1.0);
    CHECK(atoms[0][0].probability == 0.5);
    CHECK(atoms[1].size() == 1);
    CHECK(atoms[1][0].probability == 1.0);
    CHECK_THROWS_AS(discretize_conditional({{0.0, 0.1}}, 2, 1.0, 4.0), ConfigError);
    CHECK_THROWS_AS(discretize_conditional({{2.0, 0.1}, {0.0, 0.9}}, 2, 1.0, 4.0), ConfigError);

    CellHistogram h{2, 4, {1, 1, 0, 0, 0, 0, 0, 2}};
    const auto ha = discretize_conditional(h, 2, 1.0, 4.0);
    REQUIRE(ha[0].size() == 1);
    CHECK(ha[0][0].value == -2.0);
    CHECK(ha[1][0].value == -1.0);
    CellHistogram empty{2, 2, {1, 0, 0, 0}};
    CHECK_THROWS_AS(discretize_conditional(empty, 2, 1.0, 4.0), ConfigError);
}

TEST_CASE("shift constant default and validation") {
    ThetaBounds b;
    b.supDzTheta = 2.0 / 3.0;
    b.infDwTheta = 2.0 / 3.0;
    CHECK(shift_constant(1.0, b) == doctest::Approx(4.0));
    CHECK_THROWS_AS(shift_constant(1.0, b, 3.0), ConfigError);
    CHECK(shift_constant(1.0, b, 3.5) == 3.5);
}

TEST_CASE("enumerate_sigmas product weights") {
    const auto dirac = deterministic_ensemble(fixtures::worked_n3());
    const auto one = enumerate_sigmas(dirac, 0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].probability == 1.0);

    InitialEnsemble ens;
    ens.n = 2;
    ProfileEntry p;
    p.theta = vec({0.0, 0.0});
    p.atoms = {{{0.0, 0.3}, {1.0, 0.7}}, {{0.0, 0.4}, {1.0, 0.6}}};
    ens.profiles.push_back(p);
    const auto all = enumerate_sigmas(ens, 0);
    REQUIRE(all.size() == 4);
    CHECK(all[0].probability == doctest::Approx(0.12));
    CHECK(all[1].probability == doctest::Approx(0.18));
    CHECK(all[2].probability == doctest::Approx(0.28));
    CHECK(all[3].probability == doctest::Approx(0.42));
    CHECK(all[1].choice == std::vector<int>{0, 1});
    CHECK_THROWS_AS(enumerate_sigmas(ens, 0, 3), ConfigError);
}

TEST_CASE("sample_sigmas is reproducible and unbiased") {
    const auto dirac = deterministic_ensemble(fixtures::worked_n3());
    for (const auto& s : sample_sigmas(dirac, 0, 20, 9)) CHECK(s == std::vector<int>{0, 0, 0});

    const auto ens = two_branch();
    const auto a = sample_sigmas(ens, 0, 10000, 42);
    CHECK(a == sample_sigmas(ens, 0, 10000, 42));
    CHECK_FALSE(a == sample_sigmas(ens, 0, 10000, 43));
    int zeros = 0;
    for (const auto& s : a) zeros += s[0] == 0;
    CHECK(std::abs(zeros / 10000.0 - 0.5) <= 0.015);
    CHECK_THROWS_AS(sample_sigmas(ens, 0, 0, 1), ConfigError);
}

TEST_CASE("Dirac reduction is bit-exact") {
    const auto m = fixtures::worked_model();
    const auto s = fixtures::worked_n3();
    const auto plain = run(s, m, 0.03, 0.01);
    const auto res = run_ensemble(deterministic_ensemble(s), m, 0.03, 0.01, {});
    REQUIRE(res.runs.size() == 1);
    CHECK(res.runs[0].weight == 1.0);
    for (int k = 0; k <= plain.steps(); ++k) {
        CHECK(res.runs[0].trajectory.state(k).theta == plain.state(k).theta);
        CHECK(res.runs[0].trajectory.state(k).q == plain.state(k).q);
        CHECK(res.runs[0].trajectory.cumulative(k) == plain.cumulative(k));
    }
    const auto mg = marginal(res, 0.015);
    CHECK(mg.samples.size() == 1);
    CHECK(mg.samples[0].weight == 1.0);
}

TEST_CASE("two-branch n=2 ensemble") {
    const auto m = fixtures::worked_model();
    const auto res = run_ensemble(two_branch(), m, 0.02, 0.01, {});
    REQUIRE(res.runs.size() == 2);
    CHECK(res.runs[0].weight == 0.5);
    CHECK(res.runs[1].weight == 0.5);
    CHECK(res.runs[0].trajectory.report(1).jump_count() == 1);
    CHECK(res.runs[1].trajectory.report(1).jump_count() == 0);
    CHECK(res.runs[1].trajectory.cumulative(1).is_identity());

    auto ref = reference::make({0.0, 0.1}, {0.5, 0.0});
    reference::step(ref, {1.0, 0.5, 1.0, 0.2}, 0.01, 1e-12);
    CHECK(std::abs(res.runs[0].trajectory.state(1).theta[1] - ref.theta[2]) <= 1e-12);

    const auto mg = marginal(res, 0.01);
    REQUIRE(mg.samples.size() == 2);
    CHECK_FALSE(mg.samples[0].theta == mg.samples[1].theta);
    CHECK(position_marginal_deviation(mg) == 0.0);

    const auto m0 = marginal(res, 0.0);
    for (const auto& smp : m0.samples) CHECK(smp.theta == vec({0.0, 0.1}));
}

TEST_CASE("n=3 exhaustive ensemble: eight members, unit weight") {
    const auto res = run_ensemble(three_cell(), fixtures::worked_model(), 0.03, 0.01, {}, {}, 2);
    CHECK(res.runs.size() == 8);
    CHECK(std::abs(res.total_weight() - 1.0) <= 1e-12);
    for (double t : {0.0, 0.01, 0.025}) CHECK(position_marginal_deviation(marginal(res, t)) == 0.0);
}

TEST_CASE("ensemble failures name the member") {
    auto ens = two_branch();
    ens.profiles[0].atoms[0][1].value = 5.0;  // inadmissible branch
    try {
        run_ensemble(ens, fixtures::worked_model(), 0.02, 0.01, {});
        FAIL("expected failure");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("sigma [1,0]") != std::string::npos);
    }
}

TEST_CASE("check_admissibility clauses") {
    const auto m = fixtures::worked_model();
    const auto b = compute_bounds(m, DomainBox{});
    for (const auto& c : check_admissibility(deterministic_ensemble(fixtures::worked_n3()), m, b)) CHECK(c.pass);

    auto bad = two_branch();
    bad.profiles[0].atoms[0][0].value = 0.9;
    const auto r1 = check_admissibility(bad, m, b);
    CHECK_FALSE(r1[4].pass);
    CHECK(r1[4].name == "constraint");

    auto dec = two_branch();
    dec.profiles[0].theta = vec({0.2, 0.1});
    CHECK_FALSE(check_admissibility(dec, m, b)[1].pass);
    CHECK_THROWS_AS(make_ensemble(2, 1.0, {}, dec.profiles, m, b), ConfigError);
}

TEST_CASE("marginal_distance") {
    EmpiricalMarginal a, b, c;
    a.n = b.n = c.n = 1;
    a.samples = {{1.0, vec({0.0}), vec({0.0}), Permutation::identity(1)}};
    b.samples = {{1.0, vec({1.0}), vec({0.0}), Permutation::identity(1)}};
    c.samples = {{0.5, vec({0.0}), vec({0.0}), Permutation::identity(1)},
                 {0.5, vec({1.0}), vec({0.0}), Permutation::identity(1)}};
    EmpiricalMarginal d = a;
    d.samples[0].theta = vec({0.5});
    const Observable theta{Observable::Kind::ThetaAt, 0.5};
    CHECK(marginal_distance(a, a, theta) == 0.0);
    CHECK(marginal_distance(a, b, theta) == doctest::Approx(1.0));
    // |F_c - F_d| = 1/2 on all of [0, 1].
    CHECK(marginal_distance(c, d, theta) == doctest::Approx(0.5));
    const Observable l2{Observable::Kind::ProfileL2, 0.0};
    CHECK(marginal_distance(a, b, l2) == doctest::Approx(1.0));
    CHECK(marginal_distance(c, d, l2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(parse_observable("nope", 0.0), ConfigError);
}

TEST_CASE("profile_l2 transport matches the 1-D distance for one-cell profiles") {
    auto rng = fixtures::seeded(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        EmpiricalMarginal a, b;
        a.n = b.n = 1;
        for (int i = 0; i < 7; ++i) a.samples.push_back({u(rng), vec({u(rng)}), vec({0.0}), Permutation::identity(1)});
        for (int i = 0; i < 5; ++i) b.samples.push_back({u(rng), vec({u(rng)}), vec({0.0}), Permutation::identity(1)});
        const double w1 = marginal_distance(a, b, {Observable::Kind::ThetaAt, 0.5});
        const double ot = marginal_distance(a, b, {Observable::Kind::ProfileL2, 0.0});
        CHECK(ot == doctest::Approx(w1).epsilon(1e-9));
    }
}

TEST_CASE("conditional discretization converges as the resolution doubles") {
    // s | z uniform on [-0.5 + 0.3 z, 0.5 + 0.3 z] on a regular grid; observable thetaM at z = 0.4.
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 100; ++j) {
            const double z = (i + 0.5) / 400.0;
            samples.emplace_back(-0.5 + 0.3 * z + (j + 0.5) / 100.0, z);
        }
    const double K = 1.0;
    const auto bounds = compute_bounds(fixtures::worked_model(), DomainBox{K + 1.0, 1.0});
    const double C = shift_constant(K, bounds);
    auto law = [&](int n) {
        const auto atoms = discretize_conditional(samples, n, K, C);
        const int cell = static_cast<int>(std::ceil(0.4 * n)) - 1;
        std::vector<std::pair<double, double>> out;
        for (const auto& a : atoms[static_cast<std::size_t>(cell)]) {
            const double binRight = -K + 2.0 * K * std::round((a.value + C / n + K) * n / (2.0 * K)) / n;
            CHECK(a.value == doctest::Approx(binRight - C / n));
            out.emplace_back(a.value, a.probability);
        }
        return out;
    };
    double previous = INFINITY;
    for (int n : {4, 8, 16, 32}) {
        const double d = wasserstein1(law(n), law(2 * n));
        CHECK(d < previous);
        previous = d;
    }
}

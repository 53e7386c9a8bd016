#include <doctest.h>

#include "fixtures.hpp"
#include "moistcol/simulate.hpp"
#include "reference_cascade.hpp"

#include <cmath>

using namespace moistcol;
using fixtures::vec;

TEST_CASE("all-dry run stays put") {
    const auto m = fixtures::worked_model();
    const auto s = ColumnState::initial(vec({0.0, 1.0}), vec({0.0, 0.0}));
    const auto traj = run(s, m, 0.05, 0.01);
    CHECK(traj.steps() == 5);
    for (int k = 0; k <= traj.steps(); ++k) {
        CHECK(traj.state(k).theta == s.theta);
        CHECK(traj.cumulative(k).is_identity());
    }
    for (const auto& path : lagrangian_paths(traj)) CHECK(path.total_variation() == 0.0);
}

TEST_CASE("n=2 two-step run matches the slow reference") {
    const auto m = fixtures::worked_model();
    const auto traj = run(fixtures::worked_n2(), m, 0.02, 0.01);
    REQUIRE(traj.steps() == 2);

    auto ref = reference::make({0.0, 0.1}, {0.5, 0.0});
    const reference::Linear lin{1.0, 0.5, 1.0, 0.2};
    for (int k = 1; k <= 2; ++k) {
        reference::step(ref, lin, k * 0.01, 1e-12);
        const auto s = traj.state(k);
        for (int p = 0; p < 2; ++p) {
            CHECK(std::abs(s.theta[p] - ref.theta[static_cast<std::size_t>(p + 1)]) <= 1e-12);
            CHECK(s.label[p] + 1 == ref.at[static_cast<std::size_t>(p + 1)]);
        }
    }
    // Second step: the risen parcel is wet again under further decay and is re-saturated in place.
    CHECK(std::abs(traj.state(2).theta[1] - 0.336) <= 1e-12);
    CHECK(traj.report(2).levels.front().jumperFrom == 1);
    CHECK(traj.step_map(2).is_identity());
}

TEST_CASE("flow map and paths on the worked examples") {
    const auto m = fixtures::worked_model();
    const auto traj = run(fixtures::worked_n2(), m, 0.02, 0.01);
    CHECK(flow_map(traj, 0.005).is_identity());
    CHECK(flow_map(traj, 0.01) == Permutation({1, 0}));
    CHECK_THROWS_AS(flow_map(traj, 0.02), ConfigError);
    CHECK_THROWS_AS(flow_map(traj, -0.001), ConfigError);

    const auto paths = lagrangian_paths(traj);
    CHECK(paths[0].position[0] == 0.5);
    CHECK(paths[0].position[1] == 1.0);
    CHECK(std::abs(paths[0].thetaHat[1] - 0.334667) <= 1e-6);
    CHECK(paths[0].positive_variation() == doctest::Approx(0.5));

    const auto t3 = run(fixtures::worked_n3(), m, 0.01, 0.01);
    const auto p3 = lagrangian_paths(t3);
    CHECK(p3[1].position[0] == doctest::Approx(2.0 / 3.0));
    CHECK(p3[1].position[1] == doctest::Approx(1.0 / 3.0));
    CHECK(p3[1].thetaHat[1] == 0.05);
    CHECK(std::abs(t3.state(1).theta[2] - 0.445778) <= 1e-6);
}

TEST_CASE("cumulative maps compose the per-step maps") {
    auto rng = fixtures::seeded(11);
    const auto rc = fixtures::random_case(rng, 12);
    const auto m = rc.model();
    const auto bounds = bounds_for(rc.state(), m, 1.0);
    const double dt = max_timestep(bounds, rc.n, 1.0);
    const auto traj = run(rc.state(), m, 20 * dt, dt);
    Permutation alpha = Permutation::identity(rc.n);
    for (int k = 1; k <= traj.steps(); ++k) {
        alpha = traj.step_map(k) * alpha;
        CHECK(alpha == traj.cumulative(k));
    }
}

TEST_CASE("thin mode reconstructs the full snapshots") {
    auto rng = fixtures::seeded(5);
    const auto rc = fixtures::random_case(rng, 20);
    const auto m = rc.model();
    const double dt = max_timestep(bounds_for(rc.state(), m, 1.0), rc.n, 1.0);
    RunOptions thin;
    thin.thin = true;
    const auto a = run(rc.state(), m, 30 * dt, dt);
    const auto b = run(rc.state(), m, 30 * dt, dt, thin);
    REQUIRE(a.steps() == b.steps());
    for (int k = 0; k <= a.steps(); ++k) {
        const auto sa = a.state(k), sb = b.state(k);
        CHECK(sa.theta == sb.theta);
        CHECK(sa.q == sb.q);
        CHECK(sa.position == sb.position);
    }
}

TEST_CASE("run rejects oversize steps and inadmissible data") {
    const auto m = fixtures::worked_model();
    CHECK_THROWS_AS(run(fixtures::worked_n2(), m, 1.0, 2.0), ConfigError);
    const auto wet = ColumnState::initial(vec({0.0, 0.1}), vec({0.9, 0.0}));
    CHECK_THROWS_AS(run(wet, m, 0.02, 0.01), ConfigError);
    const auto unsorted = ColumnState::initial(vec({0.2, 0.1}), vec({0.0, 0.0}));
    CHECK_THROWS_AS(run(unsorted, m, 0.02, 0.01), ConfigError);
}

TEST_CASE("time indexing: boundaries belong to the new step, T need not divide") {
    const auto m = fixtures::worked_model();
    const auto traj = run(fixtures::worked_n2(), m, 0.025, 0.01);
    CHECK(traj.steps() == 3);
    CHECK(traj.index_at(0.01) == 1);
    CHECK(traj.index_at(0.0099999) == 0);
    CHECK(traj.index_at(0.0249) == 2);
    const Vector mid = interpolated_theta(traj, 0.005);
    CHECK(mid[1] == doctest::Approx(0.5 * (0.1 + traj.state(1).theta[1])));
}

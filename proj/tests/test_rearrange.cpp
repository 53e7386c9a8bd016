#include <doctest.h>

#include "fixtures.hpp"
#include "moistcol/rearrange.hpp"
#include "reference_cascade.hpp"

#include <cmath>

using namespace moistcol;
using fixtures::vec;

namespace {

reference::Linear ref_model(const fixtures::RandomCase& rc) { return {rc.qstar, rc.a, rc.b, rc.c}; }

std::vector<int> one_based(const std::vector<int>& v) {
    std::vector<int> out;
    for (int p : v) out.push_back(p + 1);
    return out;
}

}  // namespace

TEST_CASE("wet_set examples") {
    const auto m = fixtures::worked_model();
    CHECK(wet_set(ColumnState::initial(vec({0.0, 1.0}), vec({0.0, 0.0})), m, 0.01).empty());
    CHECK(wet_set(fixtures::worked_n2(), m, 0.01) == std::vector<int>{0});
    CHECK(wet_set(fixtures::worked_n3(), m, 0.01) == std::vector<int>{0, 1});
}

TEST_CASE("eligible_set examples") {
    const auto m = fixtures::worked_model();
    const auto s3 = fixtures::worked_n3();
    CHECK(eligible_set(s3, m, 0.01, 2, {}).empty());
    CHECK(eligible_set(s3, m, 0.01, 2, wet_set(s3, m, 0.01)) == std::vector<int>{0, 1});
    const auto s2 = fixtures::worked_n2();
    CHECK(eligible_set(s2, m, 0.01, 1, wet_set(s2, m, 0.01)) == std::vector<int>{0});
}

TEST_CASE("select_jumper picks maximal thetaM, ties to the highest position") {
    const auto s3 = fixtures::worked_n3();
    CHECK_FALSE(select_jumper(s3, {}).has_value());
    CHECK(select_jumper(s3, {0, 1}) == 0);

    const auto tie = ColumnState::from_moist(vec({0.0, 0.1, 0.2}), vec({0.5, 0.5, 0.2}));
    CHECK(select_jumper(tie, {0, 1}) == 1);
}

TEST_CASE("apply_jump on the worked examples") {
    const auto m = fixtures::worked_model();
    auto s2 = fixtures::worked_n2();
    const auto rec = apply_jump(s2, m, 1, 0, 0.01);
    CHECK(rec.jumperLabel == 0);
    CHECK(s2.theta[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(s2.theta[1] - 0.3346666666666667) <= 1e-12);
    CHECK(std::abs(s2.q[1] - 0.1653333333333333) <= 1e-12);
    CHECK(s2.position == Permutation({1, 0}));

    auto s3 = fixtures::worked_n3();
    apply_jump(s3, m, 2, 0, 0.01);
    CHECK(std::abs(s3.theta[2] - 0.44577777777777777) <= 1e-12);
    CHECK(std::abs(s3.q[2] - 0.22088888888888889) <= 1e-12);
    CHECK(s3.label == Permutation({1, 2, 0}));

    auto same = fixtures::worked_n2();
    apply_jump(same, m, 0, 0, 0.01);
    CHECK(same.position.is_identity());
    CHECK(same.theta[0] == doctest::Approx((0.5 - 1.0 + 0.5 + 0.002) / 1.5));

    auto bad = fixtures::worked_n2();
    CHECK_THROWS_AS(apply_jump(bad, m, 0, 1, 0.01), LogicError);
}

TEST_CASE("step on an all-dry column is the identity") {
    const auto m = fixtures::worked_model();
    const auto s = ColumnState::initial(vec({0.0, 1.0}), vec({0.0, 0.0}));
    const auto r = step(s, m, 0.01);
    CHECK(r.beta.is_identity());
    CHECK(r.report.levels.empty());
    CHECK(r.state.theta == s.theta);
    CHECK(r.state.q == s.q);
}

TEST_CASE("step reproduces the n=2 worked example") {
    const auto r = step(fixtures::worked_n2(), fixtures::worked_model(), 0.01);
    CHECK(std::abs(r.state.theta[0] - 0.1) <= 1e-6);
    CHECK(std::abs(r.state.theta[1] - 0.334667) <= 1e-6);
    CHECK(r.beta == Permutation({1, 0}));
    REQUIRE(r.report.levels.size() == 1);
    CHECK(r.report.levels[0].k == 1);
    CHECK(r.report.levels[0].jumperLabel == 0);
    CHECK(r.report.labels[0].lifted);
    CHECK(r.report.labels[0].liftTarget == 1);
    CHECK(r.report.labels[1].pushedDown);
}

TEST_CASE("step reproduces the n=3 worked example") {
    const auto r = step(fixtures::worked_n3(), fixtures::worked_model(), 0.01);
    CHECK(std::abs(r.state.theta[0] - 0.05) <= 1e-6);
    CHECK(std::abs(r.state.theta[1] - 0.1) <= 1e-6);
    CHECK(std::abs(r.state.theta[2] - 0.445778) <= 1e-6);
    CHECK(r.state.label == Permutation({1, 2, 0}));
    REQUIRE(r.report.levels.size() == 1);
    CHECK(r.report.levels[0].wet == std::vector<int>{0, 1});
    CHECK(r.report.levels[0].eligible == std::vector<int>{0, 1});
    CHECK(r.report.labels[0].lifts == 1);
    CHECK(r.report.labels[1].pushedDown);
    CHECK_FALSE(r.report.labels[1].lifted);
    CHECK(wet_set(r.state, fixtures::worked_model(), 0.01).empty());
}

TEST_CASE("step agrees with the slow reference on random columns") {
    auto rng = fixtures::seeded(2024);
    int jumps = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const int n = 2 + trial % 30;
        const auto rc = fixtures::random_case(rng, n);
        const auto m = rc.model();
        const auto bounds = compute_bounds(m, DomainBox{});
        const double dt = max_timestep(bounds, n, 1.0);

        auto ref = reference::make(rc.theta, rc.q);
        ColumnState s = rc.state();
        for (int k = 1; k <= 6; ++k) {
            const double tNext = k * dt;
            const auto events = reference::step(ref, ref_model(rc), tNext, 1e-12);
            const auto r = step_to(s, m, tNext);
            REQUIRE(events.size() == r.report.levels.size());
            for (std::size_t e = 0; e < events.size(); ++e) {
                const auto& lvl = r.report.levels[e];
                CHECK(events[e].k == lvl.k + 1);
                CHECK(events[e].jumperLabel == lvl.jumperLabel + 1);
                CHECK(events[e].wet == one_based(lvl.wet));
                CHECK(events[e].eligible == one_based(lvl.eligible));
                if (lvl.jumperLabel >= 0) ++jumps;
            }
            for (int p = 0; p < n; ++p) {
                CHECK(ref.at[static_cast<std::size_t>(p + 1)] == r.state.label[p] + 1);
                CHECK(std::abs(ref.theta[static_cast<std::size_t>(p + 1)] - r.state.theta[p]) <= 1e-9);
            }
            s = r.state;
        }
    }
    CHECK(jumps > 100);
}

TEST_CASE("step invariants hold and a corrupted state is reported") {
    const auto m = fixtures::worked_model();
    const auto before = fixtures::worked_n3();
    auto r = step(before, m, 0.01);
    StepTolerances tol;
    tol.saturation = 1e-11;
    const auto res = measure_step(before, r.state, m);
    CHECK(res.conservationResidual <= 1e-12);
    CHECK(first_violation(res, tol).empty());

    auto broken = r.state;
    broken.theta[1] = 10.0;
    const auto msg = first_violation(measure_step(before, broken, m), tol);
    CHECK(msg.find("(i)") != std::string::npos);

    broken = r.state;
    broken.q[0] += 1e-6;
    CHECK(first_violation(measure_step(before, broken, m), tol).find("(ii)") != std::string::npos);
}

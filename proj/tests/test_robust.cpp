#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hmdp/errors.hpp"
#include "hmdp/robust.hpp"

using namespace hmdp;

namespace {

IntervalMdp::IBranch exact(StateId to, double p) { return {to, p, p}; }

/// The six-call diamond macro with every call slot set to the same
/// reward bracket. Visit weights are 1, 1/2, 1/2, 1/2, 1/4, 1/4, so
/// the value brackets to 3x the per-call bracket.
IntervalMdp diamond_macro(double call_lo, double call_hi) {
  IntervalMdp m;
  m.state_names = {"m0", "x0", "m1", "x1", "m2", "x2",
                   "m3", "x3", "m4", "x4", "m5", "x5", "done"};
  m.rows.resize(13);
  m.reward_lo.assign(13, 0.0);
  m.reward_hi.assign(13, 0.0);
  m.target.assign(13, false);
  m.target[12] = true;
  for (StateId call : {0, 2, 4, 6, 8, 10}) {
    m.reward_lo[call] = call_lo;
    m.reward_hi[call] = call_hi;
    m.rows[call].push_back({"exit", {exact(call + 1, 1.0)}});
  }
  m.rows[1].push_back({"split", {exact(2, 0.5), exact(4, 0.5)}});
  m.rows[3].push_back({"split", {exact(6, 0.5), exact(8, 0.5)}});
  m.rows[5].push_back({"split", {exact(6, 0.5), exact(10, 0.5)}});
  m.rows[7].push_back({"go", {exact(12, 1.0)}});
  m.rows[9].push_back({"go", {exact(12, 1.0)}});
  m.rows[11].push_back({"go", {exact(12, 1.0)}});
  m.initial = 0;
  return m;
}

}  // namespace

TEST_CASE("diamond macro brackets scale the shared call bracket by 3") {
  RobustBounds b = robust_value_bounds(diamond_macro(2.56, 6.25));
  CHECK(b.lower == doctest::Approx(7.68).epsilon(1e-9));
  CHECK(b.upper == doctest::Approx(18.75).epsilon(1e-9));
  CHECK(b.lower_pass.at(0) == doctest::Approx(7.68).epsilon(1e-9));
  CHECK(b.upper_pass.at(0) == doctest::Approx(18.75).epsilon(1e-9));

  // Point intervals collapse the bracket.
  RobustBounds pt = robust_value_bounds(diamond_macro(4.0, 4.0));
  CHECK(pt.lower == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(pt.upper == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("nature shifts mass between interval ends in value order") {
  // Successor a is worth 5, successor b is worth 1. The row allows
  // a in [0.2, 0.6] and b in [0.5, 0.8].
  IntervalMdp m;
  m.state_names = {"s", "a", "b", "t"};
  m.rows.resize(4);
  m.rows[0].push_back({"go", {{1, 0.2, 0.6}, {2, 0.5, 0.8}}});
  m.rows[1].push_back({"go", {exact(3, 1.0)}});
  m.rows[2].push_back({"go", {exact(3, 1.0)}});
  m.reward_lo = {0, 5, 1, 0};
  m.reward_hi = {0, 5, 1, 0};
  m.target = {false, false, false, true};
  RobustBounds b = robust_value_bounds(m);
  // Pessimist: a at its floor 0.2, the rest on b. Optimist: slack of
  // 0.3 over the floors goes to a first, capping it at 0.5.
  CHECK(b.lower == doctest::Approx(0.2 * 5 + 0.8 * 1).epsilon(1e-9));
  CHECK(b.upper == doctest::Approx(0.5 * 5 + 0.5 * 1).epsilon(1e-9));
}

TEST_CASE("complement-coupled two-branch rows stay tight") {
  // Success pays 10, failure pays 2; the success probability ranges
  // over [0.3, 0.7] and the failure branch over its complement.
  IntervalMdp m;
  m.state_names = {"s", "good", "bad", "t"};
  m.rows.resize(4);
  m.rows[0].push_back({"go", {{1, 0.3, 0.7}, {2, 0.3, 0.7}}});
  m.rows[1].push_back({"go", {exact(3, 1.0)}});
  m.rows[2].push_back({"go", {exact(3, 1.0)}});
  m.reward_lo = {0, 10, 2, 0};
  m.reward_hi = {0, 10, 2, 0};
  m.target = {false, false, false, true};
  RobustBounds b = robust_value_bounds(m);
  CHECK(b.lower == doctest::Approx(0.3 * 10 + 0.7 * 2).epsilon(1e-9));
  CHECK(b.upper == doctest::Approx(0.7 * 10 + 0.3 * 2).epsilon(1e-9));
}

TEST_CASE("action choice maximizes in both passes") {
  IntervalMdp m;
  m.state_names = {"s", "t"};
  m.rows.resize(2);
  m.rows[0].push_back({"low", {exact(1, 1.0)}});
  m.rows[0].push_back({"high", {exact(1, 1.0)}});
  m.reward_lo = {3, 0};
  m.reward_hi = {4, 0};
  m.target = {false, true};
  RobustBounds b = robust_value_bounds(m);
  CHECK(b.lower == doctest::Approx(3.0));
  CHECK(b.upper == doctest::Approx(4.0));
  CHECK(b.lower_pass.policy.choice[0] == 0);  // ties toward low index
}

TEST_CASE("malformed intervals raise suitability violations") {
  IntervalMdp m;
  m.state_names = {"s", "t"};
  m.rows.resize(2);
  m.reward_lo = {1, 0};
  m.reward_hi = {1, 0};
  m.target = {false, true};

  SUBCASE("lower end above upper end") {
    m.rows[0].push_back({"go", {{1, 0.8, 0.2}}});
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
  SUBCASE("floors already exceed one") {
    m.rows[0].push_back({"go", {{0, 0.6, 0.7}, {1, 0.6, 0.7}}});
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
  SUBCASE("ceilings cannot reach one") {
    m.rows[0].push_back({"go", {{0, 0.1, 0.3}, {1, 0.1, 0.3}}});
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
  SUBCASE("negative lower end") {
    m.rows[0].push_back({"go", {{1, -0.2, 1.0}}});
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
  SUBCASE("upper end above one") {
    m.rows[0].push_back({"go", {{1, 0.5, 1.2}}});
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
  SUBCASE("reward bracket inverted") {
    m.rows[0].push_back({"go", {exact(1, 1.0)}});
    m.reward_lo[0] = 2.0;
    CHECK_THROWS_AS(robust_value_bounds(m), SuitabilityViolation);
  }
}

TEST_CASE("targets unreachable even optimistically are rejected") {
  IntervalMdp m;
  m.state_names = {"s", "t"};
  m.rows.resize(2);
  m.rows[0].push_back({"stay", {{0, 1.0, 1.0}}});
  m.reward_lo = {1, 0};
  m.reward_hi = {1, 0};
  m.target = {false, true};
  CHECK_THROWS_AS(robust_value_bounds(m), DivergentReward);
}

TEST_CASE("unbounded reward ceilings yield an infinite upper bound") {
  IntervalMdp m = diamond_macro(2.0, std::numeric_limits<double>::infinity());
  RobustBounds b = robust_value_bounds(m);
  CHECK(b.lower == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(b.upper == std::numeric_limits<double>::infinity());
}

TEST_CASE("sampled point models stay inside the robust bracket") {
  std::mt19937_64 rng(425);
  auto unit = [&] { return static_cast<double>(rng() % 10001) / 10000.0; };
  for (int trial = 0; trial < 30; ++trial) {
    // Layered DAG over 4 inner states plus a target, so every point
    // model reaches the target almost surely.
    const StateId n = 5;
    IntervalMdp m;
    m.rows.resize(n);
    m.reward_lo.resize(n);
    m.reward_hi.resize(n);
    m.target.assign(n, false);
    m.target[n - 1] = true;
    for (StateId s = 0; s < n; ++s) {
      m.state_names.push_back("s" + std::to_string(s));
      double r = 5.0 * unit();
      m.reward_lo[s] = m.target[s] ? 0.0 : r;
      m.reward_hi[s] = m.target[s] ? 0.0 : r + 2.0 * unit();
    }
    for (StateId s = 0; s + 1 < n; ++s) {
      int actions = 1 + static_cast<int>(rng() % 2);
      for (int a = 0; a < actions; ++a) {
        IntervalMdp::IRow row;
        row.action = "a" + std::to_string(a);
        std::vector<StateId> succ;
        for (StateId t = s + 1; t < n; ++t)
          if (t == n - 1 || rng() % 2) succ.push_back(t);
        double floor_sum = 0.9;
        double lo_unit = floor_sum / static_cast<double>(succ.size());
        double spread = 0.3 / static_cast<double>(succ.size());
        for (StateId t : succ) {
          double lo = lo_unit * (0.5 + 0.5 * unit());
          double hi = std::min(1.0, lo + spread + 0.2 * unit());
          row.branches.push_back({t, lo, hi});
        }
        // Stretch ceilings if they cannot reach probability mass 1.
        double hi_sum = 0;
        for (const auto& b : row.branches) hi_sum += b.hi;
        if (hi_sum < 1.0)
          for (auto& b : row.branches)
            b.hi = std::min(1.0, b.hi + (1.0 - hi_sum));
        m.rows[s].push_back(std::move(row));
      }
    }
    RobustBounds bounds = robust_value_bounds(m);

    for (int sample = 0; sample < 15; ++sample) {
      ConcreteMdp pt;
      pt.state_names = m.state_names;
      pt.rows.resize(n);
      pt.target = m.target;
      for (StateId s = 0; s < n; ++s) {
        double u = unit();
        pt.rewards.push_back(m.reward_lo[s] +
                             u * (m.reward_hi[s] - m.reward_lo[s]));
        for (const auto& row : m.rows[s]) {
          // Feasible point distribution: start at the floors, then
          // spread the remaining mass in a random branch order.
          ConcreteMdp::Row prow;
          prow.action = row.action;
          double slack = 1.0;
          for (const auto& b : row.branches) slack -= b.lo;
          std::vector<std::size_t> order(row.branches.size());
          for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
          std::shuffle(order.begin(), order.end(), rng);
          std::vector<double> prob(row.branches.size());
          for (std::size_t i : order) {
            double take = std::min(slack,
                                   row.branches[i].hi - row.branches[i].lo);
            prob[i] = row.branches[i].lo + take;
            slack -= take;
          }
          REQUIRE(slack == doctest::Approx(0.0).epsilon(1e-9));
          for (std::size_t i = 0; i < prob.size(); ++i)
            prow.branches.push_back({row.branches[i].to, prob[i]});
          pt.rows[s].push_back(std::move(prow));
        }
      }
      double value = max_expected_reward(pt).at(0);
      CHECK(value >= bounds.lower - 1e-6);
      CHECK(value <= bounds.upper + 1e-6);
    }
  }
}

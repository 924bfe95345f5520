#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hmdp/errors.hpp"
#include "hmdp/generate.hpp"
#include "hmdp/lifting.hpp"

using namespace hmdp;

namespace {

MultilinearExpr c(std::int64_t n, std::int64_t d = 1) {
  return MultilinearExpr::constant(Rational(n, d));
}
MultilinearExpr v(std::uint32_t i) { return MultilinearExpr::variable(i); }

TemplateModel chain2() { return make_token_model().tmpl; }

/// Two-exit template where both actions reach the success exit with
/// probability exactly p: bold leaves immediately (reward 1), slow
/// loops half the time (reward 2). The choice changes the reward but
/// never the exit distribution.
TemplateModel two_exit_conserving() {
  TemplateModel tmpl;
  tmpl.core.params = {"p"};
  tmpl.admissible.lower = {0.1};
  tmpl.admissible.upper = {0.9};
  tmpl.core.state_names = {"e", "succ", "fail"};
  tmpl.core.rows.resize(3);
  tmpl.core.rows[0].push_back({"bold", {{1, v(0)}, {2, c(1) - v(0)}}});
  tmpl.core.rows[0].push_back(
      {"slow",
       {{0, c(1, 2)}, {1, c(1, 2) * v(0)}, {2, c(1, 2) * (c(1) - v(0))}}});
  tmpl.core.rewards = {c(1), c(0), c(0)};
  tmpl.core.target = {false, true, true};
  tmpl.entry = 0;
  tmpl.exits = {1, 2};
  return tmpl;
}

}  // namespace

TEST_CASE("to_region is the smallest box around the valuations") {
  Region r = to_region({Valuation{{0.32}}, Valuation{{0.5}}, Valuation{{0.4}}});
  CHECK(r.lower == std::vector<double>{0.32});
  CHECK(r.upper == std::vector<double>{0.5});
  Region r2 = to_region({Valuation{{0.2, 0.9}}, Valuation{{0.4, 0.1}}});
  CHECK(r2.lower == std::vector<double>{0.2, 0.1});
  CHECK(r2.upper == std::vector<double>{0.4, 0.9});
  CHECK_THROWS_AS(to_region({}), Error);
  CHECK_THROWS_AS(to_region({Valuation{{0.2}}, Valuation{{0.2, 0.3}}}), Error);
}

TEST_CASE("point analysis matches the chain closed form") {
  TemplateModel tmpl = chain2();
  for (double p : {0.32, 0.4, 0.5, 0.625, 0.78125}) {
    CheckOneResult r = check_one(tmpl, Valuation{{p}},
                                 HierarchyMode::kSingleSuccessor);
    CHECK(r.result.reward == doctest::Approx(2.0 / p).epsilon(1e-10));
    REQUIRE(r.result.exit_probabilities.size() == 1);
    CHECK(r.result.exit_probabilities[0] == doctest::Approx(1.0));
    CHECK(r.policy.choice[0] == 0);
  }
  CHECK_THROWS_AS(check_one(tmpl, Valuation{{0.99}},
                            HierarchyMode::kSingleSuccessor),
                  NotWellDefined);
}

TEST_CASE("region bounds bracket the chain value range tightly") {
  TemplateModel tmpl = chain2();
  struct Case {
    double lo, hi;
  };
  // Value 2/p is monotone, so the bracket is [2/hi, 2/lo].
  for (Case rc : {Case{0.32, 0.78125}, Case{0.32, 0.5}, Case{0.5, 0.78125},
                  Case{0.32, 0.4}, Case{0.625, 0.78125}}) {
    ResultBounds b = bound_results_for_set(tmpl, Region{{rc.lo}, {rc.hi}},
                                           HierarchyMode::kSingleSuccessor);
    CHECK(b.lower.reward == doctest::Approx(2.0 / rc.hi).epsilon(1e-8));
    CHECK(b.upper.reward == doctest::Approx(2.0 / rc.lo).epsilon(1e-8));
    CHECK(b.lower.exit_probabilities == std::vector<double>{1.0});
    CHECK(b.upper.exit_probabilities == std::vector<double>{1.0});
  }
}

TEST_CASE("point regions collapse to the point analysis") {
  TemplateModel tmpl = chain2();
  double eps = 1e-8;
  SolveOptions opts;
  opts.epsilon = eps;
  for (double p : {0.32, 0.5, 0.78125}) {
    CheckOneResult one = check_one(tmpl, Valuation{{p}},
                                   HierarchyMode::kSingleSuccessor, 0, opts);
    ResultBounds b =
        bound_results_for_set(tmpl, Region::point(Valuation{{p}}),
                              HierarchyMode::kSingleSuccessor, 0, opts);
    CHECK(b.lower.reward >= one.result.reward - 2 * eps);
    CHECK(b.upper.reward <= one.result.reward + 2 * eps);
  }
}

TEST_CASE("sampled valuations stay inside their region bounds") {
  TemplateModel tmpl = chain2();
  std::mt19937_64 rng(99);
  auto unit = [&] { return static_cast<double>(rng() % 10001) / 10000.0; };
  for (int trial = 0; trial < 10; ++trial) {
    double a = 0.05 + 0.9 * unit();
    double b = 0.05 + 0.9 * unit();
    Region region{{std::min(a, b)}, {std::max(a, b)}};
    ResultBounds bounds = bound_results_for_set(
        tmpl, region, HierarchyMode::kSingleSuccessor);
    for (int k = 0; k < 20; ++k) {
      double p = region.lower[0] + unit() * (region.upper[0] - region.lower[0]);
      CheckOneResult one =
          check_one(tmpl, Valuation{{p}}, HierarchyMode::kSingleSuccessor);
      CHECK(one.result.reward >= bounds.lower.reward - 2e-8);
      CHECK(one.result.reward <= bounds.upper.reward + 2e-8);
    }
  }
}

TEST_CASE("shrinking the region never widens the bounds") {
  TemplateModel tmpl = chain2();
  ResultBounds outer = bound_results_for_set(tmpl, Region{{0.3}, {0.8}},
                                             HierarchyMode::kSingleSuccessor);
  ResultBounds inner = bound_results_for_set(tmpl, Region{{0.4}, {0.7}},
                                             HierarchyMode::kSingleSuccessor);
  CHECK(inner.lower.reward >= outer.lower.reward - 1e-9);
  CHECK(inner.upper.reward <= outer.upper.reward + 1e-9);
}

TEST_CASE("regions that change the graph are rejected") {
  TemplateModel tmpl = chain2();
  tmpl.admissible.lower = {0.0};
  tmpl.admissible.upper = {1.0};
  CHECK_THROWS_AS(bound_results_for_set(tmpl, Region{{0.0}, {0.5}},
                                        HierarchyMode::kSingleSuccessor),
                  GraphChange);
  CHECK_THROWS_AS(make_vertex_relaxation(tmpl, Region{{0.5}, {1.0}}),
                  GraphChange);
}

TEST_CASE("too many local parameters exceed the vertex cap") {
  // One state whose row mentions 17 parameters; 2^17 vertices is past
  // the default cap of 2^16.
  const unsigned k = 17;
  TemplateModel tmpl;
  for (unsigned i = 0; i < k; ++i) {
    tmpl.core.params.push_back("x" + std::to_string(i));
    tmpl.admissible.lower.push_back(0.1);
    tmpl.admissible.upper.push_back(0.9);
  }
  tmpl.core.state_names = {"e", "t"};
  tmpl.core.rows.resize(2);
  MultilinearExpr leave;
  for (unsigned i = 0; i < k; ++i)
    leave = leave + c(1, k) * v(i);
  tmpl.core.rows[0].push_back({"go", {{1, leave}, {0, c(1) - leave}}});
  tmpl.core.rewards = {c(1), c(0)};
  tmpl.core.target = {false, true};
  tmpl.entry = 0;
  tmpl.exits = {1};
  REQUIRE(validate(tmpl).empty());
  CHECK_THROWS_AS(
      make_vertex_relaxation(tmpl, tmpl.admissible),
      CapExceeded);
  // A higher cap accepts the same region.
  CHECK_NOTHROW(make_vertex_relaxation(tmpl, tmpl.admissible, 17));
}

TEST_CASE("success-target analysis is lexicographic") {
  TemplateModel tmpl = two_exit_conserving();
  // Both actions reach succ with probability p; slow pays 2 instead
  // of 1, so it wins the reward tie-break.
  CheckOneResult r = check_one(tmpl, Valuation{{0.7}},
                               HierarchyMode::kSuccessTarget, 0);
  CHECK(r.policy.choice[0] == 1);
  CHECK(r.result.reward == doctest::Approx(2.0).epsilon(1e-8));
  REQUIRE(r.result.exit_probabilities.size() == 2);
  CHECK(r.result.exit_probabilities[0] == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(r.result.exit_probabilities[1] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("success probability dominates the reward") {
  // Add a lucrative action that halves the success probability; the
  // analysis must refuse it.
  TemplateModel tmpl = two_exit_conserving();
  tmpl.core.rows[0].push_back(
      {"greedy",
       {{0, c(3, 4)}, {1, c(1, 8) * v(0)},
        {2, c(1, 4) - c(1, 8) * v(0)}}});
  REQUIRE(validate(tmpl).empty());
  // greedy: success = p/2 < p, but reward 4 (visits 1/(1/4)).
  CheckOneResult r = check_one(tmpl, Valuation{{0.6}},
                               HierarchyMode::kSuccessTarget, 0);
  CHECK(r.policy.choice[0] == 1);  // still slow
  CHECK(r.result.exit_probabilities[0] == doctest::Approx(0.6).epsilon(1e-8));
  CHECK(r.result.reward == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("two-exit region bounds couple the exit probabilities") {
  TemplateModel tmpl = two_exit_conserving();
  Region region{{0.55}, {0.8}};
  ResultBounds b = bound_results_for_set(tmpl, region,
                                         HierarchyMode::kSuccessTarget, 0);
  // Success probability is p itself; the failure exit is the
  // complement interval.
  CHECK(b.lower.exit_probabilities[0] == doctest::Approx(0.55).epsilon(1e-7));
  CHECK(b.upper.exit_probabilities[0] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(b.lower.exit_probabilities[1] == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(b.upper.exit_probabilities[1] == doctest::Approx(0.45).epsilon(1e-7));
  // The reward is 2 under every point and policy that conserves the
  // exit distribution.
  CHECK(b.lower.reward == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(b.upper.reward == doctest::Approx(2.0).epsilon(1e-6));

  for (double p : {0.55, 0.6, 0.7, 0.8}) {
    CheckOneResult one = check_one(tmpl, Valuation{{p}},
                                   HierarchyMode::kSuccessTarget, 0);
    CHECK(one.result.reward >= b.lower.reward - 2e-8);
    CHECK(one.result.reward <= b.upper.reward + 2e-8);
    for (int e = 0; e < 2; ++e) {
      CHECK(one.result.exit_probabilities[e] >=
            b.lower.exit_probabilities[e] - 2e-8);
      CHECK(one.result.exit_probabilities[e] <=
            b.upper.exit_probabilities[e] + 2e-8);
    }
  }
}

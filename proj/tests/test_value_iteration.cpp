#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hmdp/errors.hpp"
#include "hmdp/generate.hpp"
#include "hmdp/value_iteration.hpp"

using namespace hmdp;

namespace {

ConcreteMdp token_instance(double p) {
  return instantiate(make_token_model().tmpl.core, Valuation{{p}});
}

}  // namespace

TEST_CASE("chain value matches the closed form") {
  // Two step states advancing with probability p collect 1/p each in
  // expectation, so the entry value is 2/p. Self-loop resolution makes
  // the sweep exact, not just epsilon-close.
  for (double p : {0.05, 0.32, 0.5, 0.78125, 0.95}) {
    ValueSolution sol = max_expected_reward(token_instance(p));
    CHECK(sol.at(0) == doctest::Approx(2.0 / p).epsilon(1e-12));
    CHECK(sol.at(1) == doctest::Approx(1.0 / p).epsilon(1e-12));
    CHECK(sol.at(2) == 0.0);
    CHECK(sol.residual == 0.0);
  }
}

TEST_CASE("maximization picks the better action with low-index ties") {
  ConcreteMdp m;
  m.state_names = {"s", "t"};
  m.rows.resize(2);
  // Leaving immediately collects the state reward once; looping back
  // with probability 1/2 collects it twice in expectation.
  m.rows[0].push_back({"fast", {{1, 1.0}}});
  m.rows[0].push_back({"slow", {{0, 0.5}, {1, 0.5}}});
  m.rewards = {1.0, 0.0};
  m.target = {false, true};
  ValueSolution sol = max_expected_reward(m);
  CHECK(sol.at(0) == doctest::Approx(2.0));
  CHECK(sol.policy.choice[0] == 1);
  CHECK(sol.policy.choice[1] == -1);  // targets choose nothing

  // With equal values the lower action index wins.
  m.rows[0][1] = {"also-fast", {{1, 1.0}}};
  sol = max_expected_reward(m);
  CHECK(sol.at(0) == doctest::Approx(1.0));
  CHECK(sol.policy.choice[0] == 0);
}

TEST_CASE("states that can avoid the target are rejected") {
  ConcreteMdp m;
  m.state_names = {"s", "sink", "t"};
  m.rows.resize(3);
  m.rows[0].push_back({"risky", {{1, 0.5}, {2, 0.5}}});
  m.rewards = {1.0, 0.0, 0.0};
  m.target = {false, false, true};
  // sink is absorbing and not a target.
  CHECK_THROWS_AS(require_almost_sure_reachability(m), DivergentReward);
  CHECK_THROWS_AS(max_expected_reward(m), DivergentReward);
}

TEST_CASE("a second action forming an end component is rejected") {
  ConcreteMdp m;
  m.state_names = {"s", "t"};
  m.rows.resize(2);
  m.rows[0].push_back({"leave", {{1, 1.0}}});
  m.rows[0].push_back({"stay", {{0, 1.0}}});
  m.rewards = {1.0, 0.0};
  m.target = {false, true};
  // Staying forever is possible under one policy, so maximal expected
  // reward is unbounded.
  CHECK_THROWS_AS(max_expected_reward(m), DivergentReward);
}

TEST_CASE("unreachable trouble spots do not block the check") {
  ConcreteMdp m;
  m.state_names = {"s", "t", "island"};
  m.rows.resize(3);
  m.rows[0].push_back({"go", {{1, 1.0}}});
  m.rows[2].push_back({"spin", {{2, 1.0}}});  // unreachable from s
  m.rewards = {1.0, 0.0, 1.0};
  m.target = {false, true, false};
  m.initial = 0;
  CHECK_NOTHROW(require_almost_sure_reachability(m));
  CHECK(max_expected_reward(m).at(0) == doctest::Approx(1.0));
}

TEST_CASE("two-state cycle converges to the linear solve") {
  // v0 = 1 + v1, v1 = 1 + 0.99 v0 gives v0 = 200, v1 = 199. This pair
  // genuinely contracts at rate 0.99, exercising the iteration loop.
  ConcreteMdp m;
  m.state_names = {"a", "b", "t"};
  m.rows.resize(3);
  m.rows[0].push_back({"go", {{1, 1.0}}});
  m.rows[1].push_back({"go", {{0, 0.99}, {2, 0.01}}});
  m.rewards = {1.0, 1.0, 0.0};
  m.target = {false, false, true};
  ValueSolution sol = max_expected_reward(m);
  CHECK(sol.at(0) == doctest::Approx(200.0).epsilon(1e-7));
  CHECK(sol.at(1) == doctest::Approx(199.0).epsilon(1e-7));

  SolveOptions tight;
  tight.max_iterations = 10;
  CHECK_THROWS_AS(max_expected_reward(m, tight), IterationCapExceeded);
}

TEST_CASE("reachability maximizes the probability of a goal") {
  ConcreteMdp m;
  m.state_names = {"s", "t", "sink"};
  m.rows.resize(3);
  m.rows[0].push_back({"direct", {{1, 0.3}, {2, 0.7}}});
  m.rows[0].push_back({"retry", {{1, 0.25}, {0, 0.75}}});
  m.rewards = {0.0, 0.0, 0.0};
  m.target = {false, true, false};
  std::vector<bool> goal{false, true, false};
  ValueSolution sol = max_reachability(m, goal);
  // Retrying forever succeeds eventually: p = 0.25 + 0.75 p, so p = 1.
  CHECK(sol.at(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.policy.choice[0] == 1);

  Policy direct{{0, -1, -1}};
  CHECK(reachability_probability(m, direct, goal) == doctest::Approx(0.3));
  CHECK(reachability_probability(m, sol.policy, goal) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("expected visits count arrivals, targets absorb") {
  ConcreteMdp m = token_instance(0.5);
  Policy triv{{0, 0, -1}};
  VisitResult visits = expected_visits(m, triv);
  CHECK(visits.visits[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(visits.visits[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(visits.visits[2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("visits split across probabilistic branching") {
  ConcreteMdp m;
  m.state_names = {"s", "l", "r", "t"};
  m.rows.resize(4);
  m.rows[0].push_back({"split", {{1, 0.25}, {2, 0.75}}});
  m.rows[1].push_back({"go", {{3, 1.0}}});
  m.rows[2].push_back({"go", {{3, 1.0}}});
  m.rewards = {0, 0, 0, 0};
  m.target = {false, false, false, true};
  VisitResult visits = expected_visits(m, Policy{{0, 0, 0, -1}});
  CHECK(visits.visits[0] == doctest::Approx(1.0));
  CHECK(visits.visits[1] == doctest::Approx(0.25));
  CHECK(visits.visits[2] == doctest::Approx(0.75));
  CHECK(visits.visits[3] == doctest::Approx(1.0));
}

TEST_CASE("game with one alternative per action equals plain iteration") {
  ConcreteMdp m = token_instance(0.4);
  ValueSolution plain = max_expected_reward(m);

  VertexGame game;
  game.states.resize(3);
  game.terminal_value = {0, 0, 0};
  for (StateId s = 0; s < 3; ++s) {
    for (const auto& row : m.rows[s]) {
      VertexGame::Action action;
      action.alternatives.push_back({m.rewards[s], row.branches});
      game.states[s].push_back(std::move(action));
    }
  }
  for (Role role : {Role::kMin, Role::kMax}) {
    ValueSolution sol = game_value_iteration(game, Role::kMax, role);
    CHECK(sol.at(0) == doctest::Approx(plain.at(0)).epsilon(1e-9));
  }
}

TEST_CASE("vertex role resolves alternatives against or for the player") {
  VertexGame game;
  game.states.resize(2);
  game.terminal_value = {0, 0};
  VertexGame::Action action;
  action.alternatives.push_back({1.0, {{1, 1.0}}});
  action.alternatives.push_back({3.0, {{1, 1.0}}});
  game.states[0].push_back(std::move(action));
  CHECK(game_value_iteration(game, Role::kMax, Role::kMin).at(0) ==
        doctest::Approx(1.0));
  CHECK(game_value_iteration(game, Role::kMax, Role::kMax).at(0) ==
        doctest::Approx(3.0));
}

TEST_CASE("terminal values feed reachability-style games") {
  VertexGame game;
  game.states.resize(3);
  game.terminal_value = {0, 1, 0};  // goal pays 1, sink pays 0
  VertexGame::Action action;
  action.alternatives.push_back({0.0, {{1, 0.6}, {2, 0.4}}});
  game.states[0].push_back(std::move(action));
  CHECK(game_value_iteration(game, Role::kMax, Role::kMin).at(0) ==
        doctest::Approx(0.6));
}

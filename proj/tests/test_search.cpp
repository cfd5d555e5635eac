#include <doctest.h>

#include "helpers.hpp"
#include "xce/elimination.hpp"
#include "xce/randprog.hpp"
#include "xce/search.hpp"
#include "xce/strategies.hpp"
#include "xce/trace.hpp"

using namespace xce;

TEST_CASE("brute force finds the optimum and breaks ties lexicographically") {
  CompGraph g = testutil::two_intermediate_graph();
  SearchResult r = brute_force(g);
  CHECK(r.best_cost == 6);
  CHECK(r.best_order == EliminationOrder{3, 2});
  CHECK(order_cost(g, r.best_order).total_mults == r.best_cost);

  CompGraph big(2, 12, 2);
  CHECK_THROWS_AS(brute_force(big, 9), Error);

  // single intermediate: the only order
  CompGraph one(1, 1, 1);
  one.add_edge(0, 1, {1, {1, 1}, {1, 1}});
  one.add_edge(1, 2, {1, {1, 1}, {1, 1}});
  SearchResult r1 = brute_force(one);
  CHECK(r1.best_cost == 1);
  CHECK(r1.best_order == EliminationOrder{1});
}

TEST_CASE("mcts reaches the optimum on the worked example") {
  CompGraph g = testutil::two_intermediate_graph();
  MctsConfig mc;
  mc.budget = 2;
  mc.seed = 3;
  SearchResult r = mcts_search(g, mc);
  CHECK(r.best_cost == 6);
  CHECK(order_cost(g, r.best_order).total_mults == 6);

  // budget 1 still returns some valid complete order
  mc.budget = 1;
  SearchResult r1 = mcts_search(g, mc);
  CHECK(r1.best_order.size() == 2);
  CHECK(r1.best_cost >= 6);
}

TEST_CASE("mcts is deterministic per seed") {
  RandProgConfig rc;
  rc.seed = 77;
  rc.n_intermediates = 10;
  CompGraph g = trace(random_program(rc));
  MctsConfig mc;
  mc.budget = 32;
  mc.seed = 5;
  mc.rollout = RolloutPolicy::random;
  SearchResult a = mcts_search(g, mc);
  SearchResult b = mcts_search(g, mc);
  CHECK(a.best_cost == b.best_cost);
  CHECK(a.best_order == b.best_order);
  CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("annealing basics") {
  CompGraph g = testutil::two_intermediate_graph();
  EliminationOrder fwd = baseline_order(g, Strategy::forward);

  AnnealConfig zero;
  zero.steps = 0;
  SearchResult r0 = simulated_annealing(g, fwd, zero);
  CHECK(r0.best_order == fwd);
  CHECK(r0.best_cost == 8);

  AnnealConfig ac;
  ac.steps = 100;
  ac.t0 = 10.0;
  ac.alpha = 0.95;
  ac.seed = 1;
  SearchResult r = simulated_annealing(g, fwd, ac);
  CHECK(r.best_cost == 6);

  // never worse than the starting order
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    RandProgConfig rc;
    rc.seed = 400 + static_cast<std::uint64_t>(rep);
    rc.n_intermediates = 8;
    CompGraph rg = trace(random_program(rc));
    EliminationOrder init = baseline_order(rg, Strategy::forward);
    AnnealConfig cfg;
    cfg.steps = 300;
    cfg.seed = rng();
    SearchResult rr = simulated_annealing(rg, init, cfg);
    CHECK(rr.best_cost <= order_cost(rg, init).total_mults);
    CHECK(order_cost(rg, rr.best_order).total_mults == rr.best_cost);
  }
}

TEST_CASE("portfolio dominates every baseline and reproduces per seed") {
  for (int rep = 0; rep < 8; ++rep) {
    RandProgConfig rc;
    rc.seed = 4242 + static_cast<std::uint64_t>(rep);
    rc.n_intermediates = 7 + rep;
    CompGraph g = trace(random_program(rc));
    PortfolioConfig pc;
    pc.mcts_budget = 24;
    pc.anneal_steps = 400;
    pc.seed = 11;
    SearchResult r = portfolio_search(g, pc);
    long long best_baseline = std::min(
        {order_cost(g, baseline_order(g, Strategy::forward)).total_mults,
         order_cost(g, baseline_order(g, Strategy::reverse)).total_mults,
         order_cost(g, baseline_order(g, Strategy::min_markowitz)).total_mults});
    CHECK(r.best_cost <= best_baseline);
    CHECK(order_cost(g, r.best_order).total_mults == r.best_cost);
    SearchResult again = portfolio_search(g, pc);
    CHECK(again.best_cost == r.best_cost);
    CHECK(again.best_order == r.best_order);
  }
}

TEST_CASE("searchers never beat brute force") {
  for (int rep = 0; rep < 6; ++rep) {
    RandProgConfig rc;
    rc.seed = 900 + static_cast<std::uint64_t>(rep);
    rc.n_intermediates = 6;
    CompGraph g = trace(random_program(rc));
    SearchResult exact = brute_force(g);
    PortfolioConfig pc;
    pc.mcts_budget = 64;
    pc.anneal_steps = 2000;
    pc.seed = 2;
    SearchResult r = portfolio_search(g, pc);
    CHECK(r.best_cost >= exact.best_cost);
  }
}

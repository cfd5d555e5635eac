#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "xce/elimination.hpp"
#include "xce/randprog.hpp"
#include "xce/vertexgame.hpp"

using namespace xce;

TEST_CASE("worked example episode") {
  GameState s = reset(testutil::two_intermediate_graph());
  CHECK(s.mask == std::vector<bool>{true, true});
  CHECK(s.cumulative_mults == 0);
  CHECK_FALSE(s.done);

  StepResult r1 = step(s, 1);  // the single-predecessor vertex
  CHECK(r1.reward == -2.0);
  CHECK_FALSE(r1.done);
  StepResult r2 = step(s, 0);
  CHECK(r2.reward == -4.0);
  CHECK(r2.done);
  CHECK(s.cumulative_mults == 6);
  CHECK_THROWS_AS(step(s, 0), Error);
  CHECK_THROWS_AS(step(s, 7), Error);
}

TEST_CASE("reset rejects touched graphs, zero-intermediate graphs end instantly") {
  CompGraph g = testutil::two_intermediate_graph();
  eliminate_vertex(g, 2);
  CHECK_THROWS_AS(reset(g), Error);

  CompGraph none(2, 0, 1);
  none.add_edge(0, 2, {1, {1, 1}, {1, 1}});
  GameState s = reset(none);
  CHECK(s.done);
}

TEST_CASE("tensor rows of eliminated vertices zero out") {
  GameState s = reset(testutil::two_intermediate_graph());
  step(s, 0);
  const int cols = 4;
  for (int c = 0; c < cols; ++c)
    CHECK(s.tensor[static_cast<std::size_t>((2 * cols + c) * 5)] == 0);
}

TEST_CASE("episode return equals the negated order cost") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    RandProgConfig rc;
    rc.seed = 1000 + static_cast<std::uint64_t>(rep);
    rc.n_in = 1 + rng_int(rng, 3);
    rc.n_out = 1 + rng_int(rng, 3);
    rc.n_intermediates = 2 + rng_int(rng, 10);
    Program p = random_program(rc);
    CompGraph g = trace(p);

    GameState s = reset(g);
    double ret = 0.0;
    EliminationOrder played;
    int steps_taken = 0;
    while (!s.done) {
      std::vector<int> legal;
      for (std::size_t a = 0; a < s.mask.size(); ++a)
        if (s.mask[a]) legal.push_back(static_cast<int>(a));
      int pick = legal[static_cast<std::size_t>(rng_int(rng, static_cast<int>(legal.size())))];
      StepResult r = step(s, pick);
      ret += r.reward;
      played.push_back(g.n_inputs() + pick);
      ++steps_taken;
    }
    CHECK(steps_taken == g.n_intermediates());
    CostReport report = order_cost(g, played);
    CHECK(-ret == static_cast<double>(report.total_mults));
    CHECK(s.cumulative_mults == report.total_mults);
  }
}

TEST_CASE("batched environments match single stepping") {
  std::vector<CompGraph> graphs(3, testutil::two_intermediate_graph());
  std::vector<GameState> states = reset_many(graphs);
  std::vector<StepResult> rs = step_many(states, {1, 1, 0});
  CHECK(rs[0].reward == -2.0);
  CHECK(rs[1].reward == -2.0);
  CHECK(rs[2].reward == -4.0);
}

TEST_CASE("return scaling") {
  RewardScaler sq;
  CHECK(scale_return(0.0, sq) == 0.0);
  CHECK(scale_return(-99.0, sq) == doctest::Approx(-9.099).epsilon(1e-12));
  CHECK(scale_return(-320.0, sq) ==
        doctest::Approx(-(std::sqrt(321.0) - 1.0) - 0.320).epsilon(1e-12));
  // monotone
  double prev = scale_return(-1000.0, sq);
  for (double r = -999.0; r <= 5.0; r += 7.0) {
    double cur = scale_return(r, sq);
    CHECK(cur > prev);
    prev = cur;
  }

  RewardScaler lg{RewardScaler::Kind::log, 1e-3};
  CHECK(scale_return(-std::exp(2.0), lg) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(scale_return(0.0, lg), Error);
  CHECK_THROWS_AS(scale_return(3.0, lg), Error);
}

TEST_CASE("ranking by scaled return matches ranking by cost") {
  // enumerate both orders of the worked example
  CompGraph g = testutil::two_intermediate_graph();
  long long fwd = order_cost(g, {2, 3}).total_mults;
  long long rev = order_cost(g, {3, 2}).total_mults;
  RewardScaler sq;
  CHECK(fwd > rev);
  CHECK(scale_return(-static_cast<double>(fwd), sq) <
        scale_return(-static_cast<double>(rev), sq));
}

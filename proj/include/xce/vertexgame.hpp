#pragma once

#include "xce/graph.hpp"

namespace xce {

// Single-player elimination game. One environment owns one graph copy;
// actions are 0-based intermediate indices, the reward is the negated
// multiplication count of the chosen elimination, and the game ends once
// the graph is bipartite.
struct GameState {
  CompGraph graph;
  std::vector<int> tensor;
  std::vector<bool> mask;  // true = still eliminable
  long long cumulative_mults = 0;
  bool done = false;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

GameState reset(const CompGraph& g);
StepResult step(GameState& s, int action);

std::vector<GameState> reset_many(const std::vector<CompGraph>& graphs);
std::vector<StepResult> step_many(std::vector<GameState>& states,
                                  const std::vector<int>& actions);

struct RewardScaler {
  enum class Kind { sqrt_eps, log };
  Kind kind = Kind::sqrt_eps;
  double epsilon = 1e-3;
};

// sqrt_eps: sgn(r)(sqrt(|r|+1)-1) + eps*r. log: returns -log(-r) for
// negative r (cumulative costs enter as negative returns) and rejects
// r >= 0.
double scale_return(double r, const RewardScaler& scaler);

}  // namespace xce

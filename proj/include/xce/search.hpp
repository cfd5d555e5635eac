#pragma once

#include <functional>
#include <optional>
#include <string>

#include "xce/graph.hpp"

namespace xce {

struct SearchResult {
  EliminationOrder best_order;
  long long best_cost = 0;
  long long evaluations = 0;  // complete order evaluations
  std::string provenance;
};

// Exhaustive minimum over all complete orders, lexicographically smallest
// order on ties. Enumerates with cost-based pruning, so it stays exact.
SearchResult brute_force(const CompGraph& g, int limit = 9);

// Policy prior over actions: given the current graph and the legal
// 0-based intermediate indices, returns unnormalized positive weights.
using Prior = std::function<std::vector<double>(const CompGraph&, const std::vector<int>&)>;

Prior uniform_prior();
// Softmax of negated Markowitz degrees: cheap-to-eliminate vertices first.
Prior markowitz_prior(double temperature = 8.0);

enum class RolloutPolicy { random, markowitz_completion };

struct MctsConfig {
  int budget = 50;  // simulations per committed move
  Prior prior = uniform_prior();
  RolloutPolicy rollout = RolloutPolicy::random;
  std::uint64_t seed = 0;
  double c_puct = 1.25;
};

// One committed action per game step, each preceded by `budget` tree
// simulations; node values are squashed episode returns. Tracks the best
// complete order seen across every simulation.
SearchResult mcts_search(const CompGraph& g, const MctsConfig& cfg);

struct AnnealConfig {
  long long steps = 10000;
  // T0 <= 0 self-calibrates to the mean |delta cost| over 100 random swaps.
  double t0 = -1.0;
  double alpha = 0.97;
  std::uint64_t seed = 0;
};

// Random position swaps with Metropolis acceptance on a geometric
// temperature schedule; returns the best order visited.
SearchResult simulated_annealing(const CompGraph& g, const EliminationOrder& init,
                                 const AnnealConfig& cfg);

struct PortfolioConfig {
  bool use_mcts = true;
  int mcts_budget = 200;
  RolloutPolicy rollout = RolloutPolicy::markowitz_completion;
  bool use_anneal = true;
  long long anneal_steps = 10000;
  int anneal_restarts = 1;
  std::uint64_t seed = 0;
};

// Baselines first (forward, reverse, min Markowitz), then the configured
// searchers seeded from the best baseline; the result can never be worse
// than any baseline.
SearchResult portfolio_search(const CompGraph& g, const PortfolioConfig& cfg);

}  // namespace xce

#include "xce/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "xce/elimination.hpp"
#include "xce/strategies.hpp"
#include "xce/vertexgame.hpp"

namespace xce {

namespace {

void keep_best(SearchResult& acc, const EliminationOrder& order, long long cost,
               const std::string& provenance) {
  if (acc.best_order.empty() || cost < acc.best_cost) {
    acc.best_order = order;
    acc.best_cost = cost;
    acc.provenance = provenance;
  }
}

}  // namespace

SearchResult brute_force(const CompGraph& g, int limit) {
  const int n = g.n_intermediates();
  if (n > limit)
    fail(ErrorCode::TooLarge, "graph exceeds the brute-force limit");

  SearchResult result;
  result.provenance = "brute";
  if (n == 0) {
    result.best_cost = 0;
    return result;
  }

  long long best = std::numeric_limits<long long>::max();
  EliminationOrder chosen;
  EliminationOrder prefix;
  long long evals = 0;

  // Depth-first in lexicographic action order with >= pruning: the first
  // completed minimum is also the lexicographically smallest one.
  std::function<void(const CompGraph&, long long)> descend =
      [&](const CompGraph& current, long long cost_so_far) {
        if (cost_so_far >= best) return;
        bool leaf = true;
        for (VertexId v : current.intermediates()) {
          if (current.eliminated(v)) continue;
          leaf = false;
          CompGraph next = current;
          auto [m, a] = eliminate_vertex(next, v);
          (void)a;
          prefix.push_back(v);
          descend(next, cost_so_far + m);
          prefix.pop_back();
        }
        if (leaf) {
          ++evals;
          if (cost_so_far < best) {
            best = cost_so_far;
            chosen = prefix;
          }
        }
      };
  descend(g, 0);

  result.best_order = chosen;
  result.best_cost = best;
  result.evaluations = evals;
  return result;
}

Prior uniform_prior() {
  return [](const CompGraph&, const std::vector<int>& legal) {
    return std::vector<double>(legal.size(), 1.0);
  };
}

Prior markowitz_prior(double temperature) {
  return [temperature](const CompGraph& g, const std::vector<int>& legal) {
    std::vector<double> w(legal.size());
    double lo = std::numeric_limits<double>::max();
    for (std::size_t a = 0; a < legal.size(); ++a) {
      w[a] = static_cast<double>(markowitz_degree(g, g.n_inputs() + legal[a]));
      lo = std::min(lo, w[a]);
    }
    for (double& x : w) x = std::exp(-(x - lo) / temperature);
    return w;
  };
}

namespace {

struct Node {
  long long visits = 0;
  double value_sum = 0.0;
  std::vector<int> actions;
  std::vector<double> priors;
  std::vector<std::unique_ptr<Node>> children;
  bool expanded = false;
};

std::vector<int> legal_actions(const CompGraph& g) {
  std::vector<int> acts;
  for (VertexId v : g.intermediates())
  return acts;
}

// Plays eliminations to bipartiteness, appending the chosen vertices.
long long rollout_to_end(CompGraph& g, RolloutPolicy policy, std::mt19937_64& rng,
                         EliminationOrder& order) {
  long long cost = 0;
  while (!g.is_bipartite()) {
    std::vector<int> acts = legal_actions(g);
    int pick;
    if (policy == RolloutPolicy::random) {
      pick = acts[static_cast<std::size_t>(rng_int(rng, static_cast<int>(acts.size())))];
    } else {
      pick = acts.front();
      long long best = markowitz_degree(g, g.n_inputs() + pick);
      for (int a : acts) {
        long long deg = markowitz_degree(g, g.n_inputs() + a);
        if (deg < best) {
          best = deg;
          pick = a;
        }
      }
    }
    auto [m, adds] = eliminate_vertex(g, g.n_inputs() + pick);
    (void)adds;
    cost += m;
    order.push_back(g.n_inputs() + pick);
  }
  return cost;
}

}  // namespace

SearchResult mcts_search(const CompGraph& g, const MctsConfig& cfg) {
  if (cfg.budget < 1) fail(ErrorCode::InvalidConfig, "budget must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  RewardScaler scaler;  // squashing for the backed-up returns

  SearchResult result;
  result.provenance = "mcts";

  CompGraph root_state = g;
  EliminationOrder committed;
  long long committed_cost = 0;

  while (!root_state.is_bipartite()) {
    Node root;
    double q_lo = std::numeric_limits<double>::max();
    double q_hi = std::numeric_limits<double>::lowest();

    for (int sim = 0; sim < cfg.budget; ++sim) {
      CompGraph s = root_state;
      Node* node = &root;
      std::vector<Node*> path{node};
      EliminationOrder played = committed;
      long long path_cost = committed_cost;

      while (true) {
        if (!node->expanded) {
          node->actions = legal_actions(s);
          std::vector<double> w = cfg.prior(s, node->actions);
          double total = 0.0;
          for (double x : w) total += x;
          node->priors.resize(w.size());
          for (std::size_t a = 0; a < w.size(); ++a)
            node->priors[a] = total > 0 ? w[a] / total : 1.0 / static_cast<double>(w.size());
          node->children.resize(node->actions.size());
          node->expanded = true;
          break;  // leaf reached; evaluate by rollout
        }
        if (node->actions.empty()) break;  // terminal
        // PUCT over min-max normalized child values
        double sqrt_n = std::sqrt(static_cast<double>(node->visits) + 1.0);
        int chosen = 0;
        double best_score = std::numeric_limits<double>::lowest();
        for (std::size_t a = 0; a < node->actions.size(); ++a) {
          const Node* child = node->children[a].get();
          double q = 1.0;  // optimistic for unvisited children
          if (child && child->visits > 0 && q_hi > q_lo)
            q = (child->value_sum / static_cast<double>(child->visits) - q_lo) /
                (q_hi - q_lo);
          else if (child && child->visits > 0)
            q = 0.5;
          double u = q + cfg.c_puct * node->priors[a] * sqrt_n /
                             (1.0 + (child ? static_cast<double>(child->visits) : 0.0));
          if (u > best_score) {
            best_score = u;
            chosen = static_cast<int>(a);
          }
        }
        if (!node->children[static_cast<std::size_t>(chosen)])
          node->children[static_cast<std::size_t>(chosen)] = std::make_unique<Node>();
        int act = node->actions[static_cast<std::size_t>(chosen)];
        VertexId picked = s.n_inputs() + act;
        auto [m, adds] = eliminate_vertex(s, picked);
        (void)adds;
        path_cost += m;
        played.push_back(picked);
        node = node->children[static_cast<std::size_t>(chosen)].get();
        path.push_back(node);
        if (s.is_bipartite()) break;
      }

      long long total_cost = path_cost + rollout_to_end(s, cfg.rollout, rng, played);
      ++result.evaluations;
      keep_best(result, played, total_cost, "mcts");

      double value = scale_return(-static_cast<double>(total_cost), scaler);
      for (Node* n : path) {
        n->visits += 1;
        n->value_sum += value;
        double q = n->value_sum / static_cast<double>(n->visits);
        q_lo = std::min(q_lo, q);
        q_hi = std::max(q_hi, q);
      }
    }

    // Commit the most visited action, lowest index on ties.
    int best_a = -1;
    long long best_visits = -1;
    for (std::size_t a = 0; a < root.actions.size(); ++a) {
      long long v = root.children[a] ? root.children[a]->visits : 0;
      if (v > best_visits) {
        best_visits = v;
        best_a = static_cast<int>(a);
      }
    }
    VertexId v = root_state.n_inputs() + root.actions[static_cast<std::size_t>(best_a)];
    auto [m, adds] = eliminate_vertex(root_state, v);
    (void)adds;
    committed_cost += m;
    committed.push_back(v);
  }

  ++result.evaluations;
  keep_best(result, committed, committed_cost, "mcts");
  return result;
}

SearchResult simulated_annealing(const CompGraph& g, const EliminationOrder& init,
                                 const AnnealConfig& cfg) {
  SearchResult result;
  result.provenance = "anneal";
  long long init_cost = order_cost(g, init).total_mults;
  result.best_order = init;
  result.best_cost = init_cost;

  const int n = static_cast<int>(init.size());
  if (cfg.steps <= 0 || n < 2) return result;

  std::mt19937_64 rng(cfg.seed);
  EliminationOrder current = init;
  long long current_cost = init_cost;

  double t = cfg.t0;
  if (t <= 0.0) {
    // Calibrate the start temperature from the local cost landscape.
    double acc = 0.0;
    int samples = 100;
    for (int s = 0; s < samples; ++s) {
      EliminationOrder probe = current;
      int a = rng_int(rng, n), b = rng_int(rng, n);
      std::swap(probe[static_cast<std::size_t>(a)], probe[static_cast<std::size_t>(b)]);
      acc += std::abs(static_cast<double>(order_cost(g, probe).total_mults - current_cost));
      ++result.evaluations;
    }
    t = std::max(1.0, acc / samples);
  }

  for (long long it = 0; it < cfg.steps; ++it) {
    int a = rng_int(rng, n), b = rng_int(rng, n);
    if (a == b) {
      t *= cfg.alpha;
      continue;
    }
    EliminationOrder next = current;
    std::swap(next[static_cast<std::size_t>(a)], next[static_cast<std::size_t>(b)]);
    long long next_cost = order_cost(g, next).total_mults;
    ++result.evaluations;
    long long delta = next_cost - current_cost;
    if (delta <= 0 || rng_real(rng) < std::exp(-static_cast<double>(delta) / t)) {
      current = std::move(next);
      current_cost = next_cost;
      keep_best(result, current, current_cost, "anneal");
    }
    t *= cfg.alpha;
  }
  return result;
}

SearchResult portfolio_search(const CompGraph& g, const PortfolioConfig& cfg) {
  SearchResult result;
  const Strategy baselines[3] = {Strategy::forward, Strategy::reverse,
                                 Strategy::min_markowitz};
  EliminationOrder best_baseline;
  for (Strategy s : baselines) {
    EliminationOrder order = baseline_order(g, s);
    long long cost = order_cost(g, order).total_mults;
    ++result.evaluations;
    if (result.best_order.empty() || cost < result.best_cost) best_baseline = order;
    keep_best(result, order, cost, strategy_name(s));
  }
  if (g.n_intermediates() == 0) {
    result.best_cost = 0;
    result.provenance = "forward";
    return result;
  }

  if (cfg.use_mcts) {
    MctsConfig mc;
    mc.budget = cfg.mcts_budget;
    mc.prior = markowitz_prior();
    mc.rollout = cfg.rollout;
    mc.seed = cfg.seed;
    SearchResult r = mcts_search(g, mc);
    result.evaluations += r.evaluations;
    keep_best(result, r.best_order, r.best_cost, "mcts");
  }
  if (cfg.use_anneal) {
    for (int restart = 0; restart < cfg.anneal_restarts; ++restart) {
      AnnealConfig ac;
      ac.steps = cfg.anneal_steps;
      ac.seed = cfg.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(restart + 1);
      EliminationOrder init = restart == 0 ? result.best_order : best_baseline;
      SearchResult r = simulated_annealing(g, init, ac);
      result.evaluations += r.evaluations;
      keep_best(result, r.best_order, r.best_cost, "anneal");
    }
  }
  return result;
}

}  // namespace xce

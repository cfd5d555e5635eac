#include "xce/vertexgame.hpp"

#include <cmath>

#include "xce/elimination.hpp"

namespace xce {

GameState reset(const CompGraph& g) {
  if (!g.untouched())
    fail(ErrorCode::GraphAlreadyModified, "reset requires a fresh graph");
  GameState s;
  s.graph = g;
  s.tensor = g.to_tensor();
  s.mask.assign(static_cast<std::size_t>(g.n_intermediates()), true);
  s.cumulative_mults = 0;
  s.done = g.is_bipartite();
  return s;
}

StepResult step(GameState& s, int action) {
  if (action < 0 || action >= static_cast<int>(s.mask.size()) ||
      !s.mask[static_cast<std::size_t>(action)])
    fail(ErrorCode::MaskedAction, "action masked or out of range");
  VertexId v = s.graph.n_inputs() + action;
  auto [mults, adds] = eliminate_vertex(s.graph, v);
  (void)adds;
  s.mask[static_cast<std::size_t>(action)] = false;
  s.tensor = s.graph.to_tensor();
  s.cumulative_mults += mults;
  s.done = s.graph.is_bipartite();
  return {-static_cast<double>(mults), s.done};
}

std::vector<GameState> reset_many(const std::vector<CompGraph>& graphs) {
  std::vector<GameState> states;
  states.reserve(graphs.size());
  for (const auto& g : graphs) states.push_back(reset(g));
  return states;
}

std::vector<StepResult> step_many(std::vector<GameState>& states,
                                  const std::vector<int>& actions) {
  if (states.size() != actions.size())
    fail(ErrorCode::InvalidConfig, "states/actions length mismatch");
  std::vector<StepResult> out;
  out.reserve(states.size());
  for (std::size_t e = 0; e < states.size(); ++e)
    out.push_back(step(states[e], actions[e]));
  return out;
}

double scale_return(double r, const RewardScaler& scaler) {
  if (scaler.kind == RewardScaler::Kind::sqrt_eps) {
    double sgn = r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
    return sgn * (std::sqrt(std::abs(r) + 1.0) - 1.0) + scaler.epsilon * r;
  }
  if (r >= 0.0)
    fail(ErrorCode::LogOfNonNegative,
         "log scaling expects a negative cumulative reward");
  return -std::log(-r);
}

}  // namespace xce

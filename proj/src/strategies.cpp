#include "xce/strategies.hpp"

#include <algorithm>

#include "xce/elimination.hpp"

namespace xce {

Strategy strategy_from_name(const std::string& name) {
  if (name == "forward") return Strategy::forward;
  if (name == "reverse") return Strategy::reverse;
  if (name == "markowitz" || name == "min_markowitz") return Strategy::min_markowitz;
  fail(ErrorCode::InvalidConfig, "unknown strategy: " + name);
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::forward: return "forward";
    case Strategy::reverse: return "reverse";
    default: return "markowitz";
  }
}

EliminationOrder baseline_order(const CompGraph& g, Strategy strategy) {
  EliminationOrder order = g.intermediates();
  switch (strategy) {
    case Strategy::forward:
      return order;
    case Strategy::reverse:
      std::reverse(order.begin(), order.end());
      return order;
    case Strategy::min_markowitz: {
      CompGraph scratch = g;
      EliminationOrder result;
      std::vector<VertexId> remaining = order;
      while (!remaining.empty()) {
        VertexId best = remaining.front();
        long long best_deg = markowitz_degree(scratch, best);
        for (VertexId v : remaining) {
          long long deg = markowitz_degree(scratch, v);
          if (deg < best_deg) {
            best = v;
            best_deg = deg;
          }
        }
        eliminate_vertex(scratch, best);
        result.push_back(best);
        remaining.erase(std::find(remaining.begin(), remaining.end(), best));
      }
      return result;
    }
  }
  fail(ErrorCode::InvalidConfig, "unreachable strategy");
}

}  // namespace xce

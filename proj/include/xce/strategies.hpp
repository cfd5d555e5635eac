#pragma once

#include "xce/graph.hpp"

namespace xce {

enum class Strategy { forward, reverse, min_markowitz };

Strategy strategy_from_name(const std::string& name);
const char* strategy_name(Strategy s);

// Forward: intermediates ascending. Reverse: descending. min_markowitz:
// greedy minimum Markowitz degree, recomputed on a scratch copy after each
// pick, ties broken by lowest vertex id. g is left untouched.
EliminationOrder baseline_order(const CompGraph& g, Strategy strategy);

}  // namespace xce

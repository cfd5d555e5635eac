#pragma once

#include <iosfwd>

#include "xce/graph.hpp"

namespace xce {

struct CostReport {
  struct Step {
    VertexId vertex;
    long long mults;
    long long adds;
  };
  std::vector<Step> per_step;
  long long total_mults = 0;
  long long total_adds = 0;
  EliminationOrder order;
};

// Chain-rule update for one vertex: every predecessor/successor pair gets
// the composed edge, merging onto an existing edge when present, then all
// edges incident to the vertex are dropped and it is marked eliminated.
// Returns (multiplications, additions).
std::pair<long long, long long> eliminate_vertex(CompGraph& g, VertexId j);

// Runs a complete order; afterwards the graph is bipartite.
CostReport run_order(CompGraph& g, const EliminationOrder& order);

// Convenience: run on a scratch copy, leaving g untouched.
CostReport order_cost(const CompGraph& g, const EliminationOrder& order);

// In-degree times out-degree on the current graph.
long long markowitz_degree(const CompGraph& g, VertexId j);

// Tabular text form: one line per step plus a totals trailer. Vertex ids
// are printed 1-based over intermediates, matching order files.
void save_cost_report(const CompGraph& g, const CostReport& r, std::ostream& os);

}  // namespace xce

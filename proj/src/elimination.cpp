#include "xce/elimination.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace xce {

std::pair<long long, long long> eliminate_vertex(CompGraph& g, VertexId j) {
  if (!g.is_intermediate(j))
    fail(ErrorCode::NotIntermediate, "only intermediate vertices are eliminable");
  if (g.eliminated(j))
    fail(ErrorCode::AlreadyEliminated, "vertex eliminated twice");

  const std::set<VertexId> preds = g.preds(j);
  const std::set<VertexId> succs = g.succs(j);

  long long mults = 0, adds = 0;
  // std::set iteration keeps the (pred, succ) sweep canonical.
  for (VertexId i : preds) {
    const JacobianSpec in_spec = g.edge(i, j);
    for (VertexId k : succs) {
      const JacobianSpec out_spec = g.edge(j, k);
      auto [spec, m] = compose_edges(in_spec, out_spec);
      mults += m;
      if (g.has_edge(i, k)) {
        const JacobianSpec& existing = g.edge(i, k);
        adds += overlap_extent(existing, spec);
        g.set_edge(i, k, merge_add(existing, spec));
      } else {
        g.set_edge(i, k, spec);
      }
    }
  }
  for (VertexId i : preds) g.remove_edge(i, j);
  for (VertexId k : succs) g.remove_edge(j, k);
  g.mark_eliminated(j);
  return {mults, adds};
}

CostReport run_order(CompGraph& g, const EliminationOrder& order) {
  std::set<VertexId> seen;
  for (VertexId v : order) {
    if (!seen.insert(v).second)
      fail(ErrorCode::DuplicateVertex, "order repeats a vertex");
  }
  std::size_t pending = 0;
  for (VertexId v : g.intermediates())
    if (!g.eliminated(v)) ++pending;
  if (order.size() != pending)
    fail(ErrorCode::IncompleteOrder, "order must cover every remaining intermediate");

  CostReport report;
  report.order = order;
  for (VertexId v : order) {
    auto [m, a] = eliminate_vertex(g, v);
    report.per_step.push_back({v, m, a});
    report.total_mults += m;
    report.total_adds += a;
  }
  return report;
}

namespace {

// Flat-adjacency replay used by the searchers: same elimination semantics
// as run_order, an order of magnitude cheaper to copy and mutate.
struct FastGraph {
  struct Half {
    VertexId v;
    JacobianSpec spec;
  };
  std::vector<std::vector<Half>> in, out;  // sorted by neighbor id

  explicit FastGraph(const CompGraph& g)
      : in(static_cast<std::size_t>(g.n_vertices())),
        out(static_cast<std::size_t>(g.n_vertices())) {
    for (const auto& [key, spec] : g.edges()) {
      out[static_cast<std::size_t>(key.first)].push_back({key.second, spec});
      in[static_cast<std::size_t>(key.second)].push_back({key.first, spec});
    }
    for (auto& half : out)
      std::sort(half.begin(), half.end(), [](const Half& a, const Half& b) { return a.v < b.v; });
    for (auto& half : in)
      std::sort(half.begin(), half.end(), [](const Half& a, const Half& b) { return a.v < b.v; });
  }

  static typename std::vector<Half>::iterator find(std::vector<Half>& half, VertexId v) {
    return std::lower_bound(half.begin(), half.end(), v,
                            [](const Half& h, VertexId x) { return h.v < x; });
  }

  std::pair<long long, long long> eliminate(VertexId j) {
    long long mults = 0, adds = 0;
    auto preds = std::move(in[static_cast<std::size_t>(j)]);
    auto succs = std::move(out[static_cast<std::size_t>(j)]);
    in[static_cast<std::size_t>(j)].clear();
    out[static_cast<std::size_t>(j)].clear();
    for (const Half& pi : preds) {
      auto& row = out[static_cast<std::size_t>(pi.v)];
      row.erase(find(row, j));
      for (const Half& sk : succs) {
        auto [spec, m] = compose_edges(pi.spec, sk.spec);
        mults += m;
        JacobianSpec stored = spec;
        auto it = find(row, sk.v);
        if (it != row.end() && it->v == sk.v) {
          adds += overlap_extent(it->spec, spec);
          stored = merge_add(it->spec, spec);
          it->spec = stored;
        } else {
          row.insert(it, {sk.v, spec});
        }
        auto& col = in[static_cast<std::size_t>(sk.v)];
        auto cit = find(col, pi.v);
        if (cit != col.end() && cit->v == pi.v) cit->spec = stored;
        else col.insert(cit, {pi.v, stored});
      }
    }
    for (const Half& sk : succs) {
      auto& col = in[static_cast<std::size_t>(sk.v)];
      col.erase(find(col, j));
    }
    return {mults, adds};
  }
};

}  // namespace

CostReport order_cost(const CompGraph& g, const EliminationOrder& order) {
  std::set<VertexId> seen;
  for (VertexId v : order) {
    if (!g.is_intermediate(v) || g.eliminated(v))
      fail(ErrorCode::NotIntermediate, "order names a non-eliminable vertex");
    if (!seen.insert(v).second)
      fail(ErrorCode::DuplicateVertex, "order repeats a vertex");
  }
  std::size_t pending = 0;
  for (VertexId v : g.intermediates())
    if (!g.eliminated(v)) ++pending;
  if (order.size() != pending)
    fail(ErrorCode::IncompleteOrder, "order must cover every remaining intermediate");

  FastGraph fast(g);
  CostReport report;
  report.order = order;
  for (VertexId v : order) {
    auto [m, a] = fast.eliminate(v);
    report.per_step.push_back({v, m, a});
    report.total_mults += m;
    report.total_adds += a;
  }
  return report;
}

long long markowitz_degree(const CompGraph& g, VertexId j) {
  if (!g.is_intermediate(j))
    fail(ErrorCode::NotIntermediate, "Markowitz degree is defined on intermediates");
  if (g.eliminated(j))
    fail(ErrorCode::AlreadyEliminated, "vertex already eliminated");
  return static_cast<long long>(g.preds(j).size()) *
         static_cast<long long>(g.succs(j).size());
}

void save_cost_report(const CompGraph& g, const CostReport& r, std::ostream& os) {
  os << "step\tvertex\tmults\tadds\n";
  for (std::size_t s = 0; s < r.per_step.size(); ++s) {
    const auto& st = r.per_step[s];
    os << (s + 1) << "\t" << (st.vertex - g.n_inputs() + 1) << "\t" << st.mults
       << "\t" << st.adds << "\n";
  }
  os << "total\t-\t" << r.total_mults << "\t" << r.total_adds << "\n";
}

}  // namespace xce

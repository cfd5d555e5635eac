#include "xce/graph.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace xce {

CompGraph::CompGraph(int n_inputs, int n_intermediates, int n_outputs)
    : n_in_(n_inputs), n_mid_(n_intermediates), n_out_(n_outputs) {
  if (n_in_ < 0 || n_mid_ < 0 || n_out_ < 0)
    fail(ErrorCode::InvalidConfig, "negative vertex counts");
  shapes_.assign(static_cast<std::size_t>(n_vertices()), Shape{1, 1});
  eliminated_.assign(static_cast<std::size_t>(n_vertices()), false);
  in_.resize(static_cast<std::size_t>(n_vertices()));
  out_.resize(static_cast<std::size_t>(n_vertices()));
}

void CompGraph::set_vertex_shape(VertexId v, Shape s) {
  if (s.rows < 1 || s.cols < 1)
    fail(ErrorCode::ShapeMismatch, "vertex shape entries must be positive");
  shapes_.at(static_cast<std::size_t>(v)) = s;
}

void CompGraph::add_edge(VertexId src, VertexId dst, const JacobianSpec& spec) {
  if (src < 0 || dst >= n_vertices() || src >= dst)
    fail(ErrorCode::IllegalEndpoint, "edge endpoints must satisfy src < dst");
  if (is_output(src))
    fail(ErrorCode::IllegalEndpoint, "edge originates at an output vertex");
  if (is_input(dst))
    fail(ErrorCode::IllegalEndpoint, "edge terminates at an input vertex");
  if (eliminated(src) || eliminated(dst))
    fail(ErrorCode::IllegalEndpoint, "edge touches an eliminated vertex");
  if (has_edge(src, dst))
    fail(ErrorCode::DuplicateEdge, "edge already present");
  if (spec.code == 0)
    fail(ErrorCode::InvalidCode, "code 0 is reserved for absent edges");
  if (!(spec.in == vertex_shape(src)) || !(spec.out == vertex_shape(dst)))
    fail(ErrorCode::ShapeMismatch, "edge spec disagrees with vertex shapes");
  if (!spec_shapes_consistent(spec))
    fail(ErrorCode::ShapeMismatch, "delta-tied dimensions differ in size");
  set_edge(src, dst, spec);
}

void CompGraph::set_edge(VertexId src, VertexId dst, const JacobianSpec& spec) {
  edges_[{src, dst}] = spec;
  out_[static_cast<std::size_t>(src)].insert(dst);
  in_[static_cast<std::size_t>(dst)].insert(src);
}

void CompGraph::remove_edge(VertexId src, VertexId dst) {
  edges_.erase({src, dst});
  out_[static_cast<std::size_t>(src)].erase(dst);
  in_[static_cast<std::size_t>(dst)].erase(src);
}

bool CompGraph::has_edge(VertexId src, VertexId dst) const {
  return edges_.count({src, dst}) > 0;
}

const JacobianSpec& CompGraph::edge(VertexId src, VertexId dst) const {
  auto it = edges_.find({src, dst});
  if (it == edges_.end()) fail(ErrorCode::InvalidConfig, "no such edge");
  return it->second;
}

std::pair<std::set<VertexId>, std::set<VertexId>> CompGraph::neighbors(VertexId v) const {
  if (v < 0 || v >= n_vertices()) fail(ErrorCode::IllegalEndpoint, "vertex out of range");
  if (eliminated(v)) fail(ErrorCode::VertexEliminated, "vertex already eliminated");
  return {preds(v), succs(v)};
}

bool CompGraph::is_bipartite() const {
  for (VertexId v = n_in_; v < n_in_ + n_mid_; ++v)
    if (!in_[static_cast<std::size_t>(v)].empty() ||
        !out_[static_cast<std::size_t>(v)].empty())
      return false;
  return true;
}

bool CompGraph::untouched() const {
  for (bool e : eliminated_)
    if (e) return false;
  return true;
}

std::vector<VertexId> CompGraph::intermediates() const {
  std::vector<VertexId> ids;
  for (VertexId v = n_in_; v < n_in_ + n_mid_; ++v) ids.push_back(v);
  return ids;
}

std::vector<int> CompGraph::to_tensor() const {
  const int rows = n_in_ + n_mid_;
  const int cols = n_mid_ + n_out_;
  std::vector<int> t(static_cast<std::size_t>(rows) * cols * 5, 0);
  for (const auto& [key, spec] : edges_) {
    auto [src, dst] = key;
    int col = dst - n_in_;
    std::size_t base = (static_cast<std::size_t>(src) * cols + static_cast<std::size_t>(col)) * 5;
    t[base + 0] = spec.code;
    t[base + 1] = spec.in.rows;
    t[base + 2] = spec.in.cols;
    t[base + 3] = spec.out.rows;
    t[base + 4] = spec.out.cols;
  }
  return t;
}

CompGraph from_tensor(int n_inputs, int n_intermediates, int n_outputs,
                      const std::vector<int>& tensor) {
  const int rows = n_inputs + n_intermediates;
  const int cols = n_intermediates + n_outputs;
  if (static_cast<std::size_t>(rows) * cols * 5 != tensor.size())
    fail(ErrorCode::ShapeMismatch, "tensor extent disagrees with counts");
  CompGraph g(n_inputs, n_intermediates, n_outputs);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      std::size_t base = (static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)) * 5;
      int code = tensor[base];
      if (code == 0) continue;
      JacobianSpec spec{code,
                        {tensor[base + 1], tensor[base + 2]},
                        {tensor[base + 3], tensor[base + 4]}};
      VertexId dst = n_inputs + c;
      g.set_vertex_shape(r, spec.in);
      g.set_vertex_shape(dst, spec.out);
      g.add_edge(r, dst, spec);
    }
  return g;
}

void save_graph(const CompGraph& g, std::ostream& os) {
  os << g.n_inputs() << " " << g.n_intermediates() << " " << g.n_outputs() << "\n";
  for (const auto& [key, spec] : g.edges()) {
    os << key.first << " " << key.second << " " << spec.code << " " << spec.in.rows
       << " " << spec.in.cols << " " << spec.out.rows << " " << spec.out.cols << "\n";
  }
}

CompGraph load_graph(std::istream& is) {
  int n_in = 0, n_mid = 0, n_out = 0;
  if (!(is >> n_in >> n_mid >> n_out))
    fail(ErrorCode::ParseError, "bad graph header");
  CompGraph g(n_in, n_mid, n_out);
  VertexId src, dst;
  JacobianSpec spec;
  while (is >> src >> dst >> spec.code >> spec.in.rows >> spec.in.cols >>
         spec.out.rows >> spec.out.cols) {
    g.set_vertex_shape(src, spec.in);
    g.set_vertex_shape(dst, spec.out);
    g.add_edge(src, dst, spec);
  }
  return g;
}

void save_order(const CompGraph& g, const EliminationOrder& order, std::ostream& os) {
  bool first = true;
  for (VertexId v : order) {
    if (!g.is_intermediate(v))
      fail(ErrorCode::NotIntermediate, "order contains a non-intermediate vertex");
    os << (first ? "" : " ") << (v - g.n_inputs() + 1);
    first = false;
  }
  os << "\n";
}

EliminationOrder load_order(const CompGraph& g, std::istream& is) {
  EliminationOrder order;
  long long idx;
  while (is >> idx) {
    if (idx < 1 || idx > g.n_intermediates())
      fail(ErrorCode::ParseError, "order index out of range");
    order.push_back(static_cast<VertexId>(g.n_inputs() + idx - 1));
  }
  return order;
}

}  // namespace xce

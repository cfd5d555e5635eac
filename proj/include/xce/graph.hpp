#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "xce/sparsity.hpp"

namespace xce {

using EliminationOrder = std::vector<VertexId>;

// Computational graph with one JacobianSpec per edge. Vertices are numbered
// in contiguous blocks: inputs, then intermediates, then outputs. Edges
// always point from lower to higher id.
class CompGraph {
 public:
  CompGraph() = default;
  CompGraph(int n_inputs, int n_intermediates, int n_outputs);

  int n_inputs() const { return n_in_; }
  int n_intermediates() const { return n_mid_; }
  int n_outputs() const { return n_out_; }
  int n_vertices() const { return n_in_ + n_mid_ + n_out_; }

  bool is_input(VertexId v) const { return v < n_in_; }
  bool is_output(VertexId v) const { return v >= n_in_ + n_mid_; }
  bool is_intermediate(VertexId v) const { return !is_input(v) && !is_output(v); }

  Shape vertex_shape(VertexId v) const { return shapes_.at(static_cast<std::size_t>(v)); }
  void set_vertex_shape(VertexId v, Shape s);

  bool eliminated(VertexId v) const { return eliminated_.at(static_cast<std::size_t>(v)); }
  void mark_eliminated(VertexId v) { eliminated_.at(static_cast<std::size_t>(v)) = true; }

  void add_edge(VertexId src, VertexId dst, const JacobianSpec& spec);
  void remove_edge(VertexId src, VertexId dst);
  // Raw edge write used by elimination; src/dst must already satisfy the
  // endpoint rules.
  void set_edge(VertexId src, VertexId dst, const JacobianSpec& spec);

  bool has_edge(VertexId src, VertexId dst) const;
  const JacobianSpec& edge(VertexId src, VertexId dst) const;

  const std::set<VertexId>& preds(VertexId v) const { return in_.at(static_cast<std::size_t>(v)); }
  const std::set<VertexId>& succs(VertexId v) const { return out_.at(static_cast<std::size_t>(v)); }
  std::pair<std::set<VertexId>, std::set<VertexId>> neighbors(VertexId v) const;

  std::size_t n_edges() const { return edges_.size(); }
  const std::map<std::pair<VertexId, VertexId>, JacobianSpec>& edges() const {
    return edges_;
  }

  bool is_bipartite() const;
  bool untouched() const;  // no vertex eliminated yet

  // Extended adjacency tensor, shape (n_in+n_mid) x (n_mid+n_out) x 5 with
  // [code, in_rows, in_cols, out_rows, out_cols] per cell, row-major.
  std::vector<int> to_tensor() const;

  std::vector<VertexId> intermediates() const;

 private:
  int n_in_ = 0, n_mid_ = 0, n_out_ = 0;
  std::vector<Shape> shapes_;
  std::vector<bool> eliminated_;
  std::map<std::pair<VertexId, VertexId>, JacobianSpec> edges_;
  std::vector<std::set<VertexId>> in_, out_;
};

CompGraph from_tensor(int n_inputs, int n_intermediates, int n_outputs,
                      const std::vector<int>& tensor);

// Text form: header "n_inputs n_intermediates n_outputs", then one line per
// edge "src dst code in_rows in_cols out_rows out_cols" (0-based ids).
void save_graph(const CompGraph& g, std::ostream& os);
CompGraph load_graph(std::istream& is);

// Order files hold whitespace-separated 1-based intermediate indices;
// intermediate m in a file is internal id n_inputs + m - 1.
void save_order(const CompGraph& g, const EliminationOrder& order, std::ostream& os);
EliminationOrder load_order(const CompGraph& g, std::istream& is);

}  // namespace xce

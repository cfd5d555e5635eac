#pragma once

#include <cmath>
#include <map>

#include "xce/graph.hpp"
#include "xce/program.hpp"
#include "xce/trace.hpp"

namespace xce {

// First-order dual number; the forward-mode reference oracle runs the
// program evaluator over these.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }

inline double primal(double x) { return x; }
inline double primal(Dual x) { return x.v; }

template <class T>
struct Mat {
  int rows = 1, cols = 1;
  std::vector<T> a;

  Mat() : a(1) {}
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  int extent() const { return rows * cols; }
  Shape shape() const { return {rows, cols}; }
  T& at(int i) { return a[static_cast<std::size_t>(i)]; }
  const T& at(int i) const { return a[static_cast<std::size_t>(i)]; }
};

using MatD = Mat<double>;

// One elemental op on already-evaluated operands.
template <class T>
Mat<T> apply_op(const ElementalOp& op, const std::vector<const Mat<T>*>& args);

// Full forward sweep; returns every value (inputs first, then op results).
template <class T>
std::vector<Mat<T>> evaluate_values(const Program& p, const std::vector<Mat<T>>& inputs);

std::vector<MatD> evaluate_primal(const Program& p, const std::vector<MatD>& inputs);

std::vector<MatD> inputs_from_flat(const Program& p,
                                   const std::vector<std::vector<double>>& flat);

// Numeric twin of a traced graph: same topology and specs plus concrete
// edge data. Copy edges carry their relocation as gather[out_flat] ->
// in_flat (or -1 for positions outside the image).
struct NumericEdge {
  JacobianSpec spec;
  std::vector<double> data;
  std::vector<int> gather;
};

struct NumericGraph {
  CompGraph graph;
  std::map<std::pair<VertexId, VertexId>, NumericEdge> edges;
};

NumericGraph build_numeric_graph(const Program& p, const std::vector<MatD>& inputs);

// Full rank-4 expansion (out extent x in extent, row-major).
std::vector<double> materialize_numeric_edge(const NumericEdge& e);

// Sparse contraction kernel driven by a ContractionPlan; performed_mults
// reports the scalar multiplications actually executed.
NumericEdge contract_numeric(const NumericEdge& a, const NumericEdge& b,
                             long long* performed_mults);

// Numeric vertex elimination mirroring the symbolic rule.
void eliminate_vertex_numeric(NumericGraph& ng, VertexId j, long long* performed_mults);

// Dense Jacobian blocks, one per (output, input) pair, each stored row-major
// as (out extent) x (in extent).
struct JacobianBlocks {
  int n_out = 0, n_in = 0;
  std::vector<Shape> out_shapes, in_shapes;
  std::vector<std::vector<double>> blocks;  // index: out * n_in + in

  std::vector<double>& block(int o, int i) {
    return blocks[static_cast<std::size_t>(o * n_in + i)];
  }
  const std::vector<double>& block(int o, int i) const {
    return blocks[static_cast<std::size_t>(o * n_in + i)];
  }
};

struct AccumulateResult {
  JacobianBlocks jac;
  long long performed_mults = 0;
};

// Executes vertex elimination numerically for the given complete order and
// densifies the surviving input->output edges.
AccumulateResult accumulate_jacobian(const Program& p, const std::vector<MatD>& inputs,
                                     const EliminationOrder& order);
AccumulateResult accumulate_jacobian_graph(NumericGraph ng, const EliminationOrder& order);

enum class RefMethod { dual, fd };

JacobianBlocks reference_jacobian(const Program& p, const std::vector<MatD>& inputs,
                                  RefMethod method);

// max over entries of |a-b| / max(1, |b|)
double max_rel_err(const JacobianBlocks& a, const JacobianBlocks& b);

}  // namespace xce

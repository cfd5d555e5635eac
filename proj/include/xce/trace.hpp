#pragma once

#include "xce/graph.hpp"
#include "xce/program.hpp"

namespace xce {

// One operand's local partial: the edge spec implied by the op kind and the
// operand/result shapes. Structural ops (slice, concat, copy) carry the
// index relocation as a gather table: gather[out_flat] = in_flat or -1.
struct EdgeContribution {
  int arg_slot;
  JacobianSpec spec;
  std::vector<int> gather;
};

std::vector<EdgeContribution> op_edge_specs(const Program& p, int op_index);

// Identity-diagonal specs used all over the tracer. Scalar edges are kept
// dense so that scalar graphs price one multiplication per chain-rule term.
JacobianSpec diag_spec(Shape s);            // data along the diagonal
JacobianSpec const_diag_spec(Shape s);      // c * identity
JacobianSpec identity_spec(Shape s);        // exact identity (free for vectors)
JacobianSpec dense_spec(Shape in, Shape out);

struct TraceResult {
  CompGraph graph;
  std::vector<VertexId> vertex_of_value;  // value ref -> vertex
  std::vector<int> op_of_vertex;          // vertex -> op index, -1 for inputs/copies
  std::vector<int> copied_value;          // vertex -> source ref for inserted copies, else -1
};

// One graph vertex per op (ops feeding nothing but one output slot become
// output vertices; everything else is an intermediate). Output slots that
// reference inputs or shared values get a zero-cost copy vertex.
TraceResult trace_full(const Program& p);
CompGraph trace(const Program& p);

}  // namespace xce

#pragma once

#include "xce/program.hpp"
#include "xce/trace.hpp"

namespace xce::testutil {

// f(x1, x2) = (log(sin(x1*x2)), x1*x2 - sin(x1*x2)); traces to the classic
// two-intermediate example graph: inputs 0,1, intermediates 2,3, outputs 4,5.
inline Program two_intermediate_program() {
  Program p;
  p.inputs = {{"x1", {1, 1}}, {"x2", {1, 1}}};
  p.ops.push_back({OpKind::mul, {0, 1}});     // %2 = x1*x2
  p.ops.push_back({OpKind::sin_op, {2}});     // %3 = sin(%2)
  p.ops.push_back({OpKind::log_op, {3}});     // %4 = log(%3)
  p.ops.push_back({OpKind::sub, {2, 3}});     // %5 = %2 - %3
  p.outputs = {4, 5};
  return p;
}

inline CompGraph two_intermediate_graph() { return trace(two_intermediate_program()); }

}  // namespace xce::testutil

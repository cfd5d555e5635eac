#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xce/common.hpp"

namespace xce {

// Straight-line elemental operations. Values are scalars (1,1), column
// vectors (r,1) or matrices (r,c); no rank-3 tensors, no control flow.
enum class OpKind {
  // elementwise unary
  neg,
  sqrt_op,
  sin_op,
  cos_op,
  arctan,
  log_op,
  exp_op,
  tanh_op,
  abs_op,
  normcdf,     // standard normal CDF; local derivative is the density
  log_guard,   // log(|x|+1), safe everywhere
  sqrt_guard,  // sqrt(|x|+1)
  pow_const,
  scale_const,
  add_const,
  // elementwise binary (equal shapes, or one scalar operand broadcast)
  add,
  sub,
  mul,
  div,
  div_guard,  // denominator offset away from zero, sign preserving
  arctan2,
  // accumulating
  matvec,
  matmul,
  dot,
  sum_reduce,
  // structural
  transpose,
  slice,
  concat,
  copy,
};

const char* op_name(OpKind k);
OpKind op_from_name(const std::string& name);
bool op_is_unary(OpKind k);
bool op_is_binary(OpKind k);

struct ElementalOp {
  OpKind kind;
  std::vector<int> args;  // value refs
  double c = 0.0;         // pow/scale/add constant
  int r0 = 0, c0 = 0;     // slice origin
  int rows = 0, cols = 0; // slice extent
  int axis = 0;           // concat axis: 0 rows, 1 cols
};

struct Program {
  std::vector<std::pair<std::string, Shape>> inputs;
  std::vector<ElementalOp> ops;
  std::vector<int> outputs;  // value refs

  int n_values() const { return static_cast<int>(inputs.size() + ops.size()); }
  int ref_of_op(int op_index) const { return static_cast<int>(inputs.size()) + op_index; }
};

// Static shape of any value ref; throws ShapeError on malformed programs.
Shape shape_of(const Program& p, int ref);
Shape infer_shape(const Program& p, const ElementalOp& op);
void validate(const Program& p);

// Line-oriented text form:
//   input NAME ROWS COLS
//   %K = kind %A [%B] [key=value ...]
//   output %K
void save_program(const Program& p, std::ostream& os);
Program load_program(std::istream& is);

}  // namespace xce

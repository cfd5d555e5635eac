#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "xce/common.hpp"

namespace xce {

// Edge Jacobians d y_ij / d x_kl are classified by an integer sparsity code
// in [-10, 10]. Each nonzero code names a factorization of the rank-4
// tensor into one dense factor (possibly a bare constant, possibly absent)
// times Kronecker deltas over the four index slots i, j (output rows/cols)
// and k, l (input rows/cols). Code 0 means "no edge"; code -1 is a copy
// gradient (a pure index relocation such as a slice or concat piece, which
// never costs a multiplication when contracted).
struct JacobianSpec {
  int code = 0;
  Shape in;   // shape of x
  Shape out;  // shape of y

  bool operator==(const JacobianSpec&) const = default;
};

// Index slots of the canonical pattern.
enum Slot : int { SLOT_I = 0, SLOT_J = 1, SLOT_K = 2, SLOT_L = 3 };

// Delta pairs that can occur. Deltas always tie an output slot to an input
// slot; i-j or k-l ties never appear.
enum DeltaBit : std::uint8_t {
  D_IK = 1,
  D_IL = 2,
  D_JK = 4,
  D_JL = 8,
};

enum class PatternKind : std::uint8_t {
  data,      // dense factor with at least one index slot
  constant,  // bare scalar factor, no index slots
  pure,      // deltas only; contraction is a free renaming
  copy,      // copy gradient (code -1)
};

// Symbolic delta-pattern of one sparsity code: which slots the dense factor
// spans and which slot pairs are tied by deltas.
struct DeltaPattern {
  PatternKind kind = PatternKind::data;
  std::uint8_t dense = 0;   // bitmask over slots, 1 << Slot
  std::uint8_t deltas = 0;  // bitmask over DeltaBit

  bool operator==(const DeltaPattern&) const = default;
};

// Canonical pattern of a code. Codes -4 and -5 are published with the same
// pattern as 4 and 5; both map here to that shared pattern and the
// canonical inverse returns the positive code.
DeltaPattern code_to_pattern(int code);

// Tightest code whose pattern equals the argument; patterns outside the
// table (two composites can produce them) return 1 after densification.
int pattern_to_code(const DeltaPattern& p);

// True if the code's deltas are consistent with the shapes (tied dimensions
// equal). Raw contract() calls skip this check on purpose.
bool spec_shapes_consistent(const JacobianSpec& s);

// Result of composing two edge Jacobians plus the multiplication count and
// everything the numeric kernel needs to execute the same contraction.
struct ContractionPlan {
  JacobianSpec result;
  long long mults = 0;

  // One entry per index class of the symbolic product. Strides address the
  // operands' and the result's stored dense data (row-major over each
  // spec's dense slots); stride 0 means the array does not vary along the
  // class. `summed` marks genuinely contracted classes.
  struct ClassLoop {
    int size = 1;
    long long a_stride = 0;
    long long b_stride = 0;
    long long r_stride = 0;
    bool summed = false;
  };
  std::vector<ClassLoop> loops;

  // Scalar factor layout: whether each operand contributes data, a stored
  // scalar, or nothing multiplicative.
  bool a_multiplicative = false;
  bool b_multiplicative = false;
  bool a_has_data = false;
  bool b_has_data = false;
  long long result_data_extent = 0;
};

// Compose a (upstream, d v_mid / d x) with b (downstream, d y / d v_mid),
// summing over the shared pair: a's output slots against b's input slots.
// Requires a.out == b.in. The returned plan's result has in = a.in and
// out = b.out.
ContractionPlan contract(const JacobianSpec& a, const JacobianSpec& b);

// Allocation-free variant for cost accounting: result spec and
// multiplication count only.
std::pair<JacobianSpec, long long> compose_edges(const JacobianSpec& a,
                                                 const JacobianSpec& b);

// Tightest code covering the union of both supports. Requires identical
// shapes on both operands.
JacobianSpec merge_add(const JacobianSpec& a, const JacobianSpec& b);

// Number of positions where the two supports can coincide; used as the
// addition count when an elimination merges onto an existing edge.
long long overlap_extent(const JacobianSpec& a, const JacobianSpec& b);

// Extent of the stored dense data for a spec (1 for constant codes, 0 for
// pure/copy codes).
long long dense_data_extent(const JacobianSpec& s);

// Slots spanned by the stored data, in i,j,k,l order.
std::vector<int> dense_slots(const JacobianSpec& s);

// Expand spec + data into the full (out_rows, out_cols, in_rows, in_cols)
// array, row-major. Deltas are materialized literally as index-equality
// indicators, without checking that tied extents agree. Code -1 is accepted
// only for equal shapes (identity copy).
std::vector<double> materialize_dense(const JacobianSpec& s,
                                      const std::vector<double>& data);

// Derives the full code-pair composition table and writes it out as a
// human-readable audit: one line per pair with the result code and the
// multiplication-count factors on canonical shapes.
void emit_contraction_table(std::ostream& os);

}  // namespace xce

#include "xce/sparsity.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <ostream>
#include <sstream>

namespace xce {

namespace {

constexpr std::uint8_t bit(int slot) {
  return static_cast<std::uint8_t>(1u << slot);
}

struct CodeEntry {
  int code;
  DeltaPattern pat;
};

// The 21-code table. -4 and -5 are published with the same pattern as 4
// and 5; the canonical inverse maps that pattern to the positive code.
const std::array<CodeEntry, 20>& code_table() {
  static const std::array<CodeEntry, 20> t = {{
      {1, {PatternKind::data, bit(SLOT_I) | bit(SLOT_J) | bit(SLOT_K) | bit(SLOT_L), 0}},
      {2, {PatternKind::data, bit(SLOT_I) | bit(SLOT_J) | bit(SLOT_L), D_IK}},
      {3, {PatternKind::data, bit(SLOT_I) | bit(SLOT_J) | bit(SLOT_K), D_JL}},
      {4, {PatternKind::data, bit(SLOT_J) | bit(SLOT_K), D_IL}},
      {5, {PatternKind::data, bit(SLOT_I) | bit(SLOT_L), D_JK}},
      {6, {PatternKind::data, bit(SLOT_I) | bit(SLOT_J), D_IK | D_JL}},
      {7, {PatternKind::data, bit(SLOT_I) | bit(SLOT_J), D_IL | D_JK}},
      {8, {PatternKind::data, bit(SLOT_I), D_IK | D_JL}},
      {9, {PatternKind::data, bit(SLOT_I), D_IL | D_JK}},
      {10, {PatternKind::constant, 0, D_IK | D_JL}},
      {-2, {PatternKind::data, bit(SLOT_J) | bit(SLOT_L), D_IK}},
      {-3, {PatternKind::data, bit(SLOT_I) | bit(SLOT_K), D_JL}},
      {-4, {PatternKind::data, bit(SLOT_J) | bit(SLOT_K), D_IL}},
      {-5, {PatternKind::data, bit(SLOT_I) | bit(SLOT_L), D_JK}},
      {-6, {PatternKind::pure, 0, D_IK | D_JL}},
      {-7, {PatternKind::pure, 0, D_IL | D_JK}},
      {-8, {PatternKind::data, bit(SLOT_J), D_IK | D_JL}},
      {-9, {PatternKind::data, bit(SLOT_J), D_IL | D_JK}},
      {-10, {PatternKind::constant, 0, D_IL | D_JK}},
  }};
  return t;
}

constexpr std::array<std::pair<int, int>, 4> kDeltaSlots = {{
    {SLOT_I, SLOT_K},  // D_IK
    {SLOT_I, SLOT_L},  // D_IL
    {SLOT_J, SLOT_K},  // D_JK
    {SLOT_J, SLOT_L},  // D_JL
}};

int slot_extent(const JacobianSpec& s, int slot) {
  switch (slot) {
    case SLOT_I: return s.out.rows;
    case SLOT_J: return s.out.cols;
    case SLOT_K: return s.in.rows;
    default: return s.in.cols;
  }
}

// Tiny fixed-size union-find.
struct UnionFind {
  std::array<int, 8> parent{};
  explicit UnionFind(int n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int x, int y) { parent[find(x)] = find(y); }
};

}  // namespace

DeltaPattern code_to_pattern(int code) {
  if (code == 0 || code < -10 || code > 10)
    fail(ErrorCode::InvalidCode, "sparsity code out of range: " + std::to_string(code));
  if (code == -1) return {PatternKind::copy, 0, 0};
  for (const auto& e : code_table())
    if (e.code == code) return e.pat;
  fail(ErrorCode::InvalidCode, "unmapped sparsity code");
}

int pattern_to_code(const DeltaPattern& p) {
  if (p.kind == PatternKind::copy) return -1;
  for (const auto& e : code_table())
    if (e.pat == p) return e.code;  // positives listed first, so 4/5 win
  if (p.kind == PatternKind::data) return 1;  // densify
  fail(ErrorCode::UnsupportedPattern, "pattern has no covering code");
}

bool spec_shapes_consistent(const JacobianSpec& s) {
  if (s.code == 0) return false;
  if (s.code == -1) return true;
  DeltaPattern p = code_to_pattern(s.code);
  for (int d = 0; d < 4; ++d) {
    if (!(p.deltas & (1u << d))) continue;
    if (slot_extent(s, kDeltaSlots[d].first) != slot_extent(s, kDeltaSlots[d].second))
      return false;
  }
  return true;
}

std::vector<int> dense_slots(const JacobianSpec& s) {
  std::vector<int> out;
  if (s.code == 0 || s.code == -1) return out;
  DeltaPattern p = code_to_pattern(s.code);
  if (p.kind != PatternKind::data) return out;
  for (int slot = 0; slot < 4; ++slot)
    if (p.dense & bit(slot)) out.push_back(slot);
  return out;
}

long long dense_data_extent(const JacobianSpec& s) {
  if (s.code == 0 || s.code == -1) return 0;
  DeltaPattern p = code_to_pattern(s.code);
  if (p.kind == PatternKind::pure) return 0;
  if (p.kind == PatternKind::constant) return 1;
  long long ext = 1;
  for (int slot : dense_slots(s)) ext *= slot_extent(s, slot);
  return ext;
}

std::vector<double> materialize_dense(const JacobianSpec& s,
                                      const std::vector<double>& data) {
  if (s.code == 0) fail(ErrorCode::InvalidCode, "cannot materialize code 0");
  const long long total =
      static_cast<long long>(s.out.extent()) * s.in.extent();
  std::vector<double> full(static_cast<std::size_t>(total), 0.0);

  if (s.code == -1) {
    if (!(s.in == s.out))
      fail(ErrorCode::ShapeMismatch,
           "copy-gradient spec without a remap must be shape preserving");
    for (int i = 0; i < s.out.rows; ++i)
      for (int j = 0; j < s.out.cols; ++j) {
        long long idx = ((static_cast<long long>(i) * s.out.cols + j) * s.in.rows + i) * s.in.cols + j;
        full[static_cast<std::size_t>(idx)] = 1.0;
      }
    return full;
  }

  DeltaPattern p = code_to_pattern(s.code);
  long long want = dense_data_extent(s);
  if (static_cast<long long>(data.size()) != want)
    fail(ErrorCode::ShapeMismatch, "dense data extent mismatch");

  std::vector<int> slots = dense_slots(s);
  int c[4];
  for (c[0] = 0; c[0] < s.out.rows; ++c[0])
    for (c[1] = 0; c[1] < s.out.cols; ++c[1])
      for (c[2] = 0; c[2] < s.in.rows; ++c[2])
        for (c[3] = 0; c[3] < s.in.cols; ++c[3]) {
          bool on = true;
          for (int d = 0; d < 4 && on; ++d)
            if (p.deltas & (1u << d))
              on = c[kDeltaSlots[d].first] == c[kDeltaSlots[d].second];
          if (!on) continue;
          double v = 1.0;
          if (p.kind == PatternKind::constant) {
            v = data[0];
          } else if (p.kind == PatternKind::data) {
            long long idx = 0;
            for (int slot : slots) idx = idx * slot_extent(s, slot) + c[slot];
            v = data[static_cast<std::size_t>(idx)];
          }
          long long at = ((static_cast<long long>(c[0]) * s.out.cols + c[1]) * s.in.rows + c[2]) * s.in.cols + c[3];
          full[static_cast<std::size_t>(at)] = v;
        }
  return full;
}

namespace {

// Index groups of the symbolic product a.b: four result slots plus the two
// contracted groups shared by a's output pair and b's input pair.
enum Group : int { G_RI = 0, G_RJ = 1, G_RK = 2, G_RL = 3, G_S1 = 4, G_S2 = 5 };

constexpr std::array<int, 4> kAGroup = {G_S1, G_S2, G_RK, G_RL};  // a's i,j,k,l
constexpr std::array<int, 4> kBGroup = {G_RI, G_RJ, G_S1, G_S2};  // b's i,j,k,l

}  // namespace

namespace {

// Fixed-size class analysis shared by the cost path and the kernel path.
struct Analysis {
  DeltaPattern pa, pb;
  int group_size[6];
  int cls_of[6];
  int n_classes = 0;
  int a_slot[6];         // a's dense slot in each class, -1 if none
  int b_slot[6];
  std::uint8_t result_groups[6];  // bitmask over groups 0..3
  std::uint8_t groups[6];         // bitmask over all six groups
  bool consistent[6];
};

Analysis analyze(const JacobianSpec& a, const JacobianSpec& b) {
  Analysis an;
  an.pa = code_to_pattern(a.code);
  an.pb = code_to_pattern(b.code);
  int* gs = an.group_size;
  gs[0] = b.out.rows;
  gs[1] = b.out.cols;
  gs[2] = a.in.rows;
  gs[3] = a.in.cols;
  gs[4] = a.out.rows;
  gs[5] = a.out.cols;

  UnionFind uf(6);
  for (int d = 0; d < 4; ++d) {
    if (an.pa.deltas & (1u << d))
      uf.unite(kAGroup[kDeltaSlots[d].first], kAGroup[kDeltaSlots[d].second]);
    if (an.pb.deltas & (1u << d))
      uf.unite(kBGroup[kDeltaSlots[d].first], kBGroup[kDeltaSlots[d].second]);
  }
  int root_cls[6] = {-1, -1, -1, -1, -1, -1};
  for (int g = 0; g < 6; ++g) {
    int root = uf.find(g);
    int id = root_cls[root];
    if (id < 0) {
      id = an.n_classes++;
      root_cls[root] = id;
      an.a_slot[id] = an.b_slot[id] = -1;
      an.result_groups[id] = 0;
      an.groups[id] = 0;
    }
    an.cls_of[g] = id;
    an.groups[id] |= static_cast<std::uint8_t>(1u << g);
    if (g < 4) an.result_groups[id] |= static_cast<std::uint8_t>(1u << g);
  }
  for (int slot = 0; slot < 4; ++slot) {
    if (an.pa.dense & bit(slot)) an.a_slot[an.cls_of[kAGroup[slot]]] = slot;
    if (an.pb.dense & bit(slot)) an.b_slot[an.cls_of[kBGroup[slot]]] = slot;
  }
  for (int c = 0; c < an.n_classes; ++c) {
    an.consistent[c] = true;
    int first = -1;
    for (int g = 0; g < 6; ++g) {
      if (!(an.groups[c] & (1u << g))) continue;
      if (first < 0) first = gs[g];
      else if (gs[g] != first) an.consistent[c] = false;
    }
  }
  return an;
}

int class_size(const Analysis& an, int c) {
  for (int g = 0; g < 6; ++g)
    if (an.groups[c] & (1u << g)) return an.group_size[g];
  return 1;
}

// Multiplication count: one multiply per element of the materialized
// product, i.e. the product of the sizes of every index class touched by a
// dense factor (genuinely contracted classes included, once). Classes whose
// tied dimensions disagree -- only reachable by feeding raw,
// shape-inconsistent specs -- are priced per contributing factor, each sized
// through its own operand preferring the operand's input-side slot.
long long count_mults(const Analysis& an) {
  bool a_mult = an.pa.kind == PatternKind::data || an.pa.kind == PatternKind::constant;
  bool b_mult = an.pb.kind == PatternKind::data || an.pb.kind == PatternKind::constant;
  if (!a_mult || !b_mult) return 0;
  long long mults = 1;
  for (int c = 0; c < an.n_classes; ++c) {
    if (an.a_slot[c] < 0 && an.b_slot[c] < 0) continue;
    if (an.consistent[c]) {
      mults *= class_size(an, c);
      continue;
    }
    auto operand_view = [&](const std::array<int, 4>& map) {
      static constexpr int pref[4] = {SLOT_K, SLOT_L, SLOT_I, SLOT_J};
      for (int slot : pref) {
        int g = map[slot];
        if (an.groups[c] & (1u << g)) return an.group_size[g];
      }
      return 1;
    };
    if (an.a_slot[c] >= 0) mults *= operand_view(kAGroup);
    if (an.b_slot[c] >= 0) mults *= operand_view(kBGroup);
  }
  return mults;
}

// Result pattern: a delta for every class holding two result slots, a dense
// lead for every dense-covered class with a result slot.
DeltaPattern result_pattern(const Analysis& an) {
  DeltaPattern rp;
  rp.dense = 0;
  rp.deltas = 0;
  for (int c = 0; c < an.n_classes; ++c) {
    std::uint8_t rg = an.result_groups[c];
    bool dense_covered = an.a_slot[c] >= 0 || an.b_slot[c] >= 0;
    if (rg != 0 && (rg & (rg - 1)) != 0) {
      int out_slot = rg & 1 ? 0 : 1;
      int in_slot = rg & 4 ? 2 : 3;
      for (int d = 0; d < 4; ++d)
        if (kDeltaSlots[d].first == out_slot && kDeltaSlots[d].second == in_slot)
          rp.deltas |= static_cast<std::uint8_t>(1u << d);
    }
    if (dense_covered && rg != 0) {
      for (int g = 0; g < 4; ++g)
        if (rg & (1u << g)) {
          rp.dense |= bit(g);
          break;
        }
    }
    if (dense_covered && rg == 0 && !(an.a_slot[c] >= 0 && an.b_slot[c] >= 0))
      fail(ErrorCode::UnsupportedPattern,
           "one-sided contracted dense class; rank <= 2 algebra cannot reach this");
  }
  if (an.pa.kind == PatternKind::data || an.pb.kind == PatternKind::data) {
    rp.kind = PatternKind::data;
    if (rp.dense == 0)
      fail(ErrorCode::UnsupportedPattern, "data factor fully collapsed");
  } else if (an.pa.kind == PatternKind::constant || an.pb.kind == PatternKind::constant) {
    rp.kind = PatternKind::constant;
  } else {
    rp.kind = PatternKind::pure;
  }
  return rp;
}

}  // namespace

std::pair<JacobianSpec, long long> compose_edges(const JacobianSpec& a,
                                                 const JacobianSpec& b) {
  if (a.code == 0 || b.code == 0)
    fail(ErrorCode::InvalidCode, "contract on code 0");
  if (!(a.out == b.in))
    fail(ErrorCode::ShapeMismatch, "contracted pair shapes disagree");
  JacobianSpec result;
  result.in = a.in;
  result.out = b.out;
  if (a.code == -1 || b.code == -1) {
    result.code = (a.code == -1 && b.code == -1) ? -1 : 1;
    return {result, 0};
  }
  Analysis an = analyze(a, b);
  result.code = pattern_to_code(result_pattern(an));
  return {result, count_mults(an)};
}

ContractionPlan contract(const JacobianSpec& a, const JacobianSpec& b) {
  if (a.code == 0 || b.code == 0)
    fail(ErrorCode::InvalidCode, "contract on code 0");
  if (!(a.out == b.in))
    fail(ErrorCode::ShapeMismatch, "contracted pair shapes disagree");

  ContractionPlan plan;
  plan.result.in = a.in;
  plan.result.out = b.out;

  // Copy gradients relocate entries for free. Two copies compose into
  // another copy; against anything else the result is stored densely, since
  // a spec alone cannot say which relocation the copy performs (equal shapes
  // do not imply the identity once copies have been composed).
  if (a.code == -1 || b.code == -1) {
    plan.result.code = (a.code == -1 && b.code == -1) ? -1 : 1;
    plan.mults = 0;
    plan.result_data_extent = dense_data_extent(plan.result);
    return plan;
  }

  Analysis an = analyze(a, b);
  plan.a_has_data = an.pa.kind == PatternKind::data;
  plan.b_has_data = an.pb.kind == PatternKind::data;
  plan.a_multiplicative = plan.a_has_data || an.pa.kind == PatternKind::constant;
  plan.b_multiplicative = plan.b_has_data || an.pb.kind == PatternKind::constant;
  plan.mults = count_mults(an);
  plan.result.code = pattern_to_code(result_pattern(an));

  // Kernel recipe. Data layouts are row-major over each spec's dense slots
  // in i,j,k,l order; the result layout follows the *stored* code, which may
  // be a densified cover of the natural pattern.
  auto strides_for = [](const JacobianSpec& s) {
    std::array<long long, 4> st{0, 0, 0, 0};
    auto slots = dense_slots(s);
    long long acc = 1;
    for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
      st[static_cast<std::size_t>(*it)] = acc;
      acc *= slot_extent(s, *it);
    }
    return st;
  };
  auto a_st = strides_for(a);
  auto b_st = strides_for(b);
  auto r_st = strides_for(plan.result);
  std::uint8_t r_dense = 0;
  for (int slot : dense_slots(plan.result)) r_dense |= bit(slot);
  plan.result_data_extent = dense_data_extent(plan.result);

  // External classes first (by lead result slot), then contracted ones, so
  // the accumulation order is reproducible.
  int order[6];
  int n_order = 0;
  for (int lead = 0; lead < 4; ++lead)
    for (int c = 0; c < an.n_classes; ++c) {
      std::uint8_t rg = an.result_groups[c];
      if (rg != 0 && (rg & static_cast<std::uint8_t>((1u << (lead + 1)) - 1)) ==
                         static_cast<std::uint8_t>(1u << lead))
        order[n_order++] = c;
    }
  for (int c = 0; c < an.n_classes; ++c)
    if (an.result_groups[c] == 0) order[n_order++] = c;

  for (int q = 0; q < n_order; ++q) {
    int c = order[q];
    ContractionPlan::ClassLoop loop;
    loop.size = class_size(an, c);
    loop.summed = an.result_groups[c] == 0;
    if (an.a_slot[c] >= 0) loop.a_stride = a_st[static_cast<std::size_t>(an.a_slot[c])];
    if (an.b_slot[c] >= 0) loop.b_stride = b_st[static_cast<std::size_t>(an.b_slot[c])];
    for (int g = 0; g < 4; ++g)
      if ((an.result_groups[c] & (1u << g)) && (r_dense & bit(g)))
        loop.r_stride += r_st[static_cast<std::size_t>(g)];
    plan.loops.push_back(loop);
  }
  return plan;
}

JacobianSpec merge_add(const JacobianSpec& a, const JacobianSpec& b) {
  if (!(a.in == b.in) || !(a.out == b.out))
    fail(ErrorCode::ShapeMismatch, "merge_add requires identical shapes");
  if (a.code == 0 || b.code == 0)
    fail(ErrorCode::InvalidCode, "merge_add on code 0");
  // A copy gradient's support is op-specific (two parallel copies need not
  // coincide), so any merge involving one densifies.
  if (a.code == -1 || b.code == -1) return {1, a.in, a.out};
  // Two pure deltas sum to a constant multiple of the delta: the merged code
  // must be able to store that factor.
  if (a.code == -6 && b.code == -6) return {10, a.in, a.out};
  if (a.code == -7 && b.code == -7) return {-10, a.in, a.out};
  if (a.code == b.code) return a;

  DeltaPattern pa = code_to_pattern(a.code);
  DeltaPattern pb = code_to_pattern(b.code);

  DeltaPattern cover;
  cover.deltas = pa.deltas & pb.deltas;

  UnionFind uf(4);
  for (int d = 0; d < 4; ++d)
    if (cover.deltas & (1u << d))
      uf.unite(kDeltaSlots[d].first, kDeltaSlots[d].second);

  // A slot the cover leaves untied must be spanned densely (the union's
  // support runs over its whole range); a tied class keeps its delta and
  // stores data on the lead slot only when either operand varies along it.
  std::uint8_t varies = pa.dense | pb.dense;
  cover.dense = 0;
  for (int slot = 0; slot < 4; ++slot) {
    int root = uf.find(slot);
    bool tied = false;
    bool class_varies = false;
    bool lead = true;
    for (int other = 0; other < 4; ++other) {
      if (uf.find(other) != root) continue;
      if (other != slot) tied = true;
      if (other < slot) lead = false;
      if (varies & bit(other)) class_varies = true;
    }
    if (!tied || (lead && class_varies)) cover.dense |= bit(slot);
  }
  if (cover.dense != 0)
    cover.kind = PatternKind::data;
  else if (pa.kind == PatternKind::constant || pb.kind == PatternKind::constant)
    cover.kind = PatternKind::constant;
  else
    cover.kind = PatternKind::pure;

  return {pattern_to_code(cover), a.in, a.out};
}

long long overlap_extent(const JacobianSpec& a, const JacobianSpec& b) {
  if (!(a.in == b.in) || !(a.out == b.out))
    fail(ErrorCode::ShapeMismatch, "overlap_extent requires identical shapes");
  std::uint8_t deltas = 0;
  if (a.code != -1) deltas |= code_to_pattern(a.code).deltas;
  if (b.code != -1) deltas |= code_to_pattern(b.code).deltas;
  UnionFind uf(4);
  for (int d = 0; d < 4; ++d)
    if (deltas & (1u << d)) uf.unite(kDeltaSlots[d].first, kDeltaSlots[d].second);
  long long ext = 1;
  for (int slot = 0; slot < 4; ++slot)
    if (uf.find(slot) == slot) ext *= slot_extent(a, slot);
  return ext;
}

namespace {

// Assigns consistent shapes for a code pair: dimension variables are tied
// by both patterns' deltas plus the contraction identity, then each class
// gets a small deterministic size.
void canonical_shapes(int ca, int cb, JacobianSpec& a, JacobianSpec& b) {
  // dims: 0 a.out.r, 1 a.out.c, 2 a.in.r, 3 a.in.c, 4 b.out.r, 5 b.out.c
  UnionFind uf(6);
  auto tie_code = [&](int code, int d_out_r, int d_out_c, int d_in_r, int d_in_c) {
    if (code == -1) {
      uf.unite(d_out_r, d_in_r);
      uf.unite(d_out_c, d_in_c);
      return;
    }
    DeltaPattern p = code_to_pattern(code);
    int dim_of[4] = {d_out_r, d_out_c, d_in_r, d_in_c};
    for (int d = 0; d < 4; ++d)
      if (p.deltas & (1u << d))
        uf.unite(dim_of[kDeltaSlots[d].first], dim_of[kDeltaSlots[d].second]);
  };
  tie_code(ca, 0, 1, 2, 3);
  tie_code(cb, 4, 5, 0, 1);  // b.in == a.out
  int size[6];
  for (int d = 0; d < 6; ++d) {
    int root = uf.find(d);
    size[d] = 2 + root % 3;
  }
  a.in = {size[2], size[3]};
  a.out = {size[0], size[1]};
  b.in = a.out;
  b.out = {size[4], size[5]};
  a.code = ca;
  b.code = cb;
}

}  // namespace

void emit_contraction_table(std::ostream& os) {
  os << "# pairwise sparsity-code composition, canonical shapes\n"
     << "# columns: a b -> result ; mults on those shapes ; dense factor classes\n";
  for (int ca = -10; ca <= 10; ++ca) {
    for (int cb = -10; cb <= 10; ++cb) {
      if (ca == 0 || cb == 0) {
        os << ca << "\t" << cb << "\t->\t0\tmults=0\tno edge\n";
        continue;
      }
      JacobianSpec a, b;
      canonical_shapes(ca, cb, a, b);
      ContractionPlan plan = contract(a, b);
      os << ca << "\t" << cb << "\t->\t" << plan.result.code << "\tmults=" << plan.mults
         << "\t";
      if (ca == -1 || cb == -1) {
        os << "copy relabel";
      } else {
        bool first = true;
        for (const auto& loop : plan.loops) {
          if (loop.a_stride == 0 && loop.b_stride == 0 && !loop.summed &&
              loop.r_stride == 0)
            continue;
          if (!first) os << "*";
          first = false;
          os << "|" << loop.size << (loop.summed ? "s" : "") << "|";
        }
        if (first) os << "-";
      }
      os << "\n";
    }
  }
}

}  // namespace xce

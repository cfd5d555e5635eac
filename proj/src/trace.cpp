#include "xce/trace.hpp"

#include <algorithm>

namespace xce {

namespace {

bool is_scalar(Shape s) { return s.rows == 1 && s.cols == 1; }

std::vector<int> window_gather(Shape in, int r0, int c0, Shape out) {
  std::vector<int> g(static_cast<std::size_t>(out.extent()));
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c)
      g[static_cast<std::size_t>(r * out.cols + c)] = (r0 + r) * in.cols + (c0 + c);
  return g;
}

std::vector<int> embed_gather(Shape in, int r0, int c0, Shape out) {
  std::vector<int> g(static_cast<std::size_t>(out.extent()), -1);
  for (int r = 0; r < in.rows; ++r)
    for (int c = 0; c < in.cols; ++c)
      g[static_cast<std::size_t>((r0 + r) * out.cols + (c0 + c))] = r * in.cols + c;
  return g;
}

std::vector<int> identity_gather(Shape s) {
  std::vector<int> g(static_cast<std::size_t>(s.extent()));
  for (int i = 0; i < s.extent(); ++i) g[static_cast<std::size_t>(i)] = i;
  return g;
}

}  // namespace

JacobianSpec diag_spec(Shape s) {
  if (is_scalar(s)) return {1, s, s};
  return {s.cols == 1 ? 8 : 6, s, s};
}

JacobianSpec const_diag_spec(Shape s) {
  if (is_scalar(s)) return {1, s, s};
  return {10, s, s};
}

JacobianSpec identity_spec(Shape s) {
  if (is_scalar(s)) return {1, s, s};
  return {-6, s, s};
}

JacobianSpec dense_spec(Shape in, Shape out) { return {1, in, out}; }

std::vector<EdgeContribution> op_edge_specs(const Program& p, int op_index) {
  const ElementalOp& op = p.ops.at(static_cast<std::size_t>(op_index));
  Shape out = infer_shape(p, op);
  auto arg_shape = [&](int a) { return shape_of(p, op.args[static_cast<std::size_t>(a)]); };

  std::vector<EdgeContribution> specs;
  switch (op.kind) {
    case OpKind::neg:
    case OpKind::scale_const:
      specs.push_back({0, const_diag_spec(out), {}});
      break;
    case OpKind::add_const:
      specs.push_back({0, identity_spec(out), {}});
      break;
    case OpKind::sqrt_op:
    case OpKind::sin_op:
    case OpKind::cos_op:
    case OpKind::arctan:
    case OpKind::log_op:
    case OpKind::exp_op:
    case OpKind::tanh_op:
    case OpKind::abs_op:
    case OpKind::normcdf:
    case OpKind::log_guard:
    case OpKind::sqrt_guard:
    case OpKind::pow_const:
      specs.push_back({0, diag_spec(out), {}});
      break;
    case OpKind::add:
    case OpKind::sub: {
      for (int slot = 0; slot < 2; ++slot) {
        Shape a = arg_shape(slot);
        JacobianSpec s;
        if (a == out)
          s = (op.kind == OpKind::add || slot == 0) ? identity_spec(out)
                                                    : const_diag_spec(out);
        else
          s = dense_spec(a, out);  // broadcast scalar: all-ones (or -ones) column
        specs.push_back({slot, s, {}});
      }
      break;
    }
    case OpKind::mul:
    case OpKind::div:
    case OpKind::div_guard:
    case OpKind::arctan2: {
      for (int slot = 0; slot < 2; ++slot) {
        Shape a = arg_shape(slot);
        Shape b = arg_shape(1 - slot);
        JacobianSpec s;
        if (a == out) {
          // derivative is diagonal in this operand; constant diagonal when
          // the other operand is a broadcast scalar of a product
          if (op.kind == OpKind::mul && is_scalar(b) && !(b == out))
            s = const_diag_spec(out);
          else if (op.kind == OpKind::div && slot == 0 && is_scalar(b) && !(b == out))
            s = const_diag_spec(out);
          else if (op.kind == OpKind::div_guard && slot == 0 && is_scalar(b) && !(b == out))
            s = const_diag_spec(out);
          else
            s = diag_spec(out);
        } else {
          s = dense_spec(a, out);  // scalar operand against a wider result
        }
        specs.push_back({slot, s, {}});
      }
      break;
    }
    case OpKind::matvec: {
      Shape w = arg_shape(0), x = arg_shape(1);
      JacobianSpec wspec{-2, w, out};
      if (is_scalar(w)) wspec = dense_spec(w, out);
      specs.push_back({0, wspec, {}});
      specs.push_back({1, dense_spec(x, out), {}});
      break;
    }
    case OpKind::matmul: {
      Shape a = arg_shape(0), b = arg_shape(1);
      specs.push_back({0, {-2, a, out}, {}});
      specs.push_back({1, {-3, b, out}, {}});
      break;
    }
    case OpKind::dot: {
      specs.push_back({0, dense_spec(arg_shape(0), out), {}});
      specs.push_back({1, dense_spec(arg_shape(1), out), {}});
      break;
    }
    case OpKind::sum_reduce:
      specs.push_back({0, dense_spec(arg_shape(0), out), {}});
      break;
    case OpKind::transpose: {
      Shape a = arg_shape(0);
      if (is_scalar(a))
        specs.push_back({0, dense_spec(a, out), {}});
      else
        specs.push_back({0, {-7, a, out}, {}});
      break;
    }
    case OpKind::slice: {
      Shape a = arg_shape(0);
      specs.push_back({0, {-1, a, out}, window_gather(a, op.r0, op.c0, out)});
      break;
    }
    case OpKind::concat: {
      Shape a = arg_shape(0), b = arg_shape(1);
      int br0 = op.axis == 0 ? a.rows : 0;
      int bc0 = op.axis == 0 ? 0 : a.cols;
      specs.push_back({0, {-1, a, out}, embed_gather(a, 0, 0, out)});
      specs.push_back({1, {-1, b, out}, embed_gather(b, br0, bc0, out)});
      break;
    }
    case OpKind::copy: {
      Shape a = arg_shape(0);
      specs.push_back({0, {-1, a, out}, identity_gather(a)});
      break;
    }
  }
  return specs;
}

namespace {

// Merge two contributions of one op that read the same value.
JacobianSpec merge_contribution_specs(const JacobianSpec& a, const JacobianSpec& b) {
  if (a.code == -1 || b.code == -1) return {1, a.in, a.out};
  return merge_add(a, b);
}

}  // namespace

TraceResult trace_full(const Program& p) {
  validate(p);
  const int n_in = static_cast<int>(p.inputs.size());
  const int n_ops = static_cast<int>(p.ops.size());

  // Uses per value: op operands plus output-slot references.
  std::vector<int> uses(static_cast<std::size_t>(p.n_values()), 0);
  for (const auto& op : p.ops)
    for (int a : op.args) ++uses[static_cast<std::size_t>(a)];
  for (int ref : p.outputs) ++uses[static_cast<std::size_t>(ref)];

  // An op value claimed by exactly one output slot and nothing else gets to
  // be the output vertex itself; every other output slot needs a copy.
  std::vector<int> claimed_slot(static_cast<std::size_t>(n_ops), -1);
  std::vector<bool> slot_copied(p.outputs.size(), false);
  for (std::size_t q = 0; q < p.outputs.size(); ++q) {
    int ref = p.outputs[q];
    if (ref < n_in) {
      slot_copied[q] = true;
      continue;
    }
    int t = ref - n_in;
    if (uses[static_cast<std::size_t>(ref)] == 1)
      claimed_slot[static_cast<std::size_t>(t)] = static_cast<int>(q);
    else
      slot_copied[q] = true;
  }

  int n_mid = 0;
  for (int t = 0; t < n_ops; ++t)
    if (claimed_slot[static_cast<std::size_t>(t)] < 0) ++n_mid;
  const int n_out = static_cast<int>(p.outputs.size());

  TraceResult tr;
  tr.graph = CompGraph(n_in, n_mid, n_out);
  tr.vertex_of_value.assign(static_cast<std::size_t>(p.n_values()), -1);
  tr.op_of_vertex.assign(static_cast<std::size_t>(tr.graph.n_vertices()), -1);
  tr.copied_value.assign(static_cast<std::size_t>(tr.graph.n_vertices()), -1);

  for (int v = 0; v < n_in; ++v) {
    tr.vertex_of_value[static_cast<std::size_t>(v)] = v;
    tr.graph.set_vertex_shape(v, p.inputs[static_cast<std::size_t>(v)].second);
  }
  VertexId next_mid = n_in;
  for (int t = 0; t < n_ops; ++t) {
    int slot = claimed_slot[static_cast<std::size_t>(t)];
    VertexId v = slot >= 0 ? static_cast<VertexId>(n_in + n_mid + slot) : next_mid++;
    tr.vertex_of_value[static_cast<std::size_t>(n_in + t)] = v;
    tr.op_of_vertex[static_cast<std::size_t>(v)] = t;
    tr.graph.set_vertex_shape(v, infer_shape(p, p.ops[static_cast<std::size_t>(t)]));
  }
  for (std::size_t q = 0; q < p.outputs.size(); ++q) {
    if (!slot_copied[q]) continue;
    VertexId v = static_cast<VertexId>(n_in + n_mid + static_cast<int>(q));
    tr.copied_value[static_cast<std::size_t>(v)] = p.outputs[q];
    tr.graph.set_vertex_shape(v, shape_of(p, p.outputs[q]));
  }

  for (int t = 0; t < n_ops; ++t) {
    VertexId dst = tr.vertex_of_value[static_cast<std::size_t>(n_in + t)];
    std::vector<EdgeContribution> contribs = op_edge_specs(p, t);
    // collapse duplicate-operand contributions
    for (std::size_t a = 0; a < contribs.size(); ++a) {
      int ref = p.ops[static_cast<std::size_t>(t)].args[static_cast<std::size_t>(contribs[a].arg_slot)];
      VertexId src = tr.vertex_of_value[static_cast<std::size_t>(ref)];
      JacobianSpec spec = contribs[a].spec;
      bool duplicate = false;
      for (std::size_t b = 0; b < a; ++b) {
        int ref_b = p.ops[static_cast<std::size_t>(t)].args[static_cast<std::size_t>(contribs[b].arg_slot)];
        if (ref_b == ref) duplicate = true;
      }
      if (duplicate) {
        JacobianSpec merged = merge_contribution_specs(tr.graph.edge(src, dst), spec);
        tr.graph.remove_edge(src, dst);
        tr.graph.add_edge(src, dst, merged);
      } else {
        tr.graph.add_edge(src, dst, spec);
      }
    }
  }
  for (std::size_t q = 0; q < p.outputs.size(); ++q) {
    if (!slot_copied[q]) continue;
    VertexId dst = static_cast<VertexId>(n_in + n_mid + static_cast<int>(q));
    VertexId src = tr.vertex_of_value[static_cast<std::size_t>(p.outputs[q])];
    Shape s = tr.graph.vertex_shape(dst);
    tr.graph.add_edge(src, dst, {-1, s, s});
  }
  return tr;
}

CompGraph trace(const Program& p) { return trace_full(p).graph; }

}  // namespace xce

#include "xce/numeric.hpp"

#include <algorithm>
#include <cassert>

#include "xce/elimination.hpp"

namespace xce {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double guard_offset(double b) { return b >= 0.0 ? 1.0 : -1.0; }

// ---- scalar function pairs (value, chain-rule push-through) ----

double f_sqrt(double x) { return std::sqrt(x); }
Dual f_sqrt(Dual x) { return {std::sqrt(x.v), x.d / (2.0 * std::sqrt(x.v))}; }
double f_sin(double x) { return std::sin(x); }
Dual f_sin(Dual x) { return {std::sin(x.v), x.d * std::cos(x.v)}; }
double f_cos(double x) { return std::cos(x); }
Dual f_cos(Dual x) { return {std::cos(x.v), -x.d * std::sin(x.v)}; }
double f_atan(double x) { return std::atan(x); }
Dual f_atan(Dual x) { return {std::atan(x.v), x.d / (1.0 + x.v * x.v)}; }
double f_log(double x) { return std::log(x); }
Dual f_log(Dual x) { return {std::log(x.v), x.d / x.v}; }
double f_exp(double x) { return std::exp(x); }
Dual f_exp(Dual x) {
  double e = std::exp(x.v);
  return {e, x.d * e};
}
double f_tanh(double x) { return std::tanh(x); }
Dual f_tanh(Dual x) {
  double t = std::tanh(x.v);
  return {t, x.d * (1.0 - t * t)};
}
double f_abs(double x) { return std::abs(x); }
Dual f_abs(Dual x) {
  double s = x.v > 0 ? 1.0 : (x.v < 0 ? -1.0 : 0.0);  // subgradient 0 at the kink
  return {std::abs(x.v), s * x.d};
}
double f_normcdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
Dual f_normcdf(Dual x) {
  return {0.5 * std::erfc(-x.v * kInvSqrt2),
          x.d * kInvSqrt2Pi * std::exp(-0.5 * x.v * x.v)};
}
double f_logg(double x) { return std::log(std::abs(x) + 1.0); }
Dual f_logg(Dual x) {
  double s = x.v > 0 ? 1.0 : (x.v < 0 ? -1.0 : 0.0);
  return {std::log(std::abs(x.v) + 1.0), x.d * s / (std::abs(x.v) + 1.0)};
}
double f_sqrtg(double x) { return std::sqrt(std::abs(x) + 1.0); }
Dual f_sqrtg(Dual x) {
  double s = x.v > 0 ? 1.0 : (x.v < 0 ? -1.0 : 0.0);
  return {std::sqrt(std::abs(x.v) + 1.0),
          x.d * s / (2.0 * std::sqrt(std::abs(x.v) + 1.0))};
}
double f_pow(double x, double c) { return std::pow(x, c); }
Dual f_pow(Dual x, double c) {
  return {std::pow(x.v, c), x.d * c * std::pow(x.v, c - 1.0)};
}
double f_atan2(double y, double x) { return std::atan2(y, x); }
Dual f_atan2(Dual y, Dual x) {
  double den = x.v * x.v + y.v * y.v;
  return {std::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / den};
}
double f_divg(double a, double b) { return a / (b + guard_offset(b)); }
Dual f_divg(Dual a, Dual b) {
  double den = b.v + guard_offset(b.v);
  return {a.v / den, (a.d * den - a.v * b.d) / (den * den)};
}

void check_domain(OpKind k, double x) {
  switch (k) {
    case OpKind::log_op:
      if (x <= 0.0) fail(ErrorCode::DomainError, "log of non-positive value");
      break;
    case OpKind::sqrt_op:
      if (x < 0.0) fail(ErrorCode::DomainError, "sqrt of negative value");
      break;
    default:
      break;
  }
}

}  // namespace

template <class T>
Mat<T> apply_op(const ElementalOp& op, const std::vector<const Mat<T>*>& args) {
  auto elementwise_unary = [&](auto fn) {
    const Mat<T>& x = *args[0];
    Mat<T> out(x.rows, x.cols);
    for (int i = 0; i < x.extent(); ++i) out.at(i) = fn(x.at(i));
    return out;
  };
  auto elementwise_binary = [&](auto fn) {
    const Mat<T>& a = *args[0];
    const Mat<T>& b = *args[1];
    bool a_scalar = a.extent() == 1 && !(b.extent() == 1);
    bool b_scalar = b.extent() == 1 && !(a.extent() == 1);
    int rows = a_scalar ? b.rows : a.rows;
    int cols = a_scalar ? b.cols : a.cols;
    Mat<T> out(rows, cols);
    for (int i = 0; i < out.extent(); ++i)
      out.at(i) = fn(a.at(a_scalar ? 0 : i), b.at(b_scalar ? 0 : i));
    return out;
  };

  switch (op.kind) {
    case OpKind::neg:
      return elementwise_unary([](T x) { return -x; });
    case OpKind::sqrt_op:
      check_domain(op.kind, primal(args[0]->at(0)));
      for (int i = 0; i < args[0]->extent(); ++i)
        check_domain(op.kind, primal(args[0]->at(i)));
      return elementwise_unary([](T x) { return f_sqrt(x); });
    case OpKind::sin_op:
      return elementwise_unary([](T x) { return f_sin(x); });
    case OpKind::cos_op:
      return elementwise_unary([](T x) { return f_cos(x); });
    case OpKind::arctan:
      return elementwise_unary([](T x) { return f_atan(x); });
    case OpKind::log_op:
      for (int i = 0; i < args[0]->extent(); ++i)
        check_domain(op.kind, primal(args[0]->at(i)));
      return elementwise_unary([](T x) { return f_log(x); });
    case OpKind::exp_op:
      return elementwise_unary([](T x) { return f_exp(x); });
    case OpKind::tanh_op:
      return elementwise_unary([](T x) { return f_tanh(x); });
    case OpKind::abs_op:
      return elementwise_unary([](T x) { return f_abs(x); });
    case OpKind::normcdf:
      return elementwise_unary([](T x) { return f_normcdf(x); });
    case OpKind::log_guard:
      return elementwise_unary([](T x) { return f_logg(x); });
    case OpKind::sqrt_guard:
      return elementwise_unary([](T x) { return f_sqrtg(x); });
    case OpKind::pow_const: {
      double c = op.c;
      for (int i = 0; i < args[0]->extent(); ++i) {
        double v = primal(args[0]->at(i));
        if ((v < 0.0 && c != std::floor(c)) || (v == 0.0 && c < 0.0))
          fail(ErrorCode::DomainError, "pow outside the real domain");
      }
      return elementwise_unary([c](T x) { return f_pow(x, c); });
    }
    case OpKind::scale_const: {
      double c = op.c;
      return elementwise_unary([c](T x) { return c * x; });
    }
    case OpKind::add_const: {
      double c = op.c;
      return elementwise_unary([c](T x) { return x + c; });
    }
    case OpKind::add:
      return elementwise_binary([](T a, T b) { return a + b; });
    case OpKind::sub:
      return elementwise_binary([](T a, T b) { return a - b; });
    case OpKind::mul:
      return elementwise_binary([](T a, T b) { return a * b; });
    case OpKind::div:
      for (int i = 0; i < args[1]->extent(); ++i)
        if (primal(args[1]->at(i)) == 0.0)
          fail(ErrorCode::DomainError, "division by zero");
      return elementwise_binary([](T a, T b) { return a / b; });
    case OpKind::div_guard:
      return elementwise_binary([](T a, T b) { return f_divg(a, b); });
    case OpKind::arctan2:
      return elementwise_binary([](T a, T b) { return f_atan2(a, b); });
    case OpKind::matvec: {
      const Mat<T>& w = *args[0];
      const Mat<T>& x = *args[1];
      Mat<T> out(w.rows, 1);
      for (int i = 0; i < w.rows; ++i) {
        T acc = w.at(i * w.cols) * x.at(0);
        for (int j = 1; j < w.cols; ++j) acc = acc + w.at(i * w.cols + j) * x.at(j);
        out.at(i) = acc;
      }
      return out;
    }
    case OpKind::matmul: {
      const Mat<T>& a = *args[0];
      const Mat<T>& b = *args[1];
      Mat<T> out(a.rows, b.cols);
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
          T acc = a.at(i * a.cols) * b.at(j);
          for (int k = 1; k < a.cols; ++k)
            acc = acc + a.at(i * a.cols + k) * b.at(k * b.cols + j);
          out.at(i * b.cols + j) = acc;
        }
      return out;
    }
    case OpKind::dot: {
      const Mat<T>& a = *args[0];
      const Mat<T>& b = *args[1];
      Mat<T> out(1, 1);
      T acc = a.at(0) * b.at(0);
      for (int i = 1; i < a.extent(); ++i) acc = acc + a.at(i) * b.at(i);
      out.at(0) = acc;
      return out;
    }
    case OpKind::sum_reduce: {
      const Mat<T>& x = *args[0];
      Mat<T> out(1, 1);
      T acc = x.at(0);
      for (int i = 1; i < x.extent(); ++i) acc = acc + x.at(i);
      out.at(0) = acc;
      return out;
    }
    case OpKind::transpose: {
      const Mat<T>& x = *args[0];
      Mat<T> out(x.cols, x.rows);
      for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c) out.at(c * x.rows + r) = x.at(r * x.cols + c);
      return out;
    }
    case OpKind::slice: {
      const Mat<T>& x = *args[0];
      Mat<T> out(op.rows, op.cols);
      for (int r = 0; r < op.rows; ++r)
        for (int c = 0; c < op.cols; ++c)
          out.at(r * op.cols + c) = x.at((op.r0 + r) * x.cols + (op.c0 + c));
      return out;
    }
    case OpKind::concat: {
      const Mat<T>& a = *args[0];
      const Mat<T>& b = *args[1];
      Mat<T> out(op.axis == 0 ? a.rows + b.rows : a.rows,
                 op.axis == 0 ? a.cols : a.cols + b.cols);
      for (int r = 0; r < a.rows; ++r)
        for (int c = 0; c < a.cols; ++c) out.at(r * out.cols + c) = a.at(r * a.cols + c);
      int r0 = op.axis == 0 ? a.rows : 0;
      int c0 = op.axis == 0 ? 0 : a.cols;
      for (int r = 0; r < b.rows; ++r)
        for (int c = 0; c < b.cols; ++c)
          out.at((r0 + r) * out.cols + (c0 + c)) = b.at(r * b.cols + c);
      return out;
    }
    case OpKind::copy:
      return *args[0];
  }
  fail(ErrorCode::UnsupportedOp, "unhandled op in apply_op");
}

template Mat<double> apply_op<double>(const ElementalOp&, const std::vector<const Mat<double>*>&);
template Mat<Dual> apply_op<Dual>(const ElementalOp&, const std::vector<const Mat<Dual>*>&);

template <class T>
std::vector<Mat<T>> evaluate_values(const Program& p, const std::vector<Mat<T>>& inputs) {
  if (inputs.size() != p.inputs.size())
    fail(ErrorCode::ShapeError, "wrong number of input values");
  std::vector<Mat<T>> values = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Shape want = p.inputs[t].second;
    if (!(values[t].shape() == want))
      fail(ErrorCode::ShapeError, "input shape mismatch: " + p.inputs[t].first);
  }
  values.reserve(p.n_values());
  for (const auto& op : p.ops) {
    std::vector<const Mat<T>*> args;
    for (int a : op.args) args.push_back(&values[static_cast<std::size_t>(a)]);
    values.push_back(apply_op<T>(op, args));
  }
  return values;
}

template std::vector<Mat<double>> evaluate_values<double>(const Program&,
                                                          const std::vector<Mat<double>>&);
template std::vector<Mat<Dual>> evaluate_values<Dual>(const Program&,
                                                      const std::vector<Mat<Dual>>&);

std::vector<MatD> evaluate_primal(const Program& p, const std::vector<MatD>& inputs) {
  std::vector<MatD> values = evaluate_values<double>(p, inputs);
  std::vector<MatD> out;
  for (int ref : p.outputs) out.push_back(values[static_cast<std::size_t>(ref)]);
  return out;
}

std::vector<MatD> inputs_from_flat(const Program& p,
                                   const std::vector<std::vector<double>>& flat) {
  if (flat.size() != p.inputs.size())
    fail(ErrorCode::ShapeError, "wrong number of inputs");
  std::vector<MatD> mats;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    Shape s = p.inputs[i].second;
    if (static_cast<int>(flat[i].size()) != s.extent())
      fail(ErrorCode::ShapeError, "flat input extent mismatch");
    MatD m(s.rows, s.cols);
    m.a = flat[i];
    mats.push_back(std::move(m));
  }
  return mats;
}

// ---------------------------------------------------------------------------
// numeric edges
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<int, int>, 4> kDeltaSlots = {{
    {SLOT_I, SLOT_K},
    {SLOT_I, SLOT_L},
    {SLOT_J, SLOT_K},
    {SLOT_J, SLOT_L},
}};

int slot_extent(const JacobianSpec& s, int slot) {
  switch (slot) {
    case SLOT_I: return s.out.rows;
    case SLOT_J: return s.out.cols;
    case SLOT_K: return s.in.rows;
    default: return s.in.cols;
  }
}

// Reads spec-layout data back out of a full rank-4 array. Exact whenever the
// spec's support covers the array's nonzeros.
std::vector<double> extract_data(const JacobianSpec& spec, const std::vector<double>& full) {
  DeltaPattern p = code_to_pattern(spec.code);
  if (p.kind == PatternKind::pure) return {};
  if (p.kind == PatternKind::constant) {
    int c[4] = {0, 0, 0, 0};  // a diagonal representative
    long long at = ((static_cast<long long>(c[0]) * spec.out.cols + c[1]) * spec.in.rows + c[2]) *
                       spec.in.cols + c[3];
    return {full[static_cast<std::size_t>(at)]};
  }
  std::vector<int> slots = dense_slots(spec);
  long long ext = dense_data_extent(spec);
  std::vector<double> data(static_cast<std::size_t>(ext));
  for (long long idx = 0; idx < ext; ++idx) {
    int c[4] = {0, 0, 0, 0};
    long long rem = idx;
    for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
      int e = slot_extent(spec, *it);
      c[*it] = static_cast<int>(rem % e);
      rem /= e;
    }
    for (int d = 0; d < 4; ++d) {
      if (!(p.deltas & (1u << d))) continue;
      auto [x, y] = kDeltaSlots[d];
      if (std::find(slots.begin(), slots.end(), x) != slots.end())
        c[y] = c[x];
      else if (std::find(slots.begin(), slots.end(), y) != slots.end())
        c[x] = c[y];
    }
    long long at = ((static_cast<long long>(c[0]) * spec.out.cols + c[1]) * spec.in.rows + c[2]) *
                       spec.in.cols + c[3];
    data[static_cast<std::size_t>(idx)] = full[static_cast<std::size_t>(at)];
  }
  return data;
}

}  // namespace

std::vector<double> materialize_numeric_edge(const NumericEdge& e) {
  if (e.spec.code == -1) {
    long long in_ext = e.spec.in.extent();
    std::vector<double> full(static_cast<std::size_t>(e.spec.out.extent()) * in_ext, 0.0);
    for (int o = 0; o < e.spec.out.extent(); ++o) {
      int src = e.gather[static_cast<std::size_t>(o)];
      if (src >= 0) full[static_cast<std::size_t>(o) * in_ext + src] = 1.0;
    }
    return full;
  }
  return materialize_dense(e.spec, e.data);
}

NumericEdge contract_numeric(const NumericEdge& a, const NumericEdge& b,
                             long long* performed_mults) {
  ContractionPlan plan = contract(a.spec, b.spec);
  NumericEdge out;
  out.spec = plan.result;

  if (a.spec.code == -1 || b.spec.code == -1) {
    if (a.spec.code == -1 && b.spec.code == -1) {
      out.gather.resize(static_cast<std::size_t>(out.spec.out.extent()));
      for (int o = 0; o < out.spec.out.extent(); ++o) {
        int mid = b.gather[static_cast<std::size_t>(o)];
        out.gather[static_cast<std::size_t>(o)] =
            mid >= 0 ? a.gather[static_cast<std::size_t>(mid)] : -1;
      }
      return out;
    }
    const long long in_ext = out.spec.in.extent();
    const long long out_ext = out.spec.out.extent();
    std::vector<double> full(static_cast<std::size_t>(out_ext * in_ext), 0.0);
    if (b.spec.code == -1) {
      std::vector<double> a_full = materialize_numeric_edge(a);
      for (long long o = 0; o < out_ext; ++o) {
        int mid = b.gather[static_cast<std::size_t>(o)];
        if (mid < 0) continue;
        for (long long x = 0; x < in_ext; ++x)
          full[static_cast<std::size_t>(o * in_ext + x)] =
              a_full[static_cast<std::size_t>(mid) * in_ext + static_cast<std::size_t>(x)];
      }
    } else {
      std::vector<double> b_full = materialize_numeric_edge(b);
      const long long mid_ext = a.spec.out.extent();
      std::vector<int> inverse(static_cast<std::size_t>(in_ext), -1);
      for (long long m = 0; m < mid_ext; ++m) {
        int x = a.gather[static_cast<std::size_t>(m)];
        if (x >= 0) inverse[static_cast<std::size_t>(x)] = static_cast<int>(m);
      }
      for (long long o = 0; o < out_ext; ++o)
        for (long long x = 0; x < in_ext; ++x) {
          int m = inverse[static_cast<std::size_t>(x)];
          if (m >= 0)
            full[static_cast<std::size_t>(o * in_ext + x)] =
                b_full[static_cast<std::size_t>(o * mid_ext + m)];
        }
    }
    out.data = extract_data(out.spec, full);
    return out;
  }

  const bool a_const = !plan.a_has_data && plan.a_multiplicative;
  const bool b_const = !plan.b_has_data && plan.b_multiplicative;
  const double ca = a_const ? a.data.at(0) : 1.0;
  const double cb = b_const ? b.data.at(0) : 1.0;

  out.data.assign(static_cast<std::size_t>(plan.result_data_extent), 0.0);

  std::vector<ContractionPlan::ClassLoop> active;
  for (const auto& l : plan.loops)
    if (l.summed || l.a_stride != 0 || l.b_stride != 0 || l.r_stride != 0)
      active.push_back(l);

  if (active.empty()) {
    // constants and pure renames only
    if (plan.a_has_data || plan.b_has_data)
      fail(ErrorCode::UnsupportedPattern, "data side without an index class");
    if (plan.a_multiplicative && plan.b_multiplicative) {
      out.data = {ca * cb};
      if (performed_mults) *performed_mults += 1;
    } else if (plan.a_multiplicative || plan.b_multiplicative) {
      out.data = {plan.a_multiplicative ? ca : cb};
    }
    return out;
  }

  long long total = 1;
  for (const auto& l : active) total *= l.size;
  const bool both = plan.a_multiplicative && plan.b_multiplicative;
  long long counted = 0;
  for (long long t = 0; t < total; ++t) {
    long long rem = t, aoff = 0, boff = 0, roff = 0;
    for (auto it = active.rbegin(); it != active.rend(); ++it) {
      long long c = rem % it->size;
      rem /= it->size;
      aoff += c * it->a_stride;
      boff += c * it->b_stride;
      roff += c * it->r_stride;
    }
    double v;
    if (plan.a_has_data && plan.b_has_data) {
      v = a.data[static_cast<std::size_t>(aoff)] * b.data[static_cast<std::size_t>(boff)];
      ++counted;
    } else if (plan.a_has_data) {
      if (b_const) {
        v = a.data[static_cast<std::size_t>(aoff)] * cb;
        ++counted;
      } else {
        v = a.data[static_cast<std::size_t>(aoff)];
      }
    } else if (plan.b_has_data) {
      if (a_const) {
        v = ca * b.data[static_cast<std::size_t>(boff)];
        ++counted;
      } else {
        v = b.data[static_cast<std::size_t>(boff)];
      }
    } else {
      v = both ? ca * cb : (plan.a_multiplicative ? ca : cb);
      if (both) ++counted;
    }
    out.data[static_cast<std::size_t>(roff)] += v;
  }
  (void)both;
  if (performed_mults) *performed_mults += counted;
  return out;
}

void eliminate_vertex_numeric(NumericGraph& ng, VertexId j, long long* performed_mults) {
  CompGraph& g = ng.graph;
  if (!g.is_intermediate(j)) fail(ErrorCode::NotIntermediate, "not an intermediate");
  if (g.eliminated(j)) fail(ErrorCode::AlreadyEliminated, "vertex eliminated twice");
  const std::set<VertexId> preds = g.preds(j);
  const std::set<VertexId> succs = g.succs(j);
  for (VertexId i : preds) {
    const NumericEdge in_edge = ng.edges.at({i, j});
    for (VertexId k : succs) {
      const NumericEdge& out_edge = ng.edges.at({j, k});
      NumericEdge fresh = contract_numeric(in_edge, out_edge, performed_mults);
      auto it = ng.edges.find({i, k});
      if (it == ng.edges.end()) {
        g.set_edge(i, k, fresh.spec);
        ng.edges.insert({{i, k}, std::move(fresh)});
      } else {
        NumericEdge& existing = it->second;
        JacobianSpec merged = merge_add(existing.spec, fresh.spec);
        std::vector<double> full = materialize_numeric_edge(existing);
        std::vector<double> add = materialize_numeric_edge(fresh);
        for (std::size_t q = 0; q < full.size(); ++q) full[q] += add[q];
        existing.spec = merged;
        existing.gather.clear();
        existing.data = extract_data(merged, full);
        g.set_edge(i, k, merged);
      }
    }
  }
  for (VertexId i : preds) {
    g.remove_edge(i, j);
    ng.edges.erase({i, j});
  }
  for (VertexId k : succs) {
    g.remove_edge(j, k);
    ng.edges.erase({j, k});
  }
  g.mark_eliminated(j);
}

// ---------------------------------------------------------------------------
// building the numeric graph
// ---------------------------------------------------------------------------

namespace {

// Data for one operand's local partial, laid out per the contribution spec.
std::vector<double> contribution_data(const Program& p, int op_index,
                                      const EdgeContribution& con,
                                      const std::vector<MatD>& values) {
  const ElementalOp& op = p.ops[static_cast<std::size_t>(op_index)];
  auto argv = [&](int slot) -> const MatD& {
    return values[static_cast<std::size_t>(op.args[static_cast<std::size_t>(slot)])];
  };
  const MatD& x = argv(con.arg_slot);
  Shape out = infer_shape(p, op);
  const int out_ext = out.extent();

  auto diag_data = [&](auto deriv) {
    // spec is diag_spec(out): data runs over the output extent
    std::vector<double> d(static_cast<std::size_t>(out_ext));
    for (int i = 0; i < out_ext; ++i) d[static_cast<std::size_t>(i)] = deriv(i);
    return d;
  };

  switch (op.kind) {
    case OpKind::neg:
      return {-1.0};
    case OpKind::scale_const:
      return {op.c};
    case OpKind::add_const:
      return con.spec.code == -6 ? std::vector<double>{} : std::vector<double>{1.0};
    case OpKind::sqrt_op:
      return diag_data([&](int i) { return 1.0 / (2.0 * std::sqrt(x.at(i))); });
    case OpKind::sin_op:
      return diag_data([&](int i) { return std::cos(x.at(i)); });
    case OpKind::cos_op:
      return diag_data([&](int i) { return -std::sin(x.at(i)); });
    case OpKind::arctan:
      return diag_data([&](int i) { return 1.0 / (1.0 + x.at(i) * x.at(i)); });
    case OpKind::log_op:
      return diag_data([&](int i) { return 1.0 / x.at(i); });
    case OpKind::exp_op:
      return diag_data([&](int i) { return std::exp(x.at(i)); });
    case OpKind::tanh_op:
      return diag_data([&](int i) {
        double t = std::tanh(x.at(i));
        return 1.0 - t * t;
      });
    case OpKind::abs_op:
      return diag_data([&](int i) {
        double v = x.at(i);
        return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
      });
    case OpKind::normcdf:
      return diag_data([&](int i) {
        return kInvSqrt2Pi * std::exp(-0.5 * x.at(i) * x.at(i));
      });
    case OpKind::log_guard:
      return diag_data([&](int i) {
        double v = x.at(i);
        double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        return s / (std::abs(v) + 1.0);
      });
    case OpKind::sqrt_guard:
      return diag_data([&](int i) {
        double v = x.at(i);
        double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        return s / (2.0 * std::sqrt(std::abs(v) + 1.0));
      });
    case OpKind::pow_const:
      return diag_data([&](int i) { return op.c * std::pow(x.at(i), op.c - 1.0); });
    case OpKind::add:
    case OpKind::sub: {
      double sign = (op.kind == OpKind::sub && con.arg_slot == 1) ? -1.0 : 1.0;
      if (con.spec.code == -6) return {};
      if (con.spec.code == 10) return {sign};
      if (x.extent() == out_ext) return {sign};  // scalar identity, dense code
      // broadcast scalar operand: column of +-1 over the output extent
      std::vector<double> d(static_cast<std::size_t>(out_ext), sign);
      return d;
    }
    case OpKind::mul:
    case OpKind::div:
    case OpKind::div_guard:
    case OpKind::arctan2: {
      const MatD& other = argv(1 - con.arg_slot);
      bool self_scalar = x.extent() == 1 && out_ext > 1;
      auto self_v = [&](int i) { return x.at(self_scalar ? 0 : i); };
      bool other_scalar = other.extent() == 1 && out_ext > 1;
      auto other_v = [&](int i) { return other.at(other_scalar ? 0 : i); };
      auto deriv = [&](int i) {
        switch (op.kind) {
          case OpKind::mul:
            return other_v(i);
          case OpKind::div:
            return con.arg_slot == 0 ? 1.0 / other_v(i)
                                     : -other_v(i) / (self_v(i) * self_v(i));
          case OpKind::div_guard: {
            if (con.arg_slot == 0) {
              double den = other_v(i) + guard_offset(other_v(i));
              return 1.0 / den;
            }
            double den = self_v(i) + guard_offset(self_v(i));
            return -other_v(i) / (den * den);
          }
          default: {  // arctan2
            double yv = con.arg_slot == 0 ? self_v(i) : other_v(i);
            double xv = con.arg_slot == 0 ? other_v(i) : self_v(i);
            double den = xv * xv + yv * yv;
            return con.arg_slot == 0 ? xv / den : -yv / den;
          }
        }
      };
      if (con.spec.code == 10) {
        // constant diagonal: scalar factor against a wider operand
        return {deriv(0)};
      }
      std::vector<double> d(static_cast<std::size_t>(dense_data_extent(con.spec)));
      if (static_cast<long long>(d.size()) == out_ext) {
        for (int i = 0; i < out_ext; ++i) d[static_cast<std::size_t>(i)] = deriv(i);
      } else {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = deriv(static_cast<int>(i));
      }
      return d;
    }
    case OpKind::matvec: {
      const MatD& w = argv(0);
      const MatD& xv = argv(1);
      if (con.arg_slot == 0) {
        // code -2: data over (out cols = 1) x (in cols): the vector itself
        std::vector<double> d(static_cast<std::size_t>(w.cols));
        for (int l = 0; l < w.cols; ++l) d[static_cast<std::size_t>(l)] = xv.at(l);
        return d;
      }
      std::vector<double> d(static_cast<std::size_t>(w.rows) * xv.rows);
      for (int i = 0; i < w.rows; ++i)
        for (int k = 0; k < xv.rows; ++k)
          d[static_cast<std::size_t>(i * xv.rows + k)] = w.at(i * w.cols + k);
      return d;
    }
    case OpKind::matmul: {
      const MatD& a = argv(0);
      const MatD& bm = argv(1);
      if (con.arg_slot == 0) {
        // code -2: data over (j, l) = (out cols, in cols): B transposed
        std::vector<double> d(static_cast<std::size_t>(bm.cols) * a.cols);
        for (int jj = 0; jj < bm.cols; ++jj)
          for (int l = 0; l < a.cols; ++l)
            d[static_cast<std::size_t>(jj * a.cols + l)] = bm.at(l * bm.cols + jj);
        return d;
      }
      // code -3: data over (i, k) = (out rows, in rows): A itself
      std::vector<double> d(static_cast<std::size_t>(a.rows) * a.cols);
      for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k)
          d[static_cast<std::size_t>(i * a.cols + k)] = a.at(i * a.cols + k);
      return d;
    }
    case OpKind::dot: {
      const MatD& other = argv(1 - con.arg_slot);
      std::vector<double> d(static_cast<std::size_t>(other.extent()));
      for (int i = 0; i < other.extent(); ++i) d[static_cast<std::size_t>(i)] = other.at(i);
      return d;
    }
    case OpKind::sum_reduce:
      return std::vector<double>(static_cast<std::size_t>(x.extent()), 1.0);
    case OpKind::transpose:
      if (con.spec.code == -7) return {};
      return {1.0};  // scalar transpose
    case OpKind::slice:
    case OpKind::concat:
    case OpKind::copy:
      return {};
  }
  fail(ErrorCode::UnsupportedOp, "unhandled op in contribution_data");
}

}  // namespace

NumericGraph build_numeric_graph(const Program& p, const std::vector<MatD>& inputs) {
  TraceResult tr = trace_full(p);
  std::vector<MatD> values = evaluate_values<double>(p, inputs);

  NumericGraph ng;
  ng.graph = tr.graph;

  const int n_in = static_cast<int>(p.inputs.size());
  for (std::size_t t = 0; t < p.ops.size(); ++t) {
    VertexId dst = tr.vertex_of_value[static_cast<std::size_t>(n_in + static_cast<int>(t))];
    std::vector<EdgeContribution> contribs = op_edge_specs(p, static_cast<int>(t));
    for (std::size_t a = 0; a < contribs.size(); ++a) {
      int ref = p.ops[t].args[static_cast<std::size_t>(contribs[a].arg_slot)];
      VertexId src = tr.vertex_of_value[static_cast<std::size_t>(ref)];
      NumericEdge e;
      e.spec = contribs[a].spec;
      e.gather = contribs[a].gather;
      e.data = contribution_data(p, static_cast<int>(t), contribs[a], values);
      auto it = ng.edges.find({src, dst});
      if (it == ng.edges.end()) {
        ng.edges.insert({{src, dst}, std::move(e)});
      } else {
        // duplicate operand: both partials land on one edge; the traced
        // graph already stores the merged spec
        JacobianSpec merged = ng.graph.edge(src, dst);
        std::vector<double> full = materialize_numeric_edge(it->second);
        std::vector<double> add = materialize_numeric_edge(e);
        for (std::size_t q = 0; q < full.size(); ++q) full[q] += add[q];
        it->second.spec = merged;
        it->second.gather.clear();
        it->second.data = extract_data(merged, full);
      }
    }
  }
  for (VertexId v = 0; v < ng.graph.n_vertices(); ++v) {
    int ref = tr.copied_value[static_cast<std::size_t>(v)];
    if (ref < 0) continue;
    VertexId src = tr.vertex_of_value[static_cast<std::size_t>(ref)];
    NumericEdge e;
    e.spec = ng.graph.edge(src, v);
    Shape s = ng.graph.vertex_shape(v);
    e.gather.resize(static_cast<std::size_t>(s.extent()));
    for (int i = 0; i < s.extent(); ++i) e.gather[static_cast<std::size_t>(i)] = i;
    ng.edges.insert({{src, v}, std::move(e)});
  }
  return ng;
}

AccumulateResult accumulate_jacobian_graph(NumericGraph ng, const EliminationOrder& order) {
  std::set<VertexId> seen;
  for (VertexId v : order)
    if (!seen.insert(v).second) fail(ErrorCode::DuplicateVertex, "order repeats a vertex");
  std::size_t pending = 0;
  for (VertexId v : ng.graph.intermediates())
    if (!ng.graph.eliminated(v)) ++pending;
  if (order.size() != pending)
    fail(ErrorCode::IncompleteOrder, "order must cover every intermediate");

  AccumulateResult res;
  for (VertexId v : order) eliminate_vertex_numeric(ng, v, &res.performed_mults);

  const CompGraph& g = ng.graph;
  res.jac.n_out = g.n_outputs();
  res.jac.n_in = g.n_inputs();
  for (int i = 0; i < g.n_inputs(); ++i) res.jac.in_shapes.push_back(g.vertex_shape(i));
  for (int o = 0; o < g.n_outputs(); ++o)
    res.jac.out_shapes.push_back(g.vertex_shape(g.n_inputs() + g.n_intermediates() + o));
  res.jac.blocks.resize(static_cast<std::size_t>(res.jac.n_out) * res.jac.n_in);
  for (int o = 0; o < res.jac.n_out; ++o) {
    VertexId ov = g.n_inputs() + g.n_intermediates() + o;
    for (int i = 0; i < res.jac.n_in; ++i) {
      auto it = ng.edges.find({i, ov});
      if (it != ng.edges.end()) {
        res.jac.block(o, i) = materialize_numeric_edge(it->second);
      } else {
        res.jac.block(o, i).assign(
            static_cast<std::size_t>(res.jac.out_shapes[static_cast<std::size_t>(o)].extent()) *
                res.jac.in_shapes[static_cast<std::size_t>(i)].extent(),
            0.0);
      }
    }
  }
  return res;
}

AccumulateResult accumulate_jacobian(const Program& p, const std::vector<MatD>& inputs,
                                     const EliminationOrder& order) {
  return accumulate_jacobian_graph(build_numeric_graph(p, inputs), order);
}

JacobianBlocks reference_jacobian(const Program& p, const std::vector<MatD>& inputs,
                                  RefMethod method) {
  JacobianBlocks jac;
  jac.n_in = static_cast<int>(p.inputs.size());
  jac.n_out = static_cast<int>(p.outputs.size());
  for (const auto& [name, s] : p.inputs) jac.in_shapes.push_back(s);
  for (int ref : p.outputs) jac.out_shapes.push_back(shape_of(p, ref));
  jac.blocks.resize(static_cast<std::size_t>(jac.n_in) * jac.n_out);
  for (int o = 0; o < jac.n_out; ++o)
    for (int i = 0; i < jac.n_in; ++i)
      jac.block(o, i).assign(
          static_cast<std::size_t>(jac.out_shapes[static_cast<std::size_t>(o)].extent()) *
              jac.in_shapes[static_cast<std::size_t>(i)].extent(),
          0.0);

  if (method == RefMethod::dual) {
    std::vector<Mat<Dual>> seeds;
    for (const MatD& m : inputs) {
      Mat<Dual> d(m.rows, m.cols);
      for (int e = 0; e < m.extent(); ++e) d.at(e) = {m.at(e), 0.0};
      seeds.push_back(std::move(d));
    }
    for (int i = 0; i < jac.n_in; ++i) {
      for (int e = 0; e < inputs[static_cast<std::size_t>(i)].extent(); ++e) {
        seeds[static_cast<std::size_t>(i)].at(e).d = 1.0;
        std::vector<Mat<Dual>> values = evaluate_values<Dual>(p, seeds);
        for (int o = 0; o < jac.n_out; ++o) {
          const Mat<Dual>& y = values[static_cast<std::size_t>(p.outputs[static_cast<std::size_t>(o)])];
          int in_ext = jac.in_shapes[static_cast<std::size_t>(i)].extent();
          for (int r = 0; r < y.extent(); ++r)
            jac.block(o, i)[static_cast<std::size_t>(r * in_ext + e)] = y.at(r).d;
        }
        seeds[static_cast<std::size_t>(i)].at(e).d = 0.0;
      }
    }
    return jac;
  }

  // central differences
  std::vector<MatD> x = inputs;
  for (int i = 0; i < jac.n_in; ++i) {
    for (int e = 0; e < x[static_cast<std::size_t>(i)].extent(); ++e) {
      double orig = x[static_cast<std::size_t>(i)].at(e);
      double h = 1e-6 * std::max(1.0, std::abs(orig));
      x[static_cast<std::size_t>(i)].at(e) = orig + h;
      std::vector<MatD> up = evaluate_primal(p, x);
      x[static_cast<std::size_t>(i)].at(e) = orig - h;
      std::vector<MatD> dn = evaluate_primal(p, x);
      x[static_cast<std::size_t>(i)].at(e) = orig;
      for (int o = 0; o < jac.n_out; ++o) {
        int in_ext = jac.in_shapes[static_cast<std::size_t>(i)].extent();
        for (int r = 0; r < up[static_cast<std::size_t>(o)].extent(); ++r)
          jac.block(o, i)[static_cast<std::size_t>(r * in_ext + e)] =
              (up[static_cast<std::size_t>(o)].at(r) - dn[static_cast<std::size_t>(o)].at(r)) /
              (2.0 * h);
      }
    }
  }
  return jac;
}

double max_rel_err(const JacobianBlocks& a, const JacobianBlocks& b) {
  double worst = 0.0;
  for (std::size_t q = 0; q < a.blocks.size(); ++q)
    for (std::size_t e = 0; e < a.blocks[q].size(); ++e) {
      double den = std::max(1.0, std::abs(b.blocks[q][e]));
      worst = std::max(worst, std::abs(a.blocks[q][e] - b.blocks[q][e]) / den);
    }
  return worst;
}

}  // namespace xce

#include "xce/randprog.hpp"

#include <algorithm>
#include <cmath>

#include "xce/numeric.hpp"

namespace xce {

namespace {

// Generated values stay scalars or column vectors; matrices enter only as
// matvec operands, so any two values can always be combined (equal shapes,
// scalar broadcast, or vertical concat).
struct Gen {
  const RandProgConfig& cfg;
  std::mt19937_64 rng;
  Program p;
  std::vector<int> uses;                 // per value ref
  std::vector<std::vector<MatD>> probe;  // probe values per point, per ref
  std::vector<int> matrix_inputs;
  int pool_limit = INT32_MAX;  // finalizer values never become operands

  explicit Gen(const RandProgConfig& c) : cfg(c), rng(c.seed) {}

  int n_probe() const { return static_cast<int>(probe.size()); }

  Shape ref_shape(int ref) { return shape_of(p, ref); }

  bool value_ok(const MatD& m) {
    for (double v : m.a)
      if (!std::isfinite(v) || std::abs(v) > 1e6) return false;
    return true;
  }

  // Evaluates a candidate op at every probe point; empty result = rejected.
  bool probe_op(const ElementalOp& op, std::vector<MatD>& out) {
    out.clear();
    for (int q = 0; q < n_probe(); ++q) {
      std::vector<const MatD*> args;
      for (int a : op.args) args.push_back(&probe[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)]);
      MatD v;
      try {
        v = apply_op<double>(op, args);
      } catch (const Error&) {
        return false;
      }
      if (!value_ok(v)) return false;
      out.push_back(std::move(v));
    }
    return true;
  }

  void commit(const ElementalOp& op, const std::vector<MatD>& vals) {
    for (int a : op.args) ++uses[static_cast<std::size_t>(a)];
    p.ops.push_back(op);
    uses.push_back(0);
    for (int q = 0; q < n_probe(); ++q)
      probe[static_cast<std::size_t>(q)].push_back(vals[static_cast<std::size_t>(q)]);
  }

  std::vector<int> sinks() const {
    std::vector<int> s;
    int n_in = static_cast<int>(p.inputs.size());
    for (std::size_t t = 0; t < p.ops.size(); ++t) {
      int ref = n_in + static_cast<int>(t);
      if (ref < pool_limit && uses[static_cast<std::size_t>(ref)] == 0) s.push_back(ref);
    }
    return s;
  }

  // Non-matrix values only (matrix inputs feed matvec exclusively).
  std::vector<int> pool() {
    std::vector<int> refs;
    for (int r = 0; r < std::min(p.n_values(), pool_limit); ++r) {
      Shape s = ref_shape(r);
      if (s.cols == 1) refs.push_back(r);
    }
    return refs;
  }

  int pick(const std::vector<int>& refs) {
    return refs[static_cast<std::size_t>(rng_int(rng, static_cast<int>(refs.size())))];
  }

  // Prefers unconsumed values so nothing ends up dead.
  int pick_biased() {
    std::vector<int> s = sinks();
    if (!s.empty() && rng_real(rng) < 0.65) return pick(s);
    return pick(pool());
  }

  ElementalOp make_unary(int a) {
    static const OpKind kinds[] = {OpKind::neg,      OpKind::sin_op,     OpKind::cos_op,
                                   OpKind::tanh_op,  OpKind::abs_op,     OpKind::arctan,
                                   OpKind::log_guard, OpKind::sqrt_guard, OpKind::pow_const,
                                   OpKind::scale_const, OpKind::add_const};
    ElementalOp op{kinds[rng_int(rng, 11)], {a}};
    if (op.kind == OpKind::pow_const) op.c = 2.0 + rng_int(rng, 2);
    if (op.kind == OpKind::scale_const) op.c = std::round(rng_signed(rng) * 40.0) / 10.0;
    if (op.kind == OpKind::add_const) op.c = std::round(rng_signed(rng) * 30.0) / 10.0;
    return op;
  }

  ElementalOp make_binary(int a, int b) {
    Shape sa = ref_shape(a), sb = ref_shape(b);
    bool compatible = sa == sb || sa.extent() == 1 || sb.extent() == 1;
    if (!compatible) {
      ElementalOp op{OpKind::concat, {a, b}};
      op.axis = 0;
      return op;
    }
    static const OpKind kinds[] = {OpKind::add, OpKind::sub, OpKind::mul, OpKind::div_guard};
    return {kinds[rng_int(rng, 4)], {a, b}};
  }

  ElementalOp make_accumulate() {
    // try matvec off a matrix input, else dot / sum of a vector
    std::vector<int> vecs;
    for (int r : pool())
      if (ref_shape(r).rows > 1) vecs.push_back(r);
    if (!matrix_inputs.empty() && !vecs.empty() && rng_int(rng, 2) == 0) {
      int w = matrix_inputs[static_cast<std::size_t>(rng_int(rng, static_cast<int>(matrix_inputs.size())))];
      int need = ref_shape(w).cols;
      std::vector<int> match;
      for (int r : vecs)
        if (ref_shape(r).rows == need) match.push_back(r);
      if (!match.empty()) return {OpKind::matvec, {w, pick(match)}};
    }
    if (!vecs.empty()) {
      int a = pick(vecs);
      if (rng_int(rng, 2) == 0) return {OpKind::dot, {a, a}};
      return {OpKind::sum_reduce, {a}};
    }
    return make_unary(pick_biased());
  }

  ElementalOp make_reshape() {
    std::vector<int> vecs;
    for (int r : pool())
      if (ref_shape(r).rows > 1) vecs.push_back(r);
    if (vecs.empty() || rng_int(rng, 2) == 0) {
      ElementalOp op{OpKind::concat, {pick_biased(), pick_biased()}};
      op.axis = 0;
      return op;
    }
    int a = pick(vecs);
    Shape s = ref_shape(a);
    int rows = 1 + rng_int(rng, s.rows - 1);
    ElementalOp op{OpKind::slice, {a}};
    op.r0 = rng_int(rng, s.rows - rows + 1);
    op.c0 = 0;
    op.rows = rows;
    op.cols = 1;
    return op;
  }

  ElementalOp sample_op(bool force_merge) {
    if (force_merge) {
      std::vector<int> s = sinks();
      if (s.size() >= 2) {
        int a = s[static_cast<std::size_t>(rng_int(rng, static_cast<int>(s.size())))];
        int b = a;
        while (b == a) b = s[static_cast<std::size_t>(rng_int(rng, static_cast<int>(s.size())))];
        return make_binary(a, b);
      }
    }
    double u = rng_real(rng);
    double pu = cfg.p_unary, pb = pu + cfg.p_binary, pa = pb + cfg.p_accumulate;
    double total = pa + cfg.p_reshape;
    u *= total;
    if (u < pu) return make_unary(pick_biased());
    if (u < pb) return make_binary(pick_biased(), pick_biased());
    if (u < pa && cfg.allow_vectors) return make_accumulate();
    if (cfg.allow_vectors) return make_reshape();
    return make_binary(pick_biased(), pick_biased());
  }
};

}  // namespace

namespace {

Program random_program_attempt(const RandProgConfig& cfg) {
  Gen gen(cfg);
  gen.probe.resize(3);

  for (int i = 0; i < cfg.n_in; ++i) {
    Shape s{1, 1};
    if (cfg.allow_vectors) {
      int kind = rng_int(gen.rng, 10);
      if (kind < 4) s = {2 + rng_int(gen.rng, 3), 1};
      // keep at least one scalar/vector input so binary operands always exist
      else if (kind < 5 && i > 0) s = {2 + rng_int(gen.rng, 2), 2 + rng_int(gen.rng, 2)};
    }
    int ref = static_cast<int>(gen.p.inputs.size());
    gen.p.inputs.emplace_back("x" + std::to_string(i), s);
    gen.uses.push_back(0);
    if (s.cols > 1) gen.matrix_inputs.push_back(ref);
    for (int q = 0; q < gen.n_probe(); ++q) {
      MatD m(s.rows, s.cols);
      for (double& v : m.a) v = q == 0 ? 1.0 : rng_signed(gen.rng) * 1.5;
      gen.probe[static_cast<std::size_t>(q)].push_back(std::move(m));
    }
  }

  // internal ops; sinks are merged early enough that the finalizers below
  // can always absorb what is left
  for (int t = 0; t < cfg.n_intermediates; ++t) {
    int remaining_internal = cfg.n_intermediates - 1 - t;
    bool force_merge =
        static_cast<int>(gen.sinks().size()) >= 2 * cfg.n_out + remaining_internal - 1;
    std::vector<MatD> vals;
    ElementalOp op;
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      op = gen.sample_op(force_merge);
      ok = gen.probe_op(op, vals);
    }
    if (!ok) {
      op = ElementalOp{OpKind::tanh_op, {gen.pick_biased()}};
      gen.probe_op(op, vals);
    }
    gen.commit(op, vals);
  }

  // finalizers: consume every remaining sink, one output vertex each
  gen.pool_limit = gen.p.n_values();
  for (int q = 0; q < cfg.n_out; ++q) {
    int left = cfg.n_out - q;
    std::vector<int> s = gen.sinks();
    ElementalOp op;
    if (static_cast<int>(s.size()) > left && s.size() >= 2) {
      op = gen.make_binary(s[0], s[1]);
    } else if (!s.empty()) {
      op = gen.make_binary(s[0], gen.pick_biased());
    } else {
      op = gen.make_binary(gen.pick_biased(), gen.pick_biased());
    }
    std::vector<MatD> vals;
    if (!gen.probe_op(op, vals)) {
      ElementalOp fallback{OpKind::tanh_op, {op.args[0]}};
      op = fallback;
      gen.probe_op(op, vals);
    }
    gen.commit(op, vals);
    gen.p.outputs.push_back(gen.p.n_values() - 1);
  }

  validate(gen.p);
  return gen.p;
}

bool has_dead_value(const Program& p, int n_internal) {
  std::vector<int> uses(static_cast<std::size_t>(p.n_values()), 0);
  for (const auto& op : p.ops)
    for (int a : op.args) ++uses[static_cast<std::size_t>(a)];
  for (int ref : p.outputs) ++uses[static_cast<std::size_t>(ref)];
  int n_in = static_cast<int>(p.inputs.size());
  for (int t = 0; t < n_internal; ++t)
    if (uses[static_cast<std::size_t>(n_in + t)] == 0) return true;
  return false;
}

}  // namespace

Program random_program(const RandProgConfig& cfg) {
  if (cfg.n_intermediates < 1 || cfg.n_in < 1 || cfg.n_out < 1)
    fail(ErrorCode::InvalidConfig, "counts must be positive");
  // The sink bookkeeping almost always lands a fully-consumed program on the
  // first try; reseed deterministically in the rare case it does not.
  RandProgConfig attempt = cfg;
  for (int round = 0; round < 64; ++round) {
    Program p = random_program_attempt(attempt);
    if (!has_dead_value(p, cfg.n_intermediates)) return p;
    attempt.seed = fnv1a(std::to_string(cfg.seed) + ":" + std::to_string(round));
  }
  fail(ErrorCode::InvalidConfig, "generator could not avoid dead values");
}

}  // namespace xce

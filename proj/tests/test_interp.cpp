#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "xce/elimination.hpp"
#include "xce/numeric.hpp"
#include "xce/randprog.hpp"
#include "xce/strategies.hpp"
#include "xce/tasks.hpp"

using namespace xce;

namespace {

std::vector<MatD> scalar_inputs(std::initializer_list<double> vals) {
  std::vector<MatD> x;
  for (double v : vals) {
    MatD m(1, 1);
    m.at(0) = v;
    x.push_back(m);
  }
  return x;
}

std::vector<MatD> random_inputs(const Program& p, std::uint64_t seed, double scale = 1.5) {
  std::mt19937_64 rng(seed);
  std::vector<MatD> x;
  for (const auto& [name, s] : p.inputs) {
    MatD m(s.rows, s.cols);
    for (double& v : m.a) v = rng_signed(rng) * scale;
    x.push_back(std::move(m));
  }
  return x;
}

// Densify every edge; the eliminations then run entirely through the dense
// kernel path.
NumericGraph densified(const NumericGraph& ng) {
  NumericGraph out;
  out.graph = CompGraph(ng.graph.n_inputs(), ng.graph.n_intermediates(),
                        ng.graph.n_outputs());
  for (VertexId v = 0; v < ng.graph.n_vertices(); ++v)
    out.graph.set_vertex_shape(v, ng.graph.vertex_shape(v));
  for (const auto& [key, e] : ng.edges) {
    NumericEdge d;
    d.spec = {1, e.spec.in, e.spec.out};
    d.data = materialize_numeric_edge(e);
    out.graph.add_edge(key.first, key.second, d.spec);
    out.edges.insert({key, std::move(d)});
  }
  return out;
}

}  // namespace

TEST_CASE("primal evaluation of the worked example") {
  Program p = testutil::two_intermediate_program();
  std::vector<MatD> out = evaluate_primal(p, scalar_inputs({1.0, 2.0}));
  CHECK(out[0].at(0) == doctest::Approx(std::log(std::sin(2.0))).epsilon(1e-15));
  CHECK(out[1].at(0) == doctest::Approx(2.0 - std::sin(2.0)).epsilon(1e-15));

  Program ident;
  ident.inputs = {{"x", {2, 1}}};
  ident.outputs = {0};
  MatD v(2, 1);
  v.at(0) = 3.0;
  v.at(1) = -1.0;
  std::vector<MatD> res = evaluate_primal(ident, {v});
  CHECK(res[0].a == v.a);

  Program logp;
  logp.inputs = {{"x", {1, 1}}};
  logp.ops.push_back({OpKind::log_op, {0}});
  logp.outputs = {1};
  CHECK_THROWS_AS(evaluate_primal(logp, scalar_inputs({-2.0})), Error);
}

TEST_CASE("worked example Jacobian against closed forms") {
  Program p = testutil::two_intermediate_program();
  std::vector<MatD> x = scalar_inputs({1.0, 2.0});
  AccumulateResult rev = accumulate_jacobian(p, x, {3, 2});
  const double c = std::cos(2.0), s = std::sin(2.0);
  CHECK(rev.jac.block(0, 0)[0] == doctest::Approx(2.0 * c / s).epsilon(1e-14));
  CHECK(rev.jac.block(0, 1)[0] == doctest::Approx(1.0 * c / s).epsilon(1e-14));
  CHECK(rev.jac.block(1, 0)[0] == doctest::Approx(2.0 * (1.0 - c)).epsilon(1e-14));
  CHECK(rev.jac.block(1, 1)[0] == doctest::Approx(1.0 * (1.0 - c)).epsilon(1e-14));

  AccumulateResult fwd = accumulate_jacobian(p, x, {2, 3});
  CHECK(max_rel_err(fwd.jac, rev.jac) < 1e-15);
  CHECK(fwd.performed_mults == 8);
  CHECK(rev.performed_mults == 6);
}

TEST_CASE("activation of a matrix-vector product matches the closed form") {
  Program p;
  p.inputs = {{"W", {5, 3}}, {"x", {3, 1}}};
  p.ops.push_back({OpKind::matvec, {0, 1}});
  p.ops.push_back({OpKind::tanh_op, {2}});
  p.outputs = {3};
  std::vector<MatD> in = random_inputs(p, 44);
  AccumulateResult acc = accumulate_jacobian(p, in, trace(p).intermediates());

  // rows scale by 1 - tanh(a_i)^2
  const MatD& w = in[0];
  const MatD& xv = in[1];
  for (int i = 0; i < 5; ++i) {
    double a = 0.0;
    for (int j = 0; j < 3; ++j) a += w.at(i * 3 + j) * xv.at(j);
    double gain = 1.0 - std::tanh(a) * std::tanh(a);
    for (int k = 0; k < 3; ++k)
      CHECK(acc.jac.block(0, 1)[static_cast<std::size_t>(i * 3 + k)] ==
            doctest::Approx(gain * w.at(i * 3 + k)).epsilon(1e-12));
  }
  JacobianBlocks ref = reference_jacobian(p, in, RefMethod::dual);
  CHECK(max_rel_err(acc.jac, ref) < 1e-12);
}

TEST_CASE("linear program agrees across both reference methods") {
  Program p;
  p.inputs = {{"x", {1, 1}}};
  ElementalOp sc{OpKind::scale_const, {0}};
  sc.c = 3.0;
  p.ops.push_back(sc);
  p.outputs = {1};
  std::vector<MatD> x = scalar_inputs({0.7});
  JacobianBlocks dual = reference_jacobian(p, x, RefMethod::dual);
  JacobianBlocks fd = reference_jacobian(p, x, RefMethod::fd);
  CHECK(dual.block(0, 0)[0] == 3.0);
  CHECK(fd.block(0, 0)[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("finite differences cross-check the dual oracle") {
  for (int rep = 0; rep < 50; ++rep) {
    RandProgConfig rc;
    rc.seed = 7000 + static_cast<std::uint64_t>(rep);
    rc.n_in = 1 + rep % 3;
    rc.n_out = 1 + rep % 2;
    rc.n_intermediates = 3 + rep % 10;
    Program p = random_program(rc);
    std::vector<MatD> x = random_inputs(p, rc.seed ^ 0xfeed, 0.8);
    JacobianBlocks dual = reference_jacobian(p, x, RefMethod::dual);
    JacobianBlocks fd = reference_jacobian(p, x, RefMethod::fd);
    CHECK(max_rel_err(fd, dual) < 1e-5);
  }
}

TEST_CASE("per-kind local partials agree with finite differences") {
  struct Case {
    Program p;
  };
  std::vector<Program> programs;
  auto push_unary = [&](OpKind k, double c = 0.0, Shape s = {3, 1}) {
    Program p;
    p.inputs = {{"x", s}};
    ElementalOp op{k, {0}};
    op.c = c;
    p.ops.push_back(op);
    p.outputs = {1};
    programs.push_back(p);
  };
  push_unary(OpKind::neg);
  push_unary(OpKind::sin_op);
  push_unary(OpKind::cos_op);
  push_unary(OpKind::tanh_op);
  push_unary(OpKind::arctan);
  push_unary(OpKind::exp_op);
  push_unary(OpKind::normcdf);
  push_unary(OpKind::log_guard);
  push_unary(OpKind::sqrt_guard);
  push_unary(OpKind::abs_op);
  push_unary(OpKind::pow_const, 3.0);
  push_unary(OpKind::scale_const, -1.7);
  push_unary(OpKind::add_const, 2.5, {2, 2});
  auto push_binary = [&](OpKind k, Shape a, Shape b) {
    Program p;
    p.inputs = {{"a", a}, {"b", b}};
    p.ops.push_back({k, {0, 1}});
    p.outputs = {2};
    programs.push_back(p);
  };
  for (OpKind k : {OpKind::add, OpKind::sub, OpKind::mul, OpKind::div_guard}) {
    push_binary(k, {3, 1}, {3, 1});
    push_binary(k, {1, 1}, {3, 1});
    push_binary(k, {2, 2}, {1, 1});
  }
  push_binary(OpKind::arctan2, {1, 1}, {1, 1});
  push_binary(OpKind::matvec, {4, 3}, {3, 1});
  push_binary(OpKind::matmul, {2, 3}, {3, 2});
  push_binary(OpKind::dot, {4, 1}, {4, 1});
  push_unary(OpKind::sum_reduce, 0.0, {2, 3});
  push_unary(OpKind::transpose, 0.0, {2, 3});
  {
    Program p;
    p.inputs = {{"x", {5, 1}}};
    ElementalOp op{OpKind::slice, {0}};
    op.r0 = 1;
    op.c0 = 0;
    op.rows = 3;
    op.cols = 1;
    p.ops.push_back(op);
    p.outputs = {1};
    programs.push_back(p);
  }
  push_binary(OpKind::concat, {2, 1}, {3, 1});
  {
    Program p;  // duplicate operand: both partials merge onto one edge
    p.inputs = {{"x", {3, 1}}};
    p.ops.push_back({OpKind::mul, {0, 0}});
    p.outputs = {1};
    programs.push_back(p);
  }

  for (std::size_t idx = 0; idx < programs.size(); ++idx) {
    const Program& p = programs[idx];
    std::vector<MatD> x = random_inputs(p, 100 + idx, 0.9);
    EliminationOrder order = trace(p).intermediates();
    AccumulateResult acc = accumulate_jacobian(p, x, order);
    JacobianBlocks fd = reference_jacobian(p, x, RefMethod::fd);
    CAPTURE(idx);
    CHECK(max_rel_err(acc.jac, fd) < 1e-6);
    JacobianBlocks dual = reference_jacobian(p, x, RefMethod::dual);
    CHECK(max_rel_err(acc.jac, dual) < 1e-12);
  }
}

TEST_CASE("order invariance on random programs") {
  std::mt19937_64 rng(5150);
  for (int rep = 0; rep < 25; ++rep) {
    RandProgConfig rc;
    rc.seed = 1234 + static_cast<std::uint64_t>(rep);
    rc.n_in = 1 + rep % 3;
    rc.n_out = 1 + rep % 3;
    rc.n_intermediates = 4 + rep % 12;
    Program p = random_program(rc);
    CompGraph g = trace(p);
    std::vector<MatD> x = random_inputs(p, rc.seed ^ 1, 1.1);

    EliminationOrder order = g.intermediates();
    AccumulateResult base = accumulate_jacobian(p, x, order);
    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(rng_int(rng, i + 1))]);
      AccumulateResult other = accumulate_jacobian(p, x, order);
      CHECK(max_rel_err(other.jac, base.jac) < 1e-10);
    }
    JacobianBlocks ref = reference_jacobian(p, x, RefMethod::dual);
    CHECK(max_rel_err(base.jac, ref) < 1e-10);
  }
}

TEST_CASE("sparse and dense kernels produce identical Jacobians") {
  for (int rep = 0; rep < 12; ++rep) {
    RandProgConfig rc;
    rc.seed = 31000 + static_cast<std::uint64_t>(rep);
    rc.n_in = 2;
    rc.n_out = 2;
    rc.n_intermediates = 5 + rep;
    Program p = random_program(rc);
    std::vector<MatD> x = random_inputs(p, rc.seed ^ 3);
    NumericGraph ng = build_numeric_graph(p, x);
    NumericGraph dense = densified(ng);
    EliminationOrder order = ng.graph.intermediates();
    AccumulateResult sparse_run = accumulate_jacobian_graph(ng, order);
    AccumulateResult dense_run = accumulate_jacobian_graph(dense, order);
    REQUIRE(sparse_run.jac.blocks.size() == dense_run.jac.blocks.size());
    for (std::size_t q = 0; q < sparse_run.jac.blocks.size(); ++q)
      CHECK(sparse_run.jac.blocks[q] == dense_run.jac.blocks[q]);
  }
}

TEST_CASE("executed kernel work equals the priced cost") {
  std::mt19937_64 rng(808);
  for (int rep = 0; rep < 20; ++rep) {
    RandProgConfig rc;
    rc.seed = 60000 + static_cast<std::uint64_t>(rep);
    rc.n_in = 1 + rep % 4;
    rc.n_out = 1 + rep % 3;
    rc.n_intermediates = 3 + rep;
    Program p = random_program(rc);
    CompGraph g = trace(p);
    EliminationOrder order = g.intermediates();
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng_int(rng, i + 1))]);
    CostReport priced = order_cost(g, order);
    AccumulateResult run = accumulate_jacobian(p, random_inputs(p, rc.seed ^ 9), order);
    CHECK(run.performed_mults == priced.total_mults);
  }
}

TEST_CASE("task Jacobians agree with the dual oracle at their probe points") {
  for (const std::string& name : task_names()) {
    Program p = build_task(name);
    std::vector<MatD> x = inputs_from_flat(p, task_probe_point(name));
    CompGraph g = trace(p);
    AccumulateResult acc =
        accumulate_jacobian(p, x, baseline_order(g, Strategy::min_markowitz));
    JacobianBlocks ref = reference_jacobian(p, x, RefMethod::dual);
    CAPTURE(name);
    CHECK(max_rel_err(acc.jac, ref) < 1e-8);
  }
}

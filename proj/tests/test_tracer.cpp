#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "xce/elimination.hpp"
#include "xce/numeric.hpp"
#include "xce/randprog.hpp"
#include "xce/tasks.hpp"

using namespace xce;

TEST_CASE("worked example trace") {
  CompGraph g = testutil::two_intermediate_graph();
  CHECK(g.n_inputs() == 2);
  CHECK(g.n_intermediates() == 2);
  CHECK(g.n_outputs() == 2);
  CHECK(g.n_edges() == 6);
  for (const auto& [key, spec] : g.edges()) {
    CHECK(spec.code == 1);
    CHECK(spec.in == Shape{1, 1});
  }
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(2, 3));
  CHECK(g.has_edge(2, 5));
  CHECK(g.has_edge(3, 4));
  CHECK(g.has_edge(3, 5));
}

TEST_CASE("passthrough outputs become copy vertices") {
  Program p;
  p.inputs = {{"x", {2, 1}}};
  p.outputs = {0};
  CompGraph g = trace(p);
  CHECK(g.n_intermediates() == 0);
  CHECK(g.n_outputs() == 1);
  CHECK(g.is_bipartite());
  CHECK(g.edge(0, 1).code == -1);
}

TEST_CASE("matrix-vector chain carries the expected sparsity codes") {
  // y = tanh(W x)
  Program p;
  p.inputs = {{"W", {8, 4}}, {"x", {4, 1}}};
  p.ops.push_back({OpKind::matvec, {0, 1}});
  p.ops.push_back({OpKind::tanh_op, {2}});
  p.outputs = {3};
  CompGraph g = trace(p);
  REQUIRE(g.n_intermediates() == 1);
  CHECK(g.edge(0, 2).code == -2);  // x_l against the weight rows
  CHECK(g.edge(1, 2).code == 1);   // the dense weight block
  CHECK(g.edge(2, 3).code == 8);   // elementwise activation
  auto [m, a] = eliminate_vertex(g, 2);
  (void)a;
  CHECK(m == 2 * 8 * 4);  // elementwise against both operands, not matrix products
}

TEST_CASE("task shapes and cardinalities") {
  struct Want {
    const char* name;
    int n_in, n_out;
  };
  const Want wants[] = {
      {"roeflux_1d", 6, 3},        {"roeflux_3d", 6, 3},  {"robotarm_6dof", 6, 6},
      {"humanheartdipole", 8, 8},  {"propanecombustion", 11, 11},
      {"blackscholes", 5, 1},      {"mlp2", 8, 1},
  };
  for (const auto& w : wants) {
    Program p = build_task(w.name);
    validate(p);
    CHECK(static_cast<int>(p.inputs.size()) == w.n_in);
    CHECK(static_cast<int>(p.outputs.size()) == w.n_out);
    CompGraph g = trace(p);
    CHECK(g.n_inputs() == w.n_in);
    CHECK(g.n_outputs() == w.n_out);
    CHECK(g.n_intermediates() > 0);
    // the probe point evaluates to something finite
    std::vector<MatD> x = inputs_from_flat(p, task_probe_point(w.name));
    for (const MatD& out : evaluate_primal(p, x))
      for (double v : out.a) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(build_task("nope"), Error);
}

TEST_CASE("program text round trip") {
  for (const std::string& name : task_names()) {
    Program p = build_task(name);
    std::ostringstream first;
    save_program(p, first);
    std::istringstream is(first.str());
    Program back = load_program(is);
    std::ostringstream second;
    save_program(back, second);
    CHECK(first.str() == second.str());
  }
}

TEST_CASE("random programs are deterministic, sized, and alive") {
  RandProgConfig rc;
  rc.seed = 0;
  rc.n_in = 2;
  rc.n_out = 2;
  rc.n_intermediates = 5;
  Program a = random_program(rc);
  Program b = random_program(rc);
  std::ostringstream sa, sb;
  save_program(a, sa);
  save_program(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(trace(a).n_intermediates() == 5);

  CHECK_THROWS_AS(random_program({0, 2, 2, 0}), Error);

  std::mt19937_64 rng(123);
  for (int rep = 0; rep < 60; ++rep) {
    RandProgConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(rep) * 7919 + 13;
    cfg.n_in = 1 + rng_int(rng, 4);
    cfg.n_out = 1 + rng_int(rng, 4);
    cfg.n_intermediates = 1 + rng_int(rng, 24);
    Program p = random_program(cfg);
    CompGraph g = trace(p);
    CHECK(g.n_intermediates() == cfg.n_intermediates);
    // no dead intermediates: every intermediate has a successor
    for (VertexId v : g.intermediates()) CHECK(!g.succs(v).empty());
  }
}

TEST_CASE("random program primals stay finite across many seeds") {
  for (int seed = 0; seed < 1000; ++seed) {
    RandProgConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.n_in = 2 + seed % 3;
    cfg.n_out = 1 + seed % 2;
    cfg.n_intermediates = 3 + seed % 14;
    Program p = random_program(cfg);
    std::vector<MatD> x;  // the standard all-ones probe
    for (const auto& [name, s] : p.inputs) {
      MatD m(s.rows, s.cols);
      for (double& v : m.a) v = 1.0;
      x.push_back(std::move(m));
    }
    for (const MatD& out : evaluate_primal(p, x))
      for (double v : out.a) REQUIRE(std::isfinite(v));
  }
}

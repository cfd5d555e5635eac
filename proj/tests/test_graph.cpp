#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "xce/graph.hpp"

using namespace xce;

namespace {

JacobianSpec scalar_dense() { return {1, {1, 1}, {1, 1}}; }

CompGraph random_valid_graph(std::mt19937_64& rng) {
  int n_in = 1 + rng_int(rng, 3);
  int n_mid = 1 + rng_int(rng, 5);
  int n_out = 1 + rng_int(rng, 3);
  CompGraph g(n_in, n_mid, n_out);
  static const int codes[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                              -2, -3, -4, -5, -6, -7, -8, -9, -10, -1};
  for (VertexId dst = n_in; dst < g.n_vertices(); ++dst) {
    int tries = 1 + rng_int(rng, 3);
    for (int e = 0; e < tries; ++e) {
      VertexId src = rng_int(rng, std::min<int>(dst, n_in + n_mid));
      if (g.is_output(src) || g.has_edge(src, dst) || src >= dst) continue;
      g.add_edge(src, dst, {codes[rng_int(rng, 20)], {1, 1}, {1, 1}});
    }
  }
  return g;
}

}  // namespace

TEST_CASE("add_edge enforces endpoint and shape rules") {
  CompGraph g(2, 2, 2);
  g.add_edge(0, 2, scalar_dense());
  CHECK(g.n_edges() == 1);
  CHECK_THROWS_AS(g.add_edge(0, 2, scalar_dense()), Error);       // duplicate
  CHECK_THROWS_AS(g.add_edge(2, 1, scalar_dense()), Error);       // into input
  CHECK_THROWS_AS(g.add_edge(4, 5, scalar_dense()), Error);       // out of output
  CHECK_THROWS_AS(g.add_edge(3, 3, scalar_dense()), Error);       // self
  g.set_vertex_shape(3, {3, 1});
  CHECK_THROWS_AS(g.add_edge(1, 3, {1, {2, 1}, {3, 1}}), Error);  // src shape
  g.add_edge(1, 3, {1, {1, 1}, {3, 1}});
  // delta-tied sizes must agree on stored edges
  CHECK_THROWS_AS(g.add_edge(0, 3, {6, {1, 1}, {3, 1}}), Error);
}

TEST_CASE("neighbors on the worked example") {
  CompGraph g = testutil::two_intermediate_graph();
  auto [p1, s1] = g.neighbors(2);
  CHECK(p1 == std::set<VertexId>{0, 1});
  CHECK(s1 == std::set<VertexId>{3, 5});
  auto [p2, s2] = g.neighbors(3);
  CHECK(p2 == std::set<VertexId>{2});
  CHECK(s2 == std::set<VertexId>{4, 5});
  auto [p0, s0] = g.neighbors(0);
  CHECK(p0.empty());
  CHECK(s0 == std::set<VertexId>{2});
  g.mark_eliminated(2);
  CHECK_THROWS_AS(g.neighbors(2), Error);
}

TEST_CASE("bipartite detection") {
  CompGraph g = testutil::two_intermediate_graph();
  CHECK_FALSE(g.is_bipartite());
  CompGraph empty(3, 0, 2);
  CHECK(empty.is_bipartite());
}

TEST_CASE("tensor layout and round trip") {
  CompGraph g = testutil::two_intermediate_graph();
  std::vector<int> t = g.to_tensor();
  CHECK(t.size() == static_cast<std::size_t>(4 * 4 * 5));
  int nonzero = 0;
  for (std::size_t q = 0; q < t.size(); q += 5)
    if (t[q] != 0) ++nonzero;
  CHECK(nonzero == 6);
  // edge (0,2) sits at row 0, column 0
  CHECK(t[0] == 1);
  CHECK(t[1] == 1);

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    CompGraph r = random_valid_graph(rng);
    std::vector<int> t1 = r.to_tensor();
    CompGraph back = from_tensor(r.n_inputs(), r.n_intermediates(), r.n_outputs(), t1);
    CHECK(back.to_tensor() == t1);
  }
}

TEST_CASE("graph file round trip is bit exact") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    CompGraph g = random_valid_graph(rng);
    std::ostringstream first;
    save_graph(g, first);
    std::istringstream in(first.str());
    CompGraph back = load_graph(in);
    std::ostringstream second;
    save_graph(back, second);
    CHECK(first.str() == second.str());
  }
}

TEST_CASE("order files are 1-based over intermediates") {
  CompGraph g = testutil::two_intermediate_graph();
  std::ostringstream os;
  save_order(g, {3, 2}, os);
  CHECK(os.str() == "2 1\n");
  std::istringstream is("2 1");
  EliminationOrder back = load_order(g, is);
  CHECK(back == EliminationOrder{3, 2});
  std::istringstream bad("3");
  CHECK_THROWS_AS(load_order(g, bad), Error);
}

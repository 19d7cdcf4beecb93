#include <doctest.h>

#include <random>

#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/tree.hpp"
#include "oracles.hpp"

using namespace dendrite;

namespace {

// Brute-force median on a grid of points: the branch point minimizes the sum
// of distances to the three points.
PointRef grid_median(const Tree& t, const PointRef& a, const PointRef& b, const PointRef& x, double step) {
  PointRef best = PointRef::at(0);
  double best_sum = 1e300;
  auto consider = [&](const PointRef& p) {
    const double s = distance(t, p, a) + distance(t, p, b) + distance(t, p, x);
    if (s < best_sum - 1e-12) {
      best_sum = s;
      best = p;
    }
  };
  for (VertexId v = 0; v < t.vertex_count(); ++v) consider(PointRef::at(v));
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    for (double s = step; s < t.edge(e).length; s += step) consider(t.point(e, s));
  }
  return best;
}

}  // namespace

TEST_CASE("Y-tree metric examples") {
  const Tree t = oracle::y_tree();
  const auto v = [&](const char* n) { return PointRef::at(t.vertex(n)); };
  CHECK(t.vertex_count() == 4);
  CHECK(distance(t, v("v2"), v("v3")) == 5.0);
  CHECK(branch_point(t, v("v0"), v("v2"), v("v3")) == v("v1"));
  CHECK(meet(t, v("v2"), v("v3")) == v("v1"));
  CHECK(diameter(t) == 5.0);
  CHECK(on_arc(t, v("v2"), v("v3"), v("v1")));
  CHECK_FALSE(on_arc(t, v("v2"), v("v3"), v("v0")));
}

TEST_CASE("distances agree with Dijkstra on random trees") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const Tree t = random_tree(2 + trial, rng);
    const auto d = oracle::all_pairs(oracle::graph_of(t));
    double diam = 0.0;
    for (VertexId a = 0; a < t.vertex_count(); ++a) {
      for (VertexId b = 0; b < t.vertex_count(); ++b) {
        CHECK(distance(t, PointRef::at(a), PointRef::at(b)) == doctest::Approx(d[a][b]).epsilon(1e-12));
        diam = std::max(diam, d[a][b]);
      }
    }
    CHECK(diameter(t) == doctest::Approx(diam).epsilon(1e-12));
  }
}

TEST_CASE("branch point satisfies the Gromov identity and matches a grid median") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = random_tree(3 + trial % 8, rng);
    std::uniform_int_distribution<EdgeId> pe(0, t.edge_count() - 1);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    auto rp = [&] {
      const EdgeId e = pe(rng);
      return t.point(e, u(rng) * t.edge(e).length);
    };
    const PointRef a = rp(), b = rp(), x = rp();
    const PointRef c = branch_point(t, a, b, x);
    const double dab = distance(t, a, b), dax = distance(t, a, x), dbx = distance(t, b, x);
    CHECK(distance(t, a, c) == doctest::Approx(oracle::gromov(dab, dax, dbx)).epsilon(1e-12));
    CHECK(distance(t, b, c) == doctest::Approx(oracle::gromov(dab, dbx, dax)).epsilon(1e-12));
    const PointRef m = grid_median(t, a, b, x, 0.01);
    CHECK(distance(t, c, m) <= 0.011);
    // symmetric in its arguments
    CHECK(distance(t, c, branch_point(t, x, a, b)) <= 1e-12);
  }
}

TEST_CASE("meet is the branch point with the root") {
  std::mt19937_64 rng(3);
  const Tree t = random_tree(15, rng);
  for (VertexId a = 0; a < t.vertex_count(); ++a) {
    for (VertexId b = 0; b < t.vertex_count(); ++b) {
      const PointRef m = meet(t, PointRef::at(a), PointRef::at(b));
      CHECK(m == branch_point(t, PointRef::at(t.root()), PointRef::at(a), PointRef::at(b)));
    }
  }
}

TEST_CASE("builder rejects malformed trees") {
  {
    Tree::Builder b;
    b.add_vertex("a");
    b.add_vertex("b");
    b.add_vertex("c");
    b.add_edge("a", "b", 1.0);
    b.add_edge("b", "a", 1.0);
    b.set_root("a");
    CHECK_THROWS_AS(std::move(b).build(), InvalidArgument);
  }
  {
    Tree::Builder b;
    b.add_vertex("a");
    CHECK_THROWS_AS(b.add_vertex("a"), InvalidArgument);
    b.add_vertex("b");
    CHECK_THROWS_AS(b.add_edge("a", "b", -1.0), InvalidArgument);
    CHECK_THROWS_AS(b.add_edge("a", "b", 0.0), InvalidArgument);
  }
  {
    Tree::Builder b;
    b.add_vertex("a");
    b.add_vertex("b", LeafKind::open);
    b.add_vertex("c");
    b.add_edge("a", "b", 1.0);
    b.add_edge("b", "c", 1.0);
    b.set_root("a");
    CHECK_THROWS_AS(std::move(b).build(), InvalidArgument);  // open vertex of degree 2
  }
}

TEST_CASE("points fold to vertices at edge ends and reject out-of-range offsets") {
  const Tree t = oracle::y_tree();
  const EdgeId e = 1;  // v1 - v2, length 2
  CHECK(t.canonical(PointRef::on_edge(e, 0.0)) == PointRef::at(t.edge(e).u));
  CHECK(t.canonical(PointRef::on_edge(e, 2.0)) == PointRef::at(t.edge(e).v));
  CHECK_THROWS_AS(t.point(e, 2.5), InvalidArgument);
  CHECK_THROWS_AS(t.point(e, -0.1), InvalidArgument);
  CHECK(t.depth(t.point(e, 0.5)) == doctest::Approx(1.5));
}

TEST_CASE("refinement counts, isometry and point correspondence") {
  const Tree t = oracle::y_tree();
  const Refinement r = subdivide(t, 0.25);
  CHECK(r.tree.edge_count() == 24);
  CHECK(diameter(r.tree) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK_THROWS_AS(subdivide(t, 0.0), InvalidArgument);

  const PointRef inserted[] = {t.point(2, 0.7)};
  const Refinement r2 = refine(t, 0.0, inserted);
  CHECK(r2.tree.vertex_count() == 5);
  CHECK(r2.map(inserted[0]).is_vertex());

  std::mt19937_64 rng(4);
  const Tree rt = random_tree(12, rng);
  const Refinement rr = subdivide(rt, 0.13);
  std::uniform_int_distribution<EdgeId> pe(0, rt.edge_count() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const EdgeId e1 = pe(rng), e2 = pe(rng);
    const PointRef p = rt.point(e1, u(rng) * rt.edge(e1).length);
    const PointRef q = rt.point(e2, u(rng) * rt.edge(e2).length);
    CHECK(distance(rr.tree, rr.map(p), rr.map(q)) == doctest::Approx(distance(rt, p, q)).epsilon(1e-12));
    const PointRef back = rr.to_original(rt, rr.map(p));
    CHECK(distance(rt, back, p) <= 1e-12);
  }
}

TEST_CASE("potential rescales lengths") {
  const Tree t = oracle::y_tree();
  const double phi[] = {0.0, 0.5, -0.5};
  const Tree s = apply_potential(t, phi);
  CHECK(s.edge(0).length == doctest::Approx(1.0));
  CHECK(s.edge(1).length == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(s.edge(2).length == doctest::Approx(3.0 * std::exp(1.0)));
}

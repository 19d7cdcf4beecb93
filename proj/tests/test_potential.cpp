#include <doctest.h>

#include <cmath>
#include <random>

#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/io.hpp"
#include "dendrite/potential.hpp"
#include "oracles.hpp"

using namespace dendrite;

namespace {

struct YFixture {
  Tree t = oracle::y_tree();
  PointRef v(const char* n) const { return PointRef::at(t.vertex(n)); }
};

// Distance from the point at offset s on edge e to every vertex, from
// Dijkstra distances of the endpoints.
double point_to_vertex(const oracle::Graph& g, const std::vector<std::vector<double>>& d, std::size_t e, double s,
                       std::size_t w) {
  const auto u = static_cast<std::size_t>(g.edges[e][0]);
  const auto v = static_cast<std::size_t>(g.edges[e][1]);
  return std::min(s + d[u][w], g.edges[e][2] - s + d[v][w]);
}

}  // namespace

TEST_CASE("Y tree closed forms") {
  const YFixture y;
  const PointRef a[] = {y.v("v2")};
  const PointRef b[] = {y.v("v3")};
  const SpeedMeasure nu = SpeedMeasure::length_measure(y.t);
  CHECK(capacity(y.t, nu, a, b) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(green_two_point(y.t, y.v("v2"), y.v("v3"), y.v("v0")) == 6.0);
  CHECK(hitting_probability(y.t, y.v("v0"), y.v("v2"), y.v("v3")) == doctest::Approx(0.6).epsilon(1e-15));

  const PointRef star[] = {y.v("v0"), y.v("v2"), y.v("v3")};
  const auto p = star_exit_distribution(y.t, y.t.vertex("v1"), star);
  CHECK(p[0] == doctest::Approx(6.0 / 11.0));
  CHECK(p[1] == doctest::Approx(3.0 / 11.0));
  CHECK(p[2] == doctest::Approx(2.0 / 11.0));

  SpeedMeasure atoms = SpeedMeasure::zero(y.t);
  atoms.vertex_atom.assign(4, 1.0);
  CHECK(expected_occupation(y.t, atoms, y.v("v2"), y.v("v3"), PiecewiseLinearFn::constant(y.t, 1.0)) ==
        doctest::Approx(22.0).epsilon(1e-14));
}

TEST_CASE("two-point capacity is 1/(2 r)") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = random_tree(2 + trial, rng);
    const auto d = oracle::all_pairs(oracle::graph_of(t));
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    std::uniform_int_distribution<VertexId> pv(0, t.vertex_count() - 1);
    VertexId a = pv(rng), b = pv(rng);
    if (a == b) b = (a + 1) % t.vertex_count();
    const PointRef za[] = {PointRef::at(a)};
    const PointRef ob[] = {PointRef::at(b)};
    CHECK(capacity(t, nu, za, ob) == doctest::Approx(1.0 / (2.0 * d[a][b])).epsilon(1e-12));
  }
}

TEST_CASE("harmonic minimizer with alpha > 0 matches a dense solve") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const Tree t = random_tree(4 + trial, rng);
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    const VertexId a = 0, b = t.vertex_count() - 1;
    const PointRef za[] = {PointRef::at(a)};
    const PointRef ob[] = {PointRef::at(b)};
    const double alpha = 0.7;
    const HarmonicSolution sol = harmonic(t, nu, za, ob, alpha, 0.2);
    const Tree& mesh = sol.mesh.tree;
    const auto g = oracle::graph_of(mesh);
    auto q = oracle::laplacian(g);
    std::vector<double> mass(g.n, 0.0);
    for (const auto& e : g.edges) {
      mass[static_cast<std::size_t>(e[0])] += 0.5 * e[2];
      mass[static_cast<std::size_t>(e[1])] += 0.5 * e[2];
    }
    for (std::size_t i = 0; i < g.n; ++i) q[i][i] += alpha * mass[i];
    std::vector<int> fixed(g.n, 0);
    std::vector<double> value(g.n, 0.0);
    fixed[sol.mesh.map(za[0]).vertex()] = 1;
    fixed[sol.mesh.map(ob[0]).vertex()] = 1;
    value[sol.mesh.map(ob[0]).vertex()] = 1.0;
    const auto u = oracle::dirichlet(q, std::vector<double>(g.n, 0.0), fixed, value);
    double e = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
      CHECK(sol.values[i] == doctest::Approx(u[i]).epsilon(1e-9));
      for (std::size_t j = 0; j < g.n; ++j) e += u[i] * q[i][j] * u[j];
    }
    CHECK(sol.energy_value == doctest::Approx(e).epsilon(1e-9));
    CHECK(capacity(t, nu, za, ob, alpha, 0.2) == doctest::Approx(e).epsilon(1e-9));
  }
}

TEST_CASE("Green kernel agrees with the general solver and is symmetric") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const Tree t = random_tree(3 + trial, rng);
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    const PointRef x = PointRef::at(1), b = PointRef::at(t.vertex_count() - 1);
    const PointRef kill[] = {b};
    const PointMass kappa[] = {{x, 1.0}};
    const MeshFunction g = green_general(t, nu, kill, kappa);
    for (VertexId y = 0; y < t.vertex_count(); ++y) {
      const PointRef py = PointRef::at(y);
      CHECK(g.at(py) == doctest::Approx(green_two_point(t, x, b, py)).epsilon(1e-9));
      if (y != b.vertex()) CHECK(green_two_point(t, x, b, py) == green_two_point(t, py, b, x));
    }
  }
}

TEST_CASE("hitting probability equals the harmonic measure") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = random_tree(3 + trial, rng);
    const auto gr = oracle::graph_of(t);
    const auto q = oracle::laplacian(gr);
    std::uniform_int_distribution<VertexId> pv(0, t.vertex_count() - 1);
    VertexId a = pv(rng), b = pv(rng);
    if (a == b) b = (a + 1) % t.vertex_count();
    std::vector<int> fixed(gr.n, 0);
    std::vector<double> value(gr.n, 0.0);
    fixed[a] = fixed[b] = 1;
    value[a] = 1.0;
    const auto u = oracle::dirichlet(q, std::vector<double>(gr.n, 0.0), fixed, value);
    for (VertexId x = 0; x < t.vertex_count(); ++x) {
      CHECK(hitting_probability(t, PointRef::at(x), PointRef::at(a), PointRef::at(b)) ==
            doctest::Approx(u[x]).epsilon(1e-10));
    }
  }
  const Tree t = oracle::y_tree();
  CHECK_THROWS_AS(hitting_probability(t, PointRef::at(0), PointRef::at(2), PointRef::at(2)), InvalidArgument);
}

TEST_CASE("expected occupation against a Riemann sum") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Tree t = random_tree(3 + trial, rng);
    SpeedMeasure nu = SpeedMeasure::length_measure(t);
    for (auto& dens : nu.edge_density) dens = 1.0 + u(rng) * 0.5;
    nu.vertex_atom[1] = 0.3;
    std::vector<double> fv(t.vertex_count());
    for (auto& x : fv) x = u(rng);
    const PiecewiseLinearFn f(fv);
    const auto g = oracle::graph_of(t);
    const auto d = oracle::all_pairs(g);
    const std::size_t x = 0, b = t.vertex_count() - 1;

    double expect = 0.0;
    for (std::size_t w = 0; w < g.n; ++w) expect += 2.0 * nu.vertex_atom[w] * oracle::gromov(d[w][b], d[x][b], d[x][w]) * fv[w];
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto eu = static_cast<std::size_t>(g.edges[e][0]);
      const auto ev = static_cast<std::size_t>(g.edges[e][1]);
      const double len = g.edges[e][2];
      expect += 2.0 * nu.edge_density[e] * oracle::riemann(len, 4000, [&](double s) {
        const double dyb = point_to_vertex(g, d, e, s, b);
        const double dxy = point_to_vertex(g, d, e, s, x);
        return oracle::gromov(dyb, d[x][b], dxy) * (fv[eu] + (fv[ev] - fv[eu]) * s / len);
      });
    }
    CHECK(expected_occupation(t, nu, PointRef::at(x), PointRef::at(b), f) == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("occupation rejects open leaves") {
  const TreeFile f = [] {
    Tree::Builder b;
    b.add_vertex("a");
    b.add_vertex("b", LeafKind::open);
    b.add_edge("a", "b", 1.0);
    b.set_root("a");
    Tree t = std::move(b).build();
    SpeedMeasure nu = SpeedMeasure::length_measure(t);
    return TreeFile{std::move(t), std::move(nu), std::nullopt};
  }();
  CHECK_THROWS_AS(expected_occupation(f.tree, f.measure, PointRef::at(0), PointRef::at(1),
                                      PiecewiseLinearFn::constant(f.tree, 1.0)),
                  InvalidArgument);
}

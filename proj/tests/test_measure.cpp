#include <doctest.h>

#include <random>
#include <sstream>

#include "dendrite/calculus.hpp"
#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/measure.hpp"
#include "oracles.hpp"

using namespace dendrite;

namespace {

SpeedMeasure random_measure(const Tree& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  SpeedMeasure nu = SpeedMeasure::zero(t);
  for (auto& d : nu.edge_density) d = u(rng);
  for (auto& a : nu.vertex_atom) a = u(rng) < 1.0 ? u(rng) : 0.0;
  return nu;
}

PiecewiseLinearFn random_fn(const Tree& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(t.vertex_count());
  for (auto& x : v) x = u(rng);
  return PiecewiseLinearFn(std::move(v));
}

}  // namespace

TEST_CASE("measure validation and totals") {
  const Tree t = oracle::y_tree();
  SpeedMeasure nu = SpeedMeasure::length_measure(t);
  CHECK(total_mass(nu, t) == 6.0);
  CHECK(nu.has_full_support());

  SpeedMeasure atoms = SpeedMeasure::zero(t);
  atoms.vertex_atom.assign(4, 1.0);
  CHECK_NOTHROW(atoms.validate(t));
  CHECK(total_mass(atoms, t) == 4.0);
  CHECK_FALSE(atoms.has_full_support());

  CHECK_THROWS_AS(SpeedMeasure::zero(t).validate(t), InvalidArgument);
  nu.edge_density[1] = -1.0;
  CHECK_THROWS_AS(nu.validate(t), InvalidArgument);
  nu.edge_density.pop_back();
  CHECK_THROWS_AS(nu.validate(t), InvalidArgument);
}

TEST_CASE("integration against a midpoint Riemann sum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = random_tree(2 + trial, rng);
    const SpeedMeasure nu = random_measure(t, rng);
    const PiecewiseLinearFn f = random_fn(t, rng);
    double expected = 0.0;
    for (VertexId v = 0; v < t.vertex_count(); ++v) expected += nu.vertex_atom[v] * f[v];
    for (EdgeId e = 0; e < t.edge_count(); ++e) {
      const Edge& ed = t.edge(e);
      const double fu = f[ed.u], fv = f[ed.v];
      expected += nu.edge_density[e] * oracle::riemann(ed.length, 2000, [&](double s) {
        return fu + (fv - fu) * s / ed.length;
      });
    }
    CHECK(integrate(nu, t, f) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("lumping conserves mass and refinement preserves integrals") {
  std::mt19937_64 rng(12);
  const Tree t = random_tree(10, rng);
  const SpeedMeasure nu = random_measure(t, rng);
  const LumpedMeasure m = lump(nu, t);
  CHECK(m.total() == doctest::Approx(total_mass(nu, t)).epsilon(1e-13));
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    double expect = nu.vertex_atom[v];
    for (const auto& inc : t.incident(v)) expect += 0.5 * nu.edge_density[inc.edge] * t.edge(inc.edge).length;
    CHECK(m.mass[v] == doctest::Approx(expect).epsilon(1e-14));
  }

  const Refinement r = subdivide(t, 0.1);
  const SpeedMeasure rn = refine_measure(r, nu);
  const PiecewiseLinearFn f = random_fn(t, rng);
  CHECK(integrate(rn, r.tree, transfer(t, r, f)) == doctest::Approx(integrate(nu, t, f)).epsilon(1e-12));
  CHECK(total_mass(scaled(nu, 3.0), t) == doctest::Approx(3.0 * total_mass(nu, t)));
}

TEST_CASE("gradients of distance functions are unit slopes") {
  const Tree t = oracle::y_tree();
  const auto v2 = PointRef::at(t.vertex("v2"));
  const auto v3 = PointRef::at(t.vertex("v3"));
  const auto g = gradient(t, distance_function(t, v2));
  CHECK(g.slope[0] == -1.0);  // v0 -> v1 approaches v2
  CHECK(g.slope[1] == -1.0);  // v1 -> v2
  CHECK(g.slope[2] == 1.0);   // v1 -> v3

  const auto f = branch_to_end_function(t, v2, v3);
  CHECK(f[t.vertex("v0")] == 3.0);
  CHECK(f[t.vertex("v1")] == 3.0);
  CHECK(f[t.vertex("v2")] == 5.0);
  CHECK(f[t.vertex("v3")] == 0.0);
}

TEST_CASE("fundamental theorem along arcs") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Tree t = random_tree(3 + trial % 12, rng);
    const PiecewiseLinearFn f = random_fn(t, rng);
    const EdgeGradient g = gradient(t, f);
    std::uniform_int_distribution<EdgeId> pe(0, t.edge_count() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const EdgeId ex = pe(rng), ey = pe(rng);
    const PointRef x = t.point(ex, u(rng) * t.edge(ex).length);
    const PointRef y = t.point(ey, u(rng) * t.edge(ey).length);
    CHECK(oriented_integral(t, g, x, y) == doctest::Approx(f.at(t, y) - f.at(t, x)).epsilon(1e-12));
  }
}

TEST_CASE("energy is half the sum of squared slopes times length") {
  std::mt19937_64 rng(14);
  const Tree t = random_tree(9, rng);
  const PiecewiseLinearFn f = random_fn(t, rng);
  const PiecewiseLinearFn h = random_fn(t, rng);
  double expect = 0.0;
  for (const Edge& e : t.edges()) expect += 0.5 * (f[e.v] - f[e.u]) * (h[e.v] - h[e.u]) / e.length;
  CHECK(energy(t, f, h) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(energy(t, f, h) == doctest::Approx(energy(t, h, f)).epsilon(1e-15));
  CHECK(energy(t, PiecewiseLinearFn::constant(t, 4.0), f) == 0.0);
}

TEST_CASE("CSV round trip and malformed CSV") {
  std::mt19937_64 rng(15);
  const Tree t = random_tree(7, rng);
  const PiecewiseLinearFn f = random_fn(t, rng);
  std::stringstream ss;
  write_csv(ss, t, f);
  const PiecewiseLinearFn g = read_csv(ss, t);
  for (VertexId v = 0; v < t.vertex_count(); ++v) CHECK(g[v] == f[v]);

  std::istringstream bad("vertex_id,value\nv0,abc\n");
  CHECK_THROWS_AS(read_csv(bad, t), ParseError);
  std::istringstream unknown("vertex_id,value\nzz,1\n");
  CHECK_THROWS_AS(read_csv(unknown, t), ParseError);
}

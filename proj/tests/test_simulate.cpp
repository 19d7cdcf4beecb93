#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/potential.hpp"
#include "dendrite/simulate.hpp"
#include "oracles.hpp"

using namespace dendrite;

namespace {

bool within(const Estimate& e, double exact, double sigmas = 4.0) {
  return std::abs(e.mean - exact) <= sigmas * e.std_error + 1e-12;
}

Tree three_point(LeafKind far) {
  Tree::Builder b;
  b.add_vertex("a");
  b.add_vertex("m");
  b.add_vertex("z", far);
  b.add_edge("a", "m", 1.0);
  b.add_edge("m", "z", 1.0);
  b.set_root("a");
  return std::move(b).build();
}

}  // namespace

TEST_CASE("SplitMix64 reference output") {
  SplitMix64 g(0);
  CHECK(g.next() == 0xe220a8397b1dcdafULL);
  CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
  SplitMix64 u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}

TEST_CASE("chain transition structure") {
  const Tree t = oracle::interval();
  const SpeedMeasure nu = SpeedMeasure::length_measure(t);
  const Chain c = build_chain(t, nu, 0.25);
  REQUIRE(c.size() == 5);
  for (VertexId v = 0; v < c.size(); ++v) {
    CHECK(c.rate[v] == doctest::Approx(16.0).epsilon(1e-13));  // 1/h^2
    const auto p = c.jump_probabilities(v);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    if (p.size() == 2) {
      CHECK(c.fair[v] == 1);
      CHECK(p[0] == 0.5);
    }
  }

  const Tree y = oracle::y_tree();
  SpeedMeasure atoms = SpeedMeasure::zero(y);
  atoms.vertex_atom.assign(4, 1.0);
  const Chain cy = build_chain(y, atoms, diameter(y));
  REQUIRE(cy.size() == 4);
  const VertexId v1 = cy.vertex_of(PointRef::at(y.vertex("v1")));
  std::vector<double> p(3, 0.0);
  const auto probs = cy.jump_probabilities(v1);
  for (std::size_t k = cy.offset[v1]; k < cy.offset[v1 + 1]; ++k) {
    const double len = distance(cy.mesh.tree, PointRef::at(v1), PointRef::at(cy.target[k]));
    CHECK(probs[k - cy.offset[v1]] == doctest::Approx((1.0 / len) / (1.0 + 0.5 + 1.0 / 3.0)));
  }
  CHECK(cy.rate[v1] == doctest::Approx(0.5 * (1.0 + 0.5 + 1.0 / 3.0)));

  CHECK_THROWS_AS(build_chain(y, atoms, 0.5), InvalidArgument);  // zero mass inside edges
  CHECK_THROWS_AS(build_chain(t, nu, 0.0), InvalidArgument);
}

TEST_CASE("exact chain functional equals the continuum value on the Y tree") {
  const Tree y = oracle::y_tree();
  SpeedMeasure atoms = SpeedMeasure::zero(y);
  atoms.vertex_atom.assign(4, 1.0);
  const Chain c = build_chain(y, atoms, diameter(y));
  const VertexId stop[] = {c.vertex_of(PointRef::at(y.vertex("v3")))};
  const auto u = chain_expected_functional(c, stop, std::vector<double>(4, 1.0));
  CHECK(u[c.vertex_of(PointRef::at(y.vertex("v2")))] == doctest::Approx(22.0).epsilon(1e-12));

  // same system by dense elimination
  const auto g = oracle::graph_of(c.mesh.tree);
  std::vector<int> fixed(4, 0);
  fixed[stop[0]] = 1;
  const auto ref = oracle::dirichlet(oracle::laplacian(g), c.mass, fixed, std::vector<double>(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("mean hitting time converges at second order on the interval") {
  // E^1 ∫_0^{τ_0} y ds = 2 ∫ y·y dy = 2/3
  const Tree t = oracle::interval();
  const SpeedMeasure nu = SpeedMeasure::length_measure(t);
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025}) {
    const Chain c = build_chain(t, nu, h);
    std::vector<double> f(c.size());
    for (VertexId v = 0; v < c.size(); ++v) f[v] = c.mesh.tree.depth(v);
    const VertexId stop[] = {c.vertex_of(PointRef::at(0))};
    const auto u = chain_expected_functional(c, stop, f);
    err.push_back(std::abs(u[c.vertex_of(PointRef::at(1))] - 2.0 / 3.0));
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("walks that start on the stop set finish immediately") {
  const Tree t = oracle::y_tree();
  WalkConfig cfg;
  cfg.mesh_h = 0.5;
  cfg.stop = {PointRef::at(2), PointRef::at(3)};
  const Chain c = build_chain(t, SpeedMeasure::length_measure(t), cfg.mesh_h);
  const WalkRecord r = run_single_walk(c, cfg, PointRef::at(3), 0);
  CHECK(r.exit == std::optional<std::size_t>(1));
  CHECK(r.elapsed == 0.0);
  CHECK(r.jumps == 0);
}

TEST_CASE("Monte Carlo hitting probabilities") {
  WalkConfig cfg;
  cfg.n_walks = 20000;
  cfg.seed = 5;
  cfg.clock = Clock::jump_count_only;

  const Tree i = oracle::interval();
  cfg.mesh_h = 0.05;
  const Estimate half = estimate_hitting_probability(i, SpeedMeasure::length_measure(i), cfg, i.point(0, 0.5),
                                                     PointRef::at(0), PointRef::at(1));
  CHECK(within(half, 0.5));

  const Tree y = oracle::y_tree();
  cfg.mesh_h = 0.1;
  const PointRef x = PointRef::at(y.vertex("v0"));
  const PointRef a = PointRef::at(y.vertex("v2"));
  const PointRef b = PointRef::at(y.vertex("v3"));
  const Estimate p = estimate_hitting_probability(y, SpeedMeasure::length_measure(y), cfg, x, a, b);
  CHECK(within(p, 0.6));
  CHECK(std::abs(p.mean - 0.6) <= 0.02);
}

TEST_CASE("Monte Carlo occupation of a piecewise-linear function") {
  // E^0 ∫_0^{τ_1} f ds = 2 ∫ (1-y) f(y) dy = 11/12 for f = 1 on [0,½], 2(1-y) after.
  Tree::Builder bld;
  bld.add_vertex("0");
  bld.add_vertex("h");
  bld.add_vertex("1");
  bld.add_edge("0", "h", 0.5);
  bld.add_edge("h", "1", 0.5);
  bld.set_root("0");
  const Tree t = std::move(bld).build();
  const SpeedMeasure nu = SpeedMeasure::length_measure(t);
  const PiecewiseLinearFn f(std::vector<double>{1.0, 1.0, 0.0});
  CHECK(expected_occupation(t, nu, PointRef::at(0), PointRef::at(2), f) == doctest::Approx(11.0 / 12.0).epsilon(1e-14));

  WalkConfig cfg;
  cfg.mesh_h = 0.05;
  cfg.n_walks = 8000;
  cfg.seed = 17;
  const Estimate e = estimate_occupation(t, nu, cfg, PointRef::at(0), PointRef::at(2), f);
  CHECK(within(e, 11.0 / 12.0, 4.5));
  const Estimate zero =
      estimate_occupation(t, nu, cfg, PointRef::at(0), PointRef::at(2), PiecewiseLinearFn::constant(t, 0.0));
  CHECK(zero.mean == 0.0);
  const Estimate time = estimate_hitting_time(t, nu, cfg, PointRef::at(0), PointRef::at(2));
  CHECK(within(time, 1.0, 4.5));  // 2 ∫ (1-y) dy
}

TEST_CASE("occupation times add up to the elapsed time") {
  const Tree y = oracle::y_tree();
  WalkConfig cfg;
  cfg.mesh_h = 0.25;
  cfg.stop = {PointRef::at(3)};
  cfg.track_occupation = true;
  const Chain c = build_chain(y, SpeedMeasure::length_measure(y), cfg.mesh_h);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const WalkRecord r = run_single_walk(c, cfg, PointRef::at(0), i);
    const double total = std::accumulate(r.occupation.begin(), r.occupation.end(), 0.0);
    CHECK(total == doctest::Approx(r.elapsed).epsilon(1e-12));
  }
}

TEST_CASE("killing at open leaves and censoring") {
  const Tree t = three_point(LeafKind::open);
  const SpeedMeasure nu = SpeedMeasure::length_measure(t);
  WalkConfig cfg;
  cfg.mesh_h = 0.1;
  cfg.n_walks = 4000;
  cfg.stop = {PointRef::at(0)};
  const Chain c = build_chain(t, nu, cfg.mesh_h);
  const WalkAggregate agg = run_walks(c, cfg, PointRef::at(1));
  const double frac = static_cast<double>(agg.n_killed) / 4000.0;
  CHECK(std::abs(frac - 0.5) <= 4.0 * std::sqrt(0.25 / 4000.0));
  CHECK(agg.n_killed + agg.exit_counts[0] == 4000);

  const Tree closed = three_point(LeafKind::closed);
  WalkConfig tiny;
  tiny.mesh_h = 0.01;
  tiny.n_walks = 100;
  tiny.max_jumps = 5;
  CHECK_THROWS_AS(estimate_hitting_time(closed, SpeedMeasure::length_measure(closed), tiny, PointRef::at(1),
                                        PointRef::at(0)),
                  NumericalError);
  tiny.max_censored_fraction = 1.5;
  CHECK_THROWS_AS(tiny.validate(), InvalidArgument);
}

TEST_CASE("time horizon truncates walks") {
  const Tree t = oracle::interval();
  WalkConfig cfg;
  cfg.mesh_h = 0.1;
  cfg.n_walks = 300;
  cfg.horizon = 0.05;
  const Chain c = build_chain(t, SpeedMeasure::length_measure(t), cfg.mesh_h);
  const auto recs = run_walk_records(c, cfg, PointRef::at(0));
  for (const auto& r : recs) CHECK(r.elapsed == doctest::Approx(0.05));
  CHECK(run_walks(c, cfg, PointRef::at(0)).n_horizon == 300);
}

TEST_CASE("mean hitting time bound") {
  const Tree y = oracle::y_tree();
  SpeedMeasure atoms = SpeedMeasure::zero(y);
  atoms.vertex_atom.assign(4, 1.0);
  const auto yb = bound_check_mean_hitting(y, atoms, PointRef::at(2), PointRef::at(3));
  CHECK(yb.exact == doctest::Approx(22.0));
  CHECK(yb.bound == doctest::Approx(40.0));
  CHECK(yb.holds);

  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const Tree t = random_tree(2 + trial % 20, rng);
    std::uniform_int_distribution<VertexId> pv(0, t.vertex_count() - 1);
    CHECK(bound_check_mean_hitting(t, SpeedMeasure::length_measure(t), PointRef::at(pv(rng)), PointRef::at(pv(rng)))
              .holds);
  }
}

TEST_CASE("aggregates do not depend on the thread count") {
  const Tree y = oracle::y_tree();
  WalkConfig cfg;
  cfg.mesh_h = 0.2;
  cfg.n_walks = 3000;
  cfg.seed = 99;
  cfg.stop = {PointRef::at(2), PointRef::at(3)};
  cfg.track_occupation = true;
  const Chain c = build_chain(y, SpeedMeasure::length_measure(y), cfg.mesh_h);
  cfg.threads = 1;
  const WalkAggregate one = run_walks(c, cfg, PointRef::at(0));
  cfg.threads = 3;
  CHECK(run_walks(c, cfg, PointRef::at(0)) == one);
  cfg.threads = 8;
  CHECK(run_walks(c, cfg, PointRef::at(0)) == one);
  cfg.seed = 100;
  CHECK_FALSE(run_walks(c, cfg, PointRef::at(0)) == one);
}

TEST_CASE("thread cap from the environment") {
  ::setenv("DENDRITE_THREADS", "1", 1);
  CHECK(resolve_threads(8) == 1);
  ::setenv("DENDRITE_THREADS", "4", 1);
  CHECK(resolve_threads(2) == 2);
  ::unsetenv("DENDRITE_THREADS");
  CHECK(resolve_threads(3) == 3);
}

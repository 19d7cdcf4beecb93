#include "dendrite/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "dendrite/calculus.hpp"
#include "dendrite/classify.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/io.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/potential.hpp"
#include "dendrite/simulate.hpp"
#include "dendrite/spectral.hpp"

namespace dendrite {

namespace {

constexpr const char* kYTree =
    "rtree v1\n"
    "vertex v0\nvertex v1\nvertex v2\nvertex v3\n"
    "edge v0 v1 1\nedge v1 v2 2\nedge v1 v3 3\n"
    "root v0\n";

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

PointRef random_point(const Tree& t, std::mt19937_64& rng) {
  std::uniform_int_distribution<EdgeId> pick(0, t.edge_count() - 1);
  const EdgeId e = pick(rng);
  std::uniform_real_distribution<double> off(0.0, t.edge(e).length);
  return t.point(e, off(rng));
}

SpeedMeasure random_measure(const Tree& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dens(0.5, 2.0);
  std::uniform_real_distribution<double> atom(0.0, 1.0);
  SpeedMeasure nu = SpeedMeasure::length_measure(t);
  for (double& d : nu.edge_density) d = dens(rng);
  for (double& a : nu.vertex_atom) a = atom(rng) < 0.3 ? atom(rng) : 0.0;
  return nu;
}

// 1. cap({a},{b}) = 1/(2 r(a,b)) for every vertex pair of 50 random trees.
void criterion_capacity(Outcome& out) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Tree t = random_tree(size(rng), rng);
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    for (VertexId a = 0; a < t.vertex_count(); ++a) {
      for (VertexId b = a + 1; b < t.vertex_count(); ++b) {
        const PointRef pa[] = {PointRef::at(a)};
        const PointRef pb[] = {PointRef::at(b)};
        const double cap = capacity(t, nu, pb, pa);
        const double exact = 1.0 / (2.0 * distance(t, pa[0], pb[0]));
        worst = std::max(worst, std::abs(cap - exact));
        ++pairs;
      }
    }
  }
  out.require(worst <= 1e-9, "capacity vs 1/(2r)");
  out.detail << pairs << " pairs, max |cap - 1/(2r)| = " << sci(worst);
}

// 2. Discrete Green function with pole x and killing point b against
//    2 r(c(y,x,b), b) at every mesh vertex, plus symmetry in (x, y).
void criterion_green(Outcome& out) {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  double worst = 0.0;
  double worst_sym = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Tree t = random_tree(size(rng), rng);
    const SpeedMeasure nu = random_measure(t, rng);
    const PointRef x = random_point(t, rng);
    PointRef b = random_point(t, rng);
    if (b == x) continue;
    const PointRef kill[] = {b};
    const PointMass pole[] = {{x, 1.0}};
    const MeshFunction g = green_general(t, nu, kill, pole, 0.0, diameter(t) / 20.0);
    const Tree& m = g.mesh.tree;
    const PointRef mx = g.mesh.map(t.canonical(x));
    const PointRef mb = g.mesh.map(t.canonical(b));
    for (VertexId v = 0; v < m.vertex_count(); ++v) {
      const double exact = 2.0 * distance(m, branch_point(m, PointRef::at(v), mx, mb), mb);
      worst = std::max(worst, std::abs(g.values[v] - exact));
      ++checked;
    }
    // symmetry: pole at y evaluated at x against pole at x evaluated at y
    const PointRef y = random_point(t, rng);
    if (y == b) continue;
    const PointMass pole_y[] = {{y, 1.0}};
    const MeshFunction gy = green_general(t, nu, kill, pole_y, 0.0, 0.0);
    const MeshFunction gx = green_general(t, nu, kill, pole, 0.0, 0.0);
    worst_sym = std::max(worst_sym, std::abs(gx.at(t.canonical(y)) - gy.at(t.canonical(x))));
  }
  out.require(worst <= 1e-9, "Green kernel");
  out.require(worst_sym <= 1e-9, "Green symmetry");
  out.detail << checked << " mesh vertices, max error " << sci(worst) << ", max asymmetry " << sci(worst_sym);
}

// 3. Exact formula = harmonic solve = Monte Carlo for P^x(τ_a < τ_b).
void criterion_hitting(Outcome& out) {
  std::mt19937_64 rng(303);
  std::vector<Tree> trees;
  trees.push_back(parse_tree_string(kYTree).tree);
  std::uniform_int_distribution<std::size_t> size(4, 8);
  for (int i = 0; i < 10; ++i) trees.push_back(random_tree(size(rng), rng));

  double worst_formula = 0.0;
  double worst_sigma = 0.0;
  double worst_abs = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const Tree& t = trees[i];
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    VertexId x = 1, a = 2, b = 3;
    if (i > 0) {
      std::vector<VertexId> ids(t.vertex_count());
      for (VertexId v = 0; v < ids.size(); ++v) ids[v] = v;
      std::shuffle(ids.begin(), ids.end(), rng);
      x = ids[0], a = ids[1], b = ids[2];
    }
    const PointRef px = PointRef::at(x), pa = PointRef::at(a), pb = PointRef::at(b);
    const double exact = hitting_probability(t, px, pa, pb);
    const PointRef zero[] = {pb};
    const PointRef one[] = {pa};
    const double harm = harmonic(t, nu, zero, one).at(px);
    worst_formula = std::max(worst_formula, std::abs(exact - harm));

    WalkConfig cfg;
    cfg.mesh_h = diameter(t) / 100.0;
    cfg.n_walks = 100000;
    cfg.seed = 3000 + i;
    cfg.clock = Clock::jump_count_only;
    const Estimate est = estimate_hitting_probability(t, nu, cfg, px, pa, pb);
    const double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / static_cast<double>(est.n_used));
    worst_sigma = std::max(worst_sigma, std::abs(est.mean - exact) / sigma);
    worst_abs = std::max(worst_abs, std::abs(est.mean - exact));
  }
  out.require(worst_formula <= 1e-9, "formula vs harmonic");
  out.require(worst_sigma <= 4.0, "Monte Carlo within 4 sigma");
  out.require(worst_abs <= 0.02, "Monte Carlo within 0.02");
  out.detail << trees.size() << " trees, |formula - harmonic| <= " << sci(worst_formula) << ", MC max " << sci(worst_sigma)
             << " sigma / " << sci(worst_abs) << " abs";
}

// 4. Mean hitting time on [0,1] and the Y-tree with unit atoms.
void criterion_occupation(Outcome& out) {
  {
    Tree::Builder b;
    b.add_vertex("0");
    b.add_vertex("1");
    b.add_edge("0", "1", 1.0);
    b.set_root("0");
    const Tree t = std::move(b).build();
    const SpeedMeasure nu = SpeedMeasure::length_measure(t);
    WalkConfig cfg;
    cfg.mesh_h = 0.01;
    cfg.n_walks = 20000;
    cfg.seed = 4001;
    const Estimate est = estimate_hitting_time(t, nu, cfg, PointRef::at(1), PointRef::at(0));
    const double rel = std::abs(est.mean - 1.0);
    out.require(rel <= 0.03, "interval E[tau_0] within 3%");
    out.detail << "interval " << sci(est.mean) << " +- " << sci(est.std_error) << "; ";
  }
  {
    const TreeFile yf = parse_tree_string(kYTree);
    const Tree& t = yf.tree;
    SpeedMeasure nu = SpeedMeasure::zero(t);
    std::fill(nu.vertex_atom.begin(), nu.vertex_atom.end(), 1.0);
    const PointRef x = PointRef::at(t.vertex("v2"));
    const PointRef target = PointRef::at(t.vertex("v3"));
    const double formula = expected_occupation(t, nu, x, target, PiecewiseLinearFn::constant(t, 1.0));

    WalkConfig cfg;
    cfg.mesh_h = diameter(t);  // mesh = original tree
    cfg.n_walks = 20000;
    cfg.seed = 4002;
    const PointRef pts[] = {x, target};
    const Chain chain = build_chain(t, nu, cfg.mesh_h, pts);
    const VertexId stop[] = {chain.vertex_of(target)};
    const std::vector<double> ones(chain.size(), 1.0);
    const double chain_mean = chain_expected_functional(chain, stop, ones)[chain.vertex_of(x)];
    const Estimate est = estimate_hitting_time(t, nu, cfg, x, target);
    out.require(std::abs(formula - 22.0) <= 1e-9, "Y-tree formula = 22");
    out.require(std::abs(chain_mean - formula) <= 1e-9, "chain linear solve = formula");
    out.require(std::abs(est.mean - 22.0) <= 0.03 * 22.0, "Y-tree MC within 3%");
    out.detail << "Y-tree formula " << sci(formula) << ", chain " << sci(chain_mean) << ", MC " << sci(est.mean) << " +- "
               << sci(est.std_error);
  }
}

// 5. π²/8 on [0,1] killed at 0, and the two-sided bound on random trees.
void criterion_eigenvalue(Outcome& out) {
  {
    Tree::Builder b;
    b.add_vertex("0");
    b.add_vertex("1");
    b.add_edge("0", "1", 1.0);
    b.set_root("0");
    const Tree t = std::move(b).build();
    const PointRef dir[] = {PointRef::at(0)};
    const SpectralResult r = principal_eigenvalue(t, SpeedMeasure::length_measure(t), dir, 1e-3);
    const double target = std::numbers::pi * std::numbers::pi / 8.0;
    out.require(std::abs(r.eigenvalue - target) <= 0.01 * target, "interval eigenvalue within 1%");
    out.detail << "interval " << format_number(r.eigenvalue) << " vs " << format_number(target) << "; ";
  }
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> size(2, 25);
  double min_margin = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = random_tree(size(rng), rng);
    const SpeedMeasure nu = random_measure(t, rng);
    std::uniform_int_distribution<VertexId> pick(0, t.vertex_count() - 1);
    const PointRef b = PointRef::at(pick(rng));
    const double h = diameter(t) / 40.0;
    const PointRef dir[] = {b};
    const double lambda = principal_eigenvalue(t, nu, dir, h).eigenvalue;
    const EigenvalueBounds bounds = eigenvalue_bounds(t, nu, b, h);
    if (!(bounds.lower <= lambda && lambda <= bounds.upper)) ++violations;
    min_margin = std::min({min_margin, lambda / bounds.lower, bounds.upper / lambda});
  }
  out.require(violations == 0, "bounds sandwich lambda_b");
  out.detail << "20 trees, " << violations << " violations, tightest ratio " << sci(min_margin);
}

// 6. TV distance of the heat semigroup below the diameter-based bound.
void criterion_mixing(Outcome& out) {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<std::size_t> size(3, 12);
  int violations = 0;
  std::size_t points = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Tree t = random_tree(size(rng), rng);
    const SpeedMeasure nu = random_measure(t, rng);
    const double mass = total_mass(nu, t);
    double length = 0.0;
    for (const Edge& e : t.edges()) length += e.length;
    const double h = length / 250.0;
    const double scale = 2.0 * diameter(t) * mass;

    std::vector<SpeedMeasure> laws;
    std::uniform_int_distribution<VertexId> pick(1, t.vertex_count() - 1);
    // subtrees hanging below an inner vertex always carry edge mass
    laws.push_back(restricted_law(t, nu, t.parent(pick(rng))));
    laws.push_back(restricted_law(t, nu, t.parent(pick(rng))));
    SpeedMeasure tilted = nu;  // density proportional to a random edgewise factor
    std::uniform_real_distribution<double> factor(0.0, 3.0);
    for (double& d : tilted.edge_density) d *= factor(rng);
    for (double& a : tilted.vertex_atom) a *= factor(rng);
    laws.push_back(scaled(tilted, 1.0 / total_mass(tilted, t)));

    std::vector<double> times;
    for (int k = 0; k <= 40; ++k) times.push_back(scale * 0.1 * k);
    for (const SpeedMeasure& law : laws) {
      const MixingCurve c = mixing_curve(t, nu, law, times, h, 300);
      for (std::size_t k = 0; k < times.size(); ++k) {
        ++points;
        if (c.tv[k] > c.bound[k]) ++violations;
        worst_ratio = std::max(worst_ratio, c.tv[k] / c.bound[k]);
      }
    }
  }
  out.require(violations == 0, "TV below bound");
  out.detail << points << " grid points, " << violations << " violations, max TV/bound " << sci(worst_ratio);
}

// 7. Verdicts on k-ary trees and the resistance of the binary tree.
void criterion_kary(Outcome& out) {
  const std::pair<int, double> cases[] = {{2, 1.0}, {2, 2.0}, {2, 3.0}, {3, 2.0}, {3, 3.0}, {3, 4.0}};
  for (auto [k, c] : cases) {
    GeneratorSpec gen{k, c, 1.0};
    const Verdict want = c >= k ? Verdict::recurrent : Verdict::transient;
    const Classification got = classify_generator(gen);
    out.require(got.verdict == want, "verdict for k=" + std::to_string(k));
    out.detail << "(" << k << "," << c << ")=" << to_string(got.verdict) << " ";
  }
  const double r60 = effective_resistance_to_depth(GeneratorSpec{2, 1.0, 1.0}, 60);
  out.require(std::abs(r60 - 2.0) <= 1e-6, "binary resistance -> 2");
  out.detail << "; R_60(2,1) = " << format_number(r60);
}

// 8. Box-counting dimension of the ends against log k / log c.
void criterion_dimension(Outcome& out) {
  double worst = 0.0;
  for (int k : {2, 3, 4}) {
    for (double c : {1.5, 2.0, 3.0}) {
      const GeneratorSpec gen{k, c, 1.0};
      const double est = box_counting_dimension(gen, 12);
      const double exact = end_space_dimension(gen);
      worst = std::max(worst, std::abs(est - exact));
    }
  }
  out.require(worst <= 0.05, "box counting within 0.05");
  out.detail << "9 generators, max |box - log k/log c| = " << sci(worst);
}

// 9. Gradients of g_a and f_{a,b}, and f(y) - f(x) = ∫_x^y ∇f.
void criterion_gradient(Outcome& out) {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<std::size_t> size(3, 30);
  std::uniform_int_distribution<int> eighths(1, 24);
  std::size_t mismatches = 0;
  std::size_t edges = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Tree t0 = random_tree(size(rng), rng);
    // dyadic lengths keep every distance exact in floating point
    std::vector<double> len(t0.edge_count());
    for (double& l : len) l = eighths(rng) / 8.0;
    const Tree t = t0.with_lengths(len);
    std::uniform_int_distribution<VertexId> pick(0, t.vertex_count() - 1);
    const VertexId a = pick(rng);
    VertexId b = pick(rng);
    if (b == a) b = (a + 1) % t.vertex_count();
    const EdgeGradient ga = gradient(t, distance_function(t, PointRef::at(a)));
    const EdgeGradient fab = gradient(t, branch_to_end_function(t, PointRef::at(a), PointRef::at(b)));
    for (EdgeId e = 0; e < t.edge_count(); ++e) {
      const PointRef child = PointRef::at(t.child_of(e));
      const PointRef parent = PointRef::at(t.parent_of(e));
      // a below the edge: walking away from the root approaches a
      const bool a_below = on_arc(t, parent, PointRef::at(a), child);
      const bool b_below = on_arc(t, parent, PointRef::at(b), child);
      const double want_g = a_below ? -1.0 : 1.0;
      double want_f = 0.0;
      if (a_below != b_below) want_f = a_below ? 1.0 : -1.0;
      if (ga.slope[e] != want_g) ++mismatches;
      if (fab.slope[e] != want_f) ++mismatches;
      ++edges;
    }
  }
  double worst = 0.0;
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Tree t = random_tree(size(rng), rng);
    std::vector<double> values(t.vertex_count());
    for (double& v : values) v = val(rng);
    const PiecewiseLinearFn f(values);
    const PointRef x = random_point(t, rng);
    const PointRef y = random_point(t, rng);
    const double lhs = f.at(t, y) - f.at(t, x);
    const double rhs = oriented_integral(t, gradient(t, f), x, y);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  out.require(mismatches == 0, "exact gradients");
  out.require(worst <= 1e-9, "fundamental identity");
  out.detail << edges << " edges, " << mismatches << " gradient mismatches; identity max error " << sci(worst);
}

// 10. Bit-identical aggregates for 1, 2 and 8 threads.
void criterion_determinism(Outcome& out) {
  const TreeFile yf = parse_tree_string(kYTree);
  const Tree& t = yf.tree;
  const SpeedMeasure nu = SpeedMeasure::length_measure(t);
  WalkConfig cfg;
  cfg.mesh_h = 0.1;
  cfg.n_walks = 20000;
  cfg.seed = 10010;
  cfg.stop = {PointRef::at(t.vertex("v0")), PointRef::at(t.vertex("v3"))};
  cfg.track_occupation = true;
  const PointRef start = PointRef::at(t.vertex("v2"));
  const Chain chain = build_chain(t, nu, cfg.mesh_h, cfg.stop);
  std::vector<WalkAggregate> runs;
  for (unsigned threads : {1U, 2U, 8U}) {
    cfg.threads = threads;
    runs.push_back(run_walks(chain, cfg, start));
  }
  out.require(runs[0] == runs[1] && runs[0] == runs[2], "identical aggregates");
  out.detail << "1/2/8 threads, mean elapsed " << format_number(runs[0].sum_elapsed / runs[0].n_completed)
             << ", jumps " << runs[0].total_jumps;
}

struct Criterion {
  int id;
  const char* name;
  double budget;
  void (*run)(Outcome&);
};

constexpr Criterion kCriteria[] = {
    {1, "two-point capacity", 5.0, criterion_capacity},
    {2, "Green kernel", 5.0, criterion_green},
    {3, "hitting probabilities", 60.0, criterion_hitting},
    {4, "occupation and hitting time", 120.0, criterion_occupation},
    {5, "principal eigenvalue", 30.0, criterion_eigenvalue},
    {6, "mixing bound", 60.0, criterion_mixing},
    {7, "k-ary classification", 5.0, criterion_kary},
    {8, "end-space dimension", 30.0, criterion_dimension},
    {9, "gradient calculus", 5.0, criterion_gradient},
    {10, "determinism", 60.0, criterion_determinism},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int>& only) {
  std::vector<CriterionResult> results;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    r.budget = c.budget;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail << "exception: " << e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.passed = out.ok && r.seconds <= r.budget;
    r.detail = out.detail.str();
    if (out.ok && !r.passed) r.detail += "; over time budget";
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << r.seconds << " s / " << r.budget
     << " s): " << r.detail;
  return os.str();
}

}  // namespace dendrite

#include "dendrite/potential.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SparseCholesky>

#include "dendrite/error.hpp"

namespace dendrite {

namespace {

std::vector<PointRef> canonical_all(const Tree& t, std::span<const PointRef> points) {
  std::vector<PointRef> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t.canonical(p));
  return out;
}

VertexId mesh_vertex(const Refinement& r, const PointRef& p) {
  const PointRef q = r.map(p);
  if (!q.is_vertex()) throw InvalidArgument("point was not inserted into the mesh");
  return q.vertex();
}

}  // namespace

Eigen::SparseMatrix<double> FormMatrix::matrix() const {
  Eigen::SparseMatrix<double> m = energy;
  if (alpha != 0.0) {
    for (std::size_t i = 0; i < mass.size(); ++i) m.coeffRef(i, i) += alpha * mass[i];
  }
  return m;
}

double FormMatrix::form(std::span<const double> f, std::span<const double> g) const {
  if (f.size() != size() || g.size() != size()) throw InvalidArgument("vector does not match the form");
  // Edgewise Σ c_ij (f_i - f_j)(g_i - g_j) (rows of Q sum to zero) avoids the
  // cancellation in f'Qg.
  long double value = 0.0L;
  for (Eigen::Index col = 0; col < energy.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(energy, col); it; ++it) {
      const auto i = static_cast<std::size_t>(it.row());
      const auto j = static_cast<std::size_t>(it.col());
      if (i >= j) continue;
      value -= static_cast<long double>(it.value()) * (static_cast<long double>(f[i]) - f[j]) *
               (static_cast<long double>(g[i]) - g[j]);
    }
  }
  for (std::size_t i = 0; i < mass.size(); ++i) value += static_cast<long double>(alpha) * mass[i] * f[i] * g[i];
  return static_cast<double>(value);
}

FormMatrix assemble_form(const Tree& t, const SpeedMeasure& nu, double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) throw InvalidArgument("alpha must be non-negative");
  nu.validate(t);
  const auto n = static_cast<Eigen::Index>(t.vertex_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * t.edge_count());
  for (const Edge& ed : t.edges()) {
    const double c = 0.5 / ed.length;
    const auto u = static_cast<Eigen::Index>(ed.u);
    const auto v = static_cast<Eigen::Index>(ed.v);
    triplets.emplace_back(u, u, c);
    triplets.emplace_back(v, v, c);
    triplets.emplace_back(u, v, -c);
    triplets.emplace_back(v, u, -c);
  }
  FormMatrix out;
  out.energy.resize(n, n);
  out.energy.setFromTriplets(triplets.begin(), triplets.end());
  out.mass = lump(nu, t).mass;
  out.alpha = alpha;
  return out;
}

std::vector<double> solve_dirichlet(const Eigen::SparseMatrix<double>& q, std::span<const double> rhs,
                                    const std::vector<bool>& fixed, std::span<const double> fixed_values) {
  const auto n = static_cast<std::size_t>(q.rows());
  if (rhs.size() != n || fixed.size() != n || fixed_values.size() != n) {
    throw InvalidArgument("Dirichlet problem dimensions disagree");
  }
  std::vector<Eigen::Index> index(n, -1);
  Eigen::Index free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) index[i] = free_count++;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fixed[i] ? fixed_values[i] : 0.0;
  if (free_count == 0) return out;

  Eigen::VectorXd b(free_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) b[index[i]] = rhs[i];
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index col = 0; col < q.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(q, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(it.col());
      if (fixed[r]) continue;
      if (fixed[c]) {
        b[index[r]] -= it.value() * fixed_values[c];
      } else {
        triplets.emplace_back(index[r], index[c], it.value());
      }
    }
  }
  Eigen::SparseMatrix<double> a(free_count, free_count);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("Dirichlet system is singular");
  const Eigen::VectorXd x = solver.solve(b);
  if (solver.info() != Eigen::Success || !x.allFinite()) throw NumericalError("Dirichlet solve failed");
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) out[i] = x[index[i]];
  }
  return out;
}

HarmonicSolution harmonic(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> zero_set,
                          std::span<const PointRef> one_set, double alpha, double h) {
  if (zero_set.empty() || one_set.empty()) throw InvalidArgument("both boundary sets must be non-empty");
  const auto zeros = canonical_all(t, zero_set);
  const auto ones = canonical_all(t, one_set);
  std::vector<PointRef> boundary = zeros;
  boundary.insert(boundary.end(), ones.begin(), ones.end());

  Refinement mesh = refine(t, h, boundary);
  const SpeedMeasure mesh_nu = refine_measure(mesh, nu);
  const FormMatrix form = assemble_form(mesh.tree, mesh_nu, alpha);

  const std::size_t n = mesh.tree.vertex_count();
  std::vector<char> zero_mask(n, 0);
  std::vector<char> one_mask(n, 0);
  for (const auto& p : zeros) zero_mask[mesh_vertex(mesh, p)] = 1;
  for (const auto& p : ones) one_mask[mesh_vertex(mesh, p)] = 1;
  std::vector<bool> fixed(n, false);
  std::vector<double> fixed_values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (zero_mask[i] && one_mask[i]) throw InvalidArgument("boundary sets must be disjoint");
    fixed[i] = zero_mask[i] || one_mask[i];
    if (one_mask[i]) fixed_values[i] = 1.0;
  }
  const std::vector<double> rhs(n, 0.0);
  auto values = solve_dirichlet(form.matrix(), rhs, fixed, fixed_values);
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);

  HarmonicSolution out{{std::move(mesh), PiecewiseLinearFn(values)}, 0.0};
  out.energy_value = form.form(values, values);
  return out;
}

double capacity(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> zero_set,
                std::span<const PointRef> one_set, double alpha, double h) {
  return harmonic(t, nu, zero_set, one_set, alpha, h).energy_value;
}

double green_two_point(const Tree& t, const PointRef& x, const PointRef& b, const PointRef& y) {
  if (t.canonical(x) == t.canonical(b)) throw InvalidArgument("pole must differ from the killing point");
  return 2.0 * distance(t, branch_point(t, y, x, b), b);
}

MeshFunction green_general(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> killing_set,
                           std::span<const PointMass> kappa, double alpha, double h) {
  if (killing_set.empty()) throw InvalidArgument("killing set must be non-empty");
  std::vector<PointRef> points = canonical_all(t, killing_set);
  for (const auto& pm : kappa) {
    if (!std::isfinite(pm.mass) || pm.mass < 0.0) throw InvalidArgument("kappa must be a finite positive measure");
    points.push_back(t.canonical(pm.point));
  }
  Refinement mesh = refine(t, h, points);
  const FormMatrix form = assemble_form(mesh.tree, refine_measure(mesh, nu), alpha);
  const std::size_t n = mesh.tree.vertex_count();
  std::vector<bool> fixed(n, false);
  for (const auto& p : killing_set) fixed[mesh_vertex(mesh, t.canonical(p))] = true;
  std::vector<double> rhs(n, 0.0);
  for (const auto& pm : kappa) rhs[mesh_vertex(mesh, t.canonical(pm.point))] += pm.mass;
  const std::vector<double> zeros(n, 0.0);
  auto values = solve_dirichlet(form.matrix(), rhs, fixed, zeros);
  return MeshFunction{std::move(mesh), PiecewiseLinearFn(std::move(values))};
}

double hitting_probability(const Tree& t, const PointRef& x, const PointRef& a, const PointRef& b) {
  const double rab = distance(t, a, b);
  if (rab == 0.0) throw InvalidArgument("hitting probability needs a != b");
  return distance(t, branch_point(t, x, a, b), b) / rab;
}

std::vector<double> star_exit_distribution(const Tree& t, VertexId x, std::span<const PointRef> neighbors) {
  if (neighbors.empty()) throw InvalidArgument("star needs at least one neighbour");
  const PointRef center = t.canonical(PointRef::at(x));
  std::vector<double> weights;
  weights.reserve(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (t.canonical(neighbors[i]) == center) throw InvalidArgument("neighbour coincides with the centre");
    for (std::size_t j = 0; j < i; ++j) {
      if (!on_arc(t, neighbors[i], neighbors[j], center)) {
        throw InvalidArgument("star neighbours must be separated by the centre");
      }
    }
    weights.push_back(1.0 / distance(t, center, neighbors[i]));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return weights;
}

double expected_occupation(const Tree& t, const SpeedMeasure& nu, const PointRef& x, const PointRef& b,
                           const PiecewiseLinearFn& f) {
  if (t.has_open_leaves()) throw InvalidArgument("occupation identity requires a recurrent tree (no open leaves)");
  nu.validate(t);
  f.check(t);
  const PointRef xs[] = {t.canonical(x), t.canonical(b)};
  const Refinement mesh = refine(t, 0.0, xs);
  const SpeedMeasure mnu = refine_measure(mesh, nu);
  const PiecewiseLinearFn mf = transfer(t, mesh, f);
  const PointRef mx = mesh.map(xs[0]);
  const PointRef mb = mesh.map(xs[1]);
  const Tree& m = mesh.tree;

  // With x and b mesh vertices, y -> r(c(y,x,b), b) is linear on every edge.
  std::vector<double> kernel(m.vertex_count());
  for (VertexId v = 0; v < m.vertex_count(); ++v) {
    kernel[v] = distance(m, branch_point(m, PointRef::at(v), mx, mb), mb);
  }
  double sum = 0.0;
  for (EdgeId e = 0; e < m.edge_count(); ++e) {
    const Edge& ed = m.edge(e);
    const double ku = kernel[ed.u];
    const double kv = kernel[ed.v];
    sum += mnu.edge_density[e] * ed.length * (2.0 * ku * mf[ed.u] + ku * mf[ed.v] + kv * mf[ed.u] + 2.0 * kv * mf[ed.v]) /
           6.0;
  }
  for (VertexId v = 0; v < m.vertex_count(); ++v) sum += mnu.vertex_atom[v] * kernel[v] * mf[v];
  return 2.0 * sum;
}

}  // namespace dendrite

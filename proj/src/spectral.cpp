#include "dendrite/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "dendrite/error.hpp"

namespace dendrite {

namespace {

constexpr std::size_t kDenseLimit = 800;
constexpr double kResidualTol = 1e-10;
constexpr int kMaxIterations = 100000;

void require_compact(const Tree& t) {
  if (t.has_open_leaves()) throw InvalidArgument("spectral quantities need a compact tree (no open leaves)");
}

struct Discretization {
  Refinement mesh;
  FormMatrix form;
};

Discretization discretize(const Tree& t, const SpeedMeasure& nu, double h, std::span<const PointRef> points) {
  require_compact(t);
  if (!std::isfinite(h) || !(h > 0.0)) throw InvalidArgument("mesh size must be positive");
  nu.validate(t);
  Refinement mesh = refine(t, h, points);
  FormMatrix form = assemble_form(mesh.tree, refine_measure(mesh, nu), 0.0);
  return {std::move(mesh), std::move(form)};
}

Eigen::SparseMatrix<double> restrict_to(const Eigen::SparseMatrix<double>& q, const std::vector<Eigen::Index>& index,
                                        Eigen::Index count) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index col = 0; col < q.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(q, col); it; ++it) {
      const auto r = index[static_cast<std::size_t>(it.row())];
      const auto c = index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> out(count, count);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

struct Eigenpair {
  double value;
  Eigen::VectorXd vector;  // M-normalized
};

// k-th smallest generalized eigenpair of (A, diag(m)) by the symmetric
// similarity transform D^{-1/2} A D^{-1/2}.
Eigenpair dense_eigenpair(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& m, Eigen::Index k) {
  const Eigen::VectorXd inv_sqrt = m.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s = inv_sqrt.asDiagonal() * Eigen::MatrixXd(a) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  Eigen::VectorXd u = inv_sqrt.cwiseProduct(solver.eigenvectors().col(k));
  u /= std::sqrt(u.cwiseProduct(u).dot(m));
  return {solver.eigenvalues()[k], u};
}

// Deterministic start vector with components along every eigenvector in
// general position.
Eigen::VectorXd start_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  std::uint64_t state = 0x2545F4914F6CDD1DULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    v[i] = 1.0 + 0.5 * (static_cast<double>(state >> 11) * 0x1.0p-53);
  }
  return v;
}

double m_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& m) { return std::sqrt(v.cwiseProduct(v).dot(m)); }

// Inverse iteration for the smallest eigenpair of (A, diag(m)), A SPD. When
// `deflate` is set, the solve is replaced by `apply_inverse` which must map
// into the M-orthogonal complement of the constants.
template <typename ApplyInverse>
Eigenpair inverse_iteration(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& m, Eigen::VectorXd v,
                            ApplyInverse&& apply_inverse) {
  v /= m_norm(v, m);
  double lambda = 0.0;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::VectorXd w = apply_inverse(Eigen::VectorXd(m.cwiseProduct(v)));
    w /= m_norm(w, m);
    const Eigen::VectorXd aw = a * w;
    lambda = w.dot(aw);
    const double residual = (aw - lambda * m.cwiseProduct(w)).norm() / (std::abs(lambda) * m.cwiseProduct(w).norm());
    v = std::move(w);
    if (residual < kResidualTol) return {lambda, v};
  }
  throw NumericalError("inverse iteration did not reach residual 1e-10");
}

bool use_dense(EigenMethod method, Eigen::Index n) {
  if (method == EigenMethod::dense) return true;
  if (method == EigenMethod::inverse_iteration) return false;
  return static_cast<std::size_t>(n) <= kDenseLimit;
}

}  // namespace

SpectralResult principal_eigenvalue(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> dirichlet_set,
                                    double h, EigenMethod method) {
  if (dirichlet_set.empty()) throw InvalidArgument("Dirichlet set must be non-empty");
  auto [mesh, form] = discretize(t, nu, h, dirichlet_set);
  const std::size_t n = mesh.tree.vertex_count();
  std::vector<bool> fixed(n, false);
  for (const auto& p : dirichlet_set) {
    const PointRef q = mesh.map(t.canonical(p));
    fixed[q.vertex()] = true;
  }
  std::vector<Eigen::Index> index(n, -1);
  Eigen::Index count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) index[i] = count++;
  }
  if (count == 0) throw InvalidArgument("no free vertices outside the Dirichlet set");
  Eigen::VectorXd m(count);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i] < 0) continue;
    if (!(form.mass[i] > 0.0)) throw InvalidArgument("speed measure must charge every free mesh vertex");
    m[index[i]] = form.mass[i];
  }
  const Eigen::SparseMatrix<double> a = restrict_to(form.energy, index, count);

  Eigenpair pair;
  if (use_dense(method, count)) {
    pair = dense_eigenpair(a, m, 0);
  } else {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success) throw NumericalError("Dirichlet operator is singular");
    pair = inverse_iteration(a, m, start_vector(count), [&](const Eigen::VectorXd& r) {
      return Eigen::VectorXd(solver.solve(r));
    });
  }
  if (pair.vector.sum() < 0.0) pair.vector = -pair.vector;

  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i] >= 0) values[i] = pair.vector[index[i]];
  }
  return SpectralResult{pair.value, MeshFunction{std::move(mesh), PiecewiseLinearFn(std::move(values))},
                        std::move(form.mass), h};
}

SpectralResult spectral_gap(const Tree& t, const SpeedMeasure& nu, double h, EigenMethod method) {
  auto [mesh, form] = discretize(t, nu, h, {});
  const std::size_t n = mesh.tree.vertex_count();
  if (n < 2) throw InvalidArgument("spectral gap needs at least two mesh vertices");
  Eigen::VectorXd m(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(form.mass[i] > 0.0)) throw InvalidArgument("speed measure must charge every mesh vertex");
    m[static_cast<Eigen::Index>(i)] = form.mass[i];
  }
  const double total = m.sum();

  Eigenpair pair;
  if (use_dense(method, static_cast<Eigen::Index>(n))) {
    pair = dense_eigenpair(form.energy, m, 1);
  } else {
    // Ground the root to invert Q on the M-orthogonal complement of 1.
    std::vector<Eigen::Index> index(n, -1);
    Eigen::Index count = 0;
    const VertexId ground = mesh.tree.root();
    for (std::size_t i = 0; i < n; ++i) {
      if (i != ground) index[i] = count++;
    }
    const Eigen::SparseMatrix<double> grounded = restrict_to(form.energy, index, count);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(grounded);
    if (solver.info() != Eigen::Success) throw NumericalError("grounded Neumann operator is singular");
    auto project = [&](Eigen::VectorXd v) {
      v.array() -= v.dot(m) / total;
      return v;
    };
    auto apply_inverse = [&](const Eigen::VectorXd& r) {
      Eigen::VectorXd rr(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (index[i] >= 0) rr[index[i]] = r[static_cast<Eigen::Index>(i)];
      }
      const Eigen::VectorXd x = solver.solve(rr);
      Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (index[i] >= 0) w[static_cast<Eigen::Index>(i)] = x[index[i]];
      }
      return project(std::move(w));
    };
    pair = inverse_iteration(form.energy, m, project(start_vector(static_cast<Eigen::Index>(n)) - Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))),
                             apply_inverse);
  }

  std::vector<double> values(pair.vector.data(), pair.vector.data() + pair.vector.size());
  return SpectralResult{pair.value, MeshFunction{std::move(mesh), PiecewiseLinearFn(std::move(values))},
                        std::move(form.mass), h};
}

EigenvalueBounds eigenvalue_bounds(const Tree& t, const SpeedMeasure& nu, const PointRef& b, double h) {
  require_compact(t);
  nu.validate(t);
  if (!std::isfinite(h) || h < 0.0) throw InvalidArgument("mesh size must be non-negative");
  EigenvalueBounds out;
  out.lower = 1.0 / (2.0 * diameter(t) * total_mass(nu, t));

  const PointRef bs[] = {t.canonical(b)};
  const Refinement mesh = refine(t, h, bs);
  const SpeedMeasure mnu = refine_measure(mesh, nu);
  const Tree& m = mesh.tree;
  const VertexId base = mesh.map(bs[0]).vertex();

  // Root the mesh at b: order[] lists vertices parents-first.
  const std::size_t n = m.vertex_count();
  std::vector<VertexId> parent(n, kNone);
  std::vector<EdgeId> up_edge(n, kNone);
  std::vector<double> dist(n, 0.0);
  std::vector<VertexId> order{base};
  std::vector<bool> seen(n, false);
  seen[base] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const VertexId v = order[i];
    for (const auto& inc : m.incident(v)) {
      if (seen[inc.neighbor]) continue;
      seen[inc.neighbor] = true;
      parent[inc.neighbor] = v;
      up_edge[inc.neighbor] = inc.edge;
      dist[inc.neighbor] = dist[v] + m.edge(inc.edge).length;
      order.push_back(inc.neighbor);
    }
  }
  // beyond[x] = ν{y : x ∈ [y, b]}
  std::vector<double> beyond(mnu.vertex_atom.begin(), mnu.vertex_atom.end());
  for (std::size_t i = order.size(); i-- > 1;) {
    const VertexId v = order[i];
    beyond[parent[v]] += beyond[v] + mnu.edge_density[up_edge[v]] * m.edge(up_edge[v]).length;
  }

  double sup = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const VertexId q = order[i];
    sup = std::max(sup, beyond[q] * dist[q]);
    if (h > 0.0) continue;
    // Interior of the edge from p (towards b) to q: s ↦ (d (len - s) + M_q)(r_p + s)
    // is a concave quadratic.
    const double d = mnu.edge_density[up_edge[q]];
    const double len = m.edge(up_edge[q]).length;
    const double rp = dist[parent[q]];
    if (d > 0.0) {
      const double s = std::clamp((d * len + beyond[q] - d * rp) / (2.0 * d), 0.0, len);
      sup = std::max(sup, (d * (len - s) + beyond[q]) * (rp + s));
    }
  }
  out.upper = sup > 0.0 ? 0.5 / sup : std::numeric_limits<double>::infinity();
  return out;
}

double density_second_moment(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime) {
  nu.validate(t);
  nu_prime.validate(t);
  const double mass = total_mass(nu_prime, t);
  if (std::abs(mass - 1.0) > 1e-9) throw InvalidArgument("initial law must be a probability measure");
  double chi = 0.0;
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const double dp = nu_prime.edge_density[e];
    if (dp == 0.0) continue;
    if (!(nu.edge_density[e] > 0.0)) throw InvalidArgument("initial law is not absolutely continuous w.r.t. nu");
    chi += dp * dp / nu.edge_density[e] * t.edge(e).length;
  }
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    const double ap = nu_prime.vertex_atom[v];
    if (ap == 0.0) continue;
    if (!(nu.vertex_atom[v] > 0.0)) throw InvalidArgument("initial law is not absolutely continuous w.r.t. nu");
    chi += ap * ap / nu.vertex_atom[v];
  }
  return chi;
}

std::vector<double> mixing_bound(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                                 std::span<const double> times) {
  require_compact(t);
  const double chi = density_second_moment(t, nu, nu_prime);
  const double total = total_mass(nu, t);
  const double rate = 1.0 / (2.0 * diameter(t) * total);
  std::vector<double> out;
  out.reserve(times.size());
  for (double time : times) out.push_back((1.0 + total * std::sqrt(chi)) * std::exp(-rate * time));
  return out;
}

std::vector<double> gap_mixing_bound(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime, double gap,
                                     std::span<const double> times) {
  const double chi = density_second_moment(t, nu, nu_prime);
  const double total = total_mass(nu, t);
  std::vector<double> out;
  out.reserve(times.size());
  for (double time : times) out.push_back((1.0 + std::sqrt(total * chi)) * std::exp(-gap * time));
  return out;
}

namespace {

struct Semigroup {
  Eigen::VectorXd mass;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // of M^{-1/2} Q M^{-1/2}
};

Semigroup heat_semigroup(const Tree& mesh, const FormMatrix& form) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  Semigroup sg;
  sg.mass.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(form.mass[static_cast<std::size_t>(i)] > 0.0)) {
      throw InvalidArgument("speed measure must charge every mesh vertex");
    }
    sg.mass[i] = form.mass[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd inv_sqrt = sg.mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s = inv_sqrt.asDiagonal() * Eigen::MatrixXd(form.energy) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  sg.eigenvalues = solver.eigenvalues();
  sg.eigenvectors = solver.eigenvectors();
  return sg;
}

std::vector<double> tv_curve(const Semigroup& sg, const Eigen::VectorXd& initial, std::span<const double> times) {
  const Eigen::VectorXd sqrt_m = sg.mass.cwiseSqrt();
  const Eigen::VectorXd coeff = sg.eigenvectors.transpose() * initial.cwiseQuotient(sqrt_m);
  const Eigen::VectorXd stationary = sg.mass / sg.mass.sum();
  std::vector<double> out;
  out.reserve(times.size());
  for (double time : times) {
    const Eigen::VectorXd decay = (-time * sg.eigenvalues.array()).exp().matrix();
    const Eigen::VectorXd law = sqrt_m.cwiseProduct(sg.eigenvectors * decay.cwiseProduct(coeff));
    out.push_back(0.5 * (law - stationary).cwiseAbs().sum());
  }
  return out;
}

}  // namespace

std::vector<double> tv_distance_curve(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                                      std::span<const double> times, double h, std::size_t max_vertices) {
  return mixing_curve(t, nu, nu_prime, times, h, max_vertices).tv;
}

MixingCurve mixing_curve(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                         std::span<const double> times, double h, std::size_t max_vertices) {
  auto [mesh, form] = discretize(t, nu, h, {});
  if (mesh.tree.vertex_count() > max_vertices) {
    throw InvalidArgument("mesh has " + std::to_string(mesh.tree.vertex_count()) + " vertices, cap is " +
                          std::to_string(max_vertices));
  }
  density_second_moment(t, nu, nu_prime);  // validates the initial law
  const LumpedMeasure start = lump(refine_measure(mesh, nu_prime), mesh.tree);
  const Semigroup sg = heat_semigroup(mesh.tree, form);
  const Eigen::VectorXd initial = Eigen::Map<const Eigen::VectorXd>(start.mass.data(),
                                                                   static_cast<Eigen::Index>(start.mass.size()));
  MixingCurve out;
  out.times.assign(times.begin(), times.end());
  out.tv = tv_curve(sg, initial, times);
  out.bound = mixing_bound(t, nu, nu_prime, times);
  out.gap = sg.eigenvalues.size() > 1 ? sg.eigenvalues[1] : 0.0;
  out.gap_bound = gap_mixing_bound(t, nu, nu_prime, out.gap, times);
  return out;
}

SpeedMeasure restricted_law(const Tree& t, const SpeedMeasure& nu, VertexId top) {
  nu.validate(t);
  if (top >= t.vertex_count()) throw InvalidArgument("unknown vertex");
  std::vector<bool> inside(t.vertex_count(), false);
  for (VertexId v : t.preorder()) inside[v] = v == top || (v != t.root() && inside[t.parent(v)]);
  SpeedMeasure out = SpeedMeasure::zero(t);
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const VertexId c = t.child_of(e);
    if (inside[c] && c != top) out.edge_density[e] = nu.edge_density[e];
  }
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    if (inside[v]) out.vertex_atom[v] = nu.vertex_atom[v];
  }
  const double mass = total_mass(out, t);
  if (!(mass > 0.0)) throw InvalidArgument("subtree carries no mass");
  return scaled(out, 1.0 / mass);
}

}  // namespace dendrite

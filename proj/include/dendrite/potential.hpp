#pragma once

// Potential theory of the nu-Brownian motion on a finite tree: the discrete
// Dirichlet form, harmonic minimizers, capacities, Green kernels, hitting
// probabilities and expected occupation.

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "dendrite/calculus.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/tree.hpp"

namespace dendrite {

/// Quadratic form of E_alpha on the vertices of a mesh.
///
/// Each edge contributes conductance 1/(2 length), so that f'Qf equals
/// `energy(t, f, f)` for every piecewise-linear f. The alpha (f,g)_nu term
/// uses the lumped measure.
struct FormMatrix {
  Eigen::SparseMatrix<double> energy;  // Q, symmetric, row sums zero
  std::vector<double> mass;            // lumped nu per vertex
  double alpha = 0.0;

  std::size_t size() const { return mass.size(); }
  /// Q + alpha * diag(mass).
  Eigen::SparseMatrix<double> matrix() const;
  /// E_alpha(f, g) on the mesh.
  double form(std::span<const double> f, std::span<const double> g) const;
};

FormMatrix assemble_form(const Tree& t, const SpeedMeasure& nu, double alpha = 0.0);

/// A function on a refinement of the caller's tree.
struct MeshFunction {
  Refinement mesh;
  PiecewiseLinearFn values;

  /// Value at a point of the original tree.
  double at(const PointRef& original_point) const { return values.at(mesh.tree, mesh.map(original_point)); }
};

struct HarmonicSolution : MeshFunction {
  double energy_value = 0.0;  // E_alpha(values, values)
};

/// Minimizer of E_alpha(f,f) subject to f = 0 on `zero_set` and f = 1 on
/// `one_set`. Boundary points are inserted into the mesh; `h > 0` further
/// subdivides it (only relevant when alpha > 0).
HarmonicSolution harmonic(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> zero_set,
                          std::span<const PointRef> one_set, double alpha = 0.0, double h = 0.0);

/// Energy of the harmonic minimizer; cap(A,B) = 1/(2 r(a,b)) for two points.
double capacity(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> zero_set,
                std::span<const PointRef> one_set, double alpha = 0.0, double h = 0.0);

/// Green kernel of the process killed at b with pole x, evaluated at y:
/// 2 r(c(y,x,b), b).
double green_two_point(const Tree& t, const PointRef& x, const PointRef& b, const PointRef& y);

struct PointMass {
  PointRef point;
  double mass;
};

/// Minimizer of E_alpha(g,g) - 2∫g dκ over g vanishing on `killing_set`,
/// for κ a finite sum of point masses.
MeshFunction green_general(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> killing_set,
                           std::span<const PointMass> kappa, double alpha = 0.0, double h = 0.0);

/// P^x(τ_a < τ_b) = r(c(x,a,b), b) / r(a,b).
double hitting_probability(const Tree& t, const PointRef& x, const PointRef& a, const PointRef& b);

/// Exit law from x through the star spanned by `neighbors`: weights
/// proportional to 1/r(x, x_i). The neighbours must be pairwise separated by x.
std::vector<double> star_exit_distribution(const Tree& t, VertexId x, std::span<const PointRef> neighbors);

/// E^x[∫_0^{τ_b} f(B_s) ds] = 2∫ nu(dy) r(c(y,x,b), b) f(y), in closed form.
/// Rejects trees with open leaves (the identity needs recurrence).
double expected_occupation(const Tree& t, const SpeedMeasure& nu, const PointRef& x, const PointRef& b,
                           const PiecewiseLinearFn& f);

/// Solves Q_FF u_F = rhs_F - Q_FB u_B where B are the vertices with a
/// prescribed value. Throws NumericalError if the reduced system is singular.
std::vector<double> solve_dirichlet(const Eigen::SparseMatrix<double>& q, std::span<const double> rhs,
                                    const std::vector<bool>& fixed, std::span<const double> fixed_values);

}  // namespace dendrite

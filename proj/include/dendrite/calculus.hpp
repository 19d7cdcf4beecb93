#pragma once

// Piecewise-linear functions on a tree and their calculus: the gradient with
// respect to the root, orientation-sensitive integration, Dirichlet energy.

#include <iosfwd>
#include <span>
#include <vector>

#include "dendrite/tree.hpp"

namespace dendrite {

/// Function determined by its values at the vertices, linear along edges.
class PiecewiseLinearFn {
 public:
  PiecewiseLinearFn() = default;
  explicit PiecewiseLinearFn(std::vector<double> values);
  static PiecewiseLinearFn constant(const Tree& t, double c);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](VertexId v) const { return values_[v]; }
  double& operator[](VertexId v) { return values_[v]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Value at an arbitrary point by linear interpolation along its edge.
  double at(const Tree& t, const PointRef& p) const;

  /// Throws InvalidArgument unless there is one finite value per vertex of t.
  void check(const Tree& t) const;

 private:
  std::vector<double> values_;
};

/// Slope of a function on every edge, oriented away from the root.
struct EdgeGradient {
  std::vector<double> slope;  // indexed by EdgeId
};

EdgeGradient gradient(const Tree& t, const PiecewiseLinearFn& f);

/// -∫_{[x∧y,x]} g dλ + ∫_{[x∧y,y]} g dλ for an edgewise-constant field g.
double oriented_integral(const Tree& t, const EdgeGradient& g, const PointRef& x, const PointRef& y);

/// ½ Σ_e slope_f(e) slope_g(e) length(e); the Dirichlet form on the mesh.
double energy(const Tree& t, const PiecewiseLinearFn& f, const PiecewiseLinearFn& g);

/// g_a(x) = r(a, x) at every vertex (exact piecewise-linear when a is a vertex).
PiecewiseLinearFn distance_function(const Tree& t, const PointRef& a);

/// f_{a,b}(x) = r(c(x,a,b), b) at every vertex.
PiecewiseLinearFn branch_to_end_function(const Tree& t, const PointRef& a, const PointRef& b);

/// Linear interpolation of f onto a refinement of its tree.
PiecewiseLinearFn transfer(const Tree& original, const Refinement& r, const PiecewiseLinearFn& f);

/// CSV with header `vertex_id,value`, one row per vertex by name.
void write_csv(std::ostream& out, const Tree& t, const PiecewiseLinearFn& f);
PiecewiseLinearFn read_csv(std::istream& in, const Tree& t);

}  // namespace dendrite

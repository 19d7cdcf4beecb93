#pragma once

#include <span>
#include <vector>

#include "dendrite/tree.hpp"

namespace dendrite {

class PiecewiseLinearFn;

/// Speed measure: constant density on each edge plus point masses at vertices.
struct SpeedMeasure {
  std::vector<double> edge_density;  // mass per unit length, indexed by EdgeId
  std::vector<double> vertex_atom;   // indexed by VertexId

  /// Length measure (density 1, no atoms).
  static SpeedMeasure length_measure(const Tree& t);
  static SpeedMeasure zero(const Tree& t);

  /// Throws InvalidArgument unless sizes match `t`, every entry is finite and
  /// non-negative, and the total mass is positive.
  void validate(const Tree& t) const;

  /// True when every edge carries positive density, so every open ball has
  /// positive mass.
  bool has_full_support() const;
};

/// Mass of each mesh vertex after lumping.
struct LumpedMeasure {
  std::vector<double> mass;

  double total() const;
};

double total_mass(const SpeedMeasure& nu, const Tree& t);

/// Exact integral of a piecewise-linear function against nu.
double integrate(const SpeedMeasure& nu, const Tree& t, const PiecewiseLinearFn& f);

/// Each vertex receives its atom plus half the mass of every incident edge.
LumpedMeasure lump(const SpeedMeasure& nu, const Tree& mesh);

/// The measure nu transported onto a refinement of its tree: sub-edges
/// inherit the density of their original edge, atoms stay on their vertices.
SpeedMeasure refine_measure(const Refinement& r, const SpeedMeasure& nu);

/// Multiplies densities and atoms by `s`.
SpeedMeasure scaled(const SpeedMeasure& nu, double s);

}  // namespace dendrite

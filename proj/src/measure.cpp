#include "dendrite/measure.hpp"

#include <cmath>
#include <numeric>

#include "dendrite/calculus.hpp"
#include "dendrite/error.hpp"

namespace dendrite {

SpeedMeasure SpeedMeasure::length_measure(const Tree& t) {
  return {std::vector<double>(t.edge_count(), 1.0), std::vector<double>(t.vertex_count(), 0.0)};
}

SpeedMeasure SpeedMeasure::zero(const Tree& t) {
  return {std::vector<double>(t.edge_count(), 0.0), std::vector<double>(t.vertex_count(), 0.0)};
}

void SpeedMeasure::validate(const Tree& t) const {
  if (edge_density.size() != t.edge_count() || vertex_atom.size() != t.vertex_count()) {
    throw InvalidArgument("speed measure does not match the tree");
  }
  auto bad = [](double x) { return !std::isfinite(x) || x < 0.0; };
  for (double d : edge_density) {
    if (bad(d)) throw InvalidArgument("edge densities must be finite and non-negative");
  }
  for (double a : vertex_atom) {
    if (bad(a)) throw InvalidArgument("vertex atoms must be finite and non-negative");
  }
  if (!(total_mass(*this, t) > 0.0)) throw InvalidArgument("speed measure has zero total mass");
}

bool SpeedMeasure::has_full_support() const {
  for (double d : edge_density) {
    if (!(d > 0.0)) return false;
  }
  return true;
}

double LumpedMeasure::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double total_mass(const SpeedMeasure& nu, const Tree& t) {
  double sum = 0.0;
  for (EdgeId e = 0; e < t.edge_count(); ++e) sum += nu.edge_density.at(e) * t.edge(e).length;
  for (double a : nu.vertex_atom) sum += a;
  return sum;
}

double integrate(const SpeedMeasure& nu, const Tree& t, const PiecewiseLinearFn& f) {
  f.check(t);
  if (nu.edge_density.size() != t.edge_count() || nu.vertex_atom.size() != t.vertex_count()) {
    throw InvalidArgument("measure and function live on different meshes");
  }
  double sum = 0.0;
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const Edge& ed = t.edge(e);
    sum += nu.edge_density[e] * ed.length * 0.5 * (f[ed.u] + f[ed.v]);
  }
  for (VertexId v = 0; v < t.vertex_count(); ++v) sum += nu.vertex_atom[v] * f[v];
  return sum;
}

LumpedMeasure lump(const SpeedMeasure& nu, const Tree& mesh) {
  if (nu.edge_density.size() != mesh.edge_count() || nu.vertex_atom.size() != mesh.vertex_count()) {
    throw InvalidArgument("measure does not live on this mesh");
  }
  LumpedMeasure out{nu.vertex_atom};
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    const Edge& ed = mesh.edge(e);
    const double half = 0.5 * nu.edge_density[e] * ed.length;
    out.mass[ed.u] += half;
    out.mass[ed.v] += half;
  }
  return out;
}

SpeedMeasure refine_measure(const Refinement& r, const SpeedMeasure& nu) {
  if (nu.edge_density.size() != r.sub_edges.size() || nu.vertex_atom.size() != r.vertex_map.size()) {
    throw InvalidArgument("measure does not match the refined tree's origin");
  }
  SpeedMeasure out = SpeedMeasure::zero(r.tree);
  for (EdgeId s = 0; s < r.tree.edge_count(); ++s) out.edge_density[s] = nu.edge_density[r.origin_edge[s]];
  for (VertexId v = 0; v < r.vertex_map.size(); ++v) out.vertex_atom[r.vertex_map[v]] = nu.vertex_atom[v];
  return out;
}

SpeedMeasure scaled(const SpeedMeasure& nu, double s) {
  SpeedMeasure out = nu;
  for (double& d : out.edge_density) d *= s;
  for (double& a : out.vertex_atom) a *= s;
  return out;
}

}  // namespace dendrite

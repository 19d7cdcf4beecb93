#include "dendrite/calculus.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dendrite/error.hpp"
#include "dendrite/io.hpp"

namespace dendrite {

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> values) : values_(std::move(values)) {}

PiecewiseLinearFn PiecewiseLinearFn::constant(const Tree& t, double c) {
  return PiecewiseLinearFn(std::vector<double>(t.vertex_count(), c));
}

void PiecewiseLinearFn::check(const Tree& t) const {
  if (values_.size() != t.vertex_count()) {
    throw InvalidArgument("function has " + std::to_string(values_.size()) + " values for a mesh of " +
                          std::to_string(t.vertex_count()) + " vertices");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("function values must be finite");
  }
}

double PiecewiseLinearFn::at(const Tree& t, const PointRef& p0) const {
  const PointRef p = t.canonical(p0);
  if (p.is_vertex()) return values_.at(p.vertex());
  const Edge& ed = t.edge(p.edge());
  const double w = p.offset() / ed.length;
  return (1.0 - w) * values_.at(ed.u) + w * values_.at(ed.v);
}

EdgeGradient gradient(const Tree& t, const PiecewiseLinearFn& f) {
  f.check(t);
  EdgeGradient g{std::vector<double>(t.edge_count())};
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    g.slope[e] = (f[t.child_of(e)] - f[t.parent_of(e)]) / t.edge(e).length;
  }
  return g;
}

namespace {

// ∫ of g over [root, p], oriented away from the root.
double integral_from_root(const Tree& t, const EdgeGradient& g, const PointRef& p) {
  double sum = 0.0;
  VertexId v = p.vertex();
  if (!p.is_vertex()) {
    const EdgeId e = p.edge();
    const Edge& ed = t.edge(e);
    const VertexId up = t.parent_of(e);
    sum += g.slope[e] * (up == ed.u ? p.offset() : ed.length - p.offset());
    v = up;
  }
  while (v != t.root()) {
    const EdgeId e = t.parent_edge(v);
    sum += g.slope[e] * t.edge(e).length;
    v = t.parent(v);
  }
  return sum;
}

}  // namespace

double oriented_integral(const Tree& t, const EdgeGradient& g, const PointRef& x0, const PointRef& y0) {
  if (g.slope.size() != t.edge_count()) throw InvalidArgument("gradient does not match the tree");
  const PointRef x = t.canonical(x0);
  const PointRef y = t.canonical(y0);
  if (x == y) return 0.0;
  // The common part [root, x∧y] cancels; subtracting the two root integrals
  // leaves -∫[x∧y,x] + ∫[x∧y,y].
  const PointRef m = meet(t, x, y);
  const double base = integral_from_root(t, g, m);
  return (integral_from_root(t, g, y) - base) - (integral_from_root(t, g, x) - base);
}

double energy(const Tree& t, const PiecewiseLinearFn& f, const PiecewiseLinearFn& g) {
  f.check(t);
  g.check(t);
  double sum = 0.0;
  for (const Edge& ed : t.edges()) sum += (f[ed.v] - f[ed.u]) * (g[ed.v] - g[ed.u]) / ed.length;
  return 0.5 * sum;
}

PiecewiseLinearFn distance_function(const Tree& t, const PointRef& a) {
  std::vector<double> values(t.vertex_count());
  for (VertexId v = 0; v < t.vertex_count(); ++v) values[v] = distance(t, a, PointRef::at(v));
  return PiecewiseLinearFn(std::move(values));
}

PiecewiseLinearFn branch_to_end_function(const Tree& t, const PointRef& a, const PointRef& b) {
  std::vector<double> values(t.vertex_count());
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    values[v] = distance(t, branch_point(t, PointRef::at(v), a, b), b);
  }
  return PiecewiseLinearFn(std::move(values));
}

PiecewiseLinearFn transfer(const Tree& original, const Refinement& r, const PiecewiseLinearFn& f) {
  f.check(original);
  std::vector<double> values(r.tree.vertex_count());
  for (VertexId v = 0; v < r.tree.vertex_count(); ++v) {
    values[v] = f.at(original, r.to_original(original, PointRef::at(v)));
  }
  return PiecewiseLinearFn(std::move(values));
}

void write_csv(std::ostream& out, const Tree& t, const PiecewiseLinearFn& f) {
  f.check(t);
  out << "vertex_id,value\n";
  for (VertexId v = 0; v < t.vertex_count(); ++v) out << t.name(v) << ',' << format_number(f[v]) << '\n';
}

PiecewiseLinearFn read_csv(std::istream& in, const Tree& t) {
  std::vector<double> values(t.vertex_count(), 0.0);
  std::vector<bool> seen(t.vertex_count(), false);
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "vertex_id,value") throw ParseError(lineno, 1, "expected header 'vertex_id,value'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(lineno, 1, "expected 'vertex_id,value'");
    const std::string name = line.substr(0, comma);
    const auto id = t.find(name);
    if (!id) throw ParseError(lineno, 1, "unknown vertex '" + name + "'");
    if (seen[*id]) throw ParseError(lineno, 1, "duplicate vertex '" + name + "'");
    const auto value = parse_number(line.substr(comma + 1));
    if (!value) throw ParseError(lineno, comma + 2, "malformed number");
    values[*id] = *value;
    seen[*id] = true;
  }
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    if (!seen[v]) throw ParseError(lineno, 1, "missing value for vertex '" + t.name(v) + "'");
  }
  return PiecewiseLinearFn(std::move(values));
}

}  // namespace dendrite

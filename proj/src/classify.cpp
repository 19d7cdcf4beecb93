#include "dendrite/classify.hpp"

#include <cmath>
#include <limits>

#include "dendrite/error.hpp"

namespace dendrite {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Distance from the root to the branch point closing level m.
double branch_radius(const GeneratorSpec& gen, std::size_t m) {
  double r = 0.0;
  double len = gen.first_edge;
  for (std::size_t l = 0; l <= m; ++l) {
    r += len;
    len *= gen.c;
  }
  return r;
}

std::optional<double> resistance_evidence(const GeneratorSpec& gen) {
  const ResistanceLimit lim = resistance_limit(gen);
  switch (lim.kind) {
    case ResistanceLimit::Kind::finite:
      return lim.value;
    case ResistanceLimit::Kind::infinite:
      return kInf;
    case ResistanceLimit::Kind::undecided:
      break;
  }
  return std::nullopt;
}

double dimension_or_inf(const GeneratorSpec& gen) {
  if (gen.k == 1) return 0.0;
  if (gen.c == 1.0) return kInf;
  return std::log(static_cast<double>(gen.k)) / std::log(gen.c);
}

// Unbounded case: the resistance recursion decides when it settles; the
// Hausdorff criterion (H¹ finite ⇒ recurrent, dim > 1 ⇒ transient) is the
// fallback. For k-ary trees H¹(E_∞) is finite exactly when c >= k.
void decide_unbounded(const GeneratorSpec& gen, Classification& out) {
  out.compact = false;
  out.resistance_limit = resistance_evidence(gen);
  out.hausdorff_dimension = dimension_or_inf(gen);
  const double k = static_cast<double>(gen.k);
  std::optional<Verdict> by_dimension;
  if (gen.c >= k) {
    by_dimension = Verdict::recurrent;
  } else if (*out.hausdorff_dimension > 1.0) {
    by_dimension = Verdict::transient;
  }
  std::optional<Verdict> by_resistance;
  if (out.resistance_limit) {
    by_resistance = std::isinf(*out.resistance_limit) ? Verdict::recurrent : Verdict::transient;
  }
  if (by_resistance) {
    out.verdict = *by_resistance;
    out.note = "decided by the resistance recursion";
    if (by_dimension && *by_dimension != *by_resistance) out.note += "; disagrees with the dimension criterion";
  } else if (by_dimension) {
    out.verdict = *by_dimension;
    out.note = "decided by the Hausdorff dimension of the ends";
  } else {
    out.verdict = Verdict::undetermined;
    out.note = "dimension 1 with infinite H^1 measure is not decided by the criterion";
  }
  if (gen.c == k) out.note += "; critical case c = k (H^1 finite, bounded by 2k)";
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::positive_recurrent:
      return "positive_recurrent";
    case Verdict::recurrent:
      return "recurrent";
    case Verdict::transient:
      return "transient";
    case Verdict::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

Classification classify_finite(const Tree& t, const SpeedMeasure& nu) {
  nu.validate(t);
  Classification out;
  out.compact = !t.has_open_leaves();
  if (*out.compact) {
    out.verdict = Verdict::positive_recurrent;
    out.note = "bounded and complete, hence compact";
  } else {
    out.verdict = Verdict::transient;
    out.note = "bounded but incomplete (open leaf): killed at the missing boundary point";
  }
  return out;
}

Classification classify_generator(const GeneratorSpec& gen) {
  gen.validate();
  Classification out;
  if (gen.bounded()) {
    out.compact = false;
    out.resistance_limit = resistance_evidence(gen);
    out.verdict = Verdict::transient;
    if (gen.c * gen.k < 1.0) {
      out.note = "bounded and not compact; the completion has finite length and is positive recurrent";
    } else {
      out.note = "bounded and not compact; the length measure of the completion is infinite";
    }
    return out;
  }
  decide_unbounded(gen, out);
  return out;
}

double end_space_dimension(const GeneratorSpec& gen) {
  gen.validate();
  if (!(gen.c > 1.0)) throw InvalidArgument("ends at infinity need c > 1");
  return dimension_or_inf(gen);
}

std::size_t count_end_boxes(const Tree& t, double radius) {
  std::size_t count = 0;
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    if (near(t.depth(v), radius)) ++count;
  }
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const double lo = t.depth(t.parent_of(e));
    const double hi = t.depth(t.child_of(e));
    if (lo < radius && radius < hi && !near(lo, radius) && !near(hi, radius)) ++count;
  }
  return count;
}

double count_end_boxes(const GeneratorSpec& gen, double radius) {
  gen.validate();
  if (radius <= 0.0) return 1.0;
  double count = 1.0;
  double lo = 0.0;
  double len = gen.first_edge;
  for (std::size_t m = 0;; ++m) {
    const double hi = lo + len;
    if (radius < hi || near(hi, radius)) return count;
    if (gen.bounded() && hi == lo) return 0.0;
    count *= gen.k;
    lo = hi;
    len *= gen.c;
    if (m > 100000) throw InvalidArgument("radius beyond the representable range");
  }
}

double box_counting_dimension(const GeneratorSpec& gen, std::size_t depth) {
  gen.validate();
  if (!(gen.c > 1.0)) throw InvalidArgument("box counting of the ends needs c > 1");
  if (depth < 3) throw InvalidArgument("box counting needs depth >= 3");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  constexpr int kScales = 3;
  for (std::size_t m = depth - kScales; m < depth; ++m) {
    const double radius = branch_radius(gen, m);
    const double x = std::log(std::max(radius, 1.0));  // r̄ is capped at 1
    const double y = std::log(count_end_boxes(gen, radius));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = kScales * sxx - sx * sx;
  if (!(denom > 0.0)) throw NumericalError("degenerate box-counting scales");
  return (kScales * sxy - sx * sy) / denom;
}

Classification classify_random_walk(const GeneratorSpec& gen) {
  gen.validate();
  if (gen.c < 1.0) throw InvalidArgument("random-walk criterion needs infinite resistance along every direction (c >= 1)");
  Classification out;
  decide_unbounded(gen, out);
  return out;
}

}  // namespace dendrite

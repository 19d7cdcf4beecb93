#pragma once

// Recurrence and transience of the nu-Brownian motion and of random walks on
// trees: compactness for finite skeletons, resistance and the Hausdorff
// dimension of the ends at infinity for self-similar trees.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dendrite/generator.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/tree.hpp"

namespace dendrite {

enum class Verdict {
  positive_recurrent,
  recurrent,  // null or positive recurrence not separated
  transient,
  undetermined,
};

std::string_view to_string(Verdict v);

struct Classification {
  Verdict verdict = Verdict::undetermined;
  std::optional<bool> compact;
  std::optional<double> resistance_limit;      // +inf when the resistance diverges
  std::optional<double> hausdorff_dimension;   // of (E_∞, r̄); +inf for c == 1, k >= 2
  std::string note;
};

/// Bounded finite skeleton: compact (all leaves closed) gives positive
/// recurrence, any open leaf gives transience. Independent of nu.
Classification classify_finite(const Tree& t, const SpeedMeasure& nu);

/// Classification of the length-measure Brownian motion on the infinite
/// self-similar tree described by `gen`.
Classification classify_generator(const GeneratorSpec& gen);

/// log(k) / log(c) for c > 1.
double end_space_dimension(const GeneratorSpec& gen);

/// Number of r̄-balls of radius 1/radius needed to cover the ends of `t`
/// seen through the truncation, i.e. the number of points at distance
/// `radius` from the root.
std::size_t count_end_boxes(const Tree& t, double radius);

/// Same count for the generator's infinite tree, without building it.
double count_end_boxes(const GeneratorSpec& gen, double radius);

/// Box-counting estimate of the end-space dimension from a depth-n
/// truncation: least-squares slope of log N(ε) against log(1/ε) over the
/// three finest branch-point scales ε = 1/r(ρ, branch point).
double box_counting_dimension(const GeneratorSpec& gen, std::size_t depth);

/// Random walk on the discrete tree whose edge resistances are the
/// generator's edge lengths. Requires c >= 1 (every direction has infinite
/// total resistance).
Classification classify_random_walk(const GeneratorSpec& gen);

}  // namespace dendrite

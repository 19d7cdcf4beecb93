#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "dendrite/tree.hpp"

namespace dendrite {

/// Self-similar k-ary tree: a root edge of length `first_edge`, after which
/// every branch point has k children; edges at level m have length
/// first_edge * c^m, so level m holds k^m edges.
struct GeneratorSpec {
  int k = 2;
  double c = 1.0;
  double first_edge = 1.0;

  /// Throws InvalidArgument unless k >= 1, c > 0 and first_edge > 0.
  void validate() const;
  /// Finite diameter of the infinite tree (c < 1).
  bool bounded() const { return c < 1.0; }
};

/// Truncation of the generator after `depth` levels of edges; the leaves are
/// the depth-`depth` cut set.
Tree build_generator_tree(const GeneratorSpec& gen, std::size_t depth);

/// Effective resistance (edge resistance = length) from the root to the
/// depth-n cut set, by the series-parallel recursion R_m = len_m + R_{m+1}/k.
double effective_resistance_to_depth(const GeneratorSpec& gen, std::size_t depth);

/// Long-run behaviour of effective_resistance_to_depth as depth grows.
struct ResistanceLimit {
  enum class Kind { finite, infinite, undecided };
  Kind kind = Kind::undecided;
  double value = 0.0;       // limit when finite, last partial value otherwise
  std::size_t levels = 0;   // levels examined
};

/// Iterates the resistance recursion level by level (at most `max_levels`).
/// Finite once a level adds less than `rel_tol` of the running total; infinite
/// once the total overflows or the per-level increments stop decreasing over
/// the whole run.
ResistanceLimit resistance_limit(const GeneratorSpec& gen, std::size_t max_levels = 10000,
                                 double rel_tol = 1e-12);

/// Random recursive tree on `n` vertices named v0..v{n-1}, rooted at v0, with
/// edge lengths uniform in [min_len, max_len].
Tree random_tree(std::size_t n, std::mt19937_64& rng, double min_len = 0.5, double max_len = 2.0);

}  // namespace dendrite

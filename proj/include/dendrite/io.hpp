#pragma once

// Tree files and number formatting.
//
// Grammar (UTF-8, line based, '#' starts a comment, whitespace-separated):
//
//   rtree v1
//   vertex <id> [atom <float>] [open]
//   edge <id_u> <id_v> <length> [density <float>]
//   root <id>
//
// Defaults: density 1 (length measure), atom 0. A comment of the form
// `# generator kary k=<int> c=<float> first=<float> depth=<int>` records the
// self-similar generator a truncated tree was built from.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "dendrite/generator.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/tree.hpp"

namespace dendrite {

/// Shortest decimal string that round-trips to `x` (at most 17 significant
/// digits), independent of the global locale.
std::string format_number(double x);

/// `x` rounded to `digits` significant digits (printf %g style, trailing
/// zeros dropped); digits <= 0 means shortest round-trip.
std::string format_number(double x, int digits);

/// Parses a complete token as a double ("inf"/"nan" rejected).
std::optional<double> parse_number(std::string_view token);

/// A vertex name, or `u/v@s` for the point at distance s from u on edge u-v.
PointRef parse_point(const Tree& t, std::string_view text);

struct GeneratorMetadata {
  GeneratorSpec spec;
  std::size_t depth = 0;
};

struct TreeFile {
  Tree tree;
  SpeedMeasure measure;
  std::optional<GeneratorMetadata> generator;
};

TreeFile parse_tree(std::istream& in);
TreeFile parse_tree_string(std::string_view text);
TreeFile load_tree_file(const std::string& path);

/// Canonical serialization: header, optional generator comment, vertices,
/// edges, root. Default-valued atoms and densities are omitted.
std::string serialize_tree(const Tree& t, const SpeedMeasure& nu,
                           const std::optional<GeneratorMetadata>& generator = std::nullopt);

}  // namespace dendrite

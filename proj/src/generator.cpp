#include "dendrite/generator.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dendrite/error.hpp"

namespace dendrite {

void GeneratorSpec::validate() const {
  if (k < 1) throw InvalidArgument("branching number k must be at least 1");
  if (!std::isfinite(c) || !(c > 0.0)) throw InvalidArgument("length ratio c must be positive");
  if (!std::isfinite(first_edge) || !(first_edge > 0.0)) throw InvalidArgument("first edge must be positive");
}

Tree build_generator_tree(const GeneratorSpec& gen, std::size_t depth) {
  gen.validate();
  if (depth == 0) throw InvalidArgument("depth must be at least 1");
  double vertices = 1.0;
  double level_count = 1.0;
  for (std::size_t m = 0; m < depth; ++m) {
    vertices += level_count;
    level_count *= gen.k;
  }
  if (vertices > 5e6) throw InvalidArgument("truncated generator tree too large to build");

  Tree::Builder b;
  const VertexId root = b.add_vertex("root");
  b.set_root(root);
  std::size_t next = 0;
  std::vector<VertexId> frontier{b.add_vertex("n" + std::to_string(next++))};
  b.add_edge(root, frontier.front(), gen.first_edge);
  double len = gen.first_edge;
  for (std::size_t m = 1; m < depth; ++m) {
    len *= gen.c;
    std::vector<VertexId> children;
    children.reserve(frontier.size() * static_cast<std::size_t>(gen.k));
    for (VertexId parent : frontier) {
      for (int j = 0; j < gen.k; ++j) {
        const VertexId child = b.add_vertex("n" + std::to_string(next++));
        b.add_edge(parent, child, len);
        children.push_back(child);
      }
    }
    frontier = std::move(children);
  }
  return std::move(b).build();
}

double effective_resistance_to_depth(const GeneratorSpec& gen, std::size_t depth) {
  gen.validate();
  if (depth == 0) throw InvalidArgument("depth must be at least 1");
  double resistance = 0.0;
  for (std::size_t m = depth; m-- > 0;) {
    resistance = gen.first_edge * std::pow(gen.c, static_cast<double>(m)) + resistance / gen.k;
  }
  return resistance;
}

ResistanceLimit resistance_limit(const GeneratorSpec& gen, std::size_t max_levels, double rel_tol) {
  gen.validate();
  const double ratio = gen.c / gen.k;
  ResistanceLimit out;
  double increment = gen.first_edge;
  double previous_increment = increment;
  bool increments_nondecreasing = true;
  for (std::size_t m = 0; m < max_levels; ++m) {
    out.value += increment;
    out.levels = m + 1;
    if (!std::isfinite(out.value) || out.value > 1e300) {
      out.kind = ResistanceLimit::Kind::infinite;
      return out;
    }
    if (increment < rel_tol * out.value) {
      out.kind = ResistanceLimit::Kind::finite;
      return out;
    }
    if (m > 0 && increment < previous_increment) increments_nondecreasing = false;
    previous_increment = increment;
    increment *= ratio;
  }
  // Non-decreasing increments force linear growth at least, hence divergence.
  out.kind = increments_nondecreasing ? ResistanceLimit::Kind::infinite : ResistanceLimit::Kind::undecided;
  return out;
}

Tree random_tree(std::size_t n, std::mt19937_64& rng, double min_len, double max_len) {
  if (n == 0) throw InvalidArgument("random tree needs at least one vertex");
  std::uniform_real_distribution<double> length(min_len, max_len);
  Tree::Builder b;
  for (std::size_t i = 0; i < n; ++i) b.add_vertex("v" + std::to_string(i));
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    const std::size_t parent = pick(rng);
    b.add_edge(parent, i, length(rng));
  }
  b.set_root(0);
  return std::move(b).build();
}

}  // namespace dendrite

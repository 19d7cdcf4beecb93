#include <doctest.h>

#include <random>
#include <string>

#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/io.hpp"
#include "oracles.hpp"

using namespace dendrite;

TEST_CASE("parses the Y tree") {
  const TreeFile f = parse_tree_string(
      "rtree v1\n"
      "# a comment\n"
      "vertex v0\nvertex v1 atom 0.5\nvertex v2\nvertex v3 open\n"
      "edge v0 v1 1.0\nedge v1 v2 2.0 density 3\nedge v1 v3 3.0\n"
      "root v0\n");
  CHECK(f.tree.vertex_count() == 4);
  CHECK(f.tree.root() == f.tree.vertex("v0"));
  CHECK(f.tree.is_open(f.tree.vertex("v3")));
  CHECK(f.measure.vertex_atom[f.tree.vertex("v1")] == 0.5);
  CHECK(f.measure.edge_density[1] == 3.0);
  CHECK(f.measure.edge_density[0] == 1.0);
  CHECK_FALSE(f.generator.has_value());
}

TEST_CASE("errors carry line and column") {
  try {
    parse_tree_string("rtree v1\nvertex a\nvertex b\nedge a b -1\nroot a\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 10);
  }
  CHECK_THROWS_AS(parse_tree_string("vertex a\nroot a\n"), ParseError);
  CHECK_THROWS_AS(parse_tree_string("rtree v1\nvertex a\n"), ParseError);
  CHECK_THROWS_AS(parse_tree_string("rtree v1\nvertex a\nvertex b\nedge a c 1\nroot a\n"), ParseError);
  CHECK_THROWS_AS(parse_tree_string("rtree v1\nvertex a\nvertex b\nedge a b 1 density -2\nroot a\n"), ParseError);
  CHECK_THROWS_AS(parse_tree_string("rtree v1\nvertex a\nvertex b\nedge a b inf\nroot a\n"), ParseError);
  CHECK_THROWS_AS(parse_tree_string("rtree v1\nvertex a\nvertex b\nvertex c\nedge a b 1\nroot a\n"), ParseError);
  CHECK_THROWS_AS(load_tree_file("/nonexistent/file.rt"), InvalidArgument);
}

TEST_CASE("serialization round-trips random trees bit for bit") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Tree t = random_tree(1 + trial, rng, 1e-3, 1e3);
    SpeedMeasure nu = SpeedMeasure::length_measure(t);
    for (auto& d : nu.edge_density) d = u(rng);
    for (auto& a : nu.vertex_atom) a = u(rng) < 1.0 ? u(rng) : 0.0;
    nu.vertex_atom[0] += 1.0;
    const std::string text = serialize_tree(t, nu);
    const TreeFile back = parse_tree_string(text);
    REQUIRE(back.tree.edge_count() == t.edge_count());
    for (EdgeId e = 0; e < t.edge_count(); ++e) {
      CHECK(back.tree.edge(e).length == t.edge(e).length);
      CHECK(back.measure.edge_density[e] == nu.edge_density[e]);
    }
    for (VertexId v = 0; v < t.vertex_count(); ++v) CHECK(back.measure.vertex_atom[v] == nu.vertex_atom[v]);
    CHECK(serialize_tree(back.tree, back.measure) == text);
  }
}

TEST_CASE("generator comment survives a round trip") {
  const GeneratorSpec gen{3, 1.5, 2.0};
  const Tree t = build_generator_tree(gen, 4);
  const std::string text = serialize_tree(t, SpeedMeasure::length_measure(t), GeneratorMetadata{gen, 4});
  CHECK(text.find("# generator kary k=3 c=1.5 first=2 depth=4") != std::string::npos);
  const TreeFile f = parse_tree_string(text);
  REQUIRE(f.generator.has_value());
  CHECK(f.generator->spec.k == 3);
  CHECK(f.generator->spec.c == 1.5);
  CHECK(f.generator->depth == 4);
  CHECK(f.tree.vertex_count() == 1 + 1 + 3 + 9 + 27);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(0.09999999999999998, 15) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(*parse_number("1e-3") == 1e-3);
  CHECK_FALSE(parse_number("inf").has_value());
  CHECK_FALSE(parse_number("1.0x").has_value());
  CHECK_FALSE(parse_number("").has_value());
}

TEST_CASE("point syntax") {
  const Tree t = oracle::y_tree();
  CHECK(parse_point(t, "v2") == PointRef::at(2));
  CHECK(distance(t, parse_point(t, "v1/v3@1"), PointRef::at(1)) == 1.0);
  CHECK(distance(t, parse_point(t, "v3/v1@1"), PointRef::at(3)) == 1.0);
  CHECK(parse_point(t, "v1/v2@0") == PointRef::at(1));
  CHECK_THROWS_AS(parse_point(t, "v0/v2@1"), InvalidArgument);
  CHECK_THROWS_AS(parse_point(t, "v1/v2@9"), InvalidArgument);
  CHECK_THROWS_AS(parse_point(t, "v1@1"), InvalidArgument);
  CHECK_THROWS_AS(parse_point(t, "q"), InvalidArgument);
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "dendrite/classify.hpp"
#include "dendrite/error.hpp"
#include "dendrite/io.hpp"
#include "dendrite/potential.hpp"
#include "dendrite/simulate.hpp"
#include "dendrite/spectral.hpp"

namespace py = pybind11;
using namespace dendrite;

namespace {

std::vector<PointRef> points(const Tree& t, const std::vector<std::string>& names) {
  std::vector<PointRef> out;
  for (const auto& n : names) out.push_back(parse_point(t, n));
  return out;
}

double default_h(const Tree& t, std::optional<double> h) { return h.value_or(diameter(t) / 100.0); }

py::dict classification(const Classification& c) {
  py::dict d;
  d["verdict"] = std::string(to_string(c.verdict));
  d["compact"] = c.compact;
  d["resistance_limit"] = c.resistance_limit;
  d["hausdorff_dimension"] = c.hausdorff_dimension;
  d["note"] = c.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Brownian motion on metric trees";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TreeFile>(m, "Tree")
      .def_static("parse", [](const std::string& text) { return parse_tree_string(text); }, py::arg("text"))
      .def_static("load", &load_tree_file, py::arg("path"))
      .def_property_readonly("vertex_count", [](const TreeFile& f) { return f.tree.vertex_count(); })
      .def_property_readonly("vertices", [](const TreeFile& f) {
        std::vector<std::string> names;
        for (VertexId v = 0; v < f.tree.vertex_count(); ++v) names.push_back(f.tree.name(v));
        return names;
      })
      .def_property_readonly("total_mass", [](const TreeFile& f) { return total_mass(f.measure, f.tree); })
      .def("diameter", [](const TreeFile& f) { return diameter(f.tree); })
      .def("distance", [](const TreeFile& f, const std::string& x, const std::string& y) {
        return distance(f.tree, parse_point(f.tree, x), parse_point(f.tree, y));
      })
      .def(
          "capacity",
          [](const TreeFile& f, const std::vector<std::string>& a, const std::vector<std::string>& b, double alpha,
             double h) {
            const auto pa = points(f.tree, a), pb = points(f.tree, b);
            return capacity(f.tree, f.measure, pb, pa, alpha, h);
          },
          py::arg("a"), py::arg("b"), py::arg("alpha") = 0.0, py::arg("mesh_h") = 0.0)
      .def("green", [](const TreeFile& f, const std::string& x, const std::string& b, const std::string& y) {
        return green_two_point(f.tree, parse_point(f.tree, x), parse_point(f.tree, b), parse_point(f.tree, y));
      }, py::arg("x"), py::arg("b"), py::arg("y"))
      .def("hitting_probability", [](const TreeFile& f, const std::string& x, const std::string& a,
                                     const std::string& b) {
        return hitting_probability(f.tree, parse_point(f.tree, x), parse_point(f.tree, a), parse_point(f.tree, b));
      }, py::arg("x"), py::arg("a"), py::arg("b"))
      .def(
          "occupation",
          [](const TreeFile& f, const std::string& x, const std::string& b, std::optional<std::vector<double>> values) {
            const PiecewiseLinearFn fn = values ? PiecewiseLinearFn(*values) : PiecewiseLinearFn::constant(f.tree, 1.0);
            return expected_occupation(f.tree, f.measure, parse_point(f.tree, x), parse_point(f.tree, b), fn);
          },
          py::arg("x"), py::arg("b"), py::arg("f") = std::nullopt)
      .def(
          "principal_eigenvalue",
          [](const TreeFile& f, const std::string& b, std::optional<double> h) {
            const PointRef pb[] = {parse_point(f.tree, b)};
            return principal_eigenvalue(f.tree, f.measure, pb, default_h(f.tree, h)).eigenvalue;
          },
          py::arg("b"), py::arg("mesh_h") = std::nullopt)
      .def(
          "eigenvalue_bounds",
          [](const TreeFile& f, const std::string& b, double h) {
            const auto r = eigenvalue_bounds(f.tree, f.measure, parse_point(f.tree, b), h);
            return py::make_tuple(r.lower, r.upper);
          },
          py::arg("b"), py::arg("mesh_h") = 0.0)
      .def(
          "spectral_gap",
          [](const TreeFile& f, std::optional<double> h) {
            return spectral_gap(f.tree, f.measure, default_h(f.tree, h)).eigenvalue;
          },
          py::arg("mesh_h") = std::nullopt)
      .def("classify", [](const TreeFile& f) { return classification(classify_finite(f.tree, f.measure)); })
      .def(
          "simulate_hitting_probability",
          [](const TreeFile& f, const std::string& x, const std::string& a, const std::string& b, double h,
             std::size_t walks, std::uint64_t seed, unsigned threads) {
            WalkConfig cfg;
            cfg.mesh_h = h;
            cfg.n_walks = walks;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.clock = Clock::jump_count_only;
            Estimate e;
            {
              py::gil_scoped_release release;
              e = estimate_hitting_probability(f.tree, f.measure, cfg, parse_point(f.tree, x), parse_point(f.tree, a),
                                               parse_point(f.tree, b));
            }
            return py::make_tuple(e.mean, e.std_error);
          },
          py::arg("x"), py::arg("a"), py::arg("b"), py::arg("mesh_h") = 0.05, py::arg("walks") = 10000,
          py::arg("seed") = 0, py::arg("threads") = 0)
      .def("serialize", [](const TreeFile& f) { return serialize_tree(f.tree, f.measure, f.generator); });

  m.def(
      "kary_tree",
      [](int k, double c, double first, std::size_t depth) {
        const GeneratorSpec gen{k, c, first};
        gen.validate();
        Tree t = build_generator_tree(gen, depth);
        SpeedMeasure nu = SpeedMeasure::length_measure(t);
        return TreeFile{std::move(t), std::move(nu), GeneratorMetadata{gen, depth}};
      },
      py::arg("k"), py::arg("c"), py::arg("first") = 1.0, py::arg("depth") = 6);
  m.def(
      "classify_kary",
      [](int k, double c, bool random_walk) {
        const GeneratorSpec gen{k, c, 1.0};
        return classification(random_walk ? classify_random_walk(gen) : classify_generator(gen));
      },
      py::arg("k"), py::arg("c"), py::arg("random_walk") = false);
  m.def(
      "box_counting_dimension",
      [](int k, double c, std::size_t depth) { return box_counting_dimension(GeneratorSpec{k, c, 1.0}, depth); },
      py::arg("k"), py::arg("c"), py::arg("depth") = 12);
  m.def(
      "effective_resistance",
      [](int k, double c, std::size_t depth) { return effective_resistance_to_depth(GeneratorSpec{k, c, 1.0}, depth); },
      py::arg("k"), py::arg("c"), py::arg("depth"));
}

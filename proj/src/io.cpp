#include "dendrite/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <vector>

#include "dendrite/error.hpp"

namespace dendrite {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_number(double x, int digits) {
  if (digits <= 0) return format_number(x);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, std::min(digits, 17));
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

double number_at(const Token& tok, std::size_t lineno, const char* what) {
  const auto v = parse_number(tok.text);
  if (!v) throw ParseError(lineno, tok.column, std::string("malformed ") + what + " '" + std::string(tok.text) + "'");
  return *v;
}

std::optional<GeneratorMetadata> parse_generator_comment(std::string_view comment, std::size_t lineno) {
  const auto toks = tokenize(comment);
  if (toks.size() < 2 || toks[0].text != "generator" || toks[1].text != "kary") return std::nullopt;
  GeneratorMetadata meta;
  bool has_k = false;
  bool has_c = false;
  for (std::size_t i = 2; i < toks.size(); ++i) {
    const auto eq = toks[i].text.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, toks[i].column + 1, "expected key=value");
    const auto key = toks[i].text.substr(0, eq);
    const Token value{toks[i].text.substr(eq + 1), toks[i].column + 1 + eq + 1};
    const double x = number_at(value, lineno, "generator value");
    if (key == "k") {
      meta.spec.k = static_cast<int>(x);
      has_k = x == std::floor(x);
    } else if (key == "c") {
      meta.spec.c = x;
      has_c = true;
    } else if (key == "first") {
      meta.spec.first_edge = x;
    } else if (key == "depth") {
      meta.depth = static_cast<std::size_t>(x);
    } else {
      throw ParseError(lineno, toks[i].column + 1, "unknown generator key '" + std::string(key) + "'");
    }
  }
  if (!has_k || !has_c) throw ParseError(lineno, 1, "generator comment needs integer k and c");
  try {
    meta.spec.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(lineno, 1, e.what());
  }
  return meta;
}

// Owns its endpoint names: tokens view the current line only.
struct PendingName {
  std::string text;
  std::size_t column;
};

struct PendingEdge {
  PendingName u, v;
  double length;
  double density;
  std::size_t line;
};

}  // namespace

TreeFile parse_tree(std::istream& in) {
  Tree::Builder builder;
  std::vector<double> atoms;
  std::vector<PendingEdge> edges;
  std::optional<std::pair<std::string, std::size_t>> root;
  std::optional<GeneratorMetadata> generator;
  bool header = false;
  std::string raw;
  std::size_t lineno = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) {
      if (auto meta = parse_generator_comment(line.substr(hash + 1), lineno)) generator = meta;
      line = line.substr(0, hash);
    }
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const auto& kw = toks[0].text;

    if (!header) {
      if (kw != "rtree" || toks.size() != 2 || toks[1].text != "v1") {
        throw ParseError(lineno, toks[0].column, "expected header 'rtree v1'");
      }
      header = true;
      continue;
    }

    if (kw == "vertex") {
      if (toks.size() < 2) throw ParseError(lineno, toks[0].column, "vertex needs an id");
      double atom = 0.0;
      bool open = false;
      bool has_atom = false;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        if (toks[i].text == "atom" && !has_atom) {
          if (i + 1 >= toks.size()) throw ParseError(lineno, toks[i].column, "atom needs a value");
          atom = number_at(toks[i + 1], lineno, "atom");
          if (atom < 0.0) throw ParseError(lineno, toks[i + 1].column, "atom must be non-negative");
          has_atom = true;
          ++i;
        } else if (toks[i].text == "open" && !open) {
          open = true;
        } else {
          throw ParseError(lineno, toks[i].column, "unexpected token '" + std::string(toks[i].text) + "'");
        }
      }
      try {
        builder.add_vertex(std::string(toks[1].text), open ? LeafKind::open : LeafKind::closed);
      } catch (const InvalidArgument& e) {
        throw ParseError(lineno, toks[1].column, e.what());
      }
      atoms.push_back(atom);
    } else if (kw == "edge") {
      if (toks.size() != 4 && toks.size() != 6) {
        throw ParseError(lineno, toks[0].column, "expected 'edge <u> <v> <length> [density <float>]'");
      }
      PendingEdge e{{std::string(toks[1].text), toks[1].column}, {std::string(toks[2].text), toks[2].column}, number_at(toks[3], lineno, "length"), 1.0, lineno};
      if (!(e.length > 0.0)) throw ParseError(lineno, toks[3].column, "edge length must be positive");
      if (toks.size() == 6) {
        if (toks[4].text != "density") {
          throw ParseError(lineno, toks[4].column, "unexpected token '" + std::string(toks[4].text) + "'");
        }
        e.density = number_at(toks[5], lineno, "density");
        if (e.density < 0.0) throw ParseError(lineno, toks[5].column, "density must be non-negative");
      }
      edges.push_back(e);
    } else if (kw == "root") {
      if (toks.size() != 2) throw ParseError(lineno, toks[0].column, "expected 'root <id>'");
      if (root) throw ParseError(lineno, toks[0].column, "duplicate root");
      root = {std::string(toks[1].text), lineno};
    } else {
      throw ParseError(lineno, toks[0].column, "unknown keyword '" + std::string(kw) + "'");
    }
  }
  if (!header) throw ParseError(lineno + 1, 1, "missing header 'rtree v1'");
  if (!root) throw ParseError(lineno + 1, 1, "missing 'root' line");

  std::vector<double> densities;
  for (const auto& e : edges) {
    const auto u = builder.find(e.u.text);
    const auto v = builder.find(e.v.text);
    if (!u) throw ParseError(e.line, e.u.column, "unknown vertex '" + e.u.text + "'");
    if (!v) throw ParseError(e.line, e.v.column, "unknown vertex '" + e.v.text + "'");
    try {
      builder.add_edge(*u, *v, e.length);
    } catch (const InvalidArgument& ex) {
      throw ParseError(e.line, e.u.column, ex.what());
    }
    densities.push_back(e.density);
  }
  const auto root_id = builder.find(root->first);
  if (!root_id) throw ParseError(root->second, 6, "unknown root vertex '" + root->first + "'");
  builder.set_root(*root_id);

  try {
    Tree tree = std::move(builder).build();
    SpeedMeasure nu{std::move(densities), std::move(atoms)};
    nu.validate(tree);
    return TreeFile{std::move(tree), std::move(nu), generator};
  } catch (const InvalidArgument& e) {
    throw ParseError(lineno, 1, e.what());
  }
}

TreeFile parse_tree_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_tree(in);
}

TreeFile load_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return parse_tree(in);
}

PointRef parse_point(const Tree& t, std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) return PointRef::at(t.vertex(text));
  const auto slash = text.find('/');
  if (slash == std::string_view::npos || slash > at) {
    throw InvalidArgument("point '" + std::string(text) + "' is not of the form u/v@s");
  }
  const std::string_view un = text.substr(0, slash);
  const std::string_view vn = text.substr(slash + 1, at - slash - 1);
  const VertexId u = t.vertex(un);
  const VertexId v = t.vertex(vn);
  const auto off = parse_number(text.substr(at + 1));
  if (!off) throw InvalidArgument("bad offset in point '" + std::string(text) + "'");
  for (const Incidence& inc : t.incident(u)) {
    if (inc.neighbor != v) continue;
    const Edge& e = t.edge(inc.edge);
    return t.point(inc.edge, e.u == u ? *off : e.length - *off);
  }
  throw InvalidArgument("no edge between '" + std::string(un) + "' and '" + std::string(vn) + "'");
}

std::string serialize_tree(const Tree& t, const SpeedMeasure& nu, const std::optional<GeneratorMetadata>& generator) {
  nu.validate(t);
  std::ostringstream out;
  out << "rtree v1\n";
  if (generator) {
    out << "# generator kary k=" << generator->spec.k << " c=" << format_number(generator->spec.c)
        << " first=" << format_number(generator->spec.first_edge) << " depth=" << generator->depth << '\n';
  }
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    out << "vertex " << t.name(v);
    if (nu.vertex_atom[v] != 0.0) out << " atom " << format_number(nu.vertex_atom[v]);
    if (t.is_open(v)) out << " open";
    out << '\n';
  }
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const Edge& ed = t.edge(e);
    out << "edge " << t.name(ed.u) << ' ' << t.name(ed.v) << ' ' << format_number(ed.length);
    if (nu.edge_density[e] != 1.0) out << " density " << format_number(nu.edge_density[e]);
    out << '\n';
  }
  out << "root " << t.name(t.root()) << '\n';
  return out.str();
}

}  // namespace dendrite

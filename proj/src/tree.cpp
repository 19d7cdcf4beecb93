#include "dendrite/tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "dendrite/error.hpp"

namespace dendrite {

namespace {

bool valid_length(double len) { return std::isfinite(len) && len > 0.0; }

std::vector<double> distances_from(const Tree& t, VertexId source) {
  std::vector<double> dist(t.vertex_count(), -1.0);
  std::vector<VertexId> stack{source};
  dist[source] = 0.0;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    for (const auto& inc : t.incident(v)) {
      if (dist[inc.neighbor] < 0.0) {
        dist[inc.neighbor] = dist[v] + t.edge(inc.edge).length;
        stack.push_back(inc.neighbor);
      }
    }
  }
  return dist;
}

VertexId key_vertex(const Tree& t, const PointRef& p) {
  return p.is_vertex() ? p.vertex() : t.child_of(p.edge());
}

VertexId lowest_common_ancestor(const Tree& t, VertexId a, VertexId b) {
  while (t.level(a) > t.level(b)) a = t.parent(a);
  while (t.level(b) > t.level(a)) b = t.parent(b);
  while (a != b) {
    a = t.parent(a);
    b = t.parent(b);
  }
  return a;
}

}  // namespace

// ---------------------------------------------------------------- Builder

VertexId Tree::Builder::add_vertex(std::string name, LeafKind kind) {
  if (name.empty()) throw InvalidArgument("vertex name must be non-empty");
  if (index_.count(name) != 0) throw InvalidArgument("duplicate vertex '" + name + "'");
  const VertexId id = names_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  kinds_.push_back(kind);
  return id;
}

EdgeId Tree::Builder::add_edge(VertexId u, VertexId v, double length) {
  if (u >= names_.size() || v >= names_.size()) throw InvalidArgument("edge endpoint out of range");
  if (u == v) throw InvalidArgument("self-loop at vertex '" + names_[u] + "'");
  if (!valid_length(length)) {
    throw InvalidArgument("edge " + names_[u] + "-" + names_[v] + " needs a positive finite length");
  }
  edges_.push_back({u, v, length});
  return edges_.size() - 1;
}

EdgeId Tree::Builder::add_edge(std::string_view u, std::string_view v, double length) {
  const auto iu = find(u);
  const auto iv = find(v);
  if (!iu) throw InvalidArgument("unknown vertex '" + std::string(u) + "'");
  if (!iv) throw InvalidArgument("unknown vertex '" + std::string(v) + "'");
  return add_edge(*iu, *iv, length);
}

void Tree::Builder::set_root(std::string_view name) {
  const auto id = find(name);
  if (!id) throw InvalidArgument("unknown root vertex '" + std::string(name) + "'");
  root_ = *id;
}

std::optional<VertexId> Tree::Builder::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Tree Tree::Builder::build() && {
  const std::size_t n = names_.size();
  if (n == 0) throw InvalidArgument("a tree needs at least one vertex");
  if (root_ >= n) throw InvalidArgument("tree has no valid root");
  if (edges_.size() != n - 1) {
    throw InvalidArgument("a tree on " + std::to_string(n) + " vertices needs " + std::to_string(n - 1) +
                          " edges, got " + std::to_string(edges_.size()));
  }
  Tree t;
  t.names_ = std::move(names_);
  t.kinds_ = std::move(kinds_);
  t.edges_ = std::move(edges_);
  t.index_ = std::move(index_);
  t.root_ = root_;
  t.adjacency_.assign(n, {});
  for (EdgeId e = 0; e < t.edges_.size(); ++e) {
    t.adjacency_[t.edges_[e].u].push_back({t.edges_[e].v, e});
    t.adjacency_[t.edges_[e].v].push_back({t.edges_[e].u, e});
  }
  t.index_rooted();
  for (VertexId v = 0; v < n; ++v) {
    if (t.kinds_[v] == LeafKind::open && t.adjacency_[v].size() != 1) {
      throw InvalidArgument("only leaves may be open; '" + t.names_[v] + "' has degree " +
                            std::to_string(t.adjacency_[v].size()));
    }
  }
  return t;
}

// ---------------------------------------------------------------- Tree

void Tree::index_rooted() {
  const std::size_t n = names_.size();
  parent_.assign(n, kNone);
  parent_edge_.assign(n, kNone);
  depth_.assign(n, 0.0);
  level_.assign(n, 0);
  preorder_.clear();
  preorder_.reserve(n);
  std::vector<bool> seen(n, false);
  std::queue<VertexId> queue;
  queue.push(root_);
  seen[root_] = true;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop();
    preorder_.push_back(v);
    for (const auto& inc : adjacency_[v]) {
      if (seen[inc.neighbor]) {
        if (inc.edge != parent_edge_[v]) throw InvalidArgument("edge set contains a cycle");
        continue;
      }
      seen[inc.neighbor] = true;
      parent_[inc.neighbor] = v;
      parent_edge_[inc.neighbor] = inc.edge;
      depth_[inc.neighbor] = depth_[v] + edges_[inc.edge].length;
      level_[inc.neighbor] = level_[v] + 1;
      queue.push(inc.neighbor);
    }
  }
  if (preorder_.size() != n) throw InvalidArgument("edge set is not connected");
}

bool Tree::has_open_leaves() const noexcept {
  return std::find(kinds_.begin(), kinds_.end(), LeafKind::open) != kinds_.end();
}

std::optional<VertexId> Tree::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VertexId Tree::vertex(std::string_view name) const {
  const auto id = find(name);
  if (!id) throw InvalidArgument("unknown vertex '" + std::string(name) + "'");
  return *id;
}

VertexId Tree::child_of(EdgeId e) const {
  const Edge& ed = edges_.at(e);
  return parent_edge_[ed.v] == e ? ed.v : ed.u;
}

VertexId Tree::parent_of(EdgeId e) const {
  const Edge& ed = edges_.at(e);
  return parent_edge_[ed.v] == e ? ed.u : ed.v;
}

double Tree::depth(const PointRef& p) const {
  if (p.is_vertex()) return depth_.at(p.vertex());
  const Edge& ed = edges_.at(p.edge());
  if (parent_of(p.edge()) == ed.u) return depth_[ed.u] + p.offset();
  return depth_[ed.v] + (ed.length - p.offset());
}

PointRef Tree::point(EdgeId e, double offset) const { return canonical(PointRef::on_edge(e, offset)); }

PointRef Tree::canonical(const PointRef& p) const {
  if (p.is_vertex()) {
    if (p.vertex() >= names_.size()) throw InvalidArgument("unknown vertex index " + std::to_string(p.vertex()));
    return p;
  }
  if (p.edge() >= edges_.size()) throw InvalidArgument("unknown edge index " + std::to_string(p.edge()));
  const Edge& ed = edges_[p.edge()];
  const double off = p.offset();
  if (!std::isfinite(off) || off < 0.0 || off > ed.length) {
    throw InvalidArgument("offset " + std::to_string(off) + " outside edge " + names_[ed.u] + "-" + names_[ed.v]);
  }
  if (off == 0.0) return PointRef::at(ed.u);
  if (off == ed.length) return PointRef::at(ed.v);
  return p;
}

Tree Tree::with_lengths(std::span<const double> lengths) const {
  if (lengths.size() != edges_.size()) throw InvalidArgument("one length per edge required");
  Tree t = *this;
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    if (!valid_length(lengths[e])) throw InvalidArgument("edge lengths must be positive and finite");
    t.edges_[e].length = lengths[e];
  }
  t.index_rooted();
  return t;
}

// ---------------------------------------------------------------- metric

PointRef meet(const Tree& t, const PointRef& x0, const PointRef& y0) {
  const PointRef x = t.canonical(x0);
  const PointRef y = t.canonical(y0);
  const VertexId a = key_vertex(t, x);
  const VertexId b = key_vertex(t, y);
  if (a == b) return t.depth(x) <= t.depth(y) ? x : y;
  const VertexId l = lowest_common_ancestor(t, a, b);
  if (l == a) return x;
  if (l == b) return y;
  return PointRef::at(l);
}

PointRef branch_point(const Tree& t, const PointRef& a, const PointRef& b, const PointRef& x) {
  // The median of three points is the deepest of their pairwise meets.
  const PointRef ab = meet(t, a, b);
  const PointRef ax = meet(t, a, x);
  const PointRef bx = meet(t, b, x);
  PointRef best = ab;
  if (t.depth(ax) > t.depth(best)) best = ax;
  if (t.depth(bx) > t.depth(best)) best = bx;
  return best;
}

double distance(const Tree& t, const PointRef& x, const PointRef& y) {
  const PointRef m = meet(t, x, y);
  if (m == t.canonical(x) && m == t.canonical(y)) return 0.0;
  return std::max(0.0, t.depth(x) + t.depth(y) - 2.0 * t.depth(m));
}

bool on_arc(const Tree& t, const PointRef& x, const PointRef& y, const PointRef& m) {
  return branch_point(t, x, y, m) == t.canonical(m);
}

double diameter(const Tree& t) {
  const auto from_root = distances_from(t, t.root());
  const auto far = static_cast<VertexId>(std::max_element(from_root.begin(), from_root.end()) - from_root.begin());
  const auto from_far = distances_from(t, far);
  return *std::max_element(from_far.begin(), from_far.end());
}

// ---------------------------------------------------------------- refinement

PointRef Refinement::map(const PointRef& p) const {
  if (p.is_vertex()) return PointRef::at(vertex_map.at(p.vertex()));
  const auto& c = cuts.at(p.edge());
  const double off = p.offset();
  const auto it = std::lower_bound(c.begin(), c.end(), off);
  const auto idx = static_cast<std::size_t>(it - c.begin());
  if (it != c.end() && *it == off) return PointRef::at(chain[p.edge()][idx]);
  if (idx == 0 || idx == c.size()) throw InvalidArgument("point offset outside its edge");
  return tree.point(sub_edges[p.edge()][idx - 1], off - c[idx - 1]);
}

PointRef Refinement::to_original(const Tree& original, const PointRef& p0) const {
  const PointRef p = tree.canonical(p0);
  if (p.is_vertex()) {
    if (p.vertex() < original.vertex_count()) return p;
    // Chain vertices are never sub-edge starts of another edge, so the
    // sub-edge leaving the vertex along its chain locates it.
    for (const auto& inc : tree.incident(p.vertex())) {
      const EdgeId s = inc.edge;
      if (tree.edge(s).u == p.vertex()) return original.point(origin_edge[s], origin_offset[s]);
    }
    throw InvalidArgument("refined vertex has no origin");
  }
  return original.point(origin_edge[p.edge()], origin_offset[p.edge()] + p.offset());
}

Refinement refine(const Tree& t, double h, std::span<const PointRef> points) {
  if (!std::isfinite(h) || h < 0.0) throw InvalidArgument("mesh size must be finite and non-negative");
  std::vector<std::vector<double>> inserted(t.edge_count());
  for (const auto& p0 : points) {
    const PointRef p = t.canonical(p0);
    if (!p.is_vertex()) inserted[p.edge()].push_back(p.offset());
  }

  Tree::Builder b;
  for (VertexId v = 0; v < t.vertex_count(); ++v) b.add_vertex(t.name(v), t.leaf_kind(v));

  std::vector<std::vector<VertexId>> chain(t.edge_count());
  std::vector<std::vector<double>> cuts(t.edge_count());
  std::vector<EdgeId> origin_edge;
  std::vector<double> origin_offset;
  std::vector<std::vector<EdgeId>> sub_edges(t.edge_count());

  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    const Edge& ed = t.edge(e);
    auto& ins = inserted[e];
    std::sort(ins.begin(), ins.end());
    ins.erase(std::unique(ins.begin(), ins.end()), ins.end());
    std::vector<double> marks{0.0};
    marks.insert(marks.end(), ins.begin(), ins.end());
    marks.push_back(ed.length);

    // Pieces of one segment get the same length (not differences of cuts),
    // so that their common vertices are exactly symmetric.
    auto& c = cuts[e];
    std::vector<double> piece_len;
    c.push_back(0.0);
    for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
      const double lo = marks[s];
      const double hi = marks[s + 1];
      std::size_t pieces = 1;
      if (h > 0.0) pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / h - 1e-9)));
      const double len = (hi - lo) / static_cast<double>(pieces);
      for (std::size_t j = 1; j < pieces; ++j) c.push_back(lo + (hi - lo) * static_cast<double>(j) / pieces);
      c.push_back(hi);
      piece_len.insert(piece_len.end(), pieces, pieces == 1 ? hi - lo : len);
    }

    auto& ch = chain[e];
    ch.push_back(ed.u);
    for (std::size_t j = 1; j + 1 < c.size(); ++j) {
      std::string name = t.name(ed.u) + "~" + t.name(ed.v) + "." + std::to_string(j);
      while (b.find(name)) name += "'";
      ch.push_back(b.add_vertex(std::move(name)));
    }
    ch.push_back(ed.v);
    for (std::size_t j = 0; j + 1 < ch.size(); ++j) {
      sub_edges[e].push_back(b.add_edge(ch[j], ch[j + 1], piece_len[j]));
      origin_edge.push_back(e);
      origin_offset.push_back(c[j]);
    }
  }
  b.set_root(t.root());

  std::vector<VertexId> vertex_map(t.vertex_count());
  for (VertexId v = 0; v < t.vertex_count(); ++v) vertex_map[v] = v;
  return Refinement{std::move(b).build(), std::move(vertex_map), std::move(chain),      std::move(cuts),
                    std::move(sub_edges), std::move(origin_edge), std::move(origin_offset)};
}

Refinement subdivide(const Tree& t, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("subdivision width must be positive");
  return refine(t, h, {});
}

Tree apply_potential(const Tree& t, std::span<const double> phi) {
  if (phi.size() != t.edge_count()) throw InvalidArgument("one potential value per edge required");
  std::vector<double> lengths(t.edge_count());
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    if (!std::isfinite(phi[e])) throw InvalidArgument("potential must be finite on every edge");
    lengths[e] = t.edge(e).length * std::exp(-2.0 * phi[e]);
  }
  return t.with_lengths(lengths);
}

}  // namespace dendrite

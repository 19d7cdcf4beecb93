#pragma once

// Finite rooted metric trees: the skeleton of an R-tree, points on it, and
// the metric calculus (distances, branch points, meets, refinement).

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dendrite {

using VertexId = std::size_t;
using EdgeId = std::size_t;

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Edge {
  VertexId u;
  VertexId v;
  double length;
};

enum class LeafKind { closed, open };

/// A location on a tree: either a vertex or a point strictly inside an edge.
///
/// The offset of an interior point is measured from the edge's `u` endpoint.
/// Values built directly are not validated; pass them through
/// `Tree::canonical` to check them and fold endpoint offsets into vertex form.
class PointRef {
 public:
  static PointRef at(VertexId v) noexcept {
    PointRef p;
    p.vertex_ = v;
    return p;
  }
  static PointRef on_edge(EdgeId e, double offset) noexcept {
    PointRef p;
    p.edge_ = e;
    p.offset_ = offset;
    return p;
  }

  bool is_vertex() const noexcept { return edge_ == kNone; }
  VertexId vertex() const noexcept { return vertex_; }
  EdgeId edge() const noexcept { return edge_; }
  double offset() const noexcept { return offset_; }

  friend bool operator==(const PointRef&, const PointRef&) = default;

 private:
  VertexId vertex_ = kNone;
  EdgeId edge_ = kNone;
  double offset_ = 0.0;
};

struct Incidence {
  VertexId neighbor;
  EdgeId edge;
};

/// Immutable finite weighted tree with a distinguished root.
///
/// Vertex ids are dense indices; each vertex also carries a unique name used
/// by the file format and the CLI. Rooted structure (parent pointers, depth)
/// is computed once at construction.
class Tree {
 public:
  class Builder {
   public:
    VertexId add_vertex(std::string name, LeafKind kind = LeafKind::closed);
    EdgeId add_edge(VertexId u, VertexId v, double length);
    EdgeId add_edge(std::string_view u, std::string_view v, double length);
    void set_root(VertexId root) { root_ = root; }
    void set_root(std::string_view name);
    std::optional<VertexId> find(std::string_view name) const;
    std::size_t vertex_count() const noexcept { return names_.size(); }

    /// Validates connectivity, acyclicity, lengths and leaf kinds.
    Tree build() &&;

   private:
    std::vector<std::string> names_;
    std::vector<LeafKind> kinds_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, VertexId> index_;
    VertexId root_ = kNone;
  };

  std::size_t vertex_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::string& name(VertexId v) const { return names_.at(v); }
  std::optional<VertexId> find(std::string_view name) const;
  /// Like `find`, but throws InvalidArgument for unknown names.
  VertexId vertex(std::string_view name) const;

  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Incidence> incident(VertexId v) const { return adjacency_.at(v); }
  std::size_t degree(VertexId v) const { return adjacency_.at(v).size(); }

  VertexId root() const noexcept { return root_; }
  LeafKind leaf_kind(VertexId v) const { return kinds_.at(v); }
  bool is_open(VertexId v) const { return kinds_.at(v) == LeafKind::open; }
  bool has_open_leaves() const noexcept;

  VertexId parent(VertexId v) const { return parent_.at(v); }
  EdgeId parent_edge(VertexId v) const { return parent_edge_.at(v); }
  /// Endpoint of `e` farther from the root.
  VertexId child_of(EdgeId e) const;
  VertexId parent_of(EdgeId e) const;
  /// Distance from the root.
  double depth(VertexId v) const { return depth_.at(v); }
  double depth(const PointRef& p) const;
  /// Number of edges between v and the root.
  std::size_t level(VertexId v) const { return level_.at(v); }
  /// Vertices ordered so that every parent precedes its children.
  std::span<const VertexId> preorder() const noexcept { return preorder_; }

  /// Validated canonical point on edge `e` at `offset` from its `u` endpoint.
  PointRef point(EdgeId e, double offset) const;
  /// Checks `p` and folds endpoint offsets into vertex form.
  PointRef canonical(const PointRef& p) const;

  /// Same skeleton with new edge lengths (edge ids and vertex ids preserved).
  Tree with_lengths(std::span<const double> lengths) const;

 private:
  Tree() = default;
  void index_rooted();

  std::vector<std::string> names_;
  std::vector<LeafKind> kinds_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
  std::unordered_map<std::string, VertexId> index_;
  VertexId root_ = kNone;
  std::vector<VertexId> parent_;
  std::vector<EdgeId> parent_edge_;
  std::vector<double> depth_;
  std::vector<std::size_t> level_;
  std::vector<VertexId> preorder_;
};

double distance(const Tree& t, const PointRef& x, const PointRef& y);

/// The point c(a,b,x) where the arcs [a,b], [a,x] and [b,x] meet.
PointRef branch_point(const Tree& t, const PointRef& a, const PointRef& b, const PointRef& x);

/// Greatest common lower bound x ∧ y with respect to the root.
PointRef meet(const Tree& t, const PointRef& x, const PointRef& y);

/// True iff m lies on the arc [x, y].
bool on_arc(const Tree& t, const PointRef& x, const PointRef& y, const PointRef& m);

double diameter(const Tree& t);

/// A refined copy of a tree together with the correspondence of points.
///
/// Every original edge e is split into sub-edges along `chain[e]` (vertices
/// from e.u to e.v); sub-edge i runs from chain[e][i] to chain[e][i+1] and
/// its offsets are measured from chain[e][i].
struct Refinement {
  Tree tree;
  std::vector<VertexId> vertex_map;               // original vertex -> refined
  std::vector<std::vector<VertexId>> chain;       // original edge -> vertices u..v
  std::vector<std::vector<double>> cuts;          // original edge -> offsets of chain
  std::vector<std::vector<EdgeId>> sub_edges;     // original edge -> refined edges
  std::vector<EdgeId> origin_edge;                // refined edge -> original edge
  std::vector<double> origin_offset;              // refined edge -> offset of its start

  /// Carries a point of the original tree to the refined tree.
  PointRef map(const PointRef& p) const;
  /// Carries a point of the refined tree back to the original tree.
  PointRef to_original(const Tree& original, const PointRef& p) const;
};

/// Splits every edge into ceil(length/h) equal parts. Isometric.
Refinement subdivide(const Tree& t, double h);

/// Inserts `points` as vertices, then splits every resulting segment into
/// pieces of length at most `h` (no uniform splitting when h == 0).
Refinement refine(const Tree& t, double h, std::span<const PointRef> points);

/// Scale change by a piecewise-constant potential: length_e * exp(-2 phi_e).
Tree apply_potential(const Tree& t, std::span<const double> phi);

}  // namespace dendrite

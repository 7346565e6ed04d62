#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dynmatch {

using Vertex = std::uint32_t;

// Unordered pair stored as (min, max).
struct Edge {
  Vertex u = 0;
  Vertex v = 0;
  auto operator<=>(const Edge&) const = default;
};

// Throws ParameterError on a self-loop.
Edge make_edge(Vertex a, Vertex b);

enum class Side : std::uint8_t { Left, Right };

struct Incidence {
  Vertex nbr;
  std::uint32_t edge_id;
};

class Graph {
 public:
  Graph() = default;
  // Rejects self-loops, duplicates and out-of-range endpoints.
  Graph(std::size_t n, std::vector<Edge> edges);
  // Bipartite-tagged; every edge must cross sides.
  Graph(std::size_t n, std::vector<Edge> edges, std::vector<Side> sides);

  std::size_t vertex_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  // Sorted; an edge's id is its index here.
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t id) const { return edges_[id]; }

  std::span<const Incidence> neighbors(Vertex v) const {
    return {adj_.data() + offs_[v], adj_.data() + offs_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offs_[v + 1] - offs_[v]; }

  std::optional<std::size_t> edge_id(Edge e) const;
  bool has_edge(Edge e) const { return edge_id(e).has_value(); }

  bool bipartite_tagged() const { return !sides_.empty(); }
  Side side(Vertex v) const { return sides_[v]; }
  std::span<const Side> sides() const { return sides_; }

 private:
  void build();

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<Side> sides_;
  std::vector<std::size_t> offs_{0};
  std::vector<Incidence> adj_;
};

// BFS two-colouring; nullopt if an odd cycle exists.
std::optional<std::vector<Side>> two_coloring(std::size_t n, std::span<const Edge> edges);

// Format: "n [bipartite [left_count]]" then one "u v" per line. With
// left_count the left side is [0, left_count); without, sides come from a
// two-colouring.
Graph read_graph(std::istream& in);
void write_graph(std::ostream& out, const Graph& g);

class Matching {
 public:
  Matching() = default;
  // Throws ParameterError if two edges share a vertex.
  explicit Matching(std::vector<Edge> edges);

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  std::span<const Edge> edges() const { return edges_; }
  bool contains(Edge e) const;
  bool valid_in(const Graph& g) const;

  bool operator==(const Matching&) const = default;

 private:
  std::vector<Edge> edges_;
};

Matching read_matching(std::istream& in);
void write_matching(std::ostream& out, const Matching& m);

// Hopcroft-Karp on bipartite-tagged graphs of any size; memoized search over
// vertex masks otherwise (n <= 24, UnsupportedSize beyond).
Matching max_matching_exact(const Graph& g);
Matching hopcroft_karp(const Graph& g);
Matching brute_force_matching(const Graph& g);

// Greedy maximal matching in edge order, then augmenting paths of length 3
// until none remain. At least 2/3 of optimum.
Matching maximal_matching_augmented(const Graph& g);

struct WeightedEdge {
  Edge e;
  double value;
};

class FractionalAssignment {
 public:
  FractionalAssignment() = default;
  // Duplicate edges or negative values throw ParameterError.
  explicit FractionalAssignment(std::vector<WeightedEdge> values);
  // Values aligned with g.edges(); zero entries are dropped.
  static FractionalAssignment from_dense(const Graph& g, std::span<const double> values);

  std::span<const WeightedEdge> values() const { return values_; }
  double at(Edge e) const;

 private:
  std::vector<WeightedEdge> values_;
};

double fractional_size(const FractionalAssignment& f);
// Throws InvalidSupport if f puts a value on a non-edge of g.
bool is_fractional_matching(const FractionalAssignment& f, const Graph& g, double tol = 1e-9);

}  // namespace dynmatch

#include "dynmatch/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

#include "dynmatch/error.hpp"

namespace dynmatch {

Edge make_edge(Vertex a, Vertex b) {
  if (a == b) throw ParameterError("self-loop at vertex " + std::to_string(a));
  return a < b ? Edge{a, b} : Edge{b, a};
}

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) { build(); }

Graph::Graph(std::size_t n, std::vector<Edge> edges, std::vector<Side> sides)
    : n_(n), edges_(std::move(edges)), sides_(std::move(sides)) {
  if (sides_.size() != n_) throw ParameterError("side tag count differs from n");
  build();
  for (const Edge& e : edges_)
    if (sides_[e.u] == sides_[e.v]) throw ParameterError("edge does not cross the bipartition");
}

void Graph::build() {
  for (Edge& e : edges_) {
    e = make_edge(e.u, e.v);
    if (e.v >= n_) throw ParameterError("edge endpoint out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw ParameterError("duplicate edge");
  offs_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) {
    ++offs_[e.u + 1];
    ++offs_[e.v + 1];
  }
  for (std::size_t i = 0; i < n_; ++i) offs_[i + 1] += offs_[i];
  adj_.resize(offs_[n_]);
  std::vector<std::size_t> pos(offs_.begin(), offs_.end() - 1);
  for (std::size_t id = 0; id < edges_.size(); ++id) {
    const Edge& e = edges_[id];
    adj_[pos[e.u]++] = {e.v, static_cast<std::uint32_t>(id)};
    adj_[pos[e.v]++] = {e.u, static_cast<std::uint32_t>(id)};
  }
}

std::optional<std::size_t> Graph::edge_id(Edge e) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it == edges_.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::optional<std::vector<Side>> two_coloring(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<Vertex>> adj(n);
  for (const Edge& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<int> color(n, -1);
  std::vector<Vertex> queue;
  for (Vertex s = 0; s < n; ++s) {
    if (color[s] >= 0) continue;
    color[s] = 0;
    queue.assign(1, s);
    for (std::size_t h = 0; h < queue.size(); ++h) {
      Vertex x = queue[h];
      for (Vertex y : adj[x]) {
        if (color[y] < 0) {
          color[y] = 1 - color[x];
          queue.push_back(y);
        } else if (color[y] == color[x]) {
          return std::nullopt;
        }
      }
    }
  }
  std::vector<Side> sides(n);
  for (std::size_t v = 0; v < n; ++v) sides[v] = color[v] == 0 ? Side::Left : Side::Right;
  return sides;
}

Graph read_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("graph: missing header");
  std::istringstream hs(line);
  std::size_t n;
  if (!(hs >> n)) throw ParseError("graph: bad header");
  std::string tag;
  bool bip = false;
  std::optional<std::size_t> left;
  if (hs >> tag) {
    if (tag != "bipartite") throw ParseError("graph: unknown header tag '" + tag + "'");
    bip = true;
    std::size_t l;
    if (hs >> l) left = l;
  }
  std::vector<Edge> edges;
  long long a, b;
  while (in >> a >> b) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
      throw ParseError("graph: endpoint out of range");
    if (a == b) throw ParseError("graph: self-loop");
    edges.push_back(make_edge(static_cast<Vertex>(a), static_cast<Vertex>(b)));
  }
  if (!in.eof()) throw ParseError("graph: malformed edge line");
  if (!bip) return Graph(n, std::move(edges));
  std::vector<Side> sides;
  if (left) {
    sides.assign(n, Side::Right);
    for (std::size_t v = 0; v < *left && v < n; ++v) sides[v] = Side::Left;
  } else {
    auto c = two_coloring(n, edges);
    if (!c) throw ParseError("graph: tagged bipartite but has an odd cycle");
    sides = std::move(*c);
  }
  return Graph(n, std::move(edges), std::move(sides));
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.vertex_count();
  if (g.bipartite_tagged()) out << " bipartite";
  out << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

Matching::Matching(std::vector<Edge> edges) : edges_(std::move(edges)) {
  for (Edge& e : edges_) e = make_edge(e.u, e.v);
  std::sort(edges_.begin(), edges_.end());
  std::vector<Vertex> ends;
  ends.reserve(2 * edges_.size());
  for (const Edge& e : edges_) {
    ends.push_back(e.u);
    ends.push_back(e.v);
  }
  std::sort(ends.begin(), ends.end());
  if (std::adjacent_find(ends.begin(), ends.end()) != ends.end())
    throw ParameterError("matching edges share a vertex");
}

bool Matching::contains(Edge e) const { return std::binary_search(edges_.begin(), edges_.end(), e); }

bool Matching::valid_in(const Graph& g) const {
  return std::all_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.v < g.vertex_count() && g.has_edge(e);
  });
}

Matching read_matching(std::istream& in) {
  std::size_t k;
  if (!(in >> k)) throw ParseError("matching: missing size header");
  std::vector<Edge> edges;
  long long a, b;
  while (in >> a >> b) {
    if (a < 0 || b < 0 || a == b) throw ParseError("matching: bad edge");
    edges.push_back(make_edge(static_cast<Vertex>(a), static_cast<Vertex>(b)));
  }
  if (!in.eof()) throw ParseError("matching: malformed line");
  if (edges.size() != k) throw ParseError("matching: size header disagrees with edge count");
  try {
    return Matching(std::move(edges));
  } catch (const ParameterError& e) {
    throw ParseError(std::string("matching: ") + e.what());
  }
}

void write_matching(std::ostream& out, const Matching& m) {
  out << m.size() << '\n';
  for (const Edge& e : m.edges()) out << e.u << ' ' << e.v << '\n';
}

namespace {

constexpr std::uint32_t kNone = UINT32_MAX;

struct HopcroftKarp {
  const Graph& g;
  std::vector<Vertex> left;
  std::vector<std::uint32_t> mate;
  std::vector<std::uint32_t> dist;
  std::vector<std::size_t> it;

  explicit HopcroftKarp(const Graph& graph) : g(graph), mate(graph.vertex_count(), kNone) {
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      if (g.side(v) == Side::Left) left.push_back(v);
    dist.assign(g.vertex_count(), kNone);
    it.assign(g.vertex_count(), 0);
  }

  bool bfs() {
    std::vector<Vertex> q;
    bool found = false;
    std::fill(dist.begin(), dist.end(), kNone);
    for (Vertex u : left)
      if (mate[u] == kNone) {
        dist[u] = 0;
        q.push_back(u);
      }
    for (std::size_t h = 0; h < q.size(); ++h) {
      Vertex u = q[h];
      for (const Incidence& inc : g.neighbors(u)) {
        std::uint32_t w = mate[inc.nbr];
        if (w == kNone) {
          found = true;
        } else if (dist[w] == kNone) {
          dist[w] = dist[u] + 1;
          q.push_back(w);
        }
      }
    }
    return found;
  }

  bool dfs(Vertex u) {
    auto nb = g.neighbors(u);
    for (std::size_t& i = it[u]; i < nb.size(); ++i) {
      Vertex r = nb[i].nbr;
      std::uint32_t w = mate[r];
      if (w == kNone || (dist[w] == dist[u] + 1 && dfs(w))) {
        mate[u] = r;
        mate[r] = u;
        ++i;
        return true;
      }
    }
    dist[u] = kNone;
    return false;
  }

  Matching run() {
    while (bfs()) {
      std::fill(it.begin(), it.end(), 0);
      for (Vertex u : left)
        if (mate[u] == kNone) dfs(u);
    }
    std::vector<Edge> out;
    for (Vertex u : left)
      if (mate[u] != kNone) out.push_back(make_edge(u, mate[u]));
    return Matching(std::move(out));
  }
};

}  // namespace

Matching hopcroft_karp(const Graph& g) {
  if (!g.bipartite_tagged()) throw ParameterError("hopcroft_karp needs a bipartite-tagged graph");
  return HopcroftKarp(g).run();
}

Matching brute_force_matching(const Graph& g) {
  const std::size_t n = g.vertex_count();
  if (n > 24) throw UnsupportedSize("exact matching on a general graph limited to n <= 24");
  std::vector<std::uint32_t> nbmask(n, 0);
  for (const Edge& e : g.edges()) {
    nbmask[e.u] |= 1u << e.v;
    nbmask[e.v] |= 1u << e.u;
  }
  // memo[mask] = 1 + max matching inside mask; 0 = unknown.
  std::vector<std::int8_t> memo(std::size_t{1} << n, 0);
  auto solve = [&](auto& self, std::uint32_t mask) -> int {
    if (mask == 0) return 0;
    if (memo[mask]) return memo[mask] - 1;
    const int v = __builtin_ctz(mask);
    const std::uint32_t rest = mask & ~(1u << v);
    int best = self(self, rest);
    for (std::uint32_t c = nbmask[v] & rest; c; c &= c - 1) {
      const int w = __builtin_ctz(c);
      best = std::max(best, 1 + self(self, rest & ~(1u << w)));
    }
    memo[mask] = static_cast<std::int8_t>(best + 1);
    return best;
  };
  std::uint32_t mask = n == 32 ? UINT32_MAX : (1u << n) - 1;
  std::vector<Edge> out;
  while (mask) {
    const int target = solve(solve, mask);
    const int v = __builtin_ctz(mask);
    const std::uint32_t rest = mask & ~(1u << v);
    if (solve(solve, rest) == target) {
      mask = rest;
      continue;
    }
    for (std::uint32_t c = nbmask[v] & rest; c; c &= c - 1) {
      const int w = __builtin_ctz(c);
      if (1 + solve(solve, rest & ~(1u << w)) == target) {
        out.push_back(make_edge(static_cast<Vertex>(v), static_cast<Vertex>(w)));
        mask = rest & ~(1u << w);
        break;
      }
    }
  }
  return Matching(std::move(out));
}

Matching max_matching_exact(const Graph& g) {
  return g.bipartite_tagged() ? hopcroft_karp(g) : brute_force_matching(g);
}

Matching maximal_matching_augmented(const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint32_t> mate(n, kNone);
  for (const Edge& e : g.edges())
    if (mate[e.u] == kNone && mate[e.v] == kNone) {
      mate[e.u] = e.v;
      mate[e.v] = e.u;
    }
  auto free_nbr = [&](Vertex a, Vertex avoid) -> std::uint32_t {
    for (const Incidence& inc : g.neighbors(a))
      if (mate[inc.nbr] == kNone && inc.nbr != avoid) return inc.nbr;
    return kNone;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (Vertex a = 0; a < n; ++a) {
      const std::uint32_t b = mate[a];
      if (b == kNone || b < a) continue;
      // Path x - a = b - y with x, y free.
      for (const Incidence& inc : g.neighbors(a)) {
        const Vertex x = inc.nbr;
        if (mate[x] != kNone) continue;
        const std::uint32_t y = free_nbr(b, x);
        if (y == kNone) continue;
        mate[x] = a;
        mate[a] = x;
        mate[b] = y;
        mate[y] = b;
        changed = true;
        break;
      }
    }
  }
  std::vector<Edge> out;
  for (Vertex v = 0; v < n; ++v)
    if (mate[v] != kNone && v < mate[v]) out.push_back({v, mate[v]});
  return Matching(std::move(out));
}

FractionalAssignment::FractionalAssignment(std::vector<WeightedEdge> values) : values_(std::move(values)) {
  for (auto& w : values_) {
    w.e = make_edge(w.e.u, w.e.v);
    if (!(w.value >= 0)) throw ParameterError("fractional value must be nonnegative");
  }
  std::sort(values_.begin(), values_.end(), [](const auto& a, const auto& b) { return a.e < b.e; });
  for (std::size_t i = 1; i < values_.size(); ++i)
    if (values_[i].e == values_[i - 1].e) throw ParameterError("edge listed twice in assignment");
}

FractionalAssignment FractionalAssignment::from_dense(const Graph& g, std::span<const double> values) {
  if (values.size() != g.edge_count()) throw ParameterError("dense assignment size mismatch");
  std::vector<WeightedEdge> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != 0) out.push_back({g.edge(i), values[i]});
  return FractionalAssignment(std::move(out));
}

double FractionalAssignment::at(Edge e) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), e,
                             [](const WeightedEdge& w, const Edge& x) { return w.e < x; });
  return it != values_.end() && it->e == e ? it->value : 0.0;
}

double fractional_size(const FractionalAssignment& f) {
  double s = 0;
  for (const auto& w : f.values()) s += w.value;
  return s;
}

bool is_fractional_matching(const FractionalAssignment& f, const Graph& g, double tol) {
  std::vector<double> load(g.vertex_count(), 0.0);
  bool ok = true;
  for (const auto& w : f.values()) {
    if (w.e.v >= g.vertex_count() || !g.has_edge(w.e))
      throw InvalidSupport("value on non-edge (" + std::to_string(w.e.u) + "," + std::to_string(w.e.v) + ")");
    if (w.value > 1 + tol) ok = false;
    load[w.e.u] += w.value;
    load[w.e.v] += w.value;
  }
  for (double l : load)
    if (l > 1 + tol) ok = false;
  return ok;
}

}  // namespace dynmatch

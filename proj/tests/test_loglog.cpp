#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "dynmatch/error.hpp"
#include "dynmatch/loglog.hpp"
#include "dynmatch/rng.hpp"

using namespace dynmatch;

namespace {

std::vector<Vertex> identity(std::size_t n) {
  std::vector<Vertex> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<Vertex>(i);
  return s;
}

// All edges inserted, plus a few non-edges inserted and later deleted.
DynamicStream stream_of(const Graph& g, std::uint64_t seed = 0, std::size_t churn = 0) {
  DynamicStream s;
  s.n = g.vertex_count();
  Rng rng(seed);
  std::vector<Edge> ghosts;
  for (std::size_t i = 0; i < churn && s.n >= 2; ++i) {
    Vertex a = static_cast<Vertex>(rng.below(s.n)), b = static_cast<Vertex>(rng.below(s.n));
    if (a == b || g.has_edge(make_edge(a, b))) continue;
    Edge e = make_edge(a, b);
    if (std::find(ghosts.begin(), ghosts.end(), e) != ghosts.end()) continue;
    ghosts.push_back(e);
    s.updates.push_back({UpdateOp::Insert, e.u, e.v});
  }
  for (const Edge& e : g.edges()) s.updates.push_back({UpdateOp::Insert, e.v, e.u});
  for (const Edge& e : ghosts) s.updates.push_back({UpdateOp::Delete, e.v, e.u});
  return s;
}

Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> e;
  for (Vertex a = 0; a < n; ++a)
    for (Vertex b = a + 1; b < n; ++b)
      if (rng.bernoulli(p)) e.push_back({a, b});
  return Graph(n, e);
}

MatcherConfig reference_cfg(std::uint64_t seed) {
  MatcherConfig c;
  c.mode = SketchMode::Reference;
  c.seed = seed;
  return c;
}

bool same_settlement(const SettlementTable& a, const SettlementTable& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].role != b[i].role || a[i].timestamp != b[i].timestamp || a[i].residual_degree != b[i].residual_degree)
      return false;
  return true;
}

}  // namespace

TEST_CASE("batch schedule") {
  SUBCASE("n=16") {
    auto s = batch_schedule(16);
    CHECK(s.sizes == std::vector<std::size_t>{6, 10});
    CHECK(s.cumulative == std::vector<std::size_t>{6, 16});
  }
  SUBCASE("n=65536") {
    auto s = batch_schedule(65536);
    REQUIRE(s.batches() == 4);
    CHECK(s.sizes[0] == 510);
    CHECK(s.cumulative.back() == 65536);
  }
  SUBCASE("telescoped sum is n-2 before the clamp for n = 2^(2^j)") {
    for (int j = 2; j <= 5; ++j) {
      const double n = std::ldexp(1.0, 1 << j);
      const auto s = batch_schedule(static_cast<std::size_t>(n));
      REQUIRE(s.batches() == static_cast<std::size_t>(j));
      double raw = 0;
      for (int i = 1; i <= j; ++i)
        raw += std::round(2 * (std::pow(n, 1 - std::ldexp(1.0, -i)) - std::pow(n, 1 - std::ldexp(1.0, 1 - i))));
      CHECK(raw == n - 2);
      CHECK(s.sizes.back() == static_cast<std::size_t>(std::round(2 * (n / 2 - std::pow(n, 1 - std::ldexp(1.0, 1 - j))))) + 2);
    }
  }
  SUBCASE("small and odd sizes") {
    CHECK(batch_schedule(0).batches() == 0);
    CHECK(batch_schedule(1).sizes == std::vector<std::size_t>{1});
    CHECK(batch_schedule(3).sizes == std::vector<std::size_t>{3});
    CHECK(batch_schedule(4).sizes == std::vector<std::size_t>{4});
    for (std::size_t n : {5u, 17u, 100u, 1000u, 4096u, 10000u}) {
      auto s = batch_schedule(n);
      std::size_t sum = 0;
      for (auto k : s.sizes) sum += k;
      CHECK(sum == n);
      CHECK(s.batches() <= static_cast<std::size_t>(std::ceil(std::log2(std::log2(double(n))))));
    }
  }
}

TEST_CASE("sub-batch groups") {
  CHECK(sub_batches(0).empty());
  CHECK(sub_batches(1) == std::vector<std::size_t>{1});
  CHECK(sub_batches(2) == std::vector<std::size_t>{2});
  CHECK(sub_batches(10) == std::vector<std::size_t>{2, 4, 4});
  CHECK(sub_batches(14) == std::vector<std::size_t>{2, 4, 8});
  for (std::size_t k = 1; k < 300; ++k) {
    auto g = sub_batches(k);
    std::size_t sum = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j + 1 < g.size()) CHECK(g[j] == (std::size_t{2} << j));
      CHECK(g[j] >= 1);
      sum += g[j];
    }
    CHECK(sum == k);
  }
}

TEST_CASE("vert rules") {
  SettlementTable t(4);
  std::vector<std::uint32_t> rank{0, 1, 2, 3};
  t[0] = {Role::Cover, 2, 1};
  t[1] = {Role::Mis, 5, 1};
  CHECK(vert(0, 1, t, rank) == 0);
  CHECK(vert(1, 0, t, rank) == 0);
  t[0] = {Role::Cover, 3, 1};
  t[1] = {Role::Mis, 3, 9};
  CHECK(vert(1, 0, t, rank) == 0);
  t[2] = {Role::Cover, 3, 3};
  t[3] = {Role::Cover, 3, 4};
  CHECK(vert(2, 3, t, rank) == 3);
  t[3].residual_degree = 3;
  CHECK(vert(3, 2, t, rank) == 2);
  rank = {0, 1, 3, 2};
  CHECK(vert(3, 2, t, rank) == 3);
}

TEST_CASE("core pipeline on K_2 and on an empty graph") {
  SUBCASE("K_2") {
    Graph g(2, {{0, 1}});
    auto r = run_core(stream_of(g), {0, 1}, MatcherConfig{});
    REQUIRE_FALSE(r.failed);
    CHECK(r.settlement[0].role == Role::Mis);
    CHECK(r.settlement[0].timestamp == 1);
    CHECK(r.settlement[1].role == Role::Cover);
    CHECK(r.settlement[1].timestamp == 1);
    CHECK(r.settlement[0].residual_degree == 1);
    CHECK(r.settlement[1].residual_degree == 1);
    CHECK(r.sampled_edges == std::vector<Edge>{{0, 1}});
    CHECK(r.matching.size() == 1);
  }
  SUBCASE("no edges") {
    Rng rng(3);
    auto sigma = random_permutation(40, rng);
    auto r = run_core(DynamicStream(40, {}), sigma, MatcherConfig{});
    REQUIRE_FALSE(r.failed);
    for (std::size_t i = 0; i < 40; ++i) {
      CHECK(r.settlement[sigma[i]].role == Role::Mis);
      CHECK(r.settlement[sigma[i]].timestamp == i + 1);
      CHECK(r.settlement[sigma[i]].residual_degree == 0);
    }
    CHECK(r.matching.size() == 0);
  }
  SUBCASE("sigma must be a permutation") {
    CHECK_THROWS_AS(CorePipeline(3, {0, 0, 1}, MatcherConfig{}), ParameterError);
    CHECK_THROWS_AS(CorePipeline(3, {0, 1}, MatcherConfig{}), ParameterError);
  }
}

TEST_CASE("reference-mode settlement equals run_greedy on 100 graphs") {
  int same = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(1234, seed));
    const std::size_t n = 8 + rng.below(249);
    Graph g = random_graph(n, rng.unit() * 0.15, rng);
    auto sigma = random_permutation(n, rng);
    auto greedy = run_greedy(g, 1.0 / 16, sigma);
    auto r = run_core(stream_of(g, seed, 20), sigma, reference_cfg(seed), CoreStage::Residual);
    REQUIRE_FALSE(r.failed);
    same += same_settlement(r.settlement, greedy.settlement);
  }
  CHECK(same == 100);
}

TEST_CASE("sketch-mode settlement at default knobs") {
  int same = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(derive_seed(99, seed));
    const std::size_t n = 8 + rng.below(249);
    Graph g = random_graph(n, rng.unit() * 0.15, rng);
    auto sigma = random_permutation(n, rng);
    MatcherConfig c;
    c.seed = seed;
    auto r = run_core(stream_of(g, seed, 20), sigma, c, CoreStage::Residual, {.strict = false, .faithful = true});
    same += !r.failed && same_settlement(r.settlement, run_greedy(g, 1.0 / 16, sigma).settlement);
  }
  CHECK(same >= 28);
}

TEST_CASE("timestamp pass fixture") {
  // Batch = vertices 0..13: groups {0,1}, {2..5}, {6..13}.
  const std::size_t n = 20;
  PassContext ctx;
  ctx.n = n;
  ctx.scale_n = n;
  auto batch = identity(14);
  SettlementTable table(n);
  table[0] = {Role::Mis, 1, 0};
  table[1] = {Role::Cover, 1, 0};
  table[7] = {Role::Mis, 5, 0};
  table[8] = {Role::Mis, 3, 0};
  table[9] = {Role::Mis, 4, 0};
  std::vector<char> pending(n, 0);
  pending[15] = pending[16] = 1;
  Graph g(n, {{15, 7}, {15, 8}, {15, 9}, {16, 0}, {16, 7}, {17, 18}, {1, 9}, {18, 3}});
  TimestampRecovery pass(ctx, batch, table, pending, 5);
  for (const Edge& e : g.edges()) pass.apply(e.u, e.v, 1);
  pass.apply(17, 8, 1);
  pass.apply(17, 8, -1);
  auto out = pass.finish(table);
  CHECK(table[15].role == Role::Cover);
  CHECK(table[15].timestamp == 3);
  CHECK(table[16].role == Role::Cover);
  CHECK(table[16].timestamp == 1);
  CHECK(table[17].role == Role::Untouched);
  CHECK(table[18].role == Role::Untouched);
  CHECK(table[1].timestamp == 1);
  CHECK(out.resolved == 2);
  CHECK(out.unresolved == 0);
  CHECK(out.pending_missed == 0);
}

TEST_CASE("timestamp pass reports a pending vertex it cannot resolve") {
  PassContext ctx;
  ctx.n = 6;
  ctx.scale_n = 6;
  SettlementTable table(6);
  table[0] = {Role::Mis, 1, 0};
  std::vector<char> pending(6, 0);
  pending[4] = 1;
  auto batch = identity(4);
  TimestampRecovery pass(ctx, batch, table, pending, 1);
  auto out = pass.finish(table);
  CHECK(out.pending_missed == 1);
  CHECK(table[4].role == Role::Untouched);
}

TEST_CASE("residual degrees") {
  SUBCASE("star, centre first") {
    std::vector<Edge> e;
    for (Vertex v = 1; v <= 5; ++v) e.push_back({0, v});
    auto r = run_core(stream_of(Graph(6, e)), identity(6), MatcherConfig{}, CoreStage::Residual);
    REQUIRE_FALSE(r.failed);
    CHECK(r.settlement[0].residual_degree == 5);
    for (Vertex v = 1; v <= 5; ++v) CHECK(r.settlement[v].residual_degree == 1);
  }
  SUBCASE("isolated vertex") {
    auto r = run_core(stream_of(Graph(3, {{0, 1}})), identity(3), MatcherConfig{}, CoreStage::Residual);
    CHECK(r.settlement[2].residual_degree == 0);
  }
}

TEST_CASE("z forced to 1 samples every edge") {
  Rng rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Edge> e;
    for (Vertex a = 0; a < 6; ++a)
      for (Vertex b = 6; b < 12; ++b)
        if (rng.bernoulli(0.4)) e.push_back({a, b});
    Graph g(12, e);
    MatcherConfig c;
    c.c_z = 64;
    c.seed = rep;
    auto r = run_core(stream_of(g, rep, 5), random_permutation(12, rng), c);
    REQUIRE_FALSE(r.failed);
    CHECK(r.sampled_edges.size() == g.edge_count());
    CHECK(r.matching.size() == max_matching_exact(g).size());
  }
}

TEST_CASE("greedy dual mass is dominated by z") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(derive_seed(77, seed));
    const std::size_t n = 16 + rng.below(241);
    Graph g = random_graph(n, 0.02 + rng.unit() * 0.2, rng);
    auto sigma = random_permutation(n, rng);
    auto greedy = run_greedy(g, 1.0 / 16, sigma);
    PassContext ctx;
    ctx.n = n;
    ctx.scale_n = n;
    auto rank = ranks_of(sigma);
    ZSampler zs(ctx, greedy.settlement, rank, seed);
    const double scale = ctx.cfg.c_z * log2n(n);
    for (std::size_t id = 0; id < g.edge_count(); ++id) {
      if (greedy.x[id] == 0) continue;
      const Edge e = g.edge(id);
      CHECK(greedy.x[id] * scale <= zs.z(e.u, e.v) * (1 + 1e-12));
    }
  }
}

TEST_CASE("sampled load per vertex stays within 2 c_z log n") {
  int within = 0;
  const int runs = 100;
  for (int seed = 0; seed < runs; ++seed) {
    GenParams p;
    p.n = 256;
    p.p = 0.2;
    p.deletion_fraction = 0.1;
    p.seed = seed;
    auto s = gen_random(p);
    Rng rng(seed);
    MatcherConfig c;
    c.seed = seed;
    CorePipeline core(p.n, random_permutation(p.n, rng), c);
    SpaceMeter m;
    replay(s, core, m);
    REQUIRE_FALSE(core.failed());
    std::vector<std::size_t> load(p.n, 0);
    for (const Edge& e : core.sampled_edges()) ++load[vert(e.u, e.v, core.settlement(), core.rank())];
    const double cap = 2 * c.c_z * log2n(p.n);
    within += *std::max_element(load.begin(), load.end()) <= cap;
  }
  CHECK(within >= 99);
}

TEST_CASE("core output is a valid matching within the pass bound") {
  for (std::size_t n : {64u, 300u, 1024u}) {
    for (int seed = 0; seed < 4; ++seed) {
      GenParams p;
      p.n = n;
      p.p = 8.0 / n;
      p.bipartite = seed % 2;
      p.deletion_fraction = 0.3;
      p.seed = seed;
      auto s = gen_random(p);
      Graph g = validate_stream(s);
      Rng rng(seed);
      MatcherConfig c;
      c.seed = seed;
      auto r = run_core(s, random_permutation(n, rng), c, CoreStage::Full, {.strict = true});
      REQUIRE_FALSE(r.failed);
      CHECK(r.matching.valid_in(g));
      const int bound = 2 * static_cast<int>(std::ceil(std::log2(std::log2(double(n))))) + 8;
      CHECK(r.stats.passes <= bound);
      CHECK(r.matching.size() > 0);
    }
  }
}

TEST_CASE("batch log as json lines") {
  Rng rng(1);
  Graph g = random_graph(50, 0.1, rng);
  auto r = run_core(stream_of(g), identity(50), MatcherConfig{});
  std::ostringstream out;
  write_batch_log(out, r.log);
  std::size_t lines = 0;
  for (char ch : out.str()) lines += ch == '\n';
  CHECK(lines == r.log.size());
  CHECK(out.str().rfind("{\"batch\":1,", 0) == 0);
}

TEST_CASE("boosting shortcut recovers a small-matching graph exactly") {
  const std::size_t n = 10000;
  std::vector<Edge> e;
  for (Vertex c : {0u, 100u, 200u})
    for (Vertex l = 1; l <= 5; ++l) e.push_back({c, c + l});
  Graph g(n, e);
  auto r = boosted_match(stream_of(g, 5, 40), MatcherConfig{});
  REQUIRE_FALSE(r.failed);
  CHECK(r.stats.shortcut_used);
  CHECK(r.matching.size() == 3);
  CHECK(r.matching.valid_in(g));
  CHECK(r.replay.passes == 1);
}

TEST_CASE("boosting through contraction sub-runs") {
  GenParams p;
  p.n = 512;
  p.p = 4.0 / 512;
  p.bipartite = true;
  p.planted_perfect_matching = true;
  p.deletion_fraction = 0.2;
  p.seed = 11;
  auto s = gen_random(p);
  Graph g = validate_stream(s, generator_sides(p.n));
  MatcherConfig c;
  c.shortcut = false;
  c.c_rep = 1;
  auto r = boosted_match(s, c, {.strict = true});
  REQUIRE_FALSE(r.failed);
  CHECK_FALSE(r.stats.shortcut_used);
  CHECK(r.stats.subruns > 0);
  CHECK(r.stats.best_h_matching > 0);
  CHECK(r.matching.valid_in(g));
  CHECK(r.matching.size() >= p.n / 2 / 50);
  CHECK(r.matching.size() + r.stats.lift_failures == r.stats.best_h_matching);
}

TEST_CASE("boosting below the smallest contraction scale runs uncontracted") {
  Rng rng(21);
  Graph g = random_graph(60, 0.15, rng);
  MatcherConfig c;
  c.shortcut = false;
  c.c_rep = 1;
  auto r = boosted_match(stream_of(g, 4, 10), c);
  REQUIRE_FALSE(r.failed);
  CHECK(r.stats.subruns == 1);
  CHECK(r.matching.valid_in(g));
  CHECK(r.matching.size() > 0);
}

TEST_CASE("fixed seed gives identical results") {
  GenParams p;
  p.n = 200;
  p.p = 0.05;
  p.deletion_fraction = 0.2;
  p.seed = 4;
  auto s = gen_random(p);
  MatcherConfig c;
  c.seed = 17;
  Rng r1(2), r2(2);
  auto a = run_core(s, random_permutation(200, r1), c);
  auto b = run_core(s, random_permutation(200, r2), c);
  CHECK(same_settlement(a.settlement, b.settlement));
  CHECK(a.sampled_edges == b.sampled_edges);
  CHECK(std::equal(a.matching.edges().begin(), a.matching.edges().end(), b.matching.edges().begin(),
                   b.matching.edges().end()));
  CHECK(a.stats.peak_words == b.stats.peak_words);
}

#include "dynmatch/greedy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

GreedyRun run_greedy(const Graph& g, double beta, std::span<const Vertex> sigma) {
  if (!(beta > 0 && beta < 0.125)) throw ParameterError("beta must lie in (0, 1/8)");
  const std::size_t n = g.vertex_count();
  if (sigma.size() != n) throw ParameterError("sigma must be a permutation of the vertices");
  GreedyRun run;
  run.beta = beta;
  run.sigma.assign(sigma.begin(), sigma.end());
  run.settlement.assign(n, {});
  run.x.assign(g.edge_count(), 0.0);
  // Iteration that wrote each edge; 0 = never.
  std::vector<std::uint32_t> written_at(g.edge_count(), 0);
  std::vector<std::uint64_t> deg(n);
  for (Vertex v = 0; v < n; ++v) deg[v] = g.degree(v);
  std::vector<char> alive(n, 1), seen(n, 0);
  auto settle = [&](Vertex v) {
    alive[v] = 0;
    for (const Incidence& inc : g.neighbors(v))
      if (alive[inc.nbr]) --deg[inc.nbr];
  };

  std::uint32_t t = 0;
  for (Vertex u : sigma) {
    if (u >= n || seen[u]) throw ParameterError("sigma must be a permutation of the vertices");
    seen[u] = 1;
    if (!alive[u]) continue;
    ++t;
    IterationRecord rec;
    rec.u = u;
    run.settlement[u] = {Role::Mis, t, deg[u]};
    run.mis.push_back(u);
    for (const Incidence& inc : g.neighbors(u))
      if (alive[inc.nbr]) {
        rec.cover.push_back(inc.nbr);
        run.settlement[inc.nbr] = {Role::Cover, t, deg[inc.nbr]};
        run.cover.push_back(inc.nbr);
      }
    // Degrees here are still those of G^(t): nobody has been removed yet.
    for (Vertex v : rec.cover) {
      const double val = beta / static_cast<double>(deg[v]);
      for (const Incidence& inc : g.neighbors(v)) {
        const Vertex w = inc.nbr;
        if (!alive[w] || deg[w] > deg[v]) continue;
        if (written_at[inc.edge_id] != 0 &&
            (written_at[inc.edge_id] != t || run.x[inc.edge_id] != val))
          throw std::logic_error("edge value set twice with different values or iterations");
        written_at[inc.edge_id] = t;
        run.x[inc.edge_id] = val;
        rec.writes.push_back({inc.edge_id, v, val});
      }
    }
    settle(u);
    for (Vertex v : rec.cover) settle(v);
    run.iterations.push_back(std::move(rec));
  }
  run.y = trim(g, run.x);
  return run;
}

std::vector<double> trim(const Graph& g, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    double sum = 0;
    for (const Incidence& inc : g.neighbors(v)) sum += y[inc.edge_id];
    if (sum <= 1) continue;
    // Neighbour lists are in edge-id order because edges are sorted.
    double budget = 1;
    for (const Incidence& inc : g.neighbors(v)) {
      double& val = y[inc.edge_id];
      val = std::min(val, budget);
      budget -= val;
    }
  }
  return y;
}

FractionalAssignment trim(const FractionalAssignment& x) {
  std::vector<Edge> edges;
  Vertex n = 0;
  for (const auto& w : x.values()) {
    edges.push_back(w.e);
    n = std::max(n, w.e.v + 1);
  }
  Graph g(n, edges);
  std::vector<double> dense;
  for (const auto& w : x.values()) dense.push_back(w.value);
  return FractionalAssignment::from_dense(g, trim(g, dense));
}

bool MonteCarloReport::all_pass() const {
  return std::none_of(rows.begin(), rows.end(), [](const MonteCarloRow& r) { return r.verdict == "fail"; });
}

namespace {

struct Moments {
  double sum = 0, sum2 = 0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0; }
  double se() const {
    if (n < 2) return 0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum2 / n - m * m)) / (n - 1));
  }
};

}  // namespace

MonteCarloReport greedy_montecarlo(const Graph& g, double beta, std::size_t trials, std::uint64_t seed) {
  if (!(beta > 0 && beta < 0.125)) throw ParameterError("beta must lie in (0, 1/8)");
  if (trials < 1) throw ParameterError("trials must be >= 1");
  const double f = (1 - 8 * beta) / (1 - 2 * beta);
  MonteCarloReport rep;
  rep.beta = beta;
  rep.trials = trials;
  Moments sx, sy, sc, d6, d7;
  std::vector<double> ys;
  std::size_t min_cover = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(seed, i));
    auto sigma = random_permutation(g.vertex_count(), rng);
    GreedyRun run = run_greedy(g, beta, sigma);
    double x = 0, y = 0;
    for (double v : run.x) x += v;
    for (double v : run.y) y += v;
    const double c = static_cast<double>(run.cover.size());
    sx.add(x);
    sy.add(y);
    sc.add(c);
    d6.add(x - beta / 2 * c);
    d7.add(y - f * x);
    ys.push_back(y);
    min_cover = std::min(min_cover, run.cover.size());
  }
  if (g.bipartite_tagged() || g.vertex_count() <= 24) {
    rep.mu = max_matching_exact(g).size();
    rep.mu_exact = true;
  } else {
    rep.mu = std::min(min_cover, g.vertex_count() / 2);
  }
  auto verdict = [](const Moments& d) { return d.mean() >= -3 * d.se() ? "pass" : "fail"; };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.rows.push_back({"sum_x", sx.mean(), sx.se(), nan, "-"});
  rep.rows.push_back({"sum_y", sy.mean(), sy.se(), nan, "-"});
  rep.rows.push_back({"cover_size", sc.mean(), sc.se(), nan, "-"});
  rep.rows.push_back({"dual_vs_cover", sx.mean(), d6.se(), beta / 2 * sc.mean(), verdict(d6)});
  rep.rows.push_back({"primal_vs_dual", sy.mean(), d7.se(), f * sx.mean(), verdict(d7)});
  const double b8 = f * beta / 2 * static_cast<double>(rep.mu);
  rep.rows.push_back({rep.mu_exact ? "primal_vs_matching" : "primal_vs_matching_upper", sy.mean(), sy.se(), b8,
                      sy.mean() >= b8 - 3 * sy.se() ? "pass" : "fail"});
  return rep;
}

void write_report_csv(std::ostream& out, const MonteCarloReport& r) {
  out << "#schema=dynmatch.greedy_mc.v1\n";
  out << "quantity,mean,stderr,bound,verdict\n";
  out << std::setprecision(10);
  for (const auto& row : r.rows) {
    out << row.quantity << ',' << row.mean << ',' << row.stderr_ << ',';
    if (std::isnan(row.bound))
      out << '-';
    else
      out << row.bound;
    out << ',' << row.verdict << '\n';
  }
}

}  // namespace dynmatch

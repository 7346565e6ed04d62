#include "dynmatch/stream.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

namespace {

const char* kind_name(StreamError::Kind k) {
  switch (k) {
    case StreamError::Kind::DeleteBeforeInsert: return "delete of an absent edge";
    case StreamError::Kind::DuplicateInsert: return "insert of a present edge";
    case StreamError::Kind::SelfLoop: return "self-loop";
    case StreamError::Kind::OutOfRange: return "vertex out of range";
  }
  return "?";
}

bool parse_update(std::istream& in, EdgeUpdate& e) {
  char op;
  long long a, b;
  if (!(in >> op)) return false;
  if ((op != '+' && op != '-') || !(in >> a >> b) || a < 0 || b < 0)
    throw ParseError("stream: malformed update line");
  e = {op == '+' ? UpdateOp::Insert : UpdateOp::Delete, static_cast<Vertex>(a), static_cast<Vertex>(b)};
  return true;
}

void parse_header(std::istream& in, std::size_t& n, std::size_t& len) {
  if (!(in >> n >> len)) throw ParseError("stream: missing 'n N' header");
}

}  // namespace

StreamError::StreamError(Kind k, std::size_t pos)
    : std::runtime_error(std::string("invalid stream at update ") + std::to_string(pos) + ": " + kind_name(k)),
      kind(k),
      position(pos) {}

FileStreamSource::FileStreamSource(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) throw ParseError("cannot open stream file " + path_);
  parse_header(in, n_, len_);
}

void FileStreamSource::scan(const std::function<void(const EdgeUpdate&)>& fn) const {
  std::ifstream in(path_);
  if (!in) throw ParseError("cannot open stream file " + path_);
  std::size_t n, len, seen = 0;
  parse_header(in, n, len);
  EdgeUpdate e;
  while (parse_update(in, e)) {
    fn(e);
    ++seen;
  }
  if (seen != len) throw ParseError("stream: header length disagrees with update count");
}

Graph validate_stream(const UpdateSource& s, const std::vector<Side>& sides) {
  const std::uint64_t n = s.vertex_count();
  std::unordered_set<std::uint64_t> live;
  std::size_t pos = 0;
  s.scan([&](const EdgeUpdate& e) {
    if (e.u >= n || e.v >= n) throw StreamError(StreamError::Kind::OutOfRange, pos);
    if (e.u == e.v) throw StreamError(StreamError::Kind::SelfLoop, pos);
    const Edge ed = make_edge(e.u, e.v);
    const std::uint64_t key = ed.u * n + ed.v;
    if (e.op == UpdateOp::Insert) {
      if (!live.insert(key).second) throw StreamError(StreamError::Kind::DuplicateInsert, pos);
    } else if (live.erase(key) == 0) {
      throw StreamError(StreamError::Kind::DeleteBeforeInsert, pos);
    }
    ++pos;
  });
  std::vector<Edge> edges;
  edges.reserve(live.size());
  for (std::uint64_t k : live) edges.push_back({static_cast<Vertex>(k / n), static_cast<Vertex>(k % n)});
  if (sides.empty()) return Graph(n, std::move(edges));
  return Graph(n, std::move(edges), sides);
}

DynamicStream read_stream(std::istream& in) {
  DynamicStream s;
  std::size_t len;
  parse_header(in, s.n, len);
  s.updates.reserve(len);
  EdgeUpdate e;
  while (parse_update(in, e)) s.updates.push_back(e);
  if (s.updates.size() != len) throw ParseError("stream: header length disagrees with update count");
  return s;
}

void write_stream(std::ostream& out, const DynamicStream& s) {
  out << s.n << ' ' << s.updates.size() << '\n';
  for (const auto& e : s.updates) out << (e.op == UpdateOp::Insert ? '+' : '-') << ' ' << e.u << ' ' << e.v << '\n';
}

std::vector<Side> generator_sides(std::size_t n) {
  std::vector<Side> s(n, Side::Right);
  for (std::size_t v = 0; v < n / 2; ++v) s[v] = Side::Left;
  return s;
}

DynamicStream gen_random(const GenParams& p) {
  if (p.p && (*p.p < 0 || *p.p > 1)) throw ParameterError("edge probability must lie in [0,1]");
  if (p.p.has_value() == p.m.has_value()) throw ParameterError("give exactly one of p and m");
  if (p.deletion_fraction < 0 || p.deletion_fraction > 1) throw ParameterError("deletion fraction must lie in [0,1]");
  if (p.planted_perfect_matching && (!p.bipartite || p.n % 2)) throw ParameterError("planted matching needs an even bipartite n");
  const std::size_t n = p.n;
  const std::size_t half = n / 2;
  Rng rng(p.seed);
  std::vector<Edge> edges;
  std::vector<char> keep;  // planted edges are never deleted
  std::unordered_set<std::uint64_t> planted;
  if (p.planted_perfect_matching) {
    auto pi = random_permutation(half, rng);
    for (std::size_t i = 0; i < half; ++i) {
      const Edge e{static_cast<Vertex>(i), static_cast<Vertex>(half + pi[i])};
      planted.insert(std::uint64_t{e.u} * n + e.v);
      edges.push_back(e);
      keep.push_back(1);
    }
  }
  auto add = [&](Vertex a, Vertex b) {
    if (planted.count(std::uint64_t{a} * n + b)) return;
    edges.push_back({a, b});
    keep.push_back(0);
  };
  const std::uint64_t pairs = p.bipartite ? std::uint64_t{half} * (n - half) : std::uint64_t{n} * (n - 1) / 2;
  if (p.p) {
    if (*p.p > 0) {
      for (Vertex a = 0; a < (p.bipartite ? half : n); ++a)
        for (Vertex b = p.bipartite ? static_cast<Vertex>(half) : a + 1; b < n; ++b)
          if (rng.unit() < *p.p) add(a, b);
    }
  } else {
    if (*p.m > pairs) throw ParameterError("more edges requested than vertex pairs");
    std::unordered_set<std::uint64_t> chosen;
    while (chosen.size() < *p.m) {
      Vertex a, b;
      if (p.bipartite) {
        a = static_cast<Vertex>(rng.below(half));
        b = static_cast<Vertex>(half + rng.below(n - half));
      } else {
        a = static_cast<Vertex>(rng.below(n));
        b = static_cast<Vertex>(rng.below(n));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
      }
      if (!chosen.insert(std::uint64_t{a} * n + b).second) continue;
      add(a, b);
    }
  }
  struct Event {
    double time;
    std::uint64_t order;
    EdgeUpdate up;
  };
  std::vector<Event> ev;
  ev.reserve(edges.size() * 2);
  std::uint64_t order = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double a = rng.unit();
    ev.push_back({a, order++, {UpdateOp::Insert, edges[i].u, edges[i].v}});
    if (!keep[i] && rng.unit() < p.deletion_fraction) {
      const double d = a + (1 - a) * rng.unit();
      ev.push_back({d, order++, {UpdateOp::Delete, edges[i].u, edges[i].v}});
    }
  }
  std::sort(ev.begin(), ev.end(), [](const Event& x, const Event& y) {
    return x.time != y.time ? x.time < y.time : x.order < y.order;
  });
  DynamicStream s;
  s.n = n;
  s.updates.reserve(ev.size());
  for (const auto& e : ev) s.updates.push_back(e.up);
  return s;
}

void SpaceMeter::begin_pass() { pass_peaks_.push_back(0); }

void SpaceMeter::sample(const SpaceUsage& u) {
  const std::size_t t = u.total();
  if (!pass_peaks_.empty()) pass_peaks_.back() = std::max(pass_peaks_.back(), t);
  if (t > peak_.total()) peak_ = u;
  reference_seen_ |= u.reference > 0;
}

ReplayStats replay(const UpdateSource& s, StreamAlgorithm& alg, SpaceMeter& meter, const ReplayOptions& opt) {
  auto check = [&] {
    const SpaceUsage u = alg.live_words();
    meter.sample(u);
    if (opt.faithful && u.reference > 0)
      throw std::logic_error("faithful run holds reference-mode storage");
    if (opt.strict && u.total() > opt.budget_words) throw BudgetExceeded(u.total(), opt.budget_words);
  };
  ReplayStats st;
  while (!alg.finished()) {
    if (st.passes >= alg.max_passes())
      throw std::logic_error(std::string(alg.name()) + " exceeded its declared pass count");
    ++st.passes;
    meter.begin_pass();
    alg.begin_pass(st.passes);
    check();
    s.scan([&](const EdgeUpdate& e) {
      alg.update(e);
      check();
    });
    alg.end_pass(st.passes);
    check();
  }
  st.peak_words = meter.peak_words();
  st.peak_breakdown = meter.peak_breakdown();
  return st;
}

void write_metrics_header(std::ostream& out) {
  out << "#schema=dynmatch.metrics.v1\n";
  out << "run_id,passes,peak_words,output_size,wall_ms\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.run_id << ',' << r.passes << ',' << r.peak_words << ',' << r.output_size << ','
      << std::fixed << std::setprecision(3) << r.wall_ms << std::defaultfloat << '\n';
}

}  // namespace dynmatch

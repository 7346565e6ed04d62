#include "dynmatch/ahm.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParameterError("not a number: " + std::string(s));
  return v;
}

}  // namespace

Rational parse_rational(std::string_view s) {
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    const std::int64_t den = parse_int(s.substr(slash + 1));
    if (den == 0) throw ParameterError("zero denominator");
    return Rational(parse_int(s.substr(0, slash)), den);
  }
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return Rational(parse_int(s));
  const std::string_view whole = s.substr(0, dot), frac = s.substr(dot + 1);
  if (frac.empty() || frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string_view::npos)
    throw ParameterError("bad decimal: " + std::string(s));
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
  return Rational(w * den + parse_int(frac), den);
}

std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

void AhmParams::validate() const {
  if (r < 0) throw ParameterError("r must be >= 0");
  if (b.size() != static_cast<std::size_t>(r)) throw ParameterError("need exactly r branch sizes");
  if (alpha <= 0 || alpha >= 1) throw ParameterError("alpha must lie in (0, 1)");
  std::size_t n = 1;
  for (std::uint32_t bi : b) {
    const Rational a = alpha * static_cast<std::int64_t>(bi);
    if (bi == 0 || a.denominator() != 1) throw ParameterError("b_i * alpha must be an integer");
    if (n > (std::size_t{1} << 24) / bi) throw ParameterError("n_r too large");
    n *= bi;
  }
}

std::size_t AhmParams::n(int level) const {
  std::size_t v = 1;
  for (int i = 0; i < level; ++i) v *= b[i];
  return v;
}

std::size_t AhmParams::non_special(int level) const {
  return static_cast<std::size_t>(boost::rational_cast<std::int64_t>(alpha * static_cast<std::int64_t>(b[level - 1])));
}

std::size_t AhmParams::k(int level) const { return b[level - 1] - non_special(level); }

std::size_t AhmParams::special_base_count() const {
  std::size_t c = 1;
  for (int l = 1; l <= r; ++l) c *= k(l);
  return c;
}

AhmParams ahm_preset(std::string_view name) {
  AhmParams p;
  if (name == "r1") {
    p.r = 1;
    p.b = {8};
  } else if (name == "r3") {
    p.r = 3;
    p.b = {4, 4, 4};
  } else {
    throw ParameterError("unknown preset: " + std::string(name));
  }
  return p;
}

namespace {

AhmNode sample_node(const AhmParams& p, int level, Rng& rng) {
  AhmNode node;
  if (level == 0) {
    node.bit = static_cast<std::uint8_t>(rng.below(2));
    return node;
  }
  const std::size_t b = p.b[level - 1];
  node.sigma_r = random_permutation(b, rng);
  node.sigma_c = random_permutation(b, rng);
  for (auto& v : node.sigma_r) ++v;
  for (auto& v : node.sigma_c) ++v;
  node.children.reserve(b * b);
  for (std::size_t c = 0; c < b * b; ++c) node.children.push_back(sample_node(p, level - 1, rng));
  return node;
}

void collect_bits(const AhmNode& node, int level, std::vector<std::uint8_t>& out) {
  if (level == 0) {
    out.push_back(node.bit);
    return;
  }
  for (const auto& c : node.children) collect_bits(c, level - 1, out);
}

}  // namespace

AhmInstance sample_instance(const AhmParams& p, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  return {p, seed, sample_node(p, p.r, rng)};
}

std::vector<std::uint8_t> base_bits(const AhmInstance& inst) {
  std::vector<std::uint8_t> out;
  collect_bits(inst.root, inst.params.r, out);
  return out;
}

void write_instance(std::ostream& out, const AhmInstance& inst, bool dump_bits) {
  out << inst.params.r << ' ' << format_rational(inst.params.alpha);
  for (auto bi : inst.params.b) out << ' ' << bi;
  out << ' ' << inst.seed << '\n';
  if (!dump_bits) return;
  const auto bits = base_bits(inst);
  out << "bits " << bits.size() << '\n';
  for (auto x : bits) out << static_cast<char>('0' + x);
  out << '\n';
}

AhmInstance read_instance(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty instance file");
  std::istringstream hs(line);
  AhmParams p;
  std::string alpha;
  if (!(hs >> p.r >> alpha) || p.r < 0 || p.r > 16) throw ParseError("bad instance header");
  try {
    p.alpha = parse_rational(alpha);
  } catch (const ParameterError& e) {
    throw ParseError(e.what());
  }
  std::vector<std::uint64_t> rest;
  std::uint64_t v;
  while (hs >> v) rest.push_back(v);
  if (!hs.eof() || rest.size() != static_cast<std::size_t>(p.r) + 1) throw ParseError("bad instance header");
  for (int i = 0; i < p.r; ++i) p.b.push_back(static_cast<std::uint32_t>(rest[i]));
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ParseError(e.what());
  }
  AhmInstance inst = sample_instance(p, rest.back());
  std::string tag;
  std::size_t count = 0;
  if (in >> tag) {
    std::string bits;
    if (tag != "bits" || !(in >> count >> bits) || bits.size() != count) throw ParseError("bad bit dump");
    const auto expect = base_bits(inst);
    if (count != expect.size()) throw ParseError("bit dump has the wrong length");
    for (std::size_t i = 0; i < count; ++i)
      if (bits[i] != static_cast<char>('0' + expect[i])) throw ParseError("bit dump does not match the seed");
  }
  return inst;
}

void bit_graph(const AhmLayout& lay, std::size_t tl, std::size_t tr, std::uint8_t x, std::vector<Edge>& out) {
  if (x == 0) {
    out.push_back({lay.left(tl, 0), lay.right(tr, 0)});
    out.push_back({lay.left(tl, 1), lay.right(tr, 1)});
  } else {
    out.push_back({lay.left(tl, 0), lay.right(tr, 1)});
    out.push_back({lay.left(tl, 1), lay.right(tr, 0)});
  }
}

void ahm_edges(const AhmParams& p, const AhmLayout& lay, const AhmNode& node, int level, EdgeInput z,
               std::size_t tl, std::size_t tr, std::vector<Edge>& out) {
  if (z == EdgeInput::Empty) return;
  if (z == EdgeInput::Ones || z == EdgeInput::Zeros) {
    const std::size_t n = p.n(level);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t c = 0; c < n; ++c) bit_graph(lay, tl + a, tr + c, z == EdgeInput::Ones, out);
    return;
  }
  if (level == 0) {
    if (z == EdgeInput::B) bit_graph(lay, tl, tr, node.bit, out);
    return;
  }
  const std::size_t b = p.b[level - 1], m = p.n(level - 1), a = p.non_special(level);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const AhmNode& child = node.children[i * b + j];
      const std::size_t cl = tl + i * m, cr = tr + j * m;
      if (z == EdgeInput::A) {
        ahm_edges(p, lay, child, level - 1, EdgeInput::B, cl, cr, out);
        continue;
      }
      const std::size_t sr = node.sigma_r[i], sc = node.sigma_c[j];
      if (sr > a && sc > a) {
        ahm_edges(p, lay, child, level - 1, sr != sc ? EdgeInput::B : EdgeInput::A, cl, cr, out);
      } else if (level % 2 == 0) {
        ahm_edges(p, lay, child, level - 1, EdgeInput::Ones, cl, cr, out);
        ahm_edges(p, lay, child, level - 1, EdgeInput::Zeros, cl, cr, out);
      }
    }
}

namespace {

std::vector<Edge> normalized(std::vector<Edge> e) {
  for (auto& x : e) x = make_edge(x.u, x.v);
  std::sort(e.begin(), e.end());
  if (std::adjacent_find(e.begin(), e.end()) != e.end()) throw std::logic_error("EDGES produced a repeated edge");
  return e;
}

// (E_ins, E_del) by the parity rule.
std::pair<std::vector<Edge>, std::vector<Edge>> ins_del(const AhmParams& p, const AhmLayout& lay, const AhmNode& node,
                                                        int level, std::size_t tl, std::size_t tr) {
  std::vector<Edge> ea, eb;
  ahm_edges(p, lay, node, level, EdgeInput::A, tl, tr, ea);
  ahm_edges(p, lay, node, level, EdgeInput::B, tl, tr, eb);
  ea = normalized(std::move(ea));
  eb = normalized(std::move(eb));
  if (level % 2 == 1) return {std::move(ea), std::move(eb)};
  return {std::move(eb), std::move(ea)};
}

void collect_specials(const AhmParams& p, const AhmLayout& lay, const AhmNode& node, int level, std::size_t tl,
                      std::size_t tr, std::vector<std::uint32_t>& addr, std::vector<SpecialBase>& out) {
  if (level == 0) {
    out.push_back({addr, lay.left(tl, 0), lay.left(tl, 1), lay.right(tr, 0), lay.right(tr, 1), node.bit});
    return;
  }
  const std::size_t b = p.b[level - 1], m = p.n(level - 1), a = p.non_special(level);
  for (std::size_t k = 1; k <= p.k(level); ++k) {
    const auto i = std::find(node.sigma_r.begin(), node.sigma_r.end(), a + k) - node.sigma_r.begin();
    const auto j = std::find(node.sigma_c.begin(), node.sigma_c.end(), a + k) - node.sigma_c.begin();
    addr.push_back(static_cast<std::uint32_t>(k));
    collect_specials(p, lay, node.children[i * b + j], level - 1, tl + i * m, tr + j * m, addr, out);
    addr.pop_back();
  }
}

}  // namespace

std::vector<Edge> block_graph(const AhmParams& p, const AhmLayout& lay, const AhmNode& node, int level,
                              std::size_t tl, std::size_t tr) {
  auto [ins, del] = ins_del(p, lay, node, level, tl, tr);
  std::vector<Edge> out;
  std::set_difference(ins.begin(), ins.end(), del.begin(), del.end(), std::back_inserter(out));
  return out;
}

std::vector<Side> ConstructedGraph::sides() const {
  std::vector<Side> s(layout.vertex_count(), Side::Right);
  std::fill(s.begin(), s.begin() + 2 * layout.n_r, Side::Left);
  return s;
}

Graph ConstructedGraph::final_graph() const {
  std::vector<Edge> out;
  std::set_difference(e_ins.begin(), e_ins.end(), e_del.begin(), e_del.end(), std::back_inserter(out));
  return Graph(layout.vertex_count(), out, sides());
}

std::size_t ConstructedGraph::address_index(const std::vector<std::uint32_t>& address) const {
  if (address.size() != static_cast<std::size_t>(params.r)) throw ParameterError("address length must be r");
  std::size_t idx = 0;
  for (int pos = 0; pos < params.r; ++pos) {
    const int level = params.r - pos;
    const std::size_t k = params.k(level);
    if (address[pos] < 1 || address[pos] > k) throw ParameterError("address component out of range");
    idx = idx * k + (address[pos] - 1);
  }
  return idx;
}

ConstructedGraph build_graph(const AhmInstance& inst) {
  const AhmParams& p = inst.params;
  p.validate();
  ConstructedGraph g;
  g.params = p;
  g.layout.n_r = p.n(p.r);
  std::tie(g.e_ins, g.e_del) = ins_del(p, g.layout, inst.root, p.r, 0, 0);
  if (!std::includes(g.e_ins.begin(), g.e_ins.end(), g.e_del.begin(), g.e_del.end()))
    throw std::logic_error("deleted edges are not a subset of inserted edges");
  std::vector<std::uint32_t> addr;
  collect_specials(p, g.layout, inst.root, p.r, 0, 0, addr, g.specials);
  if (p.r >= 1) {
    const std::size_t b = p.b[p.r - 1], m = p.n(p.r - 1), a = p.non_special(p.r);
    g.special_block.assign(b * b, 0);
    for (std::size_t i = 0; i < b; ++i) {
      if (inst.root.sigma_r[i] > a)
        for (std::size_t t = i * m; t < (i + 1) * m; ++t)
          for (int c = 0; c < 2; ++c) g.spec_left.push_back(g.layout.left(t, c));
      if (inst.root.sigma_c[i] > a)
        for (std::size_t t = i * m; t < (i + 1) * m; ++t)
          for (int c = 0; c < 2; ++c) g.spec_right.push_back(g.layout.right(t, c));
      for (std::size_t j = 0; j < b; ++j)
        g.special_block[i * b + j] = inst.root.sigma_r[i] > a && inst.root.sigma_r[i] == inst.root.sigma_c[j];
    }
  }
  return g;
}

DynamicStream to_stream(const ConstructedGraph& g, std::uint64_t order_seed) {
  if (g.params.r % 2 == 0) throw UnsupportedSize("only odd r yields an insert-then-delete stream");
  std::vector<Edge> ins = g.e_ins, del = g.e_del;
  Rng r1(derive_seed(order_seed, 1)), r2(derive_seed(order_seed, 2));
  r1.shuffle(ins);
  r2.shuffle(del);
  DynamicStream s;
  s.n = g.layout.vertex_count();
  s.updates.reserve(ins.size() + del.size());
  for (const Edge& e : ins) s.updates.push_back({UpdateOp::Insert, e.u, e.v});
  for (const Edge& e : del) s.updates.push_back({UpdateOp::Delete, e.u, e.v});
  return s;
}

std::vector<std::uint32_t> sample_search_sequence(const AhmParams& p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint32_t> s;
  for (int level = p.r; level >= 1; --level) s.push_back(static_cast<std::uint32_t>(rng.below(p.k(level)) + 1));
  return s;
}

std::vector<BitGuess> decode_bits(const Matching& m, const ConstructedGraph& g) {
  std::vector<BitGuess> out;
  out.reserve(g.specials.size());
  for (const auto& s : g.specials) {
    if (m.contains(make_edge(s.l1, s.r1)) || m.contains(make_edge(s.l2, s.r2)))
      out.push_back(BitGuess::Zero);
    else if (m.contains(make_edge(s.l1, s.r2)) || m.contains(make_edge(s.l2, s.r1)))
      out.push_back(BitGuess::One);
    else
      out.push_back(BitGuess::Unknown);
  }
  return out;
}

IdentificationScore score_identification(const Matching& m, const ConstructedGraph& g) {
  IdentificationScore sc;
  const auto guesses = decode_bits(m, g);
  for (std::size_t i = 0; i < guesses.size(); ++i) {
    if (guesses[i] == BitGuess::Unknown)
      ++sc.unknown;
    else if (static_cast<std::uint8_t>(guesses[i]) == g.specials[i].bit)
      ++sc.correct;
    else
      ++sc.wrong;
  }
  const double nr = static_cast<double>(g.layout.n_r);
  const double alpha = boost::rational_cast<double>(g.params.alpha);
  if (m.empty()) {
    sc.beta = std::numeric_limits<double>::infinity();
    sc.bound = -nr * 2 * alpha * g.params.r;
    return sc;
  }
  sc.beta = 2 * nr / static_cast<double>(m.size());
  sc.bound = nr * (1 / sc.beta - 2 * alpha * g.params.r);
  sc.verdict = static_cast<double>(sc.correct) >= sc.bound;
  return sc;
}

Matching exact_stream_matcher(const DynamicStream& s, const std::vector<Side>& sides) {
  return hopcroft_karp(validate_stream(s, sides));
}

ReductionTrial run_reduction_trial(const AhmParams& p, std::uint64_t seed, const StreamMatcher& matcher) {
  const AhmInstance inst = sample_instance(p, derive_seed(seed, 0));
  const ConstructedGraph g = build_graph(inst);
  const DynamicStream s = to_stream(g, derive_seed(seed, 1));
  const Matching m = matcher(s, g.sides());
  ReductionTrial t;
  t.search = sample_search_sequence(p, derive_seed(seed, 2));
  const std::size_t idx = g.address_index(t.search);
  t.truth = g.specials[idx].bit;
  t.decoded = decode_bits(m, g)[idx];
  Rng coin(derive_seed(seed, 3));
  const auto flip = static_cast<std::uint8_t>(coin.below(2));
  t.answer = t.decoded == BitGuess::Unknown ? flip : static_cast<std::uint8_t>(t.decoded);
  t.success = t.answer == t.truth;
  return t;
}

}  // namespace dynmatch

#include <doctest.h>

#include <set>
#include <sstream>

#include "dynmatch/ahm.hpp"
#include "dynmatch/error.hpp"

using namespace dynmatch;

namespace {

std::vector<Edge> induced(const Graph& g, const std::vector<Vertex>& vs) {
  std::set<Vertex> in(vs.begin(), vs.end());
  std::vector<Edge> out;
  for (const Edge& e : g.edges())
    if (in.count(e.u) && in.count(e.v)) out.push_back(e);
  return out;
}

std::vector<Edge> sorted(std::vector<Edge> e) {
  for (auto& x : e) x = make_edge(x.u, x.v);
  std::sort(e.begin(), e.end());
  return e;
}

AhmParams params(int r, std::vector<std::uint32_t> b, Rational alpha = {1, 4}) {
  AhmParams p;
  p.r = r;
  p.b = std::move(b);
  p.alpha = alpha;
  return p;
}

}  // namespace

TEST_CASE("rational parsing") {
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("1/4") == Rational(1, 4));
  CHECK(parse_rational("2/8") == Rational(1, 4));
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational(".5") == Rational(1, 2));
  CHECK(format_rational(Rational(2, 8)) == "1/4");
  CHECK_THROWS_AS(parse_rational("x"), ParameterError);
  CHECK_THROWS_AS(parse_rational("1/0"), ParameterError);
  CHECK_THROWS_AS(parse_rational("0.2.5"), ParameterError);
}

TEST_CASE("parameter integrality") {
  CHECK_NOTHROW(ahm_preset("r1").validate());
  CHECK_NOTHROW(ahm_preset("r3").validate());
  CHECK_THROWS_AS(params(1, {7}).validate(), ParameterError);
  CHECK_THROWS_AS(params(1, {8}, Rational(1)).validate(), ParameterError);
  CHECK_THROWS_AS(params(1, {8}, Rational(0)).validate(), ParameterError);
  CHECK_THROWS_AS(params(2, {8}).validate(), ParameterError);
  CHECK_THROWS_AS(ahm_preset("r9"), ParameterError);
  auto p = ahm_preset("r3");
  CHECK(p.n(3) == 64);
  CHECK(p.k(2) == 3);
  CHECK(p.non_special(1) == 1);
}

TEST_CASE("sample_instance examples") {
  SUBCASE("r=0") {
    auto inst = sample_instance(params(0, {}), 5);
    CHECK(inst.root.children.empty());
    CHECK(base_bits(inst).size() == 1);
  }
  SUBCASE("r=1 preset") {
    auto inst = sample_instance(ahm_preset("r1"), 5);
    CHECK(inst.root.children.size() == 64);
    auto sr = inst.root.sigma_r, sc = inst.root.sigma_c;
    std::sort(sr.begin(), sr.end());
    std::sort(sc.begin(), sc.end());
    CHECK(sr == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(sc == sr);
    CHECK(build_graph(inst).specials.size() == 6);
  }
  SUBCASE("r=3 preset") {
    auto inst = sample_instance(ahm_preset("r3"), 5);
    CHECK(base_bits(inst).size() == 4096);
    CHECK(build_graph(inst).specials.size() == 27);
    CHECK(ahm_preset("r3").special_base_count() == 27);
  }
  SUBCASE("base bits are balanced") {
    std::size_t ones = 0;
    for (std::uint64_t s = 0; s < 10; ++s)
      for (auto x : base_bits(sample_instance(ahm_preset("r3"), s))) ones += x;
    CHECK(ones > 20480 - 600);
    CHECK(ones < 20480 + 600);
  }
  SUBCASE("same seed, same instance") {
    CHECK(base_bits(sample_instance(ahm_preset("r3"), 9)) == base_bits(sample_instance(ahm_preset("r3"), 9)));
    CHECK(base_bits(sample_instance(ahm_preset("r3"), 9)) != base_bits(sample_instance(ahm_preset("r3"), 10)));
  }
}

TEST_CASE("EDGES at r=0") {
  const AhmParams p = params(0, {});
  const AhmLayout lay{1};
  AhmNode zero, one;
  one.bit = 1;
  std::vector<Edge> e;
  ahm_edges(p, lay, zero, 0, EdgeInput::B, 0, 0, e);
  CHECK(e == std::vector<Edge>{{0, 2}, {1, 3}});
  e.clear();
  ahm_edges(p, lay, one, 0, EdgeInput::B, 0, 0, e);
  CHECK(e == std::vector<Edge>{{0, 3}, {1, 2}});
  e.clear();
  ahm_edges(p, lay, one, 0, EdgeInput::A, 0, 0, e);
  ahm_edges(p, lay, one, 0, EdgeInput::Empty, 0, 0, e);
  CHECK(e.empty());
  ahm_edges(p, lay, one, 0, EdgeInput::Ones, 0, 0, e);
  ahm_edges(p, lay, one, 0, EdgeInput::Zeros, 0, 0, e);
  CHECK(sorted(e) == std::vector<Edge>{{0, 2}, {0, 3}, {1, 2}, {1, 3}});
}

TEST_CASE("all-ones at level 2 covers every base pair") {
  const AhmParams p = params(2, {4, 4});
  const AhmLayout lay{16};
  std::vector<Edge> e;
  ahm_edges(p, lay, AhmNode{}, 2, EdgeInput::Ones, 0, 0, e);
  CHECK(e.size() == 2 * 16 * 16);
}

TEST_CASE("deletions are contained in insertions") {
  for (const auto& p : {params(0, {}), ahm_preset("r1"), params(2, {4, 4}), ahm_preset("r3"), params(1, {6}, Rational(1, 3))})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto g = build_graph(sample_instance(p, seed));
      CHECK(std::includes(g.e_ins.begin(), g.e_ins.end(), g.e_del.begin(), g.e_del.end()));
    }
}

TEST_CASE("special vertices induce the special children") {
  for (const auto& p : {ahm_preset("r1"), params(2, {4, 4}), ahm_preset("r3")})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto inst = sample_instance(p, seed);
      auto g = build_graph(inst);
      std::vector<Vertex> spec = g.spec_left;
      spec.insert(spec.end(), g.spec_right.begin(), g.spec_right.end());
      const std::size_t b = p.b[p.r - 1], m = p.n(p.r - 1);
      std::vector<Edge> expect;
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          if (!g.special_block[i * b + j]) continue;
          auto part = block_graph(p, g.layout, inst.root.children[i * b + j], p.r - 1, i * m, j * m);
          expect.insert(expect.end(), part.begin(), part.end());
        }
      CHECK(induced(g.final_graph(), spec) == sorted(expect));
    }
}

TEST_CASE("special base vertices induce exactly their bit graphs") {
  for (const auto& p : {ahm_preset("r1"), params(2, {4, 4}), ahm_preset("r3")})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto g = build_graph(sample_instance(p, seed));
      std::vector<Vertex> star;
      std::vector<Edge> bits;
      for (const auto& s : g.specials) {
        star.insert(star.end(), {s.l1, s.l2, s.r1, s.r2});
        bit_graph(g.layout, s.l1 / 2, (s.r1 - 2 * g.layout.n_r) / 2, s.bit, bits);
      }
      CHECK(std::set<Vertex>(star.begin(), star.end()).size() == star.size());
      auto sub = induced(g.final_graph(), star);
      CHECK(sub.size() == 2 * g.specials.size());
      CHECK(sub == sorted(bits));
    }
}

TEST_CASE("the final graph has a perfect matching") {
  for (const auto& p : {params(0, {}), ahm_preset("r1"), params(2, {4, 4}), ahm_preset("r3")})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto g = build_graph(sample_instance(p, seed));
      CHECK(hopcroft_karp(g.final_graph()).size() == 2 * g.layout.n_r);
    }
}

TEST_CASE("streams from odd r") {
  auto g = build_graph(sample_instance(ahm_preset("r1"), 3));
  auto s = to_stream(g, 4);
  CHECK_NOTHROW(validate_stream(s, g.sides()));
  std::size_t ins = 0, del = 0;
  for (const auto& u : s.updates) (u.op == UpdateOp::Insert ? ins : del)++;
  CHECK(ins == g.e_ins.size());
  CHECK(del == g.e_del.size());
  CHECK(validate_stream(s).edges().size() == g.final_graph().edge_count());
  CHECK_NOTHROW(validate_stream(to_stream(build_graph(sample_instance(ahm_preset("r3"), 3)), 1)));
  CHECK_THROWS_AS(to_stream(build_graph(sample_instance(params(2, {4, 4}), 3)), 1), UnsupportedSize);
}

TEST_CASE("r=1: surviving edges outside special blocks touch a non-special group") {
  const auto p = ahm_preset("r1");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = sample_instance(p, seed);
    auto g = build_graph(inst);
    std::set<Vertex> sl(g.spec_left.begin(), g.spec_left.end()), sr(g.spec_right.begin(), g.spec_right.end());
    CHECK(sl.size() == 12);
    for (const Edge& e : g.final_graph().edges()) {
      const std::size_t i = e.u / 2, j = (e.v - 2 * g.layout.n_r) / 2;
      if (sl.count(e.u) && sr.count(e.v))
        CHECK(g.special_block[i * 8 + j]);
    }
  }
}

TEST_CASE("decode_bits examples") {
  auto inst = sample_instance(ahm_preset("r1"), 12);
  auto g = build_graph(inst);
  auto none = decode_bits(Matching{}, g);
  CHECK(std::all_of(none.begin(), none.end(), [](BitGuess b) { return b == BitGuess::Unknown; }));
  const auto& s0 = g.specials[0];
  CHECK(decode_bits(Matching({make_edge(s0.l1, s0.r2)}), g)[0] == BitGuess::One);
  CHECK(decode_bits(Matching({make_edge(s0.l2, s0.r2)}), g)[0] == BitGuess::Zero);
  for (const auto& p : {ahm_preset("r1"), ahm_preset("r3")})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto gg = build_graph(sample_instance(p, seed));
      auto m = hopcroft_karp(gg.final_graph());
      auto d = decode_bits(m, gg);
      for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] != BitGuess::Unknown) CHECK(static_cast<std::uint8_t>(d[i]) == gg.specials[i].bit);
    }
}

TEST_CASE("identification score with a perfect matching") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto g = build_graph(sample_instance(ahm_preset("r1"), seed));
    auto sc = score_identification(hopcroft_karp(g.final_graph()), g);
    CHECK(sc.beta == doctest::Approx(1.0));
    CHECK(sc.bound == doctest::Approx(4.0));
    CHECK(sc.wrong == 0);
    CHECK(sc.verdict);
  }
  auto g = build_graph(sample_instance(ahm_preset("r1"), 0));
  CHECK_FALSE(score_identification(Matching{}, g).verdict);
}

TEST_CASE("address index and search sequences") {
  auto g = build_graph(sample_instance(ahm_preset("r3"), 1));
  for (std::size_t i = 0; i < g.specials.size(); ++i) CHECK(g.address_index(g.specials[i].address) == i);
  std::vector<int> hits(27, 0);
  for (std::uint64_t s = 0; s < 2700; ++s) ++hits[g.address_index(sample_search_sequence(g.params, s))];
  for (int h : hits) CHECK(h > 50);
  CHECK_THROWS_AS(g.address_index({1, 2}), ParameterError);
  CHECK_THROWS_AS(g.address_index({1, 2, 4}), ParameterError);
}

TEST_CASE("instance file round trip") {
  auto inst = sample_instance(ahm_preset("r3"), 77);
  for (bool dump : {false, true}) {
    std::stringstream ss;
    write_instance(ss, inst, dump);
    auto back = read_instance(ss);
    CHECK(back.params == inst.params);
    CHECK(back.seed == 77);
    CHECK(base_bits(back) == base_bits(inst));
  }
  std::stringstream ss;
  write_instance(ss, inst, true);
  std::string text = ss.str();
  text[text.size() - 2] = text[text.size() - 2] == '0' ? '1' : '0';
  std::istringstream bad(text);
  CHECK_THROWS_AS(read_instance(bad), ParseError);
  std::istringstream hdr("1 1/4 7 3\n");
  CHECK_THROWS_AS(read_instance(hdr), ParseError);
  std::istringstream head("1 0.25 8 3\n");
  CHECK(read_instance(head).params == ahm_preset("r1"));
}

TEST_CASE("reduction with an exact matcher") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) ok += run_reduction_trial(ahm_preset("r1"), seed, exact_stream_matcher).success;
  MESSAGE("exact matcher success " << ok << "/100");
  CHECK(ok >= 60);
}

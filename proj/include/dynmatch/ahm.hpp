#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dynmatch/graph.hpp"
#include "dynmatch/stream.hpp"

namespace dynmatch {

using Rational = boost::rational<std::int64_t>;

// "0.25", "1/4" or "3".
Rational parse_rational(std::string_view s);
std::string format_rational(const Rational& r);

struct AhmParams {
  int r = 0;
  Rational alpha{1, 4};
  std::vector<std::uint32_t> b;  // b[i-1] = b_i

  // Throws ParameterError unless 0 < alpha < 1 and b_i*alpha, b_i(1-alpha)
  // are positive integers.
  void validate() const;
  std::size_t n(int level) const;            // n_level, n_0 = 1
  std::size_t k(int level) const;            // b_level (1 - alpha)
  std::size_t non_special(int level) const;  // b_level * alpha
  std::size_t special_base_count() const;    // k_r ... k_1
  bool operator==(const AhmParams&) const = default;
};

// "r1": b=(8), alpha 1/4. "r3": b=(4,4,4), alpha 1/4.
AhmParams ahm_preset(std::string_view name);

struct AhmNode {
  std::uint8_t bit = 0;                // level 0 only: Bob's bit
  std::vector<std::uint32_t> sigma_r;  // values in 1..b
  std::vector<std::uint32_t> sigma_c;
  std::vector<AhmNode> children;       // b x b, row-major
};

struct AhmInstance {
  AhmParams params;
  std::uint64_t seed = 0;
  AhmNode root;
};

AhmInstance sample_instance(const AhmParams& p, std::uint64_t seed);

// Base bits in depth-first, row-major order.
std::vector<std::uint8_t> base_bits(const AhmInstance& inst);

// Text: "r alpha b_1..b_r seed", optionally "bits <count>" and one line of
// 0/1 characters. Reading regenerates from the seed and checks the dump.
void write_instance(std::ostream& out, const AhmInstance& inst, bool dump_bits);
AhmInstance read_instance(std::istream& in);

enum class EdgeInput { A, B, Ones, Zeros, Empty };

// Left vertex 2t + c, right vertex 2 n_r + 2t + c, for base position t and
// copy c in {0, 1}.
struct AhmLayout {
  std::size_t n_r = 0;
  Vertex left(std::size_t t, int c) const { return static_cast<Vertex>(2 * t + c); }
  Vertex right(std::size_t t, int c) const { return static_cast<Vertex>(2 * n_r + 2 * t + c); }
  std::size_t vertex_count() const { return 4 * n_r; }
};

void bit_graph(const AhmLayout& lay, std::size_t tl, std::size_t tr, std::uint8_t x, std::vector<Edge>& out);

// EDGES(level, Z, L, R) for the sub-instance `node` whose blocks start at
// base positions tl (left) and tr (right). Ones/Zeros ignore `node`.
void ahm_edges(const AhmParams& p, const AhmLayout& lay, const AhmNode& node, int level, EdgeInput z,
               std::size_t tl, std::size_t tr, std::vector<Edge>& out);

// Surviving edges of GRAPH(A, B) for a sub-instance placed at (tl, tr).
std::vector<Edge> block_graph(const AhmParams& p, const AhmLayout& lay, const AhmNode& node, int level,
                              std::size_t tl, std::size_t tr);

struct SpecialBase {
  std::vector<std::uint32_t> address;  // (s_r, ..., s_1), each 1-based
  Vertex l1, l2, r1, r2;
  std::uint8_t bit;
};

struct ConstructedGraph {
  AhmParams params;
  AhmLayout layout;
  std::vector<Edge> e_ins;
  std::vector<Edge> e_del;
  std::vector<SpecialBase> specials;  // lexicographic by address
  std::vector<Vertex> spec_left;      // top-level L^SPEC
  std::vector<Vertex> spec_right;
  std::vector<char> special_block;    // top level, b_r x b_r: diagonal special block

  std::vector<Side> sides() const;
  Graph final_graph() const;
  std::size_t address_index(const std::vector<std::uint32_t>& address) const;
};

// Throws std::logic_error if E_del is not contained in E_ins.
ConstructedGraph build_graph(const AhmInstance& inst);

// Odd r only: insertions in seeded order, then deletions in seeded order.
DynamicStream to_stream(const ConstructedGraph& g, std::uint64_t order_seed);

std::vector<std::uint32_t> sample_search_sequence(const AhmParams& p, std::uint64_t seed);

enum class BitGuess : std::int8_t { Zero = 0, One = 1, Unknown = -1 };

std::vector<BitGuess> decode_bits(const Matching& m, const ConstructedGraph& g);

struct IdentificationScore {
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::size_t unknown = 0;
  double beta = 0;   // 2 n_r / |m|, infinite for an empty matching
  double bound = 0;  // n_r (1/beta - 2 alpha r)
  bool verdict = false;
};

IdentificationScore score_identification(const Matching& m, const ConstructedGraph& g);

using StreamMatcher = std::function<Matching(const DynamicStream&, const std::vector<Side>&)>;

// Hopcroft-Karp on the surviving graph.
Matching exact_stream_matcher(const DynamicStream& s, const std::vector<Side>& sides);

struct ReductionTrial {
  std::vector<std::uint32_t> search;
  std::uint8_t truth = 0;
  BitGuess decoded = BitGuess::Unknown;
  std::uint8_t answer = 0;  // decoded bit, or a coin flip when unknown
  bool success = false;
};

// instance -> stream -> matcher -> decode at a uniform search address.
ReductionTrial run_reduction_trial(const AhmParams& p, std::uint64_t seed, const StreamMatcher& matcher);

}  // namespace dynmatch

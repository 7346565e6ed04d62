#include <doctest.h>

#include <algorithm>
#include <map>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"
#include "dynmatch/sparse_sketch.hpp"

using namespace dynmatch;

namespace {

SketchSpec spec(std::size_t q, std::uint64_t domain, std::int64_t m = 1, double delta = 0.01) {
  SketchSpec s;
  s.q = q;
  s.domain = domain;
  s.value_bound = m;
  s.delta = delta;
  return s;
}

}  // namespace

TEST_CASE("table shape is O(q) cells and grows with log 1/delta") {
  auto a = table_shape(64, 0.01);
  CHECK(a.rows >= 3);
  CHECK(a.rows * a.width <= 4 * 64);
  auto b = table_shape(64, 1e-12);
  CHECK(b.rows * b.width >= a.rows * a.width);
  CHECK_THROWS_AS(table_shape(0, 0.1), ParameterError);
}

TEST_CASE("empty sketch decodes to the empty vector") {
  SparseSketch s(spec(8, 10000), 1);
  CHECK(s.decode()->empty());
  CHECK(s.is_q_sparse());
}

TEST_CASE("insert then delete restores state bit for bit") {
  SparseSketch s(spec(8, 10000), 2);
  s.update(10, 1);
  SparseSketch before = s;
  s.update(777, 1);
  CHECK_FALSE(s.same_state(before));
  s.update(777, -1);
  CHECK(s.same_state(before));
}

TEST_CASE("five distinct updates with q=8") {
  SparseSketch s(spec(8, 10000), 3);
  SparseSketch ref(spec(8, 10000), 3, SketchMode::Reference);
  for (std::uint64_t i : {5, 99, 1234, 8000, 9999}) {
    s.update(i, 1);
    ref.update(i, 1);
  }
  auto d = s.decode();
  REQUIRE(d);
  CHECK(d->size() == 5);
  CHECK(*d == *ref.decode());
}

TEST_CASE("updates that cancel decode to empty") {
  SparseSketch s(spec(8, 10000), 4);
  Rng rng(4);
  std::vector<std::uint64_t> idx;
  for (int i = 0; i < 500; ++i) idx.push_back(rng.below(10000));
  for (auto i : idx) s.update(i, 1);
  rng.shuffle(idx);
  for (auto i : idx) s.update(i, -1);
  auto d = s.decode();
  REQUIRE(d);
  CHECK(d->empty());
}

TEST_CASE("linearity: any order of the same updates gives identical state") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::pair<std::uint64_t, std::int64_t>> ups;
    for (int i = 0; i < 200; ++i) ups.push_back({rng.below(5000), rng.bernoulli(0.5) ? 1 : -1});
    SparseSketch a(spec(16, 5000), 100 + t), b(spec(16, 5000), 100 + t);
    for (auto [i, d] : ups) a.update(i, d);
    rng.shuffle(ups);
    for (auto [i, d] : ups) b.update(i, d);
    CHECK(a.same_state(b));
  }
}

TEST_CASE("multi-valued entries and value bound") {
  SparseSketch s(spec(8, 1000, 5), 6);
  s.update(3, 4);
  s.update(7, 2);
  auto d = s.decode();
  REQUIRE(d);
  CHECK(*d == SparseVector{{3, 4}, {7, 2}});
  s.update(3, 2);  // value 6 > m
  CHECK_FALSE(s.decode());
}

TEST_CASE("direct layout when the domain is tiny") {
  SparseSketch s(spec(8, 20), 1);
  CHECK(s.layout().direct());
  for (std::uint64_t i = 0; i < 9; ++i) s.update(i, 1);
  CHECK_FALSE(s.is_q_sparse());
  s.update(0, -1);
  CHECK(s.decode()->size() == 8);
}

TEST_CASE("2q nonzeros: failure, never a wrong vector") {
  Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    SparseSketch s(spec(64, 10000), rng.next());
    std::vector<std::uint64_t> idx(10000);
    for (std::uint64_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    for (int i = 0; i < 128; ++i) s.update(idx[i], 1);
    CHECK_FALSE(s.decode());
  }
}

TEST_CASE("q=64: random sparse vectors recovered exactly") {
  Rng rng(32);
  int exact = 0;
  for (int t = 0; t < 1000; ++t) {
    SparseSketch s(spec(64, 10000, 1000), rng.next());
    std::map<std::uint64_t, std::int64_t> truth;
    while (truth.size() < 64) truth[rng.below(10000)] = 1 + static_cast<std::int64_t>(rng.below(1000));
    for (auto [i, v] : truth) s.update(i, v);
    auto d = s.decode();
    if (!d) continue;
    SparseVector want;
    for (auto [i, v] : truth) want.push_back({i, v});
    REQUIRE(*d == want);  // soundness: a returned vector is always right
    ++exact;
  }
  CHECK(exact >= 999);
}

#include "dynmatch/sparse_sketch.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

namespace {

constexpr std::uint64_t P = kMersenne61;

// Orientability/peeling thresholds of random R-uniform hypergraphs, R = 3..12.
constexpr std::array<double, 10> kPeelThreshold = {0.818, 0.772, 0.702, 0.637, 0.582,
                                                   0.535, 0.495, 0.461, 0.432, 0.406};
constexpr double kLoadMargin = 0.6;

std::uint64_t to_field(std::int64_t d) {
  return d >= 0 ? static_cast<std::uint64_t>(d) % P : P - (static_cast<std::uint64_t>(-(d + 1)) % P + 1) % P;
}

std::uint64_t addp(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  return s >= P ? s - P : s;
}

}  // namespace

TableShape table_shape(std::size_t q, double delta) {
  if (q < 1) throw ParameterError("sparsity budget q must be >= 1");
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0,1)");
  // Two keys sharing all R cells is the dominant stopping set: about
  // q^2 / W^R of probability mass, held to delta / 16.
  const double target = delta / 16;
  const double qd = static_cast<double>(q);
  TableShape best{0, 0};
  for (unsigned r = 3; r < 3 + kPeelThreshold.size(); ++r) {
    const double load = kLoadMargin * kPeelThreshold[r - 3];
    const double w_load = std::ceil(qd / (load * r));
    const double w_pair = std::ceil(std::exp((2 * std::log(qd) - std::log(target)) / r));
    const auto w = static_cast<std::size_t>(std::max({w_load, w_pair, 2.0}));
    if (best.rows == 0 || r * w < best.rows * best.width) best = {r, w};
  }
  return best;
}

std::shared_ptr<const SketchLayout> SketchLayout::make(const SketchSpec& spec, std::uint64_t seed) {
  if (spec.domain < 1 || spec.domain >= P) throw ParameterError("sketch domain must lie in [1, 2^61-1)");
  if (spec.value_bound < 1) throw ParameterError("sketch value bound must be >= 1");
  auto l = std::make_shared<SketchLayout>();
  l->spec_ = spec;
  const TableShape shape = table_shape(spec.q, spec.delta);
  l->rows_ = shape.rows;
  l->width_ = shape.width;
  l->direct_ = spec.allow_direct && spec.domain <= 3 * shape.rows * shape.width;
  if (!l->direct_) {
    for (unsigned r = 0; r < l->rows_; ++r)
      l->row_hash_.push_back(KWiseHash::sample(2, spec.domain, l->width_, derive_seed(seed, 1, r)));
    l->fp_ = KWiseHash::sample(4, spec.domain, P, derive_seed(seed, 2));
  }
  return l;
}

std::size_t SketchLayout::hash_words() const {
  std::size_t w = 0;
  for (const auto& h : row_hash_) w += h.words();
  if (!direct_) w += fp_.words();
  return w + 6;  // spec fields and geometry
}

SparseSketch::SparseSketch(const SketchSpec& spec, std::uint64_t seed, SketchMode mode)
    : SparseSketch(SketchLayout::make(spec, seed), mode) {}

SparseSketch::SparseSketch(std::shared_ptr<const SketchLayout> layout, SketchMode mode)
    : layout_(std::move(layout)), mode_(mode) {}

void SparseSketch::update(std::uint64_t index, std::int64_t delta) {
  if (delta == 0) return;
  if (mode_ == SketchMode::Reference) {
    auto [it, fresh] = exact_.try_emplace(index, 0);
    it->second += delta;
    if (it->second == 0) exact_.erase(it);
    return;
  }
  const SketchLayout& l = *layout_;
  if (l.direct()) {
    if (counts_.empty()) counts_.assign(l.spec().domain, 0);
    counts_[index] += delta;
    return;
  }
  if (cells_.empty()) cells_.resize(l.cell_count());
  const std::uint64_t d = to_field(delta);
  const std::uint64_t di = mulmod(d, index, P);
  const std::uint64_t df = mulmod(d, l.fingerprint(index), P);
  for (unsigned r = 0; r < l.rows(); ++r) {
    Cell& c = cells_[l.cell(r, index)];
    c.count += delta;
    c.idx = addp(c.idx, di);
    c.fp = addp(c.fp, df);
  }
}

std::optional<SparseVector> SparseSketch::decode() const {
  const SketchSpec& spec = layout_->spec();
  SparseVector out;
  auto accept = [&](std::uint64_t index, std::int64_t value) {
    if (value < 1 || value > spec.value_bound) return false;
    out.push_back({index, value});
    return out.size() <= spec.q;
  };
  if (mode_ == SketchMode::Reference) {
    for (const auto& [i, v] : exact_)
      if (!accept(i, v)) return std::nullopt;
    return out;
  }
  const SketchLayout& l = *layout_;
  if (l.direct()) {
    for (std::uint64_t i = 0; i < counts_.size(); ++i)
      if (counts_[i] != 0 && !accept(i, counts_[i])) return std::nullopt;
    return out;
  }
  if (cells_.empty()) return out;

  std::vector<Cell> cells = cells_;
  const std::size_t w = l.width();
  // A cell is pure when it holds exactly one index: the index recovered from
  // the sums hashes back to this cell and the fingerprint agrees.
  auto pure = [&](std::size_t pos, std::uint64_t& index) {
    const Cell& c = cells[pos];
    if (c.count == 0) return false;
    const std::uint64_t cnt = to_field(c.count);
    index = c.count == 1 ? c.idx : mulmod(c.idx, powmod(cnt, P - 2, P), P);
    if (index >= spec.domain) return false;
    if (l.cell(static_cast<unsigned>(pos / w), index) != pos) return false;
    return mulmod(cnt, l.fingerprint(index), P) == c.fp;
  };
  std::vector<std::size_t> stack;
  for (std::size_t pos = 0; pos < cells.size(); ++pos)
    if (cells[pos].count != 0) stack.push_back(pos);
  while (!stack.empty()) {
    const std::size_t pos = stack.back();
    stack.pop_back();
    std::uint64_t index;
    if (!pure(pos, index)) continue;
    const std::int64_t value = cells[pos].count;
    if (!accept(index, value)) return std::nullopt;
    const std::uint64_t d = to_field(-value);
    const std::uint64_t di = mulmod(d, index, P);
    const std::uint64_t df = mulmod(d, l.fingerprint(index), P);
    for (unsigned r = 0; r < l.rows(); ++r) {
      const std::size_t p2 = l.cell(r, index);
      Cell& c = cells[p2];
      c.count -= value;
      c.idx = addp(c.idx, di);
      c.fp = addp(c.fp, df);
      if (p2 != pos && c.count != 0) stack.push_back(p2);
    }
  }
  for (const Cell& c : cells)
    if (c.count != 0 || c.idx != 0 || c.fp != 0) return std::nullopt;
  std::sort(out.begin(), out.end(), [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  return out;
}

SpaceUsage SparseSketch::words() const {
  SpaceUsage u;
  if (mode_ == SketchMode::Reference)
    u.reference = 2 * exact_.size() + 2;
  else
    u.sketch = layout_->cell_words();
  return u;
}

bool SparseSketch::same_state(const SparseSketch& o) const {
  if (mode_ != o.mode_) return false;
  if (mode_ == SketchMode::Reference) return exact_ == o.exact_;
  auto zero_cells = [](const std::vector<Cell>& v) {
    return std::all_of(v.begin(), v.end(), [](const Cell& c) { return c == Cell{}; });
  };
  auto zero_counts = [](const std::vector<std::int64_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::int64_t c) { return c == 0; });
  };
  if (cells_.empty() != o.cells_.empty())
    return cells_.empty() ? zero_cells(o.cells_) : zero_cells(cells_);
  if (counts_.empty() != o.counts_.empty())
    return counts_.empty() ? zero_counts(o.counts_) : zero_counts(counts_);
  return cells_ == o.cells_ && counts_ == o.counts_;
}

}  // namespace dynmatch

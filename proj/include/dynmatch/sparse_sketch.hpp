#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "dynmatch/hashing.hpp"
#include "dynmatch/space.hpp"

namespace dynmatch {

enum class SketchMode : std::uint8_t { Sketch, Reference };

struct SparseEntry {
  std::uint64_t index;
  std::int64_t value;
  bool operator==(const SparseEntry&) const = default;
};
using SparseVector = std::vector<SparseEntry>;  // sorted by index

struct SketchSpec {
  std::size_t q = 1;
  std::uint64_t domain = 1;
  std::int64_t value_bound = 1;  // running values must stay in [0, value_bound]
  double delta = 0.01;
  // Use a plain counter array when it is no larger than the cell table.
  bool allow_direct = true;
};

// Geometry and hash functions of a sketch; immutable and shareable between
// sketches that must agree (or simply to save hash words).
class SketchLayout {
 public:
  static std::shared_ptr<const SketchLayout> make(const SketchSpec& spec, std::uint64_t seed);

  const SketchSpec& spec() const { return spec_; }
  bool direct() const { return direct_; }
  unsigned rows() const { return rows_; }
  std::size_t width() const { return width_; }
  std::size_t cell_count() const { return direct_ ? spec_.domain : rows_ * width_; }
  std::size_t cell_words() const { return direct_ ? spec_.domain : 3 * rows_ * width_; }
  std::size_t hash_words() const;

  std::size_t cell(unsigned row, std::uint64_t index) const {
    return row * width_ + row_hash_[row](index);
  }
  std::uint64_t fingerprint(std::uint64_t index) const { return fp_.field_value(index); }

 private:
  SketchSpec spec_;
  bool direct_ = false;
  unsigned rows_ = 0;
  std::size_t width_ = 0;
  std::vector<KWiseHash> row_hash_;
  KWiseHash fp_;
};

// Rows and width a peeling table would use for (q, delta).
struct TableShape {
  unsigned rows;
  std::size_t width;
};
TableShape table_shape(std::size_t q, double delta);

// Linear sketch of a vector phi in [0, m]^domain with exact recovery when
// ||phi||_0 <= q. State is allocated on the first update.
class SparseSketch {
 public:
  SparseSketch() = default;
  SparseSketch(const SketchSpec& spec, std::uint64_t seed, SketchMode mode = SketchMode::Sketch);
  SparseSketch(std::shared_ptr<const SketchLayout> layout, SketchMode mode = SketchMode::Sketch);

  void update(std::uint64_t index, std::int64_t delta);

  // nullopt on peeling stall, fingerprint mismatch, residue left behind,
  // support above q, or a value outside [1, m].
  std::optional<SparseVector> decode() const;
  bool is_q_sparse() const { return decode().has_value(); }

  // Declared size: cells (or the exact map in reference mode). Hash words
  // belong to the layout and are reported by whoever owns it.
  SpaceUsage words() const;

  const SketchLayout& layout() const { return *layout_; }
  SketchMode mode() const { return mode_; }
  bool touched() const { return !cells_.empty() || !counts_.empty() || !exact_.empty(); }

  // Bitwise state comparison (unallocated == all zero).
  bool same_state(const SparseSketch& o) const;

 private:
  struct Cell {
    std::int64_t count = 0;
    std::uint64_t idx = 0;  // sum of delta * index mod p
    std::uint64_t fp = 0;   // sum of delta * g(index) mod p
    bool operator==(const Cell&) const = default;
  };

  std::shared_ptr<const SketchLayout> layout_;
  SketchMode mode_ = SketchMode::Sketch;
  std::vector<Cell> cells_;
  std::vector<std::int64_t> counts_;
  std::map<std::uint64_t, std::int64_t> exact_;
};

}  // namespace dynmatch

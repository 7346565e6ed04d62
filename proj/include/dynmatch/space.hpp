#pragma once

#include <cstddef>

namespace dynmatch {

// Live algorithm state in 64-bit words, split by kind.
struct SpaceUsage {
  std::size_t sketch = 0;
  std::size_t hash = 0;
  std::size_t table = 0;
  std::size_t reference = 0;  // exact-map test oracles; never allowed in faithful runs

  std::size_t total() const { return sketch + hash + table + reference; }

  SpaceUsage& operator+=(const SpaceUsage& o) {
    sketch += o.sketch;
    hash += o.hash;
    table += o.table;
    reference += o.reference;
    return *this;
  }
  friend SpaceUsage operator+(SpaceUsage a, const SpaceUsage& b) { return a += b; }
  bool operator==(const SpaceUsage&) const = default;
};

}  // namespace dynmatch

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynmatch {

// Bad knobs or malformed parameters.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedSize : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A value placed on a pair that is not an edge of the host graph.
struct InvalidSupport : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  BudgetExceeded(std::size_t used, std::size_t budget)
      : std::runtime_error("space budget exceeded: " + std::to_string(used) + " > " +
                           std::to_string(budget) + " words"),
        used(used),
        budget(budget) {}
  std::size_t used;
  std::size_t budget;
};

}  // namespace dynmatch

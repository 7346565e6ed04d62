#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dynmatch/graph.hpp"

namespace dynmatch {

enum class Role : std::uint8_t { Untouched, Mis, Cover };

struct Settlement {
  Role role = Role::Untouched;
  std::uint32_t timestamp = 0;        // iteration that removed the vertex, from 1
  std::uint64_t residual_degree = 0;  // degree among unsettled vertices at that iteration
  bool operator==(const Settlement&) const = default;
};

using SettlementTable = std::vector<Settlement>;

struct XWrite {
  std::uint32_t edge_id;
  Vertex writer;  // the cover vertex whose condition fired
  double value;
};

struct IterationRecord {
  Vertex u;
  std::vector<Vertex> cover;
  std::vector<XWrite> writes;
};

struct GreedyRun {
  double beta = 0;
  std::vector<Vertex> sigma;
  std::vector<IterationRecord> iterations;
  std::vector<Vertex> mis;
  std::vector<Vertex> cover;
  std::vector<double> x;  // aligned with the graph's edge ids
  std::vector<double> y;
  SettlementTable settlement;
};

// Randomized greedy MIS driven by sigma: iteration t takes the first
// unsettled vertex of sigma. Throws ParameterError unless 0 < beta < 1/8.
GreedyRun run_greedy(const Graph& g, double beta, std::span<const Vertex> sigma);

// Per overloaded vertex (id order), keep mass on incident edges in ascending
// edge order and cut whatever exceeds 1.
std::vector<double> trim(const Graph& g, std::span<const double> x);
FractionalAssignment trim(const FractionalAssignment& x);

struct MonteCarloRow {
  std::string quantity;
  double mean = 0;
  double stderr_ = 0;
  double bound = 0;   // NaN when the row is a plain statistic
  std::string verdict;  // "pass", "fail" or "-"
};

struct MonteCarloReport {
  double beta = 0;
  std::size_t trials = 0;
  std::size_t mu = 0;  // exact if known, otherwise an upper bound (min cover size seen)
  bool mu_exact = false;
  std::vector<MonteCarloRow> rows;
  bool all_pass() const;
};

// Sample means of sum x, sum y, |V_COVER| over uniform sigma, and checks of
//   sum x >= (beta/2) |cover|,  sum y >= f sum x,  sum y >= f (beta/2) mu
// with f = (1-8beta)/(1-2beta), each allowing 3 standard errors of the
// paired difference. Trial i uses seed derive_seed(seed, i).
MonteCarloReport greedy_montecarlo(const Graph& g, double beta, std::size_t trials, std::uint64_t seed);

void write_report_csv(std::ostream& out, const MonteCarloReport& r);

}  // namespace dynmatch

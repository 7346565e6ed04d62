#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynmatch/graph.hpp"
#include "dynmatch/space.hpp"

namespace dynmatch {

enum class UpdateOp : std::uint8_t { Insert, Delete };

struct EdgeUpdate {
  UpdateOp op;
  Vertex u;
  Vertex v;
  std::int64_t delta() const { return op == UpdateOp::Insert ? 1 : -1; }
  bool operator==(const EdgeUpdate&) const = default;
};

// Anything that can be scanned front to back, once per pass.
class UpdateSource {
 public:
  virtual ~UpdateSource() = default;
  virtual std::size_t vertex_count() const = 0;
  virtual void scan(const std::function<void(const EdgeUpdate&)>& fn) const = 0;
};

struct DynamicStream : UpdateSource {
  std::size_t n = 0;
  std::vector<EdgeUpdate> updates;

  DynamicStream() = default;
  DynamicStream(std::size_t n_, std::vector<EdgeUpdate> ups) : n(n_), updates(std::move(ups)) {}

  std::size_t vertex_count() const override { return n; }
  void scan(const std::function<void(const EdgeUpdate&)>& fn) const override {
    for (const auto& u : updates) fn(u);
  }
  bool operator==(const DynamicStream& o) const { return n == o.n && updates == o.updates; }
};

// Reads the file again on every pass; only one update is in memory at a time.
class FileStreamSource : public UpdateSource {
 public:
  explicit FileStreamSource(std::string path);
  std::size_t vertex_count() const override { return n_; }
  std::size_t length() const { return len_; }
  void scan(const std::function<void(const EdgeUpdate&)>& fn) const override;

 private:
  std::string path_;
  std::size_t n_ = 0, len_ = 0;
};

struct StreamError : std::runtime_error {
  enum class Kind { DeleteBeforeInsert, DuplicateInsert, SelfLoop, OutOfRange };
  StreamError(Kind k, std::size_t pos);
  Kind kind;
  std::size_t position;
};

// The graph of surviving edges (bipartite-tagged when sides are given);
// throws StreamError at the first bad update.
Graph validate_stream(const UpdateSource& s, const std::vector<Side>& sides = {});

// Format: "n N" header, then N lines "+ u v" or "- u v".
DynamicStream read_stream(std::istream& in);
void write_stream(std::ostream& out, const DynamicStream& s);

struct GenParams {
  std::size_t n = 0;
  std::optional<double> p;           // edge probability, or
  std::optional<std::size_t> m;      // exact edge count
  bool bipartite = false;            // sides [0, n/2) and [n/2, n)
  double deletion_fraction = 0;
  bool planted_perfect_matching = false;  // bipartite only: i -- n/2 + pi(i), never deleted
  std::uint64_t seed = 0;
};

// Erdos-Renyi style edge set; each edge is inserted at a random time and a
// deletion_fraction of them deleted at a later random time.
DynamicStream gen_random(const GenParams& p);

// Side tags used by gen_random's bipartite mode.
std::vector<Side> generator_sides(std::size_t n);

class SpaceMeter {
 public:
  void begin_pass();
  void sample(const SpaceUsage& u);

  std::size_t passes() const { return pass_peaks_.size(); }
  const std::vector<std::size_t>& pass_peaks() const { return pass_peaks_; }
  std::size_t peak_words() const { return peak_.total(); }
  const SpaceUsage& peak_breakdown() const { return peak_; }
  bool reference_seen() const { return reference_seen_; }

 private:
  std::vector<std::size_t> pass_peaks_;
  SpaceUsage peak_;
  bool reference_seen_ = false;
};

class StreamAlgorithm {
 public:
  virtual ~StreamAlgorithm() = default;
  virtual std::string_view name() const = 0;
  // Upper bound on passes; replay refuses to go further.
  virtual int max_passes() const = 0;
  virtual void begin_pass(int pass) = 0;
  virtual void update(const EdgeUpdate& e) = 0;
  virtual void end_pass(int pass) = 0;
  virtual bool finished() const = 0;
  virtual SpaceUsage live_words() const = 0;
};

struct ReplayOptions {
  bool strict = false;
  std::size_t budget_words = SIZE_MAX;
  bool faithful = false;  // reject reference-mode storage
};

struct ReplayStats {
  int passes = 0;
  std::size_t peak_words = 0;
  SpaceUsage peak_breakdown;
};

// Runs passes until the algorithm reports finished. Space is sampled at
// every update and at both pass boundaries. Throws BudgetExceeded (strict)
// or std::logic_error (faithful run holding reference storage, or more
// passes than declared).
ReplayStats replay(const UpdateSource& s, StreamAlgorithm& alg, SpaceMeter& meter, const ReplayOptions& opt = {});

struct MetricsRow {
  std::string run_id;
  int passes = 0;
  std::size_t peak_words = 0;
  std::size_t output_size = 0;
  double wall_ms = 0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& r);

}  // namespace dynmatch

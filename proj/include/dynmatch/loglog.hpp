#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dynmatch/graph.hpp"
#include "dynmatch/greedy.hpp"
#include "dynmatch/hashing.hpp"
#include "dynmatch/sparse_sketch.hpp"
#include "dynmatch/stream.hpp"

namespace dynmatch {

// Desk-scale constants. Lengths use log2 n; the timestamp budget uses ln n.
struct MatcherConfig {
  double c_q = 8;        // batch recovery budget c_q * n log n
  double c_q_prime = 8;  // timestamp budget c_q' * ln n
  double c_z = 4;        // z numerator c_z * log n; also hash independence
  double c_delta = 3;    // sketch failure probability n^-c_delta
  double c_rep = 4;      // boosting repetitions per guess, c_rep * log n
  double c_e = 8;        // E_z recovery budget c_e * n log n
  int retry_cap = 3;     // extra passes allowed per batch after a failed decode
  SketchMode mode = SketchMode::Sketch;
  bool shortcut = true;  // boosting: try whole-graph recovery first
  std::uint64_t seed = 1;
};

double log2n(std::size_t n);  // max(1, log2 n)
double lnn(std::size_t n);    // max(1, ln n)

struct BatchSchedule {
  std::vector<std::size_t> sizes;       // k_i
  std::vector<std::size_t> cumulative;  // n_i
  std::size_t batches() const { return sizes.size(); }
};

// ceil(log log n) batches of size round(2(n^{1-1/2^i} - n^{1-1/2^{i-1}})),
// the last one taking every remaining vertex. n < 4 gives one batch.
BatchSchedule batch_schedule(std::size_t n);

// Group sizes 2, 4, 8, ... covering k positions; the last takes the rest.
std::vector<std::size_t> sub_batches(std::size_t k);

// VERT rule: earlier timestamp; then COVER over MIS; then larger residual
// degree; then earlier in sigma.
Vertex vert(Vertex u, Vertex v, const SettlementTable& t, std::span<const std::uint32_t> sigma_rank);

std::vector<std::uint32_t> ranks_of(std::span<const Vertex> sigma);

// Knobs shared by all passes of one pipeline. `scale_n` feeds the log terms
// and delta; it is the original vertex count when running on a contraction.
struct PassContext {
  std::size_t n = 0;
  std::size_t scale_n = 0;
  bool multigraph = false;
  MatcherConfig cfg;
  double delta() const;
  std::int64_t value_bound() const { return multigraph ? (std::int64_t{1} << 40) : 1; }
  std::uint64_t pair_index(Vertex a, Vertex b) const {
    return a < b ? std::uint64_t{a} * n + b : std::uint64_t{b} * n + a;
  }
  Edge pair_edge(std::uint64_t idx) const { return {static_cast<Vertex>(idx / n), static_cast<Vertex>(idx % n)}; }
};

// One pass: sketch of the subgraph induced by `active`.
class BatchRecovery {
 public:
  BatchRecovery(const PassContext& ctx, std::span<const Vertex> active, std::uint64_t seed);
  void apply(Vertex u, Vertex v, std::int64_t delta);
  std::optional<std::vector<Edge>> finish() const;
  SpaceUsage words() const;
  std::size_t budget() const { return sketch_.layout().spec().q; }

 private:
  const PassContext& ctx_;
  std::vector<char> active_;
  SparseSketch sketch_;
};

struct TimestampOutcome {
  std::size_t resolved = 0;
  std::size_t unresolved = 0;      // some decode failed and none found a neighbour
  std::size_t decode_failures = 0;
  std::size_t pending_missed = 0;  // marked inside the batch but not resolved
};

// One pass: for every vertex without a timestamp and every sub-batch j, a
// sparse sketch of its MIS neighbours inside group j of the current batch.
class TimestampRecovery {
 public:
  // `batch` lists U_i in sigma order; the table must already hold the MIS
  // roles and timestamps of this batch. Vertices flagged in `pending` were
  // covered inside the batch and must resolve.
  TimestampRecovery(const PassContext& ctx, std::span<const Vertex> batch, const SettlementTable& table,
                    std::span<const char> pending, std::uint64_t seed);
  void apply(Vertex u, Vertex v, std::int64_t delta);
  TimestampOutcome finish(SettlementTable& table) const;
  SpaceUsage words() const;

 private:
  void feed(Vertex mis, Vertex other, std::int64_t delta);

  const PassContext& ctx_;
  const SettlementTable& table_;
  std::span<const char> pending_;
  std::size_t groups_ = 0;
  std::vector<std::int32_t> group_of_;    // per vertex: MIS group in this batch or -1
  std::vector<std::uint32_t> slot_of_;    // compact index inside its group
  std::vector<std::vector<Vertex>> members_;  // MIS members per group
  std::vector<std::shared_ptr<const SketchLayout>> layouts_;
  std::vector<SparseSketch> sketches_;    // n * groups, allocated on first touch
  std::size_t live_cells_ = 0;
};

// One pass: deg^{t(v)}(v) as the number of live edges to w with t(w) >= t(v).
class ResidualDegrees {
 public:
  explicit ResidualDegrees(const SettlementTable& table);
  void apply(Vertex u, Vertex v, std::int64_t delta);
  void finish(SettlementTable& table) const;
  SpaceUsage words() const { return {0, 0, deg_.size(), 0}; }

 private:
  const SettlementTable& table_;
  std::vector<std::int64_t> deg_;
};

// One pass: sketch of live edges (u,v) with h(u,v) <= min(1, z_uv).
class ZSampler {
 public:
  ZSampler(const PassContext& ctx, const SettlementTable& table, std::span<const std::uint32_t> rank,
           std::uint64_t seed);
  double z(Vertex u, Vertex v) const;
  bool sampled(Vertex u, Vertex v) const;
  void apply(Vertex u, Vertex v, std::int64_t delta);
  std::optional<std::vector<Edge>> finish() const;
  SpaceUsage words() const;
  const KWiseHash& hash() const { return h_; }
  unsigned kappa() const { return h_.k(); }

 private:
  const PassContext& ctx_;
  const SettlementTable& table_;
  std::span<const std::uint32_t> rank_;
  KWiseHash h_;
  SparseSketch sketch_;
};

// Matching from the sampled edges: exact when they form a bipartite graph,
// maximal plus length-3 augmentation otherwise.
Matching match_sampled(std::size_t n, const std::vector<Edge>& ez);

struct BatchLog {
  std::size_t batch = 0;
  std::size_t size = 0;       // k_i
  std::size_t active = 0;     // unsettled batch vertices at batch start
  std::size_t edges = 0;      // |E(G_i)|
  std::size_t max_degree = 0; // Delta(G_i)
  std::size_t cumulative = 0; // n_i
  int attempts = 0;
  bool recovered = false;
  std::size_t mis_added = 0;
  TimestampOutcome timestamps;
};

enum class CoreStage { Settlement, Residual, Full };

// Batched greedy MIS with timestamp recovery, then residual degrees and the
// z-sampling pass. Updates arrive as (u, v, +-1) over vertex set [0, n).
class CorePipeline : public StreamAlgorithm {
 public:
  CorePipeline(std::size_t n, std::vector<Vertex> sigma, const MatcherConfig& cfg, CoreStage stop = CoreStage::Full,
               std::size_t scale_n = 0, bool multigraph = false);
  ~CorePipeline() override;

  std::string_view name() const override { return "loglog-core"; }
  int max_passes() const override;
  void begin_pass(int pass) override;
  void update(const EdgeUpdate& e) override { apply(e.u, e.v, e.delta()); }
  void apply(Vertex u, Vertex v, std::int64_t delta);
  void end_pass(int pass) override;
  bool finished() const override { return phase_ == Phase::Done; }
  SpaceUsage live_words() const override { return cached_; }

  bool failed() const { return failed_; }
  const SettlementTable& settlement() const { return table_; }
  const std::vector<Vertex>& sigma() const { return sigma_; }
  const std::vector<std::uint32_t>& rank() const { return rank_; }
  const std::vector<BatchLog>& log() const { return log_; }
  const BatchSchedule& schedule() const { return schedule_; }
  const std::vector<Edge>& sampled_edges() const { return ez_; }
  const Matching& matching() const { return matching_; }
  int passes_used() const { return passes_; }
  const PassContext& context() const { return ctx_; }

 private:
  enum class Phase { Batch, Timestamp, Residual, Sample, Done };
  void refresh_words();
  void fail();

  PassContext ctx_;
  CoreStage stop_;
  std::vector<Vertex> sigma_;
  std::vector<std::uint32_t> rank_;
  BatchSchedule schedule_;
  std::vector<std::size_t> batch_start_;
  SettlementTable table_;
  std::vector<char> pending_;
  std::uint32_t time_ = 0;
  std::size_t batch_ = 0;
  int attempt_ = 0;
  Phase phase_ = Phase::Batch;
  bool failed_ = false;
  int passes_ = 0;
  std::vector<BatchLog> log_;
  std::unique_ptr<BatchRecovery> batch_pass_;
  std::unique_ptr<TimestampRecovery> ts_pass_;
  std::unique_ptr<ResidualDegrees> rd_pass_;
  std::unique_ptr<ZSampler> z_pass_;
  std::vector<Edge> ez_;
  Matching matching_;
  SpaceUsage cached_;
};

struct CoreResult {
  SettlementTable settlement;
  std::vector<BatchLog> log;
  std::vector<Edge> sampled_edges;
  Matching matching;
  bool failed = false;
  ReplayStats stats;
};

CoreResult run_core(const UpdateSource& s, std::vector<Vertex> sigma, const MatcherConfig& cfg,
                    CoreStage stop = CoreStage::Full, const ReplayOptions& opt = {});

// Settlement only: the batched MIS plus timestamp passes.
SettlementTable run_batches(const UpdateSource& s, std::vector<Vertex> sigma, const MatcherConfig& cfg);

struct BoostStats {
  bool shortcut_used = false;
  std::size_t subruns = 0;
  std::size_t subruns_failed = 0;
  std::size_t best_h_matching = 0;
  std::size_t lift_failures = 0;
};

// Whole-graph shortcut, else contraction sub-runs per guess of mu, lifted
// back to G. All sub-runs share each pass.
class BoostedMatcher : public StreamAlgorithm {
 public:
  BoostedMatcher(std::size_t n, const MatcherConfig& cfg);
  ~BoostedMatcher() override;

  std::string_view name() const override { return "loglog-boosted"; }
  int max_passes() const override;
  void begin_pass(int pass) override;
  void update(const EdgeUpdate& e) override;
  void end_pass(int pass) override;
  bool finished() const override { return phase_ == Phase::Done; }
  SpaceUsage live_words() const override;

  const Matching& matching() const { return matching_; }
  bool failed() const { return failed_; }
  const BoostStats& stats() const { return stats_; }

 private:
  enum class Phase { Shortcut, Subruns, Count, Lift, Done };
  struct Subrun;
  void start_subruns();
  void start_lift();

  std::size_t n_;
  MatcherConfig cfg_;
  PassContext ctx_;
  Phase phase_ = Phase::Shortcut;
  std::unique_ptr<SparseSketch> shortcut_;
  std::vector<std::unique_ptr<Subrun>> subs_;
  // lifting state
  const Subrun* best_ = nullptr;
  std::vector<std::int64_t> pair_of_group_;  // H vertex -> matched pair id
  std::vector<std::int64_t> counts_;
  std::vector<SparseSketch> lift_sketches_;
  std::shared_ptr<const SketchLayout> lift_layout_;
  KWiseHash lift_hash_;
  double lift_target_ = 1;
  Matching matching_;
  bool failed_ = false;
  BoostStats stats_;
};

struct BoostResult {
  Matching matching;
  bool failed = false;
  BoostStats stats;
  ReplayStats replay;
};

BoostResult boosted_match(const UpdateSource& s, const MatcherConfig& cfg, const ReplayOptions& opt = {});

// One JSON object per batch.
void write_batch_log(std::ostream& out, const std::vector<BatchLog>& log);

}  // namespace dynmatch

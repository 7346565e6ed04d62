#include "dynmatch/loglog.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

double log2n(std::size_t n) { return std::max(1.0, std::log2(static_cast<double>(n))); }
double lnn(std::size_t n) { return std::max(1.0, std::log(static_cast<double>(n))); }

BatchSchedule batch_schedule(std::size_t n) {
  BatchSchedule s;
  if (n == 0) return s;
  std::size_t batches = 1;
  if (n >= 4) batches = static_cast<std::size_t>(std::ceil(std::log2(std::log2(static_cast<double>(n))) - 1e-9));
  batches = std::max<std::size_t>(batches, 1);
  const double nd = static_cast<double>(n);
  std::size_t remaining = n;
  for (std::size_t i = 1; i <= batches && remaining > 0; ++i) {
    std::size_t k = remaining;
    if (i < batches) {
      const double a = std::pow(nd, 1.0 - 1.0 / std::ldexp(1.0, static_cast<int>(i)));
      const double b = std::pow(nd, 1.0 - 1.0 / std::ldexp(1.0, static_cast<int>(i) - 1));
      k = std::min<std::size_t>(remaining, static_cast<std::size_t>(std::llround(2 * (a - b))));
    }
    if (k == 0) continue;
    remaining -= k;
    s.sizes.push_back(k);
    s.cumulative.push_back(n - remaining);
  }
  return s;
}

std::vector<std::size_t> sub_batches(std::size_t k) {
  std::vector<std::size_t> g;
  std::size_t covered = 0;
  for (std::size_t size = 2; covered < k; size *= 2) {
    // Take this group whole unless the next doubling would be left empty.
    const std::size_t take = (covered + size >= k) ? k - covered : size;
    g.push_back(take);
    covered += take;
  }
  return g;
}

std::vector<std::uint32_t> ranks_of(std::span<const Vertex> sigma) {
  std::vector<std::uint32_t> r(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) r[sigma[i]] = static_cast<std::uint32_t>(i);
  return r;
}

Vertex vert(Vertex u, Vertex v, const SettlementTable& t, std::span<const std::uint32_t> rank) {
  const Settlement& a = t[u];
  const Settlement& b = t[v];
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp ? u : v;
  if (a.role != b.role) return a.role == Role::Cover ? u : v;
  if (a.residual_degree != b.residual_degree) return a.residual_degree > b.residual_degree ? u : v;
  return rank[u] < rank[v] ? u : v;
}

double PassContext::delta() const {
  return std::clamp(std::pow(static_cast<double>(std::max<std::size_t>(scale_n, 2)), -cfg.c_delta), 1e-300, 0.25);
}

namespace {

std::size_t capped_budget(double c, double scale, std::size_t cap) {
  const double q = std::ceil(c * scale);
  return std::max<std::size_t>(1, std::min<std::size_t>(cap, static_cast<std::size_t>(q)));
}

SpaceUsage touched_words(const SparseSketch& s) { return s.touched() ? s.words() : SpaceUsage{}; }

}  // namespace

// ---------------------------------------------------------------- batch pass

BatchRecovery::BatchRecovery(const PassContext& ctx, std::span<const Vertex> active, std::uint64_t seed)
    : ctx_(ctx), active_(ctx.n, 0) {
  for (Vertex v : active) active_[v] = 1;
  const std::size_t a = active.size();
  const std::size_t pairs = a * (a > 0 ? a - 1 : 0) / 2;
  SketchSpec spec;
  spec.q = capped_budget(ctx.cfg.c_q, static_cast<double>(ctx.n) * log2n(ctx.scale_n), std::max<std::size_t>(pairs, 1));
  spec.domain = std::max<std::uint64_t>(std::uint64_t{ctx.n} * ctx.n, 1);
  spec.value_bound = ctx.value_bound();
  spec.delta = ctx.delta();
  sketch_ = SparseSketch(SketchLayout::make(spec, seed), ctx.cfg.mode);
}

void BatchRecovery::apply(Vertex u, Vertex v, std::int64_t delta) {
  if (active_[u] && active_[v]) sketch_.update(ctx_.pair_index(u, v), delta);
}

std::optional<std::vector<Edge>> BatchRecovery::finish() const {
  auto d = sketch_.decode();
  if (!d) return std::nullopt;
  std::vector<Edge> e;
  e.reserve(d->size());
  for (const auto& x : *d) e.push_back(ctx_.pair_edge(x.index));
  return e;
}

SpaceUsage BatchRecovery::words() const {
  SpaceUsage u = sketch_.mode() == SketchMode::Reference ? sketch_.words() : SpaceUsage{sketch_.layout().cell_words(), 0, 0, 0};
  u.hash += sketch_.layout().hash_words();
  u.table += active_.size() / 64 + 1;
  return u;
}

// ------------------------------------------------------------ timestamp pass

TimestampRecovery::TimestampRecovery(const PassContext& ctx, std::span<const Vertex> batch,
                                     const SettlementTable& table, std::span<const char> pending,
                                     std::uint64_t seed)
    : ctx_(ctx), table_(table), pending_(pending), group_of_(ctx.n, -1), slot_of_(ctx.n, 0) {
  const auto sizes = sub_batches(batch.size());
  groups_ = sizes.size();
  members_.assign(groups_, {});
  std::size_t pos = 0;
  for (std::size_t j = 0; j < groups_; ++j)
    for (std::size_t c = 0; c < sizes[j]; ++c, ++pos) {
      const Vertex u = batch[pos];
      if (table[u].role != Role::Mis) continue;
      group_of_[u] = static_cast<std::int32_t>(j);
      slot_of_[u] = static_cast<std::uint32_t>(members_[j].size());
      members_[j].push_back(u);
    }
  layouts_.resize(groups_);
  const std::size_t q = capped_budget(ctx.cfg.c_q_prime, lnn(ctx.scale_n), SIZE_MAX);
  for (std::size_t j = 0; j < groups_; ++j) {
    if (members_[j].empty()) continue;
    SketchSpec spec;
    spec.q = q;
    spec.domain = members_[j].size();
    spec.value_bound = ctx.value_bound();
    spec.delta = ctx.delta();
    layouts_[j] = SketchLayout::make(spec, derive_seed(seed, j));
  }
  sketches_.resize(ctx.n * groups_);
  for (std::size_t v = 0; v < ctx.n; ++v)
    for (std::size_t j = 0; j < groups_; ++j)
      if (layouts_[j]) sketches_[v * groups_ + j] = SparseSketch(layouts_[j], ctx.cfg.mode);
}

void TimestampRecovery::feed(Vertex mis, Vertex other, std::int64_t delta) {
  if (table_[other].role != Role::Untouched) return;
  const std::size_t g = static_cast<std::size_t>(group_of_[mis]);
  SparseSketch& s = sketches_[other * groups_ + g];
  const SpaceUsage before = touched_words(s);
  s.update(slot_of_[mis], delta);
  const SpaceUsage after = s.words();
  live_cells_ += after.sketch + after.reference - before.sketch - before.reference;
}

void TimestampRecovery::apply(Vertex u, Vertex v, std::int64_t delta) {
  if (group_of_[u] >= 0) feed(u, v, delta);
  if (group_of_[v] >= 0) feed(v, u, delta);
}

TimestampOutcome TimestampRecovery::finish(SettlementTable& table) const {
  TimestampOutcome out;
  for (Vertex v = 0; v < ctx_.n; ++v) {
    if (table[v].role != Role::Untouched) continue;
    bool any_fail = false, found = false;
    for (std::size_t j = 0; j < groups_ && !found; ++j) {
      const SparseSketch& s = sketches_[v * groups_ + j];
      if (!layouts_[j] || !s.touched()) continue;
      auto d = s.decode();
      if (!d) {
        any_fail = true;
        ++out.decode_failures;
        continue;
      }
      if (d->empty()) continue;
      std::uint32_t best = UINT32_MAX;
      for (const auto& e : *d) best = std::min(best, table[members_[j][e.index]].timestamp);
      table[v] = {Role::Cover, best, 0};
      found = true;
      ++out.resolved;
    }
    if (found) continue;
    if (any_fail) ++out.unresolved;
    if (!pending_.empty() && pending_[v]) ++out.pending_missed;
  }
  return out;
}

SpaceUsage TimestampRecovery::words() const {
  SpaceUsage u;
  if (ctx_.cfg.mode == SketchMode::Reference)
    u.reference = live_cells_;
  else
    u.sketch = live_cells_;
  for (const auto& l : layouts_)
    if (l) u.hash += l->hash_words();
  u.table = 2 * ctx_.n + groups_;  // group and slot per vertex
  return u;
}

// ------------------------------------------------------- residual degrees

ResidualDegrees::ResidualDegrees(const SettlementTable& table) : table_(table), deg_(table.size(), 0) {}

void ResidualDegrees::apply(Vertex u, Vertex v, std::int64_t delta) {
  const std::uint32_t tu = table_[u].timestamp, tv = table_[v].timestamp;
  if (tu >= tv) deg_[v] += delta;
  if (tv >= tu) deg_[u] += delta;
}

void ResidualDegrees::finish(SettlementTable& table) const {
  for (std::size_t v = 0; v < deg_.size(); ++v)
    table[v].residual_degree = static_cast<std::uint64_t>(std::max<std::int64_t>(0, deg_[v]));
}

// ---------------------------------------------------------------- z sampling

ZSampler::ZSampler(const PassContext& ctx, const SettlementTable& table, std::span<const std::uint32_t> rank,
                   std::uint64_t seed)
    : ctx_(ctx), table_(table), rank_(rank) {
  const auto kappa = static_cast<unsigned>(std::ceil(ctx.cfg.c_z * log2n(ctx.scale_n)));
  const std::uint64_t domain = std::max<std::uint64_t>(std::uint64_t{ctx.n} * ctx.n, 1);
  h_ = sample_unit_hash(std::max(1u, kappa), domain, derive_seed(seed, 1));
  const std::size_t pairs = std::max<std::size_t>(ctx.n * (ctx.n > 0 ? ctx.n - 1 : 0) / 2, 1);
  SketchSpec spec;
  spec.q = capped_budget(ctx.cfg.c_e, static_cast<double>(ctx.n) * log2n(ctx.scale_n), pairs);
  spec.domain = domain;
  spec.value_bound = ctx.value_bound();
  spec.delta = ctx.delta();
  sketch_ = SparseSketch(SketchLayout::make(spec, derive_seed(seed, 2)), ctx.cfg.mode);
}

double ZSampler::z(Vertex u, Vertex v) const {
  const Vertex w = vert(u, v, table_, rank_);
  const std::uint64_t d = table_[w].residual_degree;
  if (d == 0) return 1.0;
  return ctx_.cfg.c_z * log2n(ctx_.scale_n) / static_cast<double>(d);
}

bool ZSampler::sampled(Vertex u, Vertex v) const { return unit_accept(h_, ctx_.pair_index(u, v), z(u, v)); }

void ZSampler::apply(Vertex u, Vertex v, std::int64_t delta) {
  if (sampled(u, v)) sketch_.update(ctx_.pair_index(u, v), delta);
}

std::optional<std::vector<Edge>> ZSampler::finish() const {
  auto d = sketch_.decode();
  if (!d) return std::nullopt;
  std::vector<Edge> e;
  e.reserve(d->size());
  for (const auto& x : *d) {
    const Edge ed = ctx_.pair_edge(x.index);
    if (table_[vert(ed.u, ed.v, table_, rank_)].residual_degree == 0)
      throw std::logic_error("sampled live edge whose assigned vertex has residual degree 0");
    e.push_back(ed);
  }
  return e;
}

SpaceUsage ZSampler::words() const {
  SpaceUsage u = sketch_.mode() == SketchMode::Reference ? sketch_.words() : SpaceUsage{sketch_.layout().cell_words(), 0, 0, 0};
  u.hash = h_.words() + sketch_.layout().hash_words();
  return u;
}

Matching match_sampled(std::size_t n, const std::vector<Edge>& ez) {
  if (auto sides = two_coloring(n, ez)) return hopcroft_karp(Graph(n, ez, std::move(*sides)));
  return maximal_matching_augmented(Graph(n, ez));
}

// ---------------------------------------------------------------- pipeline

CorePipeline::CorePipeline(std::size_t n, std::vector<Vertex> sigma, const MatcherConfig& cfg, CoreStage stop,
                           std::size_t scale_n, bool multigraph)
    : stop_(stop), sigma_(std::move(sigma)) {
  ctx_.n = n;
  ctx_.scale_n = scale_n ? scale_n : n;
  ctx_.multigraph = multigraph;
  ctx_.cfg = cfg;
  if (sigma_.size() != n) throw ParameterError("sigma must be a permutation of the vertices");
  std::vector<char> seen(n, 0);
  for (Vertex v : sigma_) {
    if (v >= n || seen[v]) throw ParameterError("sigma must be a permutation of the vertices");
    seen[v] = 1;
  }
  if (cfg.retry_cap < 0) throw ParameterError("retry cap must be >= 0");
  rank_ = ranks_of(sigma_);
  schedule_ = batch_schedule(n);
  batch_start_.push_back(0);
  for (std::size_t k : schedule_.sizes) batch_start_.push_back(batch_start_.back() + k);
  table_.assign(n, {});
  pending_.assign(n, 0);
  if (schedule_.batches() == 0) phase_ = Phase::Done;
  refresh_words();
}

CorePipeline::~CorePipeline() = default;

int CorePipeline::max_passes() const {
  return static_cast<int>(schedule_.batches()) * (2 + ctx_.cfg.retry_cap) + 2;
}

void CorePipeline::begin_pass(int) {
  ++passes_;
  const std::uint64_t seed = ctx_.cfg.seed;
  std::span<const Vertex> batch;
  if (batch_ < schedule_.batches())
    batch = std::span<const Vertex>(sigma_).subspan(batch_start_[batch_], schedule_.sizes[batch_]);
  switch (phase_) {
    case Phase::Batch: {
      std::vector<Vertex> active;
      for (Vertex v : batch)
        if (table_[v].role == Role::Untouched && !pending_[v]) active.push_back(v);
      if (attempt_ == 0) {
        BatchLog l;
        l.batch = batch_ + 1;
        l.size = batch.size();
        l.active = active.size();
        l.cumulative = schedule_.cumulative[batch_];
        log_.push_back(l);
      }
      batch_pass_ = std::make_unique<BatchRecovery>(ctx_, active, derive_seed(seed, 1, batch_ * 1000 + attempt_));
      break;
    }
    case Phase::Timestamp:
      ts_pass_ = std::make_unique<TimestampRecovery>(ctx_, batch, table_, pending_, derive_seed(seed, 2, batch_));
      break;
    case Phase::Residual:
      rd_pass_ = std::make_unique<ResidualDegrees>(table_);
      break;
    case Phase::Sample:
      z_pass_ = std::make_unique<ZSampler>(ctx_, table_, rank_, derive_seed(seed, 3));
      break;
    case Phase::Done:
      break;
  }
  refresh_words();
}

void CorePipeline::apply(Vertex u, Vertex v, std::int64_t delta) {
  switch (phase_) {
    case Phase::Batch: batch_pass_->apply(u, v, delta); return;
    case Phase::Timestamp:
      ts_pass_->apply(u, v, delta);
      refresh_words();
      return;
    case Phase::Residual: rd_pass_->apply(u, v, delta); return;
    case Phase::Sample: z_pass_->apply(u, v, delta); return;
    case Phase::Done: return;
  }
}

void CorePipeline::fail() {
  failed_ = true;
  phase_ = Phase::Done;
}

void CorePipeline::end_pass(int) {
  switch (phase_) {
    case Phase::Batch: {
      BatchLog& l = log_.back();
      ++l.attempts;
      auto edges = batch_pass_->finish();
      batch_pass_.reset();
      if (!edges) {
        if (++attempt_ > ctx_.cfg.retry_cap) fail();
        break;
      }
      l.recovered = true;
      l.edges = edges->size();
      std::vector<std::vector<Vertex>> adj;
      std::vector<std::uint32_t> local(ctx_.n, UINT32_MAX);
      const auto batch = std::span<const Vertex>(sigma_).subspan(batch_start_[batch_], schedule_.sizes[batch_]);
      for (std::size_t i = 0; i < batch.size(); ++i) local[batch[i]] = static_cast<std::uint32_t>(i);
      adj.assign(batch.size(), {});
      for (const Edge& e : *edges) {
        adj[local[e.u]].push_back(e.v);
        adj[local[e.v]].push_back(e.u);
      }
      for (const auto& a : adj) l.max_degree = std::max(l.max_degree, a.size());
      for (Vertex u : batch) {
        if (table_[u].role != Role::Untouched || pending_[u]) continue;
        table_[u] = {Role::Mis, ++time_, 0};
        ++l.mis_added;
        for (Vertex w : adj[local[u]])
          if (table_[w].role == Role::Untouched) pending_[w] = 1;
      }
      phase_ = Phase::Timestamp;
      break;
    }
    case Phase::Timestamp: {
      BatchLog& l = log_.back();
      l.timestamps = ts_pass_->finish(table_);
      ts_pass_.reset();
      std::fill(pending_.begin(), pending_.end(), 0);
      if (l.timestamps.unresolved > 0 || l.timestamps.pending_missed > 0) {
        fail();
        break;
      }
      ++batch_;
      attempt_ = 0;
      if (batch_ < schedule_.batches())
        phase_ = Phase::Batch;
      else
        phase_ = stop_ == CoreStage::Settlement ? Phase::Done : Phase::Residual;
      break;
    }
    case Phase::Residual:
      rd_pass_->finish(table_);
      rd_pass_.reset();
      phase_ = stop_ == CoreStage::Residual ? Phase::Done : Phase::Sample;
      break;
    case Phase::Sample: {
      auto ez = z_pass_->finish();
      z_pass_.reset();
      if (!ez) {
        fail();
        break;
      }
      ez_ = std::move(*ez);
      matching_ = match_sampled(ctx_.n, ez_);
      phase_ = Phase::Done;
      break;
    }
    case Phase::Done:
      break;
  }
  refresh_words();
}

void CorePipeline::refresh_words() {
  // sigma, role+timestamp, residual degree, pending bits
  SpaceUsage u{0, 0, 3 * ctx_.n + ctx_.n / 64 + 1 + 2 * schedule_.batches(), 0};
  if (batch_pass_) u += batch_pass_->words();
  if (ts_pass_) u += ts_pass_->words();
  if (rd_pass_) u += rd_pass_->words();
  if (z_pass_) u += z_pass_->words();
  cached_ = u;
}

CoreResult run_core(const UpdateSource& s, std::vector<Vertex> sigma, const MatcherConfig& cfg, CoreStage stop,
                    const ReplayOptions& opt) {
  CorePipeline p(s.vertex_count(), std::move(sigma), cfg, stop);
  SpaceMeter meter;
  CoreResult r;
  r.stats = replay(s, p, meter, opt);
  r.settlement = p.settlement();
  r.log = p.log();
  r.sampled_edges = p.sampled_edges();
  r.matching = p.matching();
  r.failed = p.failed();
  return r;
}

SettlementTable run_batches(const UpdateSource& s, std::vector<Vertex> sigma, const MatcherConfig& cfg) {
  return run_core(s, std::move(sigma), cfg, CoreStage::Settlement).settlement;
}

// ------------------------------------------------------------------ boosting

struct BoostedMatcher::Subrun {
  std::vector<std::uint32_t> group;  // G vertex -> H vertex
  std::unique_ptr<CorePipeline> core;
  int pass = 0;
};

BoostedMatcher::BoostedMatcher(std::size_t n, const MatcherConfig& cfg) : n_(n), cfg_(cfg) {
  ctx_.n = n;
  ctx_.scale_n = n;
  ctx_.cfg = cfg;
  if (n < 2) {
    phase_ = Phase::Done;
    return;
  }
  if (!cfg.shortcut) start_subruns();
}

BoostedMatcher::~BoostedMatcher() = default;

int BoostedMatcher::max_passes() const {
  MatcherConfig c = cfg_;
  const int core = static_cast<int>(batch_schedule(n_).batches()) * (2 + c.retry_cap) + 2;
  return 1 + core + 2;
}

void BoostedMatcher::start_subruns() {
  phase_ = Phase::Subruns;
  const double lg = log2n(n_);
  const auto reps = static_cast<std::size_t>(std::ceil(cfg_.c_rep * lg));
  for (int j = 0; j < 63; ++j) {
    const std::uint64_t mu = std::uint64_t{1} << j;
    if (static_cast<double>(mu) < lg * lg) continue;
    if (mu > n_) break;
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng(derive_seed(cfg_.seed, 20 + j, r));
      const std::uint64_t t = 16 * mu;
      std::vector<std::uint64_t> raw(n_);
      for (auto& g : raw) g = rng.below(t);
      std::vector<std::uint64_t> ids = raw;
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      auto sub = std::make_unique<Subrun>();
      sub->group.resize(n_);
      for (std::size_t v = 0; v < n_; ++v)
        sub->group[v] = static_cast<std::uint32_t>(std::lower_bound(ids.begin(), ids.end(), raw[v]) - ids.begin());
      MatcherConfig c = cfg_;
      c.seed = derive_seed(cfg_.seed, 40 + j, r);
      sub->core = std::make_unique<CorePipeline>(ids.size(), random_permutation(ids.size(), rng), c, CoreStage::Full,
                                                 n_, true);
      subs_.push_back(std::move(sub));
    }
  }
  if (subs_.empty()) {
    // No contraction scale fits below n: run the core pipeline uncontracted.
    Rng rng(derive_seed(cfg_.seed, 20));
    auto sub = std::make_unique<Subrun>();
    sub->group.resize(n_);
    for (std::size_t v = 0; v < n_; ++v) sub->group[v] = static_cast<std::uint32_t>(v);
    MatcherConfig c = cfg_;
    c.seed = derive_seed(cfg_.seed, 40);
    sub->core = std::make_unique<CorePipeline>(n_, random_permutation(n_, rng), c, CoreStage::Full, n_, true);
    subs_.push_back(std::move(sub));
  }
  stats_.subruns = subs_.size();
}

void BoostedMatcher::begin_pass(int) {
  switch (phase_) {
    case Phase::Shortcut: {
      SketchSpec spec;
      const double lg = log2n(n_);
      spec.q = capped_budget(2.0, static_cast<double>(n_) * lg * lg, n_ * (n_ - 1) / 2);
      spec.domain = std::uint64_t{n_} * n_;
      spec.delta = ctx_.delta();
      shortcut_ = std::make_unique<SparseSketch>(SketchLayout::make(spec, derive_seed(cfg_.seed, 10)), cfg_.mode);
      break;
    }
    case Phase::Subruns:
      for (auto& s : subs_)
        if (!s->core->finished()) s->core->begin_pass(++s->pass);
      break;
    default:
      break;
  }
}

void BoostedMatcher::update(const EdgeUpdate& e) {
  const std::int64_t d = e.delta();
  switch (phase_) {
    case Phase::Shortcut:
      shortcut_->update(ctx_.pair_index(e.u, e.v), d);
      break;
    case Phase::Subruns:
      for (auto& s : subs_) {
        if (s->core->finished()) continue;
        const std::uint32_t a = s->group[e.u], b = s->group[e.v];
        if (a != b) s->core->apply(a, b, d);
      }
      break;
    case Phase::Count:
    case Phase::Lift: {
      const std::int64_t p = pair_of_group_[best_->group[e.u]];
      if (p < 0 || pair_of_group_[best_->group[e.v]] != p || best_->group[e.u] == best_->group[e.v]) break;
      if (phase_ == Phase::Count) {
        counts_[p] += d;
      } else {
        const double rate = lift_target_ / static_cast<double>(std::max<std::int64_t>(counts_[p], 1));
        const std::uint64_t idx = ctx_.pair_index(e.u, e.v);
        if (unit_accept(lift_hash_, idx, rate)) lift_sketches_[p].update(idx, d);
      }
      break;
    }
    case Phase::Done:
      break;
  }
}

void BoostedMatcher::start_lift() {
  const Matching& hm = best_->core->matching();
  stats_.best_h_matching = hm.size();
  pair_of_group_.assign(best_->core->context().n, -1);
  for (std::size_t p = 0; p < hm.size(); ++p) {
    pair_of_group_[hm.edges()[p].u] = static_cast<std::int64_t>(p);
    pair_of_group_[hm.edges()[p].v] = static_cast<std::int64_t>(p);
  }
  counts_.assign(hm.size(), 0);
  phase_ = Phase::Count;
}

void BoostedMatcher::end_pass(int) {
  switch (phase_) {
    case Phase::Shortcut: {
      auto d = shortcut_->decode();
      shortcut_.reset();
      if (d) {
        std::vector<Edge> edges;
        for (const auto& x : *d) edges.push_back(ctx_.pair_edge(x.index));
        matching_ = match_sampled(n_, edges);
        stats_.shortcut_used = true;
        phase_ = Phase::Done;
      } else {
        start_subruns();
      }
      break;
    }
    case Phase::Subruns: {
      for (auto& s : subs_)
        if (!s->core->finished()) s->core->end_pass(s->pass);
      if (!std::all_of(subs_.begin(), subs_.end(), [](const auto& s) { return s->core->finished(); })) break;
      best_ = nullptr;
      for (const auto& s : subs_) {
        if (s->core->failed()) {
          ++stats_.subruns_failed;
          continue;
        }
        if (!best_ || s->core->matching().size() > best_->core->matching().size()) best_ = s.get();
      }
      if (!best_) {
        failed_ = true;
        phase_ = Phase::Done;
        break;
      }
      start_lift();
      break;
    }
    case Phase::Count: {
      const double lg = log2n(n_);
      lift_target_ = std::ceil(cfg_.c_z * lg);
      lift_hash_ = sample_unit_hash(static_cast<unsigned>(lift_target_), std::uint64_t{n_} * n_,
                                    derive_seed(cfg_.seed, 60));
      SketchSpec spec;
      spec.q = static_cast<std::size_t>(4 * lift_target_);
      spec.domain = std::uint64_t{n_} * n_;
      spec.delta = ctx_.delta();
      lift_layout_ = SketchLayout::make(spec, derive_seed(cfg_.seed, 61));
      lift_sketches_.assign(counts_.size(), SparseSketch(lift_layout_, cfg_.mode));
      phase_ = Phase::Lift;
      break;
    }
    case Phase::Lift: {
      std::vector<Edge> lifted;
      for (const auto& s : lift_sketches_) {
        auto d = s.decode();
        if (!d || d->empty()) {
          ++stats_.lift_failures;
          continue;
        }
        lifted.push_back(ctx_.pair_edge(d->front().index));
      }
      matching_ = Matching(std::move(lifted));
      lift_sketches_.clear();
      subs_.clear();
      best_ = nullptr;
      phase_ = Phase::Done;
      break;
    }
    case Phase::Done:
      break;
  }
}

SpaceUsage BoostedMatcher::live_words() const {
  SpaceUsage u;
  if (shortcut_) {
    u += shortcut_->mode() == SketchMode::Reference ? shortcut_->words()
                                                    : SpaceUsage{shortcut_->layout().cell_words(), 0, 0, 0};
    u.hash += shortcut_->layout().hash_words();
  }
  for (const auto& s : subs_) {
    u += s->core->live_words();
    u.table += s->group.size();
  }
  u.table += pair_of_group_.size() + counts_.size();
  if (lift_layout_ && !lift_sketches_.empty()) {
    u.hash += lift_layout_->hash_words() + lift_hash_.words();
    if (cfg_.mode == SketchMode::Reference)
      for (const auto& s : lift_sketches_) u += s.words();
    else
      u.sketch += lift_sketches_.size() * lift_layout_->cell_words();
  }
  return u;
}

BoostResult boosted_match(const UpdateSource& s, const MatcherConfig& cfg, const ReplayOptions& opt) {
  BoostedMatcher m(s.vertex_count(), cfg);
  SpaceMeter meter;
  BoostResult r;
  r.replay = replay(s, m, meter, opt);
  r.matching = m.matching();
  r.failed = m.failed();
  r.stats = m.stats();
  return r;
}

void write_batch_log(std::ostream& out, const std::vector<BatchLog>& log) {
  for (const auto& l : log) {
    nlohmann::ordered_json j;
    j["batch"] = l.batch;
    j["size"] = l.size;
    j["active"] = l.active;
    j["cumulative"] = l.cumulative;
    j["attempts"] = l.attempts;
    j["recovered"] = l.recovered;
    j["edges"] = l.edges;
    j["max_degree"] = l.max_degree;
    j["mis_added"] = l.mis_added;
    j["ts_resolved"] = l.timestamps.resolved;
    j["ts_unresolved"] = l.timestamps.unresolved;
    j["ts_decode_failures"] = l.timestamps.decode_failures;
    j["ts_pending_missed"] = l.timestamps.pending_missed;
    out << j.dump() << '\n';
  }
}

}  // namespace dynmatch

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "dynmatch/ahm.hpp"
#include "dynmatch/error.hpp"
#include "dynmatch/greedy.hpp"
#include "dynmatch/loglog.hpp"
#include "dynmatch/rng.hpp"
#include "dynmatch/stream.hpp"

using namespace dynmatch;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kInput = 2, kBudget = 3, kFailure = 4 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hopcroft-Karp when the graph is 2-colorable, brute force otherwise.
Matching exact_matching(const Graph& g) {
  if (auto sides = two_coloring(g.vertex_count(), g.edges()))
    return hopcroft_karp(Graph(g.vertex_count(), std::vector<Edge>(g.edges().begin(), g.edges().end()), std::move(*sides)));
  return max_matching_exact(g);
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("DYNMATCH_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
      throw InputError("DYNMATCH_SEED is not an integer");
    }
  }
  return 1;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  return f;
}

// Runs fn(i) for i in [0, count) on `workers` threads; callers store
// results by index so output order never depends on scheduling.
void for_each_trial(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct Knobs {
  MatcherConfig cfg;
  bool reference = false;
  bool no_shortcut = false;
  double budget_c = 0;
  std::size_t budget_words = 0;

  void add(CLI::App* app) {
    app->add_option("--c-q", cfg.c_q, "batch recovery constant")->capture_default_str();
    app->add_option("--c-qp", cfg.c_q_prime, "timestamp recovery constant")->capture_default_str();
    app->add_option("--c-z", cfg.c_z, "sampling constant")->capture_default_str();
    app->add_option("--c-delta", cfg.c_delta, "sketch failure exponent")->capture_default_str();
    app->add_option("--c-rep", cfg.c_rep, "boosting repetitions per guess")->capture_default_str();
    app->add_option("--c-e", cfg.c_e, "E_z recovery constant")->capture_default_str();
    app->add_option("--retry-cap", cfg.retry_cap, "retries per batch")->capture_default_str();
    app->add_flag("--reference", reference, "exact reference storage instead of sketches");
    app->add_flag("--no-shortcut", no_shortcut, "skip whole-graph recovery when boosting");
    app->add_option("--budget-c", budget_c, "strict space budget C * n * log2(n)^5 words");
    app->add_option("--budget-words", budget_words, "strict space budget in words");
  }
  MatcherConfig config(std::uint64_t seed) const {
    MatcherConfig c = cfg;
    c.seed = seed;
    c.mode = reference ? SketchMode::Reference : SketchMode::Sketch;
    c.shortcut = !no_shortcut;
    return c;
  }
  ReplayOptions replay(std::size_t n) const {
    ReplayOptions o;
    if (budget_words) {
      o.strict = true;
      o.budget_words = budget_words;
    } else if (budget_c > 0) {
      o.strict = true;
      o.budget_words = static_cast<std::size_t>(budget_c * static_cast<double>(n) * std::pow(log2n(n), 5));
    }
    o.faithful = !reference;
    return o;
  }
};

struct Outcome {
  Matching matching;
  bool failed = false;
  ReplayStats stats;
  json log;  // array of JSON lines
};

Outcome run_algorithm(const std::string& algo, const UpdateSource& s, const Knobs& k, std::uint64_t seed) {
  const std::size_t n = s.vertex_count();
  Outcome o;
  o.log = json::array();
  if (algo == "loglog") {
    auto r = boosted_match(s, k.config(seed), k.replay(n));
    o.matching = std::move(r.matching);
    o.failed = r.failed;
    o.stats = r.replay;
    json j;
    j["event"] = "boost";
    j["shortcut_used"] = r.stats.shortcut_used;
    j["subruns"] = r.stats.subruns;
    j["subruns_failed"] = r.stats.subruns_failed;
    j["best_h_matching"] = r.stats.best_h_matching;
    j["lift_failures"] = r.stats.lift_failures;
    o.log.push_back(j);
  } else if (algo == "core") {
    Rng rng(derive_seed(seed, 99));
    auto r = run_core(s, random_permutation(n, rng), k.config(seed), CoreStage::Full, k.replay(n));
    o.matching = std::move(r.matching);
    o.failed = r.failed;
    o.stats = r.stats;
    std::ostringstream lines;
    write_batch_log(lines, r.log);
    std::istringstream in(lines.str());
    for (std::string line; std::getline(in, line);) o.log.push_back(json::parse(line));
    json j;
    j["event"] = "core";
    j["sampled_edges"] = r.sampled_edges.size();
    o.log.push_back(j);
  } else if (algo == "exact") {
    o.matching = exact_matching(validate_stream(s));
    o.stats.passes = 1;
  } else {
    throw InputError("unknown algorithm: " + algo);
  }
  return o;
}

void write_log(const std::string& path, const json& log) {
  if (path.empty()) return;
  auto f = open_out(path);
  for (const auto& j : log) f << j.dump() << '\n';
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-stream matching toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "seed (default $DYNMATCH_SEED or 1)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random dynamic stream");
  GenParams gp;
  double p_opt = -1;
  std::size_t m_opt = 0;
  std::string gen_out, gen_graph;
  gen->add_option("--n", gp.n, "vertices")->required();
  gen->add_option("--p", p_opt, "edge probability");
  gen->add_option("--m", m_opt, "exact edge count");
  gen->add_flag("--bipartite", gp.bipartite);
  gen->add_option("--deletions", gp.deletion_fraction, "fraction of edges deleted later");
  gen->add_flag("--planted", gp.planted_perfect_matching, "plant a perfect matching (bipartite)");
  gen->add_option("--out", gen_out, "stream file")->required();
  gen->add_option("--graph-out", gen_graph, "final graph file");

  // run
  auto* run = app.add_subcommand("run", "run a matching algorithm over a stream file");
  std::string run_stream, run_algo = "loglog", run_out, run_metrics, run_log, run_id;
  Knobs run_knobs;
  run->add_option("--stream", run_stream)->required();
  run->add_option("--algo", run_algo, "loglog | core | exact")->capture_default_str();
  run->add_option("--out", run_out, "matching file");
  run->add_option("--metrics", run_metrics, "metrics csv");
  run->add_option("--log", run_log, "JSON lines log");
  run->add_option("--run-id", run_id);
  run_knobs.add(run);

  // verify
  auto* verify = app.add_subcommand("verify", "check a matching against a stream");
  std::string ver_matching, ver_stream;
  verify->add_option("--matching", ver_matching)->required();
  verify->add_option("--stream", ver_stream)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "run an algorithm over generated instances");
  std::vector<std::size_t> bench_sizes{1024};
  std::size_t bench_seeds = 3;
  double bench_degree = 8, bench_del = 0.1;
  std::string bench_algo = "loglog", bench_out;
  int bench_workers = 1;
  Knobs bench_knobs;
  bench->add_option("--sizes", bench_sizes)->delimiter(',')->capture_default_str();
  bench->add_option("--seeds", bench_seeds)->capture_default_str();
  bench->add_option("--avg-degree", bench_degree)->capture_default_str();
  bench->add_option("--deletions", bench_del)->capture_default_str();
  bench->add_option("--algo", bench_algo)->capture_default_str();
  bench->add_option("--workers", bench_workers)->capture_default_str();
  bench->add_option("--out", bench_out, "metrics csv")->required();
  bench_knobs.add(bench);

  // montecarlo
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo statistics of the greedy reduction");
  std::string mc_graph, mc_out;
  std::size_t mc_n = 0, mc_trials = 1000;
  double mc_p = 0.2, mc_beta = 1.0 / 16;
  mc->add_option("--graph", mc_graph, "graph file");
  mc->add_option("--n", mc_n, "generate ER graph on n vertices");
  mc->add_option("--p", mc_p)->capture_default_str();
  mc->add_option("--beta", mc_beta)->capture_default_str();
  mc->add_option("--trials", mc_trials)->capture_default_str();
  mc->add_option("--out", mc_out, "report csv");

  // ahm
  auto* ahm = app.add_subcommand("ahm", "hard-instance generator and reduction");
  std::string ahm_preset_name, ahm_alpha = "1/4", ahm_score = "none", ahm_inst_out, ahm_stream_out, ahm_report;
  int ahm_r = -1;
  std::vector<std::uint32_t> ahm_b;
  bool ahm_dump = false;
  std::size_t ahm_trials = 0;
  int ahm_workers = 1;
  Knobs ahm_knobs;
  ahm->add_option("--preset", ahm_preset_name, "r1 | r3");
  ahm->add_option("--r", ahm_r);
  ahm->add_option("--b", ahm_b, "branch sizes b_1..b_r")->delimiter(',');
  ahm->add_option("--alpha", ahm_alpha)->capture_default_str();
  ahm->add_option("--score-with", ahm_score, "none | exact | loglog | core")->capture_default_str();
  ahm->add_option("--instance-out", ahm_inst_out);
  ahm->add_flag("--dump-bits", ahm_dump);
  ahm->add_option("--stream-out", ahm_stream_out);
  ahm->add_option("--trials", ahm_trials, "reduction trials at uniform search addresses");
  ahm->add_option("--workers", ahm_workers)->capture_default_str();
  ahm->add_option("--report", ahm_report, "per-trial csv");
  ahm_knobs.add(ahm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  try {
    if (seed_opt->count() == 0) seed = default_seed();

    if (gen->parsed()) {
      if (p_opt >= 0) gp.p = p_opt;
      if (m_opt > 0 || p_opt < 0) gp.m = m_opt;
      gp.seed = seed;
      const DynamicStream s = gen_random(gp);
      auto f = open_out(gen_out);
      write_stream(f, s);
      if (!gen_graph.empty()) {
        auto g = open_out(gen_graph);
        write_graph(g, validate_stream(s, gp.bipartite ? generator_sides(gp.n) : std::vector<Side>{}));
      }
      std::cout << "updates " << s.updates.size() << '\n';
      return kOk;
    }

    if (run->parsed()) {
      std::unique_ptr<FileStreamSource> src;
      try {
        src = std::make_unique<FileStreamSource>(run_stream);
        validate_stream(*src);
      } catch (const std::exception& e) {
        throw InputError(e.what());
      }
      const auto t0 = std::chrono::steady_clock::now();
      Outcome o = run_algorithm(run_algo, *src, run_knobs, seed);
      const double ms = elapsed_ms(t0);
      if (!run_out.empty()) {
        auto f = open_out(run_out);
        write_matching(f, o.matching);
      }
      if (!run_metrics.empty()) {
        auto f = open_out(run_metrics);
        write_metrics_header(f);
        write_metrics_row(f, {run_id.empty() ? run_algo + "-" + std::to_string(seed) : run_id, o.stats.passes,
                              o.stats.peak_words, o.matching.size(), ms});
      }
      json summary;
      summary["event"] = "summary";
      summary["algo"] = run_algo;
      summary["seed"] = seed;
      summary["passes"] = o.stats.passes;
      summary["peak_words"] = o.stats.peak_words;
      summary["matching"] = o.matching.size();
      summary["failed"] = o.failed;
      o.log.push_back(summary);
      write_log(run_log, o.log);
      std::cout << "matching " << o.matching.size() << "\npasses " << o.stats.passes << "\npeak_words "
                << o.stats.peak_words << '\n';
      if (o.failed) {
        std::cerr << "algorithm reported failure\n";
        return kFailure;
      }
      return kOk;
    }

    if (verify->parsed()) {
      Graph g;
      Matching m;
      try {
        auto sf = open_in(ver_stream);
        g = validate_stream(read_stream(sf));
        auto mf = open_in(ver_matching);
        m = read_matching(mf);
      } catch (const InputError&) {
        throw;
      } catch (const std::exception& e) {
        throw InputError(e.what());
      }
      if (!m.valid_in(g)) {
        std::cout << "valid 0\n";
        return kFailure;
      }
      std::cout << "valid 1\nsize " << m.size() << '\n';
      std::optional<std::size_t> mu_opt;
      if (g.vertex_count() <= 24 || two_coloring(g.vertex_count(), g.edges())) mu_opt = exact_matching(g).size();
      if (mu_opt) {
        const std::size_t mu = *mu_opt;
        std::cout << "mu " << mu << "\nratio " << (mu ? static_cast<double>(m.size()) / mu : 1.0) << '\n';
      }
      return kOk;
    }

    if (bench->parsed()) {
      struct Row {
        MetricsRow metrics;
        bool failed;
      };
      std::vector<Row> rows(bench_sizes.size() * bench_seeds);
      for_each_trial(rows.size(), bench_workers, [&](std::size_t i) {
        const std::size_t n = bench_sizes[i / bench_seeds];
        const std::uint64_t s = derive_seed(seed, i % bench_seeds);
        GenParams p;
        p.n = n;
        p.p = std::min(1.0, bench_degree / static_cast<double>(n / 2));
        p.bipartite = true;
        p.planted_perfect_matching = true;
        p.deletion_fraction = bench_del;
        p.seed = s;
        const DynamicStream st = gen_random(p);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o = run_algorithm(bench_algo, st, bench_knobs, s);
        rows[i] = {{"n" + std::to_string(n) + "-s" + std::to_string(i % bench_seeds), o.stats.passes,
                    o.stats.peak_words, o.matching.size(), elapsed_ms(t0)},
                   o.failed};
      });
      auto f = open_out(bench_out);
      write_metrics_header(f);
      std::size_t failures = 0;
      for (const auto& r : rows) {
        write_metrics_row(f, r.metrics);
        failures += r.failed;
      }
      std::cout << "runs " << rows.size() << "\nfailures " << failures << '\n';
      return kOk;
    }

    if (mc->parsed()) {
      if (!(mc_beta > 0 && mc_beta < 1.0 / 8)) throw InputError("beta must lie in (0, 1/8)");
      Graph g;
      if (!mc_graph.empty()) {
        try {
          auto f = open_in(mc_graph);
          g = read_graph(f);
        } catch (const InputError&) {
          throw;
        } catch (const std::exception& e) {
          throw InputError(e.what());
        }
      } else {
        GenParams p;
        p.n = mc_n;
        p.p = mc_p;
        p.seed = seed;
        g = validate_stream(gen_random(p));
      }
      auto rep = greedy_montecarlo(g, mc_beta, mc_trials, seed);
      if (mc_out.empty()) {
        write_report_csv(std::cout, rep);
      } else {
        auto f = open_out(mc_out);
        write_report_csv(f, rep);
      }
      return rep.all_pass() ? kOk : kFailure;
    }

    if (ahm->parsed()) {
      AhmParams p;
      try {
        if (!ahm_preset_name.empty()) {
          p = ahm_preset(ahm_preset_name);
        } else {
          p.r = ahm_r;
          p.b = ahm_b;
          p.alpha = parse_rational(ahm_alpha);
        }
        p.validate();
      } catch (const ParameterError& e) {
        throw InputError(e.what());
      }
      StreamMatcher matcher;
      if (ahm_score == "exact") {
        matcher = exact_stream_matcher;
      } else if (ahm_score == "loglog" || ahm_score == "core") {
        matcher = [&](const DynamicStream& s, const std::vector<Side>&) {
          Outcome o = run_algorithm(ahm_score, s, ahm_knobs, seed);
          if (o.failed) throw std::runtime_error("matcher failed");
          return o.matching;
        };
      } else if (ahm_score != "none") {
        throw InputError("unknown scorer: " + ahm_score);
      }

      const AhmInstance inst = sample_instance(p, seed);
      const ConstructedGraph g = build_graph(inst);
      if (!ahm_inst_out.empty()) {
        auto f = open_out(ahm_inst_out);
        write_instance(f, inst, ahm_dump);
      }
      std::cout << "n_r " << g.layout.n_r << "\ninserted " << g.e_ins.size() << "\ndeleted " << g.e_del.size()
                << "\nspecial_bases " << g.specials.size() << '\n';
      if (!ahm_stream_out.empty()) {
        auto f = open_out(ahm_stream_out);
        write_stream(f, to_stream(g, derive_seed(seed, 1)));
      }
      bool ok = true;
      if (matcher && p.r % 2 == 1) {
        const Matching m = matcher(to_stream(g, derive_seed(seed, 1)), g.sides());
        const auto sc = score_identification(m, g);
        std::cout << "matching " << m.size() << "\ncorrect " << sc.correct << "\nwrong " << sc.wrong << "\nunknown "
                  << sc.unknown << "\nbound " << sc.bound << "\nverdict " << (sc.verdict ? "true" : "false") << '\n';
        ok = sc.verdict;
      } else if (matcher) {
        const Matching m = hopcroft_karp(g.final_graph());
        const auto sc = score_identification(m, g);
        std::cout << "matching " << m.size() << "\ncorrect " << sc.correct << "\nverdict "
                  << (sc.verdict ? "true" : "false") << '\n';
        ok = sc.verdict;
      }
      if (ahm_trials > 0) {
        if (!matcher) throw InputError("--trials needs --score-with");
        std::vector<ReductionTrial> trials(ahm_trials);
        for_each_trial(ahm_trials, ahm_workers,
                       [&](std::size_t i) { trials[i] = run_reduction_trial(p, derive_seed(seed, 1000 + i), matcher); });
        std::size_t wins = 0;
        for (const auto& t : trials) wins += t.success;
        std::cout << "trials " << ahm_trials << "\nsuccesses " << wins << '\n';
        if (!ahm_report.empty()) {
          auto f = open_out(ahm_report);
          f << "#schema=dynmatch.ahm_trials.v1\ntrial,search,truth,decoded,answer,success\n";
          for (std::size_t i = 0; i < trials.size(); ++i) {
            const auto& t = trials[i];
            f << i << ',';
            for (std::size_t c = 0; c < t.search.size(); ++c) f << (c ? "." : "") << t.search[c];
            f << ',' << int(t.truth) << ','
              << (t.decoded == BitGuess::Unknown ? std::string("?") : std::to_string(int(t.decoded))) << ','
              << int(t.answer) << ',' << int(t.success) << '\n';
          }
        }
      }
      return ok ? kOk : kFailure;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ParameterError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const StreamError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const BudgetExceeded& e) {
    std::cerr << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

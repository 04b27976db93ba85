#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ssbfs/adversary.hpp"
#include "ssbfs/analysis.hpp"
#include "ssbfs/error.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"
#include "ssbfs/scenarios.hpp"
#include "ssbfs/scheduler.hpp"

namespace ssbfs {

enum class InitKind { zero, corrupted, random, file };

inline InitKind parse_init_kind(const std::string& s) {
  if (s == "zero") return InitKind::zero;
  if (s == "corrupted") return InitKind::corrupted;
  if (s == "random") return InitKind::random;
  if (s == "file") return InitKind::file;
  throw InputError("unknown init '" + s + "' (zero, corrupted, random, file)");
}

inline const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::zero: return "zero";
    case InitKind::corrupted: return "corrupted";
    case InitKind::random: return "random";
    case InitKind::file: return "file";
  }
  return "zero";
}

inline AdversaryKind parse_adversary_kind(const std::string& s) {
  if (s == "silent") return AdversaryKind::silent;
  if (s == "fake-root") return AdversaryKind::fake_root;
  if (s == "mirror-root") return AdversaryKind::mirror_root;
  if (s == "oscillator") return AdversaryKind::oscillator;
  if (s == "random") return AdversaryKind::random;
  if (s == "scripted") return AdversaryKind::scripted;
  if (s == "protocol-following") return AdversaryKind::protocol_following;
  throw InputError("unknown adversary '" + s +
                   "' (silent, fake-root, mirror-root, oscillator, random, scripted, protocol-following)");
}

inline DaemonKind parse_daemon_kind(const std::string& s) {
  if (s == "central") return DaemonKind::central;
  if (s == "distributed") return DaemonKind::distributed;
  if (s == "synchronous") return DaemonKind::synchronous;
  throw InputError("unknown daemon '" + s + "' (central, distributed, synchronous)");
}

inline Fairness parse_fairness(const std::string& s) {
  if (s == "round-robin") return Fairness::round_robin;
  if (s == "random") return Fairness::random;
  throw InputError("unknown fairness '" + s + "' (round-robin, random)");
}

inline const char* to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::silent: return "silent";
    case AdversaryKind::fake_root: return "fake-root";
    case AdversaryKind::mirror_root: return "mirror-root";
    case AdversaryKind::oscillator: return "oscillator";
    case AdversaryKind::random: return "random";
    case AdversaryKind::scripted: return "scripted";
    case AdversaryKind::protocol_following: return "protocol-following";
  }
  return "silent";
}

inline const char* to_string(DaemonKind k) {
  switch (k) {
    case DaemonKind::central: return "central";
    case DaemonKind::distributed: return "distributed";
    case DaemonKind::synchronous: return "synchronous";
  }
  return "central";
}

inline const char* to_string(Fairness f) {
  switch (f) {
    case Fairness::round_robin: return "round-robin";
    case Fairness::random: return "random";
    case Fairness::scripted: return "scripted";
  }
  return "random";
}

// splitmix64; derives independent sub-seeds from the run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::oscillator;
  std::size_t period = 1;
  Level high_level = 0;
  std::string script_file;
};

struct RunConfig {
  ScenarioParams scenario = ScenarioParams::hexagon();
  InitKind init = InitKind::random;
  std::string init_file;
  AdversarySpec adversary;
  DaemonKind daemon = DaemonKind::distributed;
  Fairness fairness = Fairness::random;
  std::uint64_t seed = 1;
  // Step budget for the main phase; 0 means 50·n·m.
  std::size_t max_steps = 0;
  // When > 0 the run stops at the first LC configuration (within max_steps)
  // and then takes exactly this many further steps.
  std::size_t post_lc_steps = 0;

  std::string trace_path;
  std::string metrics_path;
  std::string dot_path;

  bool check_closure = false;
  bool check_bounds = false;
  bool check_containment = false;
  bool check_activations = false;

  // Everything that determines the run; output paths excluded.
  std::string stamp() const {
    std::ostringstream out;
    out << "scenario=" << scenario.id() << " init=" << to_string(init);
    if (init == InitKind::file) out << ':' << init_file;
    out << " adversary=" << to_string(adversary.kind);
    if (adversary.kind == AdversaryKind::oscillator) out << ':' << adversary.period << ':' << adversary.high_level;
    if (adversary.kind == AdversaryKind::scripted) out << ':' << adversary.script_file;
    out << " daemon=" << to_string(daemon) << " fairness=" << to_string(fairness) << " seed=" << seed
        << " max_steps=" << max_steps << " post_lc_steps=" << post_lc_steps << " checks=" << (check_closure ? "c" : "")
        << (check_bounds ? "b" : "") << (check_containment ? "k" : "") << (check_activations ? "a" : "");
    return out.str();
  }
};

struct MetricsRow {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t f = 0;
  std::optional<std::size_t> first_lc_index;
  std::optional<std::size_t> first_lc_star_index;
  std::size_t disruption_count = 0;
  std::size_t max_process_changes = 0;
  std::size_t bound_violations = 0;
  std::size_t activation_violations = 0;
  std::string status = "ok";
  std::string error;
};

inline void write_metrics_header(std::ostream& out) {
  out << "scenario,seed,n,m,f,first_lc_index,first_lc_star_index,disruption_count,max_process_changes,"
         "bound_violations,activation_violations,status,error\n";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

inline void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  auto opt = [](const std::optional<std::size_t>& x) { return x ? std::to_string(*x) : std::string(); };
  out << csv_field(r.scenario) << ',' << r.seed << ',' << r.n << ',' << r.m << ',' << r.f << ','
      << opt(r.first_lc_index) << ',' << opt(r.first_lc_star_index) << ',' << r.disruption_count << ','
      << r.max_process_changes << ',' << r.bound_violations << ',' << r.activation_violations << ',' << r.status
      << ',' << csv_field(r.error) << '\n';
}

// Final configuration as Graphviz. Solid arcs are prnt pointers, dotted
// lines the remaining topology edges.
inline void write_dot(std::ostream& out, const Topology& topo, const FaultModel& fm, const Configuration& cfg) {
  const ContainmentAreas areas = compute_containment_areas(topo, fm);
  out << "digraph ssbfs {\n  node [shape=circle];\n";
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    std::string role = v == topo.root() ? "root" : fm.is_byzantine(v) ? "byzantine" : "correct";
    std::string area = set_contains(areas.s_b_star, v) ? "S_B*" : set_contains(areas.e_b, v) ? "E_B" : "outside";
    if (role != "correct") area = "none";
    std::ostringstream label;
    label << v << "\\n" << cfg[v];
    out << "  " << v << " [label=\"" << label.str() << "\", role=\"" << role << "\", area=\"" << area << "\"";
    if (role == "root") out << ", shape=doublecircle";
    if (role == "byzantine") out << ", style=filled, fillcolor=\"#e06666\"";
    if (area == "S_B*") out << ", style=filled, fillcolor=\"#f6b26b\"";
    if (area == "E_B") out << ", style=filled, fillcolor=\"#ffe599\"";
    out << "];\n";
  }
  for (const auto& [a, b] : topo.edges()) {
    const bool tree = cfg[a].prnt == b || cfg[b].prnt == a;
    if (!tree) out << "  " << a << " -> " << b << " [dir=none, style=dotted];\n";
  }
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (cfg[v].prnt != kNoParent && topo.adjacent(v, cfg[v].prnt))
      out << "  " << v << " -> " << cfg[v].prnt << ";\n";
  }
  out << "}\n";
}

struct RunOutcome {
  int exit_code = 0;
  Execution execution;
  TheoremAudit audit;
  MetricsRow row;
  std::vector<std::string> failures;
};

namespace detail {

inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  body(out);
  if (!out) throw InputError("write to '" + path + "' failed");
}

inline AdversaryStrategy make_adversary(const AdversarySpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case AdversaryKind::silent: return AdversaryStrategy::silent();
    case AdversaryKind::fake_root: return AdversaryStrategy::fake_root();
    case AdversaryKind::mirror_root: return AdversaryStrategy::mirror_root();
    case AdversaryKind::protocol_following: return AdversaryStrategy::protocol_following();
    case AdversaryKind::oscillator: return AdversaryStrategy::oscillator(spec.period, spec.high_level);
    case AdversaryKind::random: return AdversaryStrategy::random(derive_seed(seed, 2));
    case AdversaryKind::scripted: {
      std::ifstream in(spec.script_file);
      if (!in) throw InputError("cannot open adversary script '" + spec.script_file + "'");
      return AdversaryStrategy::scripted(parse_adversary_script(in));
    }
  }
  return AdversaryStrategy::silent();
}

inline Configuration make_initial(const RunConfig& cfg, const Topology& topo) {
  switch (cfg.init) {
    case InitKind::zero: return zero_configuration(topo);
    case InitKind::corrupted: return corrupted_configuration(topo);
    case InitKind::random: return random_configuration(topo, derive_seed(cfg.seed, 1));
    case InitKind::file: {
      std::ifstream in(cfg.init_file);
      if (!in) throw InputError("cannot open configuration file '" + cfg.init_file + "'");
      return parse_configuration(in, topo.size());
    }
  }
  return zero_configuration(topo);
}

inline DaemonPolicy make_daemon(const RunConfig& cfg) {
  switch (cfg.daemon) {
    case DaemonKind::central: return DaemonPolicy::central(cfg.fairness, derive_seed(cfg.seed, 0));
    case DaemonKind::distributed: return DaemonPolicy::distributed(cfg.fairness, derive_seed(cfg.seed, 0));
    case DaemonKind::synchronous: return DaemonPolicy::synchronous();
  }
  return DaemonPolicy::synchronous();
}

}  // namespace detail

// Largest change count among S_B*-correct processes.
inline std::size_t max_bounded_changes(const Analyzer& analyzer, const StabilizationMetrics& m) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < m.per_process_changes.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (analyzer.is_byzantine(v) || analyzer.s_b_star_mask()[i]) continue;
    best = std::max(best, m.per_process_changes[i]);
  }
  return best;
}

// Executes, measures and writes artifacts. Exit code 1 iff an enabled check
// fails. Invalid input raises InputError / PreconditionError.
inline RunOutcome cmd_run(const RunConfig& config) {
  const Scenario sc = build(config.scenario);
  const Topology& topo = *sc.topology;
  Engine engine(sc.topology, sc.faults, detail::make_initial(config, topo), config.seed);
  engine.execution().config_stamp = config.stamp();
  const DaemonPolicy daemon = detail::make_daemon(config);
  AdversaryStrategy adversary = detail::make_adversary(config.adversary, config.seed);
  const std::size_t budget = config.max_steps != 0 ? config.max_steps : default_step_budget(topo);

  Analyzer analyzer(topo, sc.faults);
  if (config.post_lc_steps > 0) {
    const StopReason why = engine.advance(
        daemon, adversary,
        StopCriterion::when([&](const Execution& e) { return analyzer.in_lc(e.last()); }, budget));
    if (why == StopReason::predicate) engine.advance(daemon, adversary, StopCriterion::max_steps(config.post_lc_steps));
  } else {
    engine.advance(daemon, adversary, StopCriterion::quiescent_and_adversary_done(budget));
  }

  RunOutcome out;
  out.execution = engine.release();
  out.audit = audit(analyzer, out.execution);
  const TheoremAudit& a = out.audit;

  if (config.check_closure && !a.closure_ok())
    out.failures.push_back("closure: I_d decreased at configuration " + std::to_string(*a.closure_violation));
  if (config.check_containment && !a.containment_ok())
    out.failures.push_back(!a.metrics.first_lc_index
                               ? "containment: no LC configuration reached"
                               : "containment: process " + std::to_string(a.containment_violations.front().process) +
                                     " outside S_B changed at step " +
                                     std::to_string(a.containment_violations.front().step));
  if (config.check_bounds) {
    if (!a.metrics.first_lc_star_index)
      out.failures.push_back("bounds: no LC* configuration reached");
    else {
      if (!a.disruptions_ok())
        out.failures.push_back("bounds: " + std::to_string(a.metrics.disruption_count) + " disruptions exceed 2m = " +
                               std::to_string(a.disruption_bound));
      if (!a.changes_ok())
        out.failures.push_back("bounds: process " + std::to_string(a.change_violations.front()) +
                               " changed more than Delta = " + std::to_string(a.change_bound) + " times");
    }
  }
  std::size_t activation_excess = 0;
  for (const auto& act : a.activations)
    if (act.count > act.bound) ++activation_excess;
  if (config.check_activations) {
    if (!a.metrics.first_lc_index)
      out.failures.push_back("activations: no LC configuration reached");
    else
      for (const auto& act : a.activations)
        if (act.count > act.bound)
          out.failures.push_back("activations: E_B process " + std::to_string(act.process) + " activated " +
                                 std::to_string(act.count) + " times, Delta_v = " + std::to_string(act.bound));
  }

  MetricsRow& row = out.row;
  row.scenario = sc.id;
  row.seed = config.seed;
  row.n = topo.size();
  row.m = topo.edge_count();
  row.f = sc.faults.f();
  row.first_lc_index = a.metrics.first_lc_index;
  row.first_lc_star_index = a.metrics.first_lc_star_index;
  row.disruption_count = a.metrics.disruption_count;
  row.max_process_changes = max_bounded_changes(analyzer, a.metrics);
  row.bound_violations = a.containment_violations.size() + a.change_violations.size() +
                         (a.metrics.first_lc_star_index && !a.disruptions_ok() ? 1 : 0);
  row.activation_violations = activation_excess;
  row.status = out.failures.empty() ? "ok" : "fail";
  if (!out.failures.empty()) row.error = out.failures.front();
  out.exit_code = out.failures.empty() ? 0 : 1;

  if (!config.trace_path.empty())
    detail::write_file(config.trace_path, [&](std::ostream& o) { write_trace(o, out.execution); });
  if (!config.metrics_path.empty())
    detail::write_file(config.metrics_path, [&](std::ostream& o) {
      write_metrics_header(o);
      write_metrics_row(o, row);
    });
  if (!config.dot_path.empty())
    detail::write_file(config.dot_path,
                       [&](std::ostream& o) { write_dot(o, topo, sc.faults, out.execution.last()); });
  return out;
}

// --- sweep ------------------------------------------------------------------------

inline std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs `count` independent jobs over `threads` workers; job(i) must only
// touch its own state.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// Every config becomes one row; failures become error rows. Rows are
// ordered by (scenario id, seed) whatever the worker interleaving.
inline std::vector<MetricsRow> cmd_sweep(const std::vector<RunConfig>& grid, std::size_t threads = 1) {
  if (grid.empty()) throw InputError("sweep grid is empty");
  std::vector<MetricsRow> rows(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    RunConfig cfg = grid[i];
    cfg.trace_path.clear();
    cfg.metrics_path.clear();
    cfg.dot_path.clear();
    try {
      rows[i] = cmd_run(cfg).row;
    } catch (const std::exception& e) {
      MetricsRow r;
      r.scenario = cfg.scenario.id();
      r.seed = cfg.seed;
      r.status = "error";
      r.error = e.what();
      rows[i] = std::move(r);
    }
  });
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.scenario, a.seed) < std::tie(b.scenario, b.seed);
  });
  return rows;
}

struct SweepOptions {
  std::size_t graphs = 100;
  std::size_t n_min = 4;
  std::size_t n_max = 10;
  double edge_prob = 0.4;
  std::vector<std::size_t> f_values{1, 2};
  std::size_t seeds = 3;
  std::uint64_t base_seed = 1;
  AdversarySpec adversary;
  std::size_t post_lc_steps = 1000;
};

// Grid of random-graph runs: graph g has n drawn from [n_min, n_max] and
// graph seed base_seed + g; each (graph, f) pair runs `seeds` times with the
// daemon rotating over central/distributed/synchronous.
inline std::vector<RunConfig> make_sweep_grid(const SweepOptions& opt) {
  if (opt.n_min < 2 || opt.n_max < opt.n_min) throw InputError("sweep needs 2 <= n-min <= n-max");
  std::vector<RunConfig> grid;
  std::mt19937_64 rng(opt.base_seed);
  std::uniform_int_distribution<std::size_t> pick_n(opt.n_min, opt.n_max);
  for (std::size_t g = 0; g < opt.graphs; ++g) {
    const std::size_t n = pick_n(rng);
    for (std::size_t f : opt.f_values) {
      for (std::size_t s = 1; s <= opt.seeds; ++s) {
        RunConfig cfg;
        cfg.scenario = ScenarioParams::random(n, opt.edge_prob, opt.base_seed + g);
        cfg.scenario.with_random_byzantine(f, opt.base_seed + g);
        cfg.init = InitKind::random;
        cfg.adversary = opt.adversary;
        const std::size_t rot = (g + s) % 3;
        cfg.daemon = rot == 0 ? DaemonKind::central : rot == 1 ? DaemonKind::distributed : DaemonKind::synchronous;
        cfg.fairness = Fairness::random;
        cfg.seed = s;
        cfg.post_lc_steps = opt.post_lc_steps;
        cfg.check_closure = cfg.check_bounds = cfg.check_containment = true;
        grid.push_back(std::move(cfg));
      }
    }
  }
  return grid;
}

// --- exhaustive ---------------------------------------------------------------------

struct ExhaustiveOptions {
  std::size_t n_max = 4;
  std::size_t f_max = 1;
  std::size_t post_steps = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t max_reported_failures = 20;
};

struct ExhaustiveFailure {
  std::string assertion;
  std::string graph;
  ProcessSet byzantine;
  std::string init;
  std::string adversary;
  std::string daemon;
  std::uint64_t seed = 0;
  std::optional<std::size_t> step;
};

struct ExhaustiveReport {
  std::size_t graphs = 0;
  std::size_t runs = 0;
  // assertion name → failing runs.
  std::map<std::string, std::size_t> failure_counts;
  std::vector<ExhaustiveFailure> failures;
  // E_B activation bound, kept apart from the theorem-level assertions.
  std::size_t activation_runs_violating = 0;
  std::size_t activation_violations_anchored = 0;
  std::size_t activation_violations_unanchored = 0;
  // Runs that missed LC* only because a Byzantine path endpoint holds level 0
  // with prnt ≠ ⊥; counted apart from the theorem-level assertions.
  std::size_t byzantine_endpoint_runs = 0;
  std::optional<ProcessSet> hexagon_s_b_star;

  bool ok() const { return failure_counts.empty(); }
};

inline std::string format_set(const ProcessSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "}";
}

inline std::string format_edges(std::size_t n, const std::vector<Edge>& edges) {
  std::string out = "n=" + std::to_string(n) + " E=";
  for (std::size_t i = 0; i < edges.size(); ++i)
    out += (i ? " " : "") + std::to_string(edges[i].first) + "-" + std::to_string(edges[i].second);
  return out;
}

inline void write_exhaustive_report(std::ostream& out, const ExhaustiveReport& r) {
  out << "graphs " << r.graphs << "\nruns " << r.runs << '\n';
  if (r.hexagon_s_b_star) out << "hexagon S_B* " << format_set(*r.hexagon_s_b_star) << '\n';
  out << "theorem assertions " << (r.ok() ? "pass" : "FAIL") << '\n';
  for (const auto& [name, count] : r.failure_counts) out << "  " << name << " failed in " << count << " runs\n";
  for (const auto& f : r.failures) {
    out << "  [" << f.assertion << "] graph " << f.graph << " B=" << format_set(f.byzantine) << " init=" << f.init
        << " adversary=" << f.adversary << " daemon=" << f.daemon << " seed=" << f.seed;
    if (f.step) out << " step=" << *f.step;
    out << '\n';
  }
  out << "E_B activation bound: " << r.activation_runs_violating << " runs exceed Delta_v ("
      << r.activation_violations_anchored << " processes with a closer neighbor outside S_B, "
      << r.activation_violations_unanchored << " without)\n";
  out << "LC* missed only through a level-0 Byzantine endpoint with prnt set: " << r.byzantine_endpoint_runs
      << " runs\n";
}

inline ExhaustiveReport cmd_exhaustive(const ExhaustiveOptions& opt) {
  if (opt.n_max < 1 || opt.n_max > 8) throw InputError("exhaustive needs 1 <= n-max <= 8");
  struct GraphJob {
    std::size_t n;
    std::vector<Edge> edges;
  };
  std::vector<GraphJob> jobs;
  for (std::size_t n = 1; n <= opt.n_max; ++n)
    for_each_connected_graph(n, [&](const std::vector<Edge>& e) { jobs.push_back({n, e}); });

  std::vector<ExhaustiveReport> partial(jobs.size());
  parallel_for(jobs.size(), opt.threads, [&](std::size_t gi) {
    ExhaustiveReport& rep = partial[gi];
    const GraphJob& job = jobs[gi];
    auto topo = std::make_shared<const Topology>(job.n, 0, job.edges);
    // Byzantine placements: every subset of {1..n-1} of size ≤ f_max.
    std::vector<ProcessSet> placements{{}};
    for (std::size_t mask = 1; mask < (std::size_t{1} << (job.n - 1)); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) > opt.f_max) continue;
      ProcessSet b;
      for (std::size_t k = 0; k + 1 < job.n; ++k)
        if (mask >> k & 1) b.push_back(static_cast<ProcessId>(k + 1));
      placements.push_back(std::move(b));
    }
    std::size_t rotation = gi;
    for (const ProcessSet& byz : placements) {
      FaultModel fm(byz);
      Analyzer analyzer(*topo, fm);
      struct Init {
        std::string name;
        Configuration cfg;
      };
      const std::uint64_t run_seed = derive_seed(opt.seed, gi * 131 + byz.size());
      Configuration all_max(topo->size());
      for (std::size_t i = 0; i < topo->size(); ++i) {
        const auto nbrs = topo->neighbors(static_cast<ProcessId>(i));
        all_max[static_cast<ProcessId>(i)] = {nbrs.empty() ? kNoParent : nbrs.back(), 2 * Level{topo->size()}};
      }
      const std::vector<Init> inits{{"zero", zero_configuration(*topo)},
                                    {"all-max", all_max},
                                    {"random", random_configuration(*topo, run_seed)}};
      std::vector<AdversaryStrategy> adversaries;
      if (byz.empty()) {
        adversaries.push_back(AdversaryStrategy::silent());
      } else {
        adversaries.push_back(AdversaryStrategy::silent());
        adversaries.push_back(AdversaryStrategy::fake_root());
        adversaries.push_back(AdversaryStrategy::oscillator(2));
        adversaries.push_back(AdversaryStrategy::random(run_seed));
      }
      for (const Init& init : inits) {
        for (const AdversaryStrategy& adv_proto : adversaries) {
          AdversaryStrategy adv = adv_proto;
          const std::size_t rot = rotation++ % 4;
          const DaemonPolicy daemon = rot == 0   ? DaemonPolicy::central(Fairness::round_robin, run_seed)
                                      : rot == 1 ? DaemonPolicy::central(Fairness::random, run_seed)
                                      : rot == 2 ? DaemonPolicy::distributed(Fairness::random, run_seed)
                                                 : DaemonPolicy::synchronous();
          ++rep.runs;
          auto fail = [&](const std::string& what, std::optional<std::size_t> step) {
            ++rep.failure_counts[what];
            if (rep.failures.size() < opt.max_reported_failures)
              rep.failures.push_back({what, format_edges(job.n, job.edges), byz, init.name, adv.label(),
                                      daemon.label(), run_seed, step});
          };
          try {
            Engine engine(topo, fm, init.cfg, run_seed);
            const std::size_t budget = default_step_budget(*topo);
            StopReason why;
            if (byz.empty()) {
              why = engine.advance(daemon, adv, StopCriterion::quiescent_and_adversary_done(budget));
              const Configuration& last = engine.execution().last();
              bool exact = why == StopReason::quiescent;
              for (std::size_t i = 0; exact && i < topo->size(); ++i)
                exact = last[static_cast<ProcessId>(i)].level == topo->distance(0, static_cast<ProcessId>(i));
              if (!exact) fail("fault-free convergence", engine.execution().steps.size());
            } else {
              why = engine.advance(
                  daemon, adv,
                  StopCriterion::when([&](const Execution& e) { return analyzer.in_lc_star(e.last()); }, budget));
              if (why != StopReason::predicate) {
                const Configuration& last = engine.execution().last();
                if (analyzer.in_lc_star(last, Endpoint::level_only) &&
                    enabled_set(*topo, fm, last).empty())
                  ++rep.byzantine_endpoint_runs;
                else
                  fail("convergence", engine.execution().steps.size());
                continue;
              }
              engine.advance(daemon, adv, StopCriterion::max_steps(opt.post_steps));
            }
            const TheoremAudit a = audit(analyzer, engine.execution());
            if (!a.closure_ok()) fail("closure", a.closure_violation);
            if (!a.containment_ok())
              fail("containment", a.containment_violations.empty()
                                      ? std::nullopt
                                      : std::optional<std::size_t>(a.containment_violations.front().step));
            if (!a.disruptions_ok()) fail("disruption bound", a.metrics.first_lc_star_index);
            if (!a.changes_ok()) fail("change bound", a.metrics.first_lc_star_index);
            bool any = false;
            for (const auto& act : a.activations)
              if (act.count > act.bound) {
                any = true;
                ++(act.has_anchor_neighbor ? rep.activation_violations_anchored
                                           : rep.activation_violations_unanchored);
              }
            if (any) ++rep.activation_runs_violating;
          } catch (const std::exception& e) {
            fail(std::string("error: ") + e.what(), std::nullopt);
          }
        }
      }
    }
  });

  ExhaustiveReport report;
  report.graphs = jobs.size();
  for (ExhaustiveReport& p : partial) {
    report.runs += p.runs;
    for (const auto& [k, v] : p.failure_counts) report.failure_counts[k] += v;
    for (auto& f : p.failures)
      if (report.failures.size() < opt.max_reported_failures) report.failures.push_back(std::move(f));
    report.activation_runs_violating += p.activation_runs_violating;
    report.activation_violations_anchored += p.activation_violations_anchored;
    report.activation_violations_unanchored += p.activation_violations_unanchored;
    report.byzantine_endpoint_runs += p.byzantine_endpoint_runs;
  }
  if (opt.n_max >= 6) {
    const Scenario hex = build(ScenarioParams::hexagon());
    report.hexagon_s_b_star = compute_containment_areas(*hex.topology, hex.faults).s_b_star;
  }
  return report;
}

}  // namespace ssbfs

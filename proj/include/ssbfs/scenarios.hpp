#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ssbfs/adversary.hpp"
#include "ssbfs/analysis.hpp"
#include "ssbfs/error.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"
#include "ssbfs/scheduler.hpp"

namespace ssbfs {

enum class ScenarioKind { line, hexagon, random, path, grid, file };

// Hexagon ids.
namespace hexagon_ids {
inline constexpr ProcessId r = 0, u = 1, u2 = 2, v = 3, v2 = 4, b = 5;
}

struct ScenarioParams {
  ScenarioKind kind = ScenarioKind::path;
  std::size_t c = 0;          // line
  std::size_t n = 0;          // random, path
  double edge_prob = 0.5;     // random
  std::uint64_t graph_seed = 0;  // random
  std::size_t width = 0;      // grid
  std::size_t height = 0;     // grid
  std::string file;           // file

  // Byzantine placement: explicit ids win; otherwise byz_count ids drawn
  // uniformly from the non-root processes with byz_seed. line and hexagon
  // default to the construction's b when neither is given.
  bool explicit_byzantine = false;
  std::vector<ProcessId> byzantine;
  std::size_t byz_count = 0;
  std::uint64_t byz_seed = 0;

  static ScenarioParams line(std::size_t c) {
    ScenarioParams p;
    p.kind = ScenarioKind::line;
    p.c = c;
    return p;
  }
  static ScenarioParams hexagon() {
    ScenarioParams p;
    p.kind = ScenarioKind::hexagon;
    return p;
  }
  static ScenarioParams random(std::size_t n, double edge_prob, std::uint64_t seed) {
    ScenarioParams p;
    p.kind = ScenarioKind::random;
    p.n = n;
    p.edge_prob = edge_prob;
    p.graph_seed = seed;
    return p;
  }
  static ScenarioParams path(std::size_t n) {
    ScenarioParams p;
    p.kind = ScenarioKind::path;
    p.n = n;
    return p;
  }
  static ScenarioParams grid(std::size_t w, std::size_t h) {
    ScenarioParams p;
    p.kind = ScenarioKind::grid;
    p.width = w;
    p.height = h;
    return p;
  }
  static ScenarioParams from_file(std::string path) {
    ScenarioParams p;
    p.kind = ScenarioKind::file;
    p.file = std::move(path);
    return p;
  }

  ScenarioParams& with_byzantine(std::vector<ProcessId> ids) {
    explicit_byzantine = true;
    byzantine = std::move(ids);
    return *this;
  }
  ScenarioParams& with_random_byzantine(std::size_t count, std::uint64_t seed) {
    explicit_byzantine = false;
    byz_count = count;
    byz_seed = seed;
    return *this;
  }

  // Stable identifier used to key sweep rows.
  std::string id() const {
    std::ostringstream out;
    switch (kind) {
      case ScenarioKind::line: out << "line-c" << c; break;
      case ScenarioKind::hexagon: out << "hexagon"; break;
      case ScenarioKind::random:
        out << "random-n" << n << "-p" << std::fixed << std::setprecision(3) << edge_prob << "-g" << graph_seed;
        break;
      case ScenarioKind::path: out << "path-n" << n; break;
      case ScenarioKind::grid: out << "grid-" << width << 'x' << height; break;
      case ScenarioKind::file: out << "file-" << file; break;
    }
    if (explicit_byzantine) {
      out << "-b";
      if (byzantine.empty()) out << "none";
      for (std::size_t i = 0; i < byzantine.size(); ++i) out << (i ? "." : "") << byzantine[i];
    } else if (byz_count > 0) {
      out << "-f" << byz_count << "s" << byz_seed;
    }
    return out.str();
  }
};

struct Scenario {
  std::shared_ptr<const Topology> topology;
  FaultModel faults;
  std::string id;
};

namespace detail {

inline std::vector<Edge> path_edges(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.emplace_back(static_cast<ProcessId>(i - 1), static_cast<ProcessId>(i));
  return edges;
}

inline bool connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<ProcessId>> adj(n);
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<ProcessId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const ProcessId x = stack.back();
    stack.pop_back();
    for (ProcessId y : adj[static_cast<std::size_t>(x)])
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = 1;
        ++count;
        stack.push_back(y);
      }
  }
  return count == n;
}

inline constexpr int kRandomGraphRetries = 1000;

inline std::vector<Edge> random_edges(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0) throw InputError("random graph needs n >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("edge probability must lie in [0,1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  for (int attempt = 0; attempt < kRandomGraphRetries; ++attempt) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (coin(rng)) edges.emplace_back(static_cast<ProcessId>(i), static_cast<ProcessId>(j));
    if (connected(n, edges)) return edges;
  }
  throw ScenarioError("random graph n=" + std::to_string(n) + " p=" + std::to_string(p) +
                      " stayed disconnected after " + std::to_string(kRandomGraphRetries) + " attempts");
}

inline std::vector<ProcessId> random_placement(std::size_t n, ProcessId root, std::size_t count,
                                               std::uint64_t seed) {
  if (n == 0 || count > n - 1)
    throw InputError("cannot place " + std::to_string(count) + " Byzantine processes among " +
                     std::to_string(n == 0 ? 0 : n - 1) + " non-root processes");
  std::vector<ProcessId> pool;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<ProcessId>(i) != root) pool.push_back(static_cast<ProcessId>(i));
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(count);
  return pool;
}

}  // namespace detail

inline Scenario build(const ScenarioParams& p) {
  std::shared_ptr<const Topology> topo;
  std::optional<FaultModel> default_faults;
  switch (p.kind) {
    case ScenarioKind::line: {
      const std::size_t n = 2 * p.c + 4;
      topo = std::make_shared<const Topology>(n, 0, detail::path_edges(n));
      default_faults = FaultModel({static_cast<ProcessId>(n - 1)});
      break;
    }
    case ScenarioKind::hexagon: {
      using namespace hexagon_ids;
      topo = std::make_shared<const Topology>(
          6, r, std::vector<Edge>{{r, u}, {r, u2}, {u, v}, {u2, v2}, {v, b}, {v2, b}});
      default_faults = FaultModel({b});
      break;
    }
    case ScenarioKind::random:
      topo = std::make_shared<const Topology>(p.n, 0, detail::random_edges(p.n, p.edge_prob, p.graph_seed));
      break;
    case ScenarioKind::path:
      if (p.n == 0) throw InputError("path needs n >= 1");
      topo = std::make_shared<const Topology>(p.n, 0, detail::path_edges(p.n));
      break;
    case ScenarioKind::grid: {
      if (p.width == 0 || p.height == 0) throw InputError("grid needs positive width and height");
      std::vector<Edge> edges;
      auto id = [&](std::size_t x, std::size_t y) { return static_cast<ProcessId>(y * p.width + x); };
      for (std::size_t y = 0; y < p.height; ++y)
        for (std::size_t x = 0; x < p.width; ++x) {
          if (x + 1 < p.width) edges.emplace_back(id(x, y), id(x + 1, y));
          if (y + 1 < p.height) edges.emplace_back(id(x, y), id(x, y + 1));
        }
      topo = std::make_shared<const Topology>(p.width * p.height, 0, std::move(edges));
      break;
    }
    case ScenarioKind::file: {
      std::ifstream in(p.file);
      if (!in) throw InputError("cannot open topology file '" + p.file + "'");
      TopologyFile tf = parse_topology(in);
      topo = std::make_shared<const Topology>(std::move(tf.topology));
      default_faults = std::move(tf.faults);
      break;
    }
  }
  FaultModel fm;
  if (p.explicit_byzantine)
    fm = FaultModel(p.byzantine);
  else if (p.byz_count > 0)
    fm = FaultModel(detail::random_placement(topo->size(), topo->root(), p.byz_count, p.byz_seed));
  else if (default_faults)
    fm = *default_faults;
  fm.validate(*topo);
  return {std::move(topo), std::move(fm), p.id()};
}

// --- scenario text format ---------------------------------------------------
//
//   kind random        (line | hexagon | random | path | grid | file)
//   c 2                (line)
//   n 10               (random, path)
//   p 0.3              (random)
//   graph_seed 7       (random)
//   width 3 / height 4 (grid)
//   file topo.txt      (file)
//   byz 3 5            (explicit placement)
//   byz_count 2        (random placement)
//   byz_seed 11

inline ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "line") return ScenarioKind::line;
  if (s == "hexagon") return ScenarioKind::hexagon;
  if (s == "random") return ScenarioKind::random;
  if (s == "path") return ScenarioKind::path;
  if (s == "grid") return ScenarioKind::grid;
  if (s == "file") return ScenarioKind::file;
  throw InputError("unknown scenario kind '" + s + "' (line, hexagon, random, path, grid, file)");
}

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::line: return "line";
    case ScenarioKind::hexagon: return "hexagon";
    case ScenarioKind::random: return "random";
    case ScenarioKind::path: return "path";
    case ScenarioKind::grid: return "grid";
    case ScenarioKind::file: return "file";
  }
  return "path";
}

inline ScenarioParams parse_scenario(std::istream& in) {
  ScenarioParams p;
  bool have_kind = false;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw InputError("scenario line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    auto number = [&]<typename T>(T& dst) {
      if (!(fields >> dst)) fail("expected a number after '" + key + "'");
    };
    if (key == "kind") {
      std::string k;
      fields >> k;
      p.kind = parse_scenario_kind(k);
      have_kind = true;
    } else if (key == "c") {
      number(p.c);
    } else if (key == "n") {
      number(p.n);
    } else if (key == "p") {
      number(p.edge_prob);
    } else if (key == "graph_seed") {
      number(p.graph_seed);
    } else if (key == "width") {
      number(p.width);
    } else if (key == "height") {
      number(p.height);
    } else if (key == "file") {
      fields >> p.file;
    } else if (key == "byz") {
      p.explicit_byzantine = true;
      long long id = 0;
      while (fields >> id) {
        if (id < 0) fail("negative Byzantine id");
        p.byzantine.push_back(static_cast<ProcessId>(id));
      }
    } else if (key == "byz_count") {
      number(p.byz_count);
    } else if (key == "byz_seed") {
      number(p.byz_seed);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!have_kind) throw InputError("scenario file has no `kind` line");
  return p;
}

inline void write_scenario(std::ostream& out, const ScenarioParams& p) {
  out << "kind " << to_string(p.kind) << '\n';
  switch (p.kind) {
    case ScenarioKind::line: out << "c " << p.c << '\n'; break;
    case ScenarioKind::hexagon: break;
    case ScenarioKind::random:
      out << "n " << p.n << "\np " << p.edge_prob << "\ngraph_seed " << p.graph_seed << '\n';
      break;
    case ScenarioKind::path: out << "n " << p.n << '\n'; break;
    case ScenarioKind::grid: out << "width " << p.width << "\nheight " << p.height << '\n'; break;
    case ScenarioKind::file: out << "file " << p.file << '\n'; break;
  }
  if (p.explicit_byzantine) {
    out << "byz";
    for (ProcessId b : p.byzantine) out << ' ' << b;
    out << '\n';
  } else if (p.byz_count > 0) {
    out << "byz_count " << p.byz_count << "\nbyz_seed " << p.byz_seed << '\n';
  }
}

// Short forms for the command line: hexagon, line:C, path:N, grid:WxH,
// random:N:P:SEED, or a path to a scenario file.
inline ScenarioParams parse_scenario_shorthand(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto to_size = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used != s.size()) throw InputError("");
      return static_cast<std::size_t>(v);
    } catch (...) {
      throw InputError("bad number '" + s + "' in scenario '" + text + "'");
    }
  };
  if (head == "hexagon" && tail.empty()) return ScenarioParams::hexagon();
  if (head == "line" && !tail.empty()) return ScenarioParams::line(to_size(tail));
  if (head == "path" && !tail.empty()) return ScenarioParams::path(to_size(tail));
  if (head == "grid" && !tail.empty()) {
    const auto x = tail.find('x');
    if (x == std::string::npos) throw InputError("grid scenario needs WxH");
    return ScenarioParams::grid(to_size(tail.substr(0, x)), to_size(tail.substr(x + 1)));
  }
  if (head == "random") {
    std::vector<std::string> parts;
    std::istringstream in(tail);
    std::string part;
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw InputError("random scenario needs random:N:P:SEED");
    double prob = 0;
    try {
      prob = std::stod(parts[1]);
    } catch (...) {
      throw InputError("bad edge probability '" + parts[1] + "'");
    }
    return ScenarioParams::random(to_size(parts[0]), prob, to_size(parts[2]));
  }
  std::ifstream in(text);
  if (!in) throw InputError("unknown scenario '" + text + "' and no such scenario file");
  return parse_scenario(in);
}

// --- initial configurations ---------------------------------------------------

inline Configuration zero_configuration(const Topology& topo) {
  return Configuration(topo.size(), ProcessState{kNoParent, 0});
}

// Every process points at its first neighbor with level n; the root keeps
// the same garbage so that it must act too.
inline Configuration corrupted_configuration(const Topology& topo) {
  Configuration cfg(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    const auto nbrs = topo.neighbors(v);
    cfg[v] = {nbrs.empty() ? kNoParent : nbrs.front(), static_cast<Level>(topo.size())};
  }
  return cfg;
}

// prnt uniform over N_v ∪ {⊥}, level uniform in [0, max_level].
inline Configuration random_configuration(const Topology& topo, std::uint64_t seed, Level max_level = 0) {
  if (max_level == 0) max_level = 2 * Level{topo.size()};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Level> level(0, max_level);
  Configuration cfg(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    const auto nbrs = topo.neighbors(v);
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size());
    const std::size_t k = pick(rng);
    cfg[v] = {k == nbrs.size() ? kNoParent : nbrs[k], level(rng)};
  }
  return cfg;
}

// --- exhaustive enumeration -----------------------------------------------------

// Calls fn(edges) for every connected labeled graph on n vertices (edges in
// lexicographic order). n ≤ 8 keeps the edge mask within 28 bits.
inline void for_each_connected_graph(std::size_t n, const std::function<void(const std::vector<Edge>&)>& fn) {
  if (n == 0 || n > 8) throw InputError("graph enumeration supports 1 <= n <= 8");
  std::vector<Edge> slots;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) slots.emplace_back(static_cast<ProcessId>(i), static_cast<ProcessId>(j));
  std::vector<std::uint32_t> adj(n);
  std::vector<Edge> edges;
  const std::uint64_t total = std::uint64_t{1} << slots.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (slots.size() + 1 < n) break;
    std::fill(adj.begin(), adj.end(), 0u);
    for (std::size_t k = 0; k < slots.size(); ++k)
      if (mask >> k & 1) {
        adj[static_cast<std::size_t>(slots[k].first)] |= 1u << slots[k].second;
        adj[static_cast<std::size_t>(slots[k].second)] |= 1u << slots[k].first;
      }
    std::uint32_t seen = 1;
    std::uint32_t frontier = 1;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::size_t v = 0; v < n; ++v)
        if (frontier >> v & 1) next |= adj[v];
      frontier = next & ~seen;
      seen |= next;
    }
    if (seen != (n == 32 ? ~0u : (1u << n) - 1)) continue;
    edges.clear();
    for (std::size_t k = 0; k < slots.size(); ++k)
      if (mask >> k & 1) edges.push_back(slots[k]);
    fn(edges);
  }
}

// --- impossibility replays -------------------------------------------------------

namespace detail {

// Runs one phase to quiescence and checks the target predicate.
inline void run_phase(Engine& engine, AdversaryStrategy adversary, const std::string& phase,
                      const std::function<bool(const Configuration&)>& target) {
  const Topology& topo = *engine.execution().topology;
  const StopReason why =
      engine.advance(DaemonPolicy::central(Fairness::round_robin), adversary,
                     StopCriterion::quiescent_and_adversary_done(default_step_budget(topo)));
  if (why != StopReason::quiescent)
    throw ScenarioError("phase " + phase + ": no quiescence within the step budget");
  if (!target(engine.execution().last()))
    throw ScenarioError("phase " + phase + ": target configuration not reached");
}

inline void run_reset(Engine& engine, const std::string& phase) {
  AdversaryStrategy reset = AdversaryStrategy::fake_root();
  engine.advance(DaemonPolicy::central(Fairness::round_robin), reset, StopCriterion::max_steps(1));
  const Configuration& cfg = engine.execution().last();
  for (ProcessId b : engine.execution().faults.byzantine)
    if (cfg[b] != ProcessState{kNoParent, 0}) throw ScenarioError("phase " + phase + ": reset write missing");
}

inline Configuration question_marks(const Topology& topo, const FaultModel& fm) {
  Configuration cfg = corrupted_configuration(topo);
  cfg[topo.root()] = {kNoParent, 0};
  for (ProcessId b : fm.byzantine) cfg[b] = {kNoParent, 0};
  return cfg;
}

}  // namespace detail

// Chain p0 = r, ..., p_{2c+3} = b. Each cycle: b mirrors r until quiescent
// (ρ1), b follows the protocol until quiescent (ρ2), b resets to (⊥,0) (ρ3).
// A closing mirror phase returns the trace to a ρ1 configuration.
inline Execution replay_strong_impossibility(std::size_t c, std::size_t cycles) {
  if (cycles < 1) throw PreconditionError("cycles must be >= 1");
  Scenario sc = build(ScenarioParams::line(c));
  const Topology& topo = *sc.topology;
  const std::size_t n = topo.size();
  Engine engine(sc.topology, sc.faults, detail::question_marks(topo, sc.faults), 0);

  auto rho1 = [&](const Configuration& cfg) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<ProcessId>(i);
      if (i == 0 || i == n - 1) {
        if (cfg[v] != ProcessState{kNoParent, 0}) return false;
      } else if (i <= c + 1) {
        if (cfg[v] != ProcessState{v - 1, i}) return false;
      } else if (cfg[v] != ProcessState{v + 1, 2 * c + 3 - i}) {
        return false;
      }
    }
    return true;
  };
  auto rho2 = [&](const Configuration& cfg) {
    if (cfg[0] != ProcessState{kNoParent, 0}) return false;
    for (std::size_t i = 1; i < n; ++i)
      if (cfg[static_cast<ProcessId>(i)] != ProcessState{static_cast<ProcessId>(i - 1), i}) return false;
    return true;
  };

  for (std::size_t k = 1; k <= cycles; ++k) {
    const std::string tag = "cycle " + std::to_string(k) + " ";
    detail::run_phase(engine, AdversaryStrategy::mirror_root(), tag + "rho1", rho1);
    detail::run_phase(engine, AdversaryStrategy::protocol_following(), tag + "rho2", rho2);
    detail::run_reset(engine, tag + "rho3");
  }
  detail::run_phase(engine, AdversaryStrategy::mirror_root(), "final rho1", rho1);
  Execution exec = engine.release();
  exec.adversary_label = "strong-impossibility c=" + std::to_string(c) + " cycles=" + std::to_string(cycles);
  exec.daemon_label = DaemonPolicy::central(Fairness::round_robin).label();
  exec.stop_reason = StopReason::quiescent;
  return exec;
}

// Hexagon r-u-v-b, r-u'-v'-b with the same three phases per cycle.
// area_choice must be a proper subset of S_B* = {v, v'}.
inline Execution replay_ta_strong_impossibility(const ProcessSet& area_choice, std::size_t cycles) {
  using namespace hexagon_ids;
  if (cycles < 1) throw PreconditionError("cycles must be >= 1");
  const ProcessSet area = make_process_set(area_choice);
  for (ProcessId x : area)
    if (x != v && x != v2) throw PreconditionError("area must be a subset of S_B* = {3, 4}");
  if (area.size() >= 2) throw PreconditionError("area must be a proper subset of S_B* = {3, 4}");

  Scenario sc = build(ScenarioParams::hexagon());
  const Topology& topo = *sc.topology;
  Engine engine(sc.topology, sc.faults, detail::question_marks(topo, sc.faults), 0);

  auto rho1 = [&](const Configuration& cfg) {
    return cfg[r] == ProcessState{kNoParent, 0} && cfg[b] == ProcessState{kNoParent, 0} &&
           cfg[u] == ProcessState{r, 1} && cfg[u2] == ProcessState{r, 1} && cfg[v] == ProcessState{b, 1} &&
           cfg[v2] == ProcessState{b, 1};
  };
  auto rho2 = [&](const Configuration& cfg) {
    return cfg[r] == ProcessState{kNoParent, 0} && cfg[u] == ProcessState{r, 1} && cfg[u2] == ProcessState{r, 1} &&
           cfg[v] == ProcessState{u, 2} && cfg[v2] == ProcessState{u2, 2} && cfg[b].level == 3 &&
           (cfg[b].prnt == v || cfg[b].prnt == v2);
  };

  for (std::size_t k = 1; k <= cycles; ++k) {
    const std::string tag = "cycle " + std::to_string(k) + " ";
    detail::run_phase(engine, AdversaryStrategy::mirror_root(), tag + "rho1", rho1);
    detail::run_phase(engine, AdversaryStrategy::protocol_following(), tag + "rho2", rho2);
    detail::run_reset(engine, tag + "rho3");
  }
  detail::run_phase(engine, AdversaryStrategy::mirror_root(), "final rho1", rho1);
  Execution exec = engine.release();
  std::string label = "ta-strong-impossibility area={";
  for (std::size_t i = 0; i < area.size(); ++i) label += (i ? "," : "") + std::to_string(area[i]);
  exec.adversary_label = label + "} cycles=" + std::to_string(cycles);
  exec.daemon_label = DaemonPolicy::central(Fairness::round_robin).label();
  exec.stop_reason = StopReason::quiescent;
  return exec;
}

}  // namespace ssbfs

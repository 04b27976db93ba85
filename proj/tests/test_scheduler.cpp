#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracle.hpp"
#include "ssbfs/ssbfs.hpp"

using namespace ssbfs;

namespace {

constexpr ProcessState bot0{kNoParent, 0};

std::shared_ptr<const Topology> chain(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i < n; ++i) e.emplace_back(static_cast<ProcessId>(i - 1), static_cast<ProcessId>(i));
  return std::make_shared<const Topology>(n, 0, e);
}

std::shared_ptr<const Topology> random_topology(std::mt19937_64& rng, int n_min, int n_max, double extra) {
  const int n = std::uniform_int_distribution<int>(n_min, n_max)(rng);
  std::vector<Edge> edges;
  for (auto [a, b] : oracle::random_connected(n, extra, rng)) edges.emplace_back(a, b);
  return std::make_shared<const Topology>(static_cast<std::size_t>(n), 0, edges);
}

std::vector<DaemonPolicy> fair_daemons(std::uint64_t seed) {
  return {DaemonPolicy::central(Fairness::round_robin), DaemonPolicy::central(Fairness::random, seed),
          DaemonPolicy::distributed(Fairness::round_robin), DaemonPolicy::distributed(Fairness::random, seed),
          DaemonPolicy::synchronous()};
}

// Checks the daemon shape of every step and bounded fairness with window n:
// a correct process enabled in n consecutive configurations must be
// activated in one of the steps leaving them. Central steps that only carry
// a Byzantine write do not advance the window.
void expect_daemon_contract(const Execution& ex, DaemonKind kind) {
  const Topology& t = *ex.topology;
  const std::size_t n = t.size();
  std::vector<std::size_t> streak(n, 0);
  for (std::size_t k = 0; k < ex.steps.size(); ++k) {
    const StepRecord& s = ex.steps[k];
    const Configuration& cfg = ex.configuration(k);
    const ProcessSet enabled = enabled_set(t, ex.faults, cfg);
    if (kind == DaemonKind::central) {
      ASSERT_LE(s.activated.size() + (s.activated.empty() ? s.byz_writes.size() : 0), 1u);
    }
    if (kind == DaemonKind::synchronous) {
      ASSERT_EQ(s.activated, enabled);
    }
    if (kind == DaemonKind::distributed && !enabled.empty()) {
      ASSERT_FALSE(s.activated.empty());
    }
    const bool counted = !(kind == DaemonKind::central && s.activated.empty() && !s.byz_writes.empty());
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<ProcessId>(i);
      if (!set_contains(enabled, v) || set_contains(s.activated, v)) {
        streak[i] = 0;
        continue;
      }
      if (counted) ++streak[i];
      ASSERT_LT(streak[i], n) << "process " << v << " starved at step " << k;
    }
  }
}

}  // namespace

TEST(EnabledSet, Examples) {
  auto t = chain(5);
  Configuration tree(5);
  for (ProcessId i = 0; i < 5; ++i) tree[i] = {i == 0 ? kNoParent : i - 1, static_cast<Level>(i)};
  EXPECT_TRUE(enabled_set(*t, FaultModel{}, tree).empty());

  const Scenario line = build(ScenarioParams::line(1));
  Configuration rho1(std::vector<ProcessState>{bot0, {0, 1}, {1, 2}, {4, 2}, {5, 1}, bot0});
  EXPECT_TRUE(enabled_set(*line.topology, line.faults, rho1).empty());
  Configuration rho0(6, bot0);
  for (ProcessId i = 1; i < 5; ++i) rho0[i] = {i + 1, 6};
  EXPECT_FALSE(enabled_set(*line.topology, line.faults, rho0).empty());
}

TEST(Run, FaultFreePathReachesBfsLevels) {
  auto t = chain(5);
  Configuration init(5, bot0);
  const Execution ex = run(t, FaultModel{}, init, DaemonPolicy::central(Fairness::round_robin),
                           AdversaryStrategy::silent(), StopCriterion::quiescent_and_adversary_done(1000));
  EXPECT_EQ(ex.stop_reason, StopReason::quiescent);
  const auto d = oracle::bfs(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, 0);
  for (ProcessId i = 0; i < 5; ++i) EXPECT_EQ(ex.last()[i].level, static_cast<Level>(d[i]));
}

TEST(Run, QuiescentStartGivesEmptyExecution) {
  auto t = chain(3);
  Configuration tree(std::vector<ProcessState>{bot0, {0, 1}, {1, 2}});
  const Execution ex = run(t, FaultModel{}, tree, DaemonPolicy::distributed(Fairness::random, 3),
                           AdversaryStrategy::silent(), StopCriterion::quiescent_and_adversary_done(100));
  EXPECT_EQ(ex.steps.size(), 0u);
  EXPECT_EQ(ex.stop_reason, StopReason::quiescent);
}

TEST(Run, SameSeedSameTrace) {
  std::mt19937_64 rng(8);
  auto t = random_topology(rng, 8, 8, 0.3);
  FaultModel fm({3, 6});
  const Configuration init = random_configuration(*t, 12);
  auto once = [&] {
    std::ostringstream out;
    write_trace(out, run(t, fm, init, DaemonPolicy::distributed(Fairness::random, 77),
                         AdversaryStrategy::random(5), StopCriterion::max_steps(300)));
    return out.str();
  };
  EXPECT_EQ(once(), once());
}

TEST(Run, DaemonContractsAndFairness) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = random_topology(rng, 3, 11, 0.25);
    const std::size_t n = t->size();
    FaultModel fm;
    if (n > 2) fm = FaultModel({static_cast<ProcessId>(n - 1)});
    for (const DaemonPolicy& d : fair_daemons(rng())) {
      const Execution ex =
          run(t, fm, random_configuration(*t, rng()), d, AdversaryStrategy::oscillator(1), StopCriterion::max_steps(400));
      expect_daemon_contract(ex, d.kind);
      ASSERT_TRUE(replay(ex)) << d.label();
      // Only activated or written processes change.
      for (std::size_t k = 0; k < ex.steps.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = static_cast<ProcessId>(i);
          const bool touched = set_contains(ex.steps[k].activated, v) ||
                               std::any_of(ex.steps[k].byz_writes.begin(), ex.steps[k].byz_writes.end(),
                                           [&](const ByzWrite& w) { return w.id == v; });
          if (!touched) {
            ASSERT_EQ(ex.configuration(k)[v], ex.steps[k].result[v]);
          }
        }
    }
  }
}

TEST(Run, FaultFreeConvergenceUnderEveryDaemon) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_topology(rng, 1, 12, 0.2);
    std::vector<std::pair<int, int>> e;
    for (auto [a, b] : t->edges()) e.emplace_back(a, b);
    const auto d = oracle::bfs(static_cast<int>(t->size()), e, 0);
    for (const DaemonPolicy& pol : fair_daemons(rng())) {
      const Execution ex = run(t, FaultModel{}, random_configuration(*t, rng()), pol, AdversaryStrategy::silent(),
                               StopCriterion::quiescent_and_adversary_done(default_step_budget(*t)));
      ASSERT_EQ(ex.stop_reason, StopReason::quiescent) << pol.label();
      for (std::size_t i = 0; i < t->size(); ++i)
        ASSERT_EQ(ex.last()[static_cast<ProcessId>(i)].level, static_cast<Level>(d[i]));
    }
  }
}

TEST(ScriptedDaemon, StarvationIsRejected) {
  // Both 1 and 2 start enabled; the script only ever picks 2 then idles.
  auto t = std::make_shared<const Topology>(3, 0, std::vector<Edge>{{0, 1}, {0, 2}});
  Configuration init(std::vector<ProcessState>{bot0, {kNoParent, 4}, {kNoParent, 4}});
  std::vector<DaemonScriptEntry> script{{{2}}, {{}}, {{}}, {{}}};
  try {
    run(t, FaultModel{}, init, DaemonPolicy::scripted(DaemonKind::central, script), AdversaryStrategy::silent(),
        StopCriterion::max_steps(10));
    FAIL() << "expected FairnessViolation";
  } catch (const FairnessViolation& e) {
    EXPECT_EQ(e.process(), 1);
  }
}

TEST(ScriptedDaemon, ContractsAreChecked) {
  auto t = chain(3);
  Configuration init(std::vector<ProcessState>{bot0, {kNoParent, 4}, {kNoParent, 4}});
  std::vector<DaemonScriptEntry> two{{{1, 2}}};
  EXPECT_THROW(run(t, FaultModel{}, init, DaemonPolicy::scripted(DaemonKind::central, two), AdversaryStrategy::silent(),
                   StopCriterion::max_steps(1)),
               ContractViolation);
  Configuration tree(std::vector<ProcessState>{bot0, {0, 1}, {kNoParent, 4}});
  std::vector<DaemonScriptEntry> disabled{{{1}}};
  EXPECT_THROW(run(t, FaultModel{}, tree, DaemonPolicy::scripted(DaemonKind::distributed, disabled),
                   AdversaryStrategy::silent(), StopCriterion::max_steps(1)),
               ContractViolation);
  std::vector<DaemonScriptEntry> fine{{{1, 2}}};
  const Execution ex = run(t, FaultModel{}, init, DaemonPolicy::scripted(DaemonKind::distributed, fine),
                           AdversaryStrategy::silent(), StopCriterion::max_steps(5));
  EXPECT_EQ(ex.stop_reason, StopReason::script_exhausted);
  EXPECT_EQ(ex.steps.size(), 1u);
}

TEST(Replay, DetectsTampering) {
  std::mt19937_64 rng(3);
  auto t = random_topology(rng, 7, 7, 0.3);
  Execution ex = run(t, FaultModel({4}), random_configuration(*t, 1), DaemonPolicy::distributed(Fairness::random, 1),
                     AdversaryStrategy::oscillator(2), StopCriterion::max_steps(40));
  ASSERT_TRUE(replay(ex));
  ex.steps[17].result[2].level += 1;
  const ReplayReport rep = replay(ex);
  EXPECT_FALSE(rep);
  ASSERT_TRUE(rep.divergent_step.has_value());
  EXPECT_EQ(*rep.divergent_step, 17u);
}

TEST(Trace, RoundTrip) {
  std::mt19937_64 rng(6);
  auto t = random_topology(rng, 9, 9, 0.3);
  Execution ex = run(t, FaultModel({2, 5}), random_configuration(*t, 4), DaemonPolicy::central(Fairness::random, 9),
                     AdversaryStrategy::random(11), StopCriterion::max_steps(120));
  ex.config_stamp = "seed=1 scenario=test";
  std::ostringstream out;
  write_trace(out, ex);
  std::istringstream in(out.str());
  const Execution back = read_trace(in, t);
  ASSERT_EQ(back.steps.size(), ex.steps.size());
  EXPECT_EQ(back.initial, ex.initial);
  for (std::size_t k = 0; k < ex.steps.size(); ++k) {
    EXPECT_EQ(back.steps[k].activated, ex.steps[k].activated);
    EXPECT_EQ(back.steps[k].byz_writes, ex.steps[k].byz_writes);
    EXPECT_EQ(back.steps[k].result, ex.steps[k].result);
  }
  EXPECT_EQ(back.config_stamp, ex.config_stamp);
  EXPECT_TRUE(replay(back));
  std::ostringstream again;
  write_trace(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Trace, WrongTopologyIsRejected) {
  auto t = chain(4);
  const Execution ex = run(t, FaultModel{}, Configuration(4, bot0), DaemonPolicy::synchronous(),
                           AdversaryStrategy::silent(), StopCriterion::quiescent_and_adversary_done(100));
  std::ostringstream out;
  write_trace(out, ex);
  std::istringstream in(out.str());
  auto other = std::make_shared<const Topology>(4, 0, std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
  EXPECT_THROW(read_trace(in, other), InputError);
}

TEST(Adversary, AdviceExamples) {
  const Scenario hex = build(ScenarioParams::hexagon());
  const Topology& t = *hex.topology;
  Execution prefix;
  Configuration cfg = random_configuration(t, 3);
  cfg[0] = bot0;
  auto silent = AdversaryStrategy::silent();
  EXPECT_TRUE(silent.advise(t, hex.faults, prefix, cfg).empty());
  cfg[5] = {3, 9};
  auto fake = AdversaryStrategy::fake_root();
  EXPECT_EQ(fake.advise(t, hex.faults, prefix, cfg), (ByzWrites{{5, bot0}}));
  cfg[5] = bot0;
  EXPECT_TRUE(fake.advise(t, hex.faults, prefix, cfg).empty());
}

TEST(Adversary, MirrorFollowsRootOneStepLater) {
  const Scenario line = build(ScenarioParams::line(1));
  Configuration init(6, bot0);
  init[0] = {1, 7};
  init[5] = {4, 7};
  for (ProcessId i = 1; i < 5; ++i) init[i] = {i - 1, 3};
  Engine engine(line.topology, line.faults, init, 0);
  auto mirror = AdversaryStrategy::mirror_root();
  std::vector<DaemonScriptEntry> script{{{0}, false}, {{}, true}};
  engine.advance(DaemonPolicy::scripted(DaemonKind::central, script, ByzScheduling::on_script), mirror,
                 StopCriterion::max_steps(2));
  const Execution& ex = engine.execution();
  ASSERT_EQ(ex.steps.size(), 2u);
  EXPECT_EQ(ex.steps[0].result[0], bot0);
  EXPECT_EQ(ex.steps[1].byz_writes, (ByzWrites{{5, bot0}}));
}

TEST(Adversary, FakeRootLooksLikeRootToNeighbors) {
  // Swapping the labels of r and a fake-root b on a symmetric graph gives
  // mirrored enabled sets.
  auto t = chain(7);
  FaultModel fm({6});
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Configuration cfg = random_configuration(*t, rng());
    cfg[0] = bot0;
    cfg[6] = bot0;
    Configuration mirrored(7);
    for (ProcessId i = 0; i < 7; ++i) {
      const ProcessState s = cfg[6 - i];
      mirrored[i] = {s.prnt == kNoParent ? kNoParent : 6 - s.prnt, s.level};
    }
    for (ProcessId i = 1; i < 6; ++i)
      ASSERT_EQ(is_enabled(*t, cfg, i), is_enabled(*t, mirrored, 6 - i)) << "trial " << trial;
  }
}

TEST(Adversary, OscillatorAndRandomShapes) {
  const Scenario hex = build(ScenarioParams::hexagon());
  const Topology& t = *hex.topology;
  Execution prefix;
  prefix.initial = Configuration(6, bot0);
  auto osc = AdversaryStrategy::oscillator(2);
  const Level high = 2 * Level{t.diameter()} + 2;
  std::vector<ProcessState> seen;
  for (int k = 0; k < 6; ++k) {
    const auto w = osc.advise(t, hex.faults, prefix, prefix.last());
    ASSERT_EQ(w.size(), 1u);
    seen.push_back(w[0].state);
    prefix.steps.push_back({{}, w, prefix.last()});
  }
  const ProcessState up{t.neighbors(5).front(), high};
  EXPECT_EQ(seen, (std::vector<ProcessState>{bot0, bot0, up, up, bot0, bot0}));

  auto rnd = AdversaryStrategy::random(4);
  for (int k = 0; k < 200; ++k) {
    const auto w = rnd.advise(t, hex.faults, prefix, prefix.last());
    ASSERT_EQ(w.size(), 1u);
    ASSERT_LE(w[0].state.level, 2 * Level{t.diameter()});
    ASSERT_TRUE(w[0].state.prnt == kNoParent || t.adjacent(5, w[0].state.prnt));
  }
}

TEST(Adversary, ScriptedWritesAndErrors) {
  const Scenario hex = build(ScenarioParams::hexagon());
  std::istringstream in("# step id prnt level\n0 5 -1 0\n2 5 3 8\n");
  auto script = AdversaryStrategy::scripted(parse_adversary_script(in));
  Execution prefix;
  prefix.initial = Configuration(6, bot0);
  EXPECT_EQ(script.advise(*hex.topology, hex.faults, prefix, prefix.last()), (ByzWrites{{5, bot0}}));
  EXPECT_FALSE(script.exhausted(2));
  EXPECT_TRUE(script.exhausted(3));
  auto bad = AdversaryStrategy::scripted({{0, 2, bot0}});
  EXPECT_THROW(bad.advise(*hex.topology, hex.faults, prefix, prefix.last()), ContractViolation);
  std::istringstream malformed("0 5 -1\n");
  EXPECT_THROW(parse_adversary_script(malformed), InputError);
  EXPECT_THROW(AdversaryStrategy::oscillator(0), InputError);
}

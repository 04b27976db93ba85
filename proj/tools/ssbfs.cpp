// ssbfs command-line front end.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssbfs/ssbfs.hpp"

namespace {

using namespace ssbfs;

// Options shared by subcommands that need a topology and a Byzantine set.
struct TopologyOptions {
  std::string scenario;
  std::string topology_file;
  std::vector<int> byz;
  bool byz_given = false;
  std::size_t byz_count = 0;
  std::uint64_t byz_seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--scenario", scenario,
                    "hexagon, line:C, path:N, grid:WxH, random:N:P:SEED, or a scenario file");
    app->add_option("--topology", topology_file, "topology file (`n root`, then `u v` edge lines)");
    app->add_option("--byz", byz, "explicit Byzantine ids (overrides the scenario default)")->delimiter(',');
    app->add_option("--byz-count", byz_count, "number of randomly placed Byzantine processes");
    app->add_option("--byz-seed", byz_seed, "seed for random Byzantine placement");
  }

  ScenarioParams params(const CLI::App* app) const {
    if (!scenario.empty() && !topology_file.empty())
      throw InputError("give either --scenario or --topology, not both");
    ScenarioParams p = !topology_file.empty() ? ScenarioParams::from_file(topology_file)
                       : !scenario.empty()    ? parse_scenario_shorthand(scenario)
                                              : throw InputError("missing --scenario or --topology");
    if (app->count("--byz") > 0) {
      std::vector<ProcessId> ids(byz.begin(), byz.end());
      p.with_byzantine(std::move(ids));
    } else if (byz_count > 0) {
      p.with_random_byzantine(byz_count, byz_seed);
    }
    return p;
  }
};

int run_command(const RunConfig& cfg, bool quiet) {
  const RunOutcome out = cmd_run(cfg);
  if (!quiet) {
    const auto& m = out.audit.metrics;
    auto opt = [](const std::optional<std::size_t>& x) { return x ? std::to_string(*x) : std::string("none"); };
    std::cout << "scenario " << out.row.scenario << "  n=" << out.row.n << " m=" << out.row.m << " f=" << out.row.f
              << "\nsteps " << out.execution.steps.size() << " (" << to_string(out.execution.stop_reason) << ")"
              << "\nfirst LC " << opt(m.first_lc_index) << ", first LC* " << opt(m.first_lc_star_index)
              << "\ndisruptions " << m.disruption_count << (m.open_disruption ? " (+1 open)" : "") << " bound "
              << out.audit.disruption_bound << "\nmax changes " << out.row.max_process_changes << " bound "
              << out.audit.change_bound << '\n';
  }
  for (const auto& f : out.failures) std::cerr << "check failed: " << f << '\n';
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-stabilizing BFS (min+1) simulator with Byzantine processes"};
  app.set_config("--config", "", "INI/TOML file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "simulate one configuration, measure it, write artifacts");
  TopologyOptions run_topo;
  run_topo.attach(run);
  RunConfig rc;
  std::string init = "random", adversary = "oscillator", daemon = "distributed", fairness = "random";
  bool quiet = false;
  run->add_option("--init", init, "zero, corrupted, random or file")->capture_default_str();
  run->add_option("--init-file", rc.init_file, "configuration file for --init file (`id prnt level` lines)");
  run->add_option("--adversary", adversary,
                  "silent, fake-root, mirror-root, oscillator, random, scripted, protocol-following")
      ->capture_default_str();
  run->add_option("--period", rc.adversary.period, "oscillator period in steps")->capture_default_str();
  run->add_option("--high-level", rc.adversary.high_level, "oscillator high level (0 = 2D+2)");
  run->add_option("--adversary-script", rc.adversary.script_file, "script file (`step id prnt level` lines)");
  run->add_option("--daemon", daemon, "central, distributed or synchronous")->capture_default_str();
  run->add_option("--fairness", fairness, "round-robin or random")->capture_default_str();
  run->add_option("--seed", rc.seed, "run seed")->capture_default_str();
  run->add_option("--max-steps", rc.max_steps, "step budget (0 = 50*n*m)");
  run->add_option("--post-lc-steps", rc.post_lc_steps, "stop at first LC, then take this many more steps");
  run->add_option("--trace", rc.trace_path, "write the trace here");
  run->add_option("--metrics", rc.metrics_path, "write a one-row metrics CSV here");
  run->add_option("--dot", rc.dot_path, "write the final configuration as Graphviz here");
  run->add_flag("--check-closure", rc.check_closure, "fail if some I_d stops holding");
  run->add_flag("--check-bounds", rc.check_bounds, "fail if 2m disruptions or Delta changes are exceeded after LC*");
  run->add_flag("--check-containment", rc.check_containment, "fail if a process outside S_B moves after LC");
  run->add_flag("--check-activations", rc.check_activations, "fail if an E_B process is activated more than Delta_v times");
  run->add_flag("--quiet", quiet, "no summary on stdout");

  // sweep -------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "run a grid of random-graph experiments and write a metrics CSV");
  SweepOptions so;
  std::string sweep_out, sweep_adv = "oscillator";
  std::size_t sweep_threads = default_threads();
  sweep->add_option("--graphs", so.graphs, "number of random graphs")->capture_default_str();
  sweep->add_option("--n-min", so.n_min)->capture_default_str();
  sweep->add_option("--n-max", so.n_max)->capture_default_str();
  sweep->add_option("--edge-prob", so.edge_prob)->capture_default_str();
  sweep->add_option("--f", so.f_values, "Byzantine counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", so.seeds, "runs per (graph, f)")->capture_default_str();
  sweep->add_option("--base-seed", so.base_seed)->capture_default_str();
  sweep->add_option("--adversary", sweep_adv)->capture_default_str();
  sweep->add_option("--period", so.adversary.period)->capture_default_str();
  sweep->add_option("--post-lc-steps", so.post_lc_steps)->capture_default_str();
  sweep->add_option("--threads", sweep_threads)->capture_default_str();
  sweep->add_option("--out", sweep_out, "metrics CSV path (stdout if omitted)");

  // exhaustive --------------------------------------------------------------
  auto* exhaustive = app.add_subcommand("exhaustive", "check every connected graph up to n-max nodes");
  ExhaustiveOptions eo;
  eo.threads = default_threads();
  exhaustive->add_option("--n-max", eo.n_max)->capture_default_str();
  exhaustive->add_option("--f-max", eo.f_max)->capture_default_str();
  exhaustive->add_option("--post-steps", eo.post_steps, "steps after first LC*")->capture_default_str();
  exhaustive->add_option("--seed", eo.seed)->capture_default_str();
  exhaustive->add_option("--threads", eo.threads)->capture_default_str();

  // replay ------------------------------------------------------------------
  auto* replay_cmd = app.add_subcommand("replay", "verify a stored trace, or build an impossibility replay");
  TopologyOptions replay_topo;
  replay_topo.attach(replay_cmd);
  std::string replay_trace, construction, replay_out;
  std::size_t replay_c = 1, cycles = 3;
  std::vector<int> replay_area;
  replay_cmd->add_option("--trace", replay_trace, "trace file to verify step by step");
  replay_cmd->add_option("--construction", construction, "strong (line) or ta-strong (hexagon)");
  replay_cmd->add_option("--c", replay_c, "radius for the strong construction")->capture_default_str();
  replay_cmd->add_option("--area", replay_area, "area for ta-strong, a proper subset of {3,4}")->delimiter(',');
  replay_cmd->add_option("--cycles", cycles)->capture_default_str();
  replay_cmd->add_option("--out", replay_out, "write the constructed trace here");

  // areas -------------------------------------------------------------------
  auto* areas_cmd = app.add_subcommand("areas", "print S_B, S_B* and E_B");
  TopologyOptions areas_topo;
  areas_topo.attach(areas_cmd);

  // export ------------------------------------------------------------------
  auto* export_cmd = app.add_subcommand("export", "write a scenario's topology file");
  TopologyOptions export_topo;
  export_topo.attach(export_cmd);
  std::string export_out;
  export_cmd->add_option("--out", export_out, "topology file path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      rc.scenario = run_topo.params(run);
      rc.init = parse_init_kind(init);
      rc.adversary.kind = parse_adversary_kind(adversary);
      rc.daemon = parse_daemon_kind(daemon);
      rc.fairness = parse_fairness(fairness);
      return run_command(rc, quiet);
    }
    if (*sweep) {
      so.adversary.kind = parse_adversary_kind(sweep_adv);
      const auto rows = cmd_sweep(make_sweep_grid(so), sweep_threads);
      std::ofstream file;
      if (!sweep_out.empty()) {
        file.open(sweep_out, std::ios::binary);
        if (!file) throw InputError("cannot write '" + sweep_out + "'");
      }
      std::ostream& out = sweep_out.empty() ? std::cout : file;
      write_metrics_header(out);
      std::size_t bad = 0;
      for (const auto& r : rows) {
        write_metrics_row(out, r);
        if (r.status != "ok") ++bad;
      }
      std::cerr << rows.size() << " rows, " << bad << " not ok\n";
      return bad == 0 ? 0 : 1;
    }
    if (*exhaustive) {
      const ExhaustiveReport report = cmd_exhaustive(eo);
      write_exhaustive_report(std::cout, report);
      return report.ok() ? 0 : 1;
    }
    if (*replay_cmd) {
      if (!construction.empty()) {
        Execution exec;
        ProcessSet area;
        if (construction == "strong") {
          exec = replay_strong_impossibility(replay_c, cycles);
          area = radius_area(*exec.topology, exec.faults, static_cast<Distance>(replay_c));
        } else if (construction == "ta-strong") {
          area = make_process_set(std::vector<ProcessId>(replay_area.begin(), replay_area.end()));
          exec = replay_ta_strong_impossibility(area, cycles);
        } else {
          throw InputError("unknown construction '" + construction + "' (strong, ta-strong)");
        }
        const auto segs = segment_disruptions(exec, area);
        std::size_t closed = 0;
        for (const auto& s : segs) closed += s.closed ? 1 : 0;
        std::cout << exec.adversary_label << "\nsteps " << exec.steps.size() << "\narea " << format_set(area)
                  << "\ndisruptions " << closed << '\n';
        if (!replay_out.empty()) {
          std::ofstream out(replay_out, std::ios::binary);
          if (!out) throw InputError("cannot write '" + replay_out + "'");
          write_trace(out, exec);
        }
        return 0;
      }
      if (replay_trace.empty()) throw InputError("replay needs --trace or --construction");
      const Scenario sc = build(replay_topo.params(replay_cmd));
      std::ifstream in(replay_trace);
      if (!in) throw InputError("cannot open trace '" + replay_trace + "'");
      const Execution exec = read_trace(in, sc.topology);
      const ReplayReport rep = replay(exec);
      if (!rep) {
        std::cout << "divergent at step " << (rep.divergent_step ? std::to_string(*rep.divergent_step) : "?") << ": "
                  << rep.detail << '\n';
        return 1;
      }
      std::cout << "trace verified: " << exec.steps.size() << " steps\n";
      return 0;
    }
    if (*areas_cmd) {
      const Scenario sc = build(areas_topo.params(areas_cmd));
      const ContainmentAreas a = compute_containment_areas(*sc.topology, sc.faults);
      std::cout << "B    " << format_set(sc.faults.byzantine) << "\nS_B  " << format_set(a.s_b) << "\nS_B* "
                << format_set(a.s_b_star) << "\nE_B  " << format_set(a.e_b) << '\n';
      return 0;
    }
    if (*export_cmd) {
      const Scenario sc = build(export_topo.params(export_cmd));
      if (export_out.empty()) {
        write_topology(std::cout, *sc.topology, &sc.faults);
      } else {
        std::ofstream out(export_out, std::ios::binary);
        if (!out) throw InputError("cannot write '" + export_out + "'");
        write_topology(out, *sc.topology, &sc.faults);
      }
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

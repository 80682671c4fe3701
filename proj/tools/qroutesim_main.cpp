#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qroutesim/engine.hpp"
#include "qroutesim/harness.hpp"
#include "qroutesim/io.hpp"
#include "qroutesim/policy.hpp"
#include "qroutesim/topology.hpp"

namespace {

using namespace qroutesim;

// flag mistakes that CLI11 cannot catch itself; mapped to exit code 2
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimFlags {
  std::string topology = "grid6x6";
  std::string policy = "q";
  double load = 1.0;
  std::int64_t steps = 30000;
  std::uint64_t seed = 1;
  double eta = 0.85;
  double lambda = 0.95;
  std::string tie_break = "random";
  std::int64_t window = 100;
  std::string injection = "bernoulli";
  std::string events_file;
  std::string out = "sim";
};

struct ExperimentFlags {
  std::string config_file;
  std::string topology = "grid6x6";
  std::vector<std::string> policies;
  double load = 2.15;
  std::vector<double> loads;
  std::int64_t steps = 30000;
  int seeds = 10;
  std::vector<std::uint64_t> seed_list;
  double eta = 0.85;
  double lambda = 0.95;
  std::string tie_break = "random";
  std::int64_t window = 100;
  std::string injection = "bernoulli";
  std::string out = "out";
};

void add_learning_flags(CLI::App* cmd, double& eta, double& lambda,
                        std::string& tie_break, std::string& injection) {
  cmd->add_option("--eta", eta, "learning rate, (0,1]")->capture_default_str();
  cmd->add_option("--lambda", lambda, "confidence decay constant, (0,1)")
      ->capture_default_str();
  cmd->add_option("--tie-break", tie_break, "first|random")->capture_default_str();
  cmd->add_option("--injection", injection, "bernoulli|poisson")
      ->capture_default_str();
}

TieBreak parse_tie_break(const std::string& name) {
  if (name == "first") return TieBreak::first;
  if (name == "random") return TieBreak::random;
  throw UsageError("unknown tie-break \"" + name + "\" (expected first or random)");
}

InjectionModel parse_injection(const std::string& name) {
  if (name == "bernoulli") return InjectionModel::bernoulli;
  if (name == "poisson") return InjectionModel::poisson;
  throw UsageError("unknown injection model \"" + name +
                   "\" (expected bernoulli or poisson)");
}

PolicyKind parse_policy_flag(const std::string& name) {
  try {
    return parse_policy_kind(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void check_positive(double value, const char* flag) {
  if (!(value > 0.0)) {
    throw UsageError(std::string(flag) + " must be positive");
  }
}

void check_learning_flags(double eta, double lambda, std::int64_t steps,
                          std::int64_t window) {
  if (!(eta > 0.0 && eta <= 1.0)) throw UsageError("--eta must be in (0,1]");
  if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("--lambda must be in (0,1)");
  if (steps <= 0) throw UsageError("--steps must be positive");
  if (window < 1) throw UsageError("--window must be at least 1");
}

Topology resolve_topology(const std::string& name) {
  if (name == "grid6x6") return build_irregular_grid_6x6();
  return load_topology(name);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

std::string settling_text(const std::optional<std::int64_t>& step) {
  return step ? std::to_string(*step) : std::string("not_settled");
}

std::string canonical_experiment(const std::string& command,
                                 const ExperimentSpec& spec,
                                 const std::string& topology_name,
                                 const std::vector<double>& loads) {
  std::ostringstream text;
  text << "command=" << command << ";topology=" << topology_name
       << ";steps=" << spec.base.steps << ";window=" << spec.base.metrics_window
       << ";eta=" << format_real(spec.base.params.eta)
       << ";lambda=" << format_real(spec.base.params.lambda) << ";tie_break="
       << (spec.base.params.tie_break == TieBreak::first ? "first" : "random")
       << ";injection="
       << (spec.base.injection == InjectionModel::poisson ? "poisson" : "bernoulli");
  text << ";loads=";
  for (std::size_t i = 0; i < loads.size(); ++i) {
    text << (i ? "," : "") << format_real(loads[i]);
  }
  text << ";policies=";
  for (std::size_t i = 0; i < spec.policies.size(); ++i) {
    text << (i ? "," : "") << to_string(spec.policies[i]);
  }
  text << ";seeds=";
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
    text << (i ? "," : "") << spec.seeds[i];
  }
  text << ";events=" << spec.base.events.size();
  return text.str();
}

// --- simulate / dump-tables ------------------------------------------------

SimConfig build_sim_config(const SimFlags& flags) {
  check_positive(flags.load, "--load");
  check_learning_flags(flags.eta, flags.lambda, flags.steps, flags.window);
  SimConfig config;
  config.policy = parse_policy_flag(flags.policy);
  config.load = flags.load;
  config.steps = flags.steps;
  config.seed = flags.seed;
  config.params.eta = flags.eta;
  config.params.lambda = flags.lambda;
  config.params.tie_break = parse_tie_break(flags.tie_break);
  config.metrics_window = flags.window;
  config.injection = parse_injection(flags.injection);
  config.topology = resolve_topology(flags.topology);
  if (!flags.events_file.empty()) {
    config.events = load_events(flags.events_file);
  }
  config.validate();
  return config;
}

int run_simulate(const SimFlags& flags) {
  const SimConfig config = build_sim_config(flags);
  const RunResult result = qroutesim::run(config);

  const std::string prefix = flags.out;
  {
    auto out = open_output(prefix + "_curve.csv");
    write_curve_csv(out, result.curve);
  }
  {
    auto out = open_output(prefix + "_deliveries.csv");
    write_deliveries_csv(out, result.deliveries);
  }
  {
    auto out = open_output(prefix + "_metrics.csv");
    write_metrics_csv(out, result.reports, result.curve);
  }

  std::int64_t injected = 0;
  for (const StepReport& r : result.reports) injected += r.injected;
  double time_sum = 0.0;
  for (const DeliveryRecord& r : result.deliveries) {
    time_sum += static_cast<double>(r.delivery_time);
  }
  std::cout << "simulate: policy=" << to_string(config.policy)
            << " load=" << format_real(config.load) << " steps=" << config.steps
            << " seed=" << config.seed << "\n";
  std::cout << "delivered " << result.deliveries.size() << "/" << injected
            << " packets";
  if (!result.deliveries.empty()) {
    std::cout << ", mean delivery time "
              << format_real(time_sum / static_cast<double>(result.deliveries.size()));
  }
  std::cout << "\n";
  std::cout << "wrote " << prefix << "_curve.csv " << prefix << "_deliveries.csv "
            << prefix << "_metrics.csv\n";
  return 0;
}

int run_dump_tables(const SimFlags& flags) {
  const SimConfig config = build_sim_config(flags);
  Simulation sim(config);
  sim.run();
  auto out = open_output(flags.out);
  sim.policy().dump_tables(out);
  std::cout << "wrote " << flags.out << "\n";
  return 0;
}

// --- compare / sweep / reproduce --------------------------------------------

struct ResolvedExperiment {
  ExperimentSpec spec;
  std::vector<double> loads;  // sweep only
  std::string topology_name;
};

ResolvedExperiment resolve_experiment(const ExperimentFlags& flags,
                                      const CLI::App* cmd,
                                      const std::vector<std::string>& default_policies) {
  ExperimentFlags merged = flags;
  ExperimentFileConfig file;
  if (!flags.config_file.empty()) {
    file = load_experiment_config(flags.config_file);
    const auto overridden = [&](const char* name) {
      return cmd->count(name) > 0;
    };
    if (file.topology && !overridden("--topology")) merged.topology = *file.topology;
    if (file.policies && !overridden("--policies")) merged.policies = *file.policies;
    if (file.load && !overridden("--load")) merged.load = *file.load;
    if (file.loads && !overridden("--loads")) merged.loads = *file.loads;
    if (file.steps && !overridden("--steps")) merged.steps = *file.steps;
    if (file.seeds && !overridden("--seed-list")) merged.seed_list = *file.seeds;
    if (file.eta && !overridden("--eta")) merged.eta = *file.eta;
    if (file.lambda && !overridden("--lambda")) merged.lambda = *file.lambda;
    if (file.tie_break && !overridden("--tie-break")) merged.tie_break = *file.tie_break;
    if (file.window && !overridden("--window")) merged.window = *file.window;
    if (file.injection && !overridden("--injection")) merged.injection = *file.injection;
  }

  check_positive(merged.load, "--load");
  check_learning_flags(merged.eta, merged.lambda, merged.steps, merged.window);
  if (merged.seeds < 1) throw UsageError("--seeds must be at least 1");
  for (const double load : merged.loads) check_positive(load, "--loads");

  ResolvedExperiment resolved;
  resolved.topology_name = merged.topology;
  resolved.loads = merged.loads;

  ExperimentSpec& spec = resolved.spec;
  spec.base.load = merged.load;
  spec.base.steps = merged.steps;
  spec.base.params.eta = merged.eta;
  spec.base.params.lambda = merged.lambda;
  spec.base.params.tie_break = parse_tie_break(merged.tie_break);
  spec.base.metrics_window = merged.window;
  spec.base.injection = parse_injection(merged.injection);

  spec.policies.clear();
  const auto& names = merged.policies.empty() ? default_policies : merged.policies;
  for (const std::string& name : names) {
    spec.policies.push_back(parse_policy_flag(name));
  }

  if (!merged.seed_list.empty()) {
    spec.seeds = merged.seed_list;
  } else {
    spec.seeds.clear();
    for (int i = 1; i <= merged.seeds; ++i) {
      spec.seeds.push_back(static_cast<std::uint64_t>(i));
    }
  }

  spec.base.topology = resolve_topology(merged.topology);
  if (file.events) spec.base.events = *file.events;
  spec.base.validate();
  spec.validate();
  return resolved;
}

void write_comparison_outputs(const std::filesystem::path& dir,
                              const ComparisonResult& result,
                              const std::string& command,
                              const std::string& canonical) {
  std::filesystem::create_directories(dir);
  for (std::size_t p = 0; p < result.policies.size(); ++p) {
    auto out = open_output(dir / ("curve_" + to_string(result.policies[p]) + ".csv"));
    write_curve_csv(out, result.aggregated[p]);
  }
  {
    auto out = open_output(dir / "comparison.csv");
    write_comparison_csv(out, result);
  }
  {
    auto out = open_output(dir / "manifest.json");
    write_manifest(out, command, canonical, result.seeds, result.policies);
  }
}

int run_compare(const ExperimentFlags& flags, const CLI::App* cmd) {
  const ResolvedExperiment resolved =
      resolve_experiment(flags, cmd, {"q", "cq"});
  const ComparisonResult result = run_comparison(resolved.spec);
  const std::string canonical =
      canonical_experiment("compare", resolved.spec, resolved.topology_name,
                           {resolved.spec.base.load});
  write_comparison_outputs(flags.out, result, "compare", canonical);

  for (std::size_t p = 0; p < result.policies.size(); ++p) {
    std::cout << to_string(result.policies[p]) << ": settling step "
              << settling_text(settling_step(result.aggregated[p])) << "\n";
  }
  std::cout << "wrote " << flags.out << "/comparison.csv\n";
  return 0;
}

int run_sweep(const ExperimentFlags& flags, const CLI::App* cmd) {
  ResolvedExperiment resolved =
      resolve_experiment(flags, cmd, {"sp", "q", "cq"});
  if (resolved.loads.empty()) {
    resolved.loads = {0.5, 1.0, 2.15, 2.75};
  }
  const std::vector<SweepRow> rows =
      run_load_sweep(resolved.spec.policies, resolved.loads, resolved.spec);

  std::filesystem::create_directories(flags.out);
  {
    auto out = open_output(std::filesystem::path(flags.out) / "sweep.csv");
    write_sweep_csv(out, rows);
  }
  {
    auto out = open_output(std::filesystem::path(flags.out) / "manifest.json");
    write_manifest(out, "sweep",
                   canonical_experiment("sweep", resolved.spec,
                                        resolved.topology_name, resolved.loads),
                   resolved.spec.seeds, resolved.spec.policies);
  }
  for (const SweepRow& row : rows) {
    std::cout << to_string(row.policy) << " load=" << format_real(row.load)
              << " mean=" << format_real(row.mean)
              << " stderr=" << format_real(row.stderr_) << " seeds=" << row.seed_count
              << "\n";
  }
  std::cout << "wrote " << flags.out << "/sweep.csv\n";
  return 0;
}

int run_reproduce(const ExperimentFlags& flags, const CLI::App* cmd, double load,
                  const std::string& command) {
  ExperimentFlags fixed = flags;
  if (cmd->count("--load") == 0) fixed.load = load;
  const ResolvedExperiment resolved = resolve_experiment(fixed, cmd, {"q", "cq"});
  const ExperimentSpec& spec = resolved.spec;
  if (spec.policies.size() != 2) {
    throw UsageError(command + " compares exactly two policies");
  }

  const ComparisonResult result = run_comparison(spec);
  const std::string canonical = canonical_experiment(
      command, spec, resolved.topology_name, {spec.base.load});
  write_comparison_outputs(fixed.out, result, command, canonical);

  const PolicyKind base_kind = spec.policies[0];
  const PolicyKind fast_kind = spec.policies[1];
  std::ostringstream verdict;
  int earlier = 0;
  for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
    const auto base_step = settling_step(result.per_seed[0][s]);
    const auto fast_step = settling_step(result.per_seed[1][s]);
    const bool fast_earlier =
        fast_step && (!base_step || *fast_step < *base_step);
    if (fast_earlier) ++earlier;
    verdict << "seed " << spec.seeds[s] << ": " << to_string(base_kind)
            << " settles at " << settling_text(base_step) << ", "
            << to_string(fast_kind) << " settles at " << settling_text(fast_step)
            << " -> " << (fast_earlier ? "earlier" : "not earlier") << "\n";
  }
  const int pairs = static_cast<int>(spec.seeds.size());
  verdict << to_string(fast_kind) << " settled earlier in " << earlier << "/"
          << pairs << " paired seeds\n";

  bool aggregate_ok = true;
  if (pairs > 1) {
    const auto base_agg = settling_step(result.aggregated[0]);
    const auto fast_agg = settling_step(result.aggregated[1]);
    aggregate_ok = fast_agg && (!base_agg || *fast_agg <= *base_agg);
    verdict << "aggregate: " << to_string(base_kind) << " settles at "
            << settling_text(base_agg) << ", " << to_string(fast_kind)
            << " settles at " << settling_text(fast_agg) << " -> "
            << (aggregate_ok ? "no later" : "later") << "\n";
  }

  const int needed = (pairs * 4 + 4) / 5;  // 80 percent, rounded up
  if (earlier >= needed && aggregate_ok) {
    verdict << "VERDICT: " << to_string(fast_kind) << " learns faster ("
            << earlier << "/" << pairs << " pairs settle earlier)\n";
  } else {
    verdict << "VERDICT: no clear ordering (" << earlier << "/" << pairs
            << " pairs settle earlier)\n";
  }

  std::cout << verdict.str();
  auto out = open_output(std::filesystem::path(fixed.out) / "verdict.txt");
  out << verdict.str();
  return 0;
}

// --- topology utilities ------------------------------------------------------

int run_topology_validate(const std::string& path) {
  Topology t;
  try {
    t = load_topology(path);
  } catch (const TopologyError& e) {
    if (e.line() > 0) {
      std::cerr << path << ":" << e.line() << ": " << e.what() << "\n";
    } else {
      std::cerr << path << ": " << e.what() << "\n";
    }
    return 1;
  }
  std::cout << t.node_count() << " nodes, " << t.link_count() << " links, connected";
  if (t.node_count() == 36) {
    const bool cut_ok = validate_cut(t, grid6x6_left_nodes(), grid6x6_right_nodes(),
                                     grid6x6_cross_links());
    std::cout << (cut_ok ? ", cut OK" : ", cut FAIL");
  }
  std::cout << "\n";
  return 0;
}

int run_topology_emit(const std::string& name, const std::string& out_path) {
  if (name != "grid6x6") {
    throw UsageError("unknown built-in topology \"" + name + "\"");
  }
  save_topology(build_irregular_grid_6x6(), out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic packet-network simulator with adaptive routing "
               "policies"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  SimFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "run one simulation, write CSVs");
  simulate->add_option("--topology", sim_flags.topology,
                       "grid6x6 or a topology file")->capture_default_str();
  simulate->add_option("--policy", sim_flags.policy, "sp|q|cq")
      ->capture_default_str();
  simulate->add_option("--load", sim_flags.load, "mean packets per step")
      ->capture_default_str();
  simulate->add_option("--steps", sim_flags.steps, "simulation steps")
      ->capture_default_str();
  simulate->add_option("--seed", sim_flags.seed, "rng seed")->capture_default_str();
  add_learning_flags(simulate, sim_flags.eta, sim_flags.lambda,
                     sim_flags.tie_break, sim_flags.injection);
  simulate->add_option("--window", sim_flags.window, "metrics window in steps")
      ->capture_default_str();
  simulate->add_option("--events", sim_flags.events_file, "link event schedule file");
  simulate->add_option("--out", sim_flags.out, "output file prefix")
      ->capture_default_str();

  SimFlags dump_flags;
  dump_flags.out = "tables.csv";
  auto* dump = app.add_subcommand("dump-tables",
                                  "run a simulation, dump final routing tables");
  dump->add_option("--topology", dump_flags.topology, "grid6x6 or a topology file")
      ->capture_default_str();
  dump->add_option("--policy", dump_flags.policy, "sp|q|cq")->capture_default_str();
  dump->add_option("--load", dump_flags.load, "mean packets per step")
      ->capture_default_str();
  dump->add_option("--steps", dump_flags.steps, "simulation steps")
      ->capture_default_str();
  dump->add_option("--seed", dump_flags.seed, "rng seed")->capture_default_str();
  add_learning_flags(dump, dump_flags.eta, dump_flags.lambda, dump_flags.tie_break,
                     dump_flags.injection);
  dump->add_option("--window", dump_flags.window, "metrics window in steps")
      ->capture_default_str();
  dump->add_option("--events", dump_flags.events_file, "link event schedule file");
  dump->add_option("--out", dump_flags.out, "output CSV path")->capture_default_str();

  const auto add_experiment_flags = [](CLI::App* cmd, ExperimentFlags& flags,
                                       bool with_loads) {
    cmd->add_option("--config", flags.config_file,
                    "JSON experiment config; flags win on conflict");
    cmd->add_option("--topology", flags.topology, "grid6x6 or a topology file")
        ->capture_default_str();
    cmd->add_option("--policies", flags.policies, "policies to compare")
        ->delimiter(',');
    cmd->add_option("--load", flags.load, "mean packets per step")
        ->capture_default_str();
    if (with_loads) {
      cmd->add_option("--loads", flags.loads, "loads to sweep")->delimiter(',');
    }
    cmd->add_option("--steps", flags.steps, "simulation steps")
        ->capture_default_str();
    cmd->add_option("--seeds", flags.seeds, "number of seeds (1..N)")
        ->capture_default_str();
    cmd->add_option("--seed-list", flags.seed_list, "explicit seed values")
        ->delimiter(',');
    cmd->add_option("--eta", flags.eta, "learning rate, (0,1]")
        ->capture_default_str();
    cmd->add_option("--lambda", flags.lambda, "confidence decay constant, (0,1)")
        ->capture_default_str();
    cmd->add_option("--tie-break", flags.tie_break, "first|random")
        ->capture_default_str();
    cmd->add_option("--injection", flags.injection, "bernoulli|poisson")
        ->capture_default_str();
    cmd->add_option("--window", flags.window, "metrics window in steps")
        ->capture_default_str();
    cmd->add_option("--out", flags.out, "output directory")->capture_default_str();
  };

  ExperimentFlags compare_flags;
  compare_flags.out = "compare_out";
  auto* compare = app.add_subcommand("compare",
                                     "multi-seed learning-curve comparison");
  add_experiment_flags(compare, compare_flags, false);

  ExperimentFlags sweep_flags;
  sweep_flags.out = "sweep_out";
  sweep_flags.steps = 30000;
  auto* sweep = app.add_subcommand("sweep", "steady-state delivery time per load");
  add_experiment_flags(sweep, sweep_flags, true);

  // The settling comparison needs coarser windows than plain curve output:
  // at window 100 the 10% settling band is narrower than routine congestion
  // bursts, so the statistic degenerates to "position of the last burst".
  ExperimentFlags fig3_flags;
  fig3_flags.out = "fig3_out";
  fig3_flags.window = 500;
  auto* fig3 = app.add_subcommand(
      "reproduce-fig3", "compare q_routing and cq_routing at medium load (2.15)");
  add_experiment_flags(fig3, fig3_flags, false);

  ExperimentFlags fig4_flags;
  fig4_flags.out = "fig4_out";
  fig4_flags.window = 500;
  auto* fig4 = app.add_subcommand(
      "reproduce-fig4", "compare q_routing and cq_routing at high load (2.75)");
  add_experiment_flags(fig4, fig4_flags, false);

  std::string validate_path;
  auto* validate = app.add_subcommand("topology-validate",
                                      "check a topology file, print a summary");
  validate->add_option("path", validate_path, "topology file")->required();

  std::string emit_name = "grid6x6";
  std::string emit_out = "grid6x6.txt";
  auto* emit = app.add_subcommand("topology-emit", "write a built-in topology file");
  emit->add_option("--name", emit_name, "built-in topology name")
      ->capture_default_str();
  emit->add_option("--out", emit_out, "output path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_flags);
    if (dump->parsed()) return run_dump_tables(dump_flags);
    if (compare->parsed()) return run_compare(compare_flags, compare);
    if (sweep->parsed()) return run_sweep(sweep_flags, sweep);
    if (fig3->parsed()) return run_reproduce(fig3_flags, fig3, 2.15, "reproduce-fig3");
    if (fig4->parsed()) return run_reproduce(fig4_flags, fig4, 2.75, "reproduce-fig4");
    if (validate->parsed()) return run_topology_validate(validate_path);
    if (emit->parsed()) return run_topology_emit(emit_name, emit_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "windcap/capacity.hpp"
#include "windcap/control.hpp"
#include "windcap/report.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitInfeasible = 1;
constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;

windcap::CapacityMethod parse_capacity_mode(const std::string& mode) {
  if (mode == "cia") return windcap::CapacityMethod::cia;
  if (mode == "box") return windcap::CapacityMethod::cia_box;
  throw windcap::InputError("unknown capacity mode '" + mode +
                            "' (expected cia or box)");
}

windcap::Scenario default_scenario() {
  windcap::Scenario sc;
  sc.name = "all_rated";
  sc.pattern = windcap::Scenario::Pattern::all_rated;
  return sc;
}

struct CommonArgs {
  std::string network;
  std::string out = "out";
  unsigned long long seed = 42;
  double tol = 1e-4;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--network", args.network, "network JSON file")->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--seed", args.seed, "Monte Carlo seed");
  cmd->add_option("--tol", args.tol, "expansion stopping tolerance (pu)");
}

int run_capacity(const CommonArgs& common, const std::string& scenario_path,
                 const std::string& mode, int samples) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  windcap::Scenario sc = scenario_path.empty()
                             ? default_scenario()
                             : windcap::load_scenario(scenario_path);
  Eigen::VectorXd p = windcap::scenario_p(net, sc);

  windcap::ExpandOptions opts;
  opts.tol = common.tol;
  if (sc.alpha) opts.alpha = sc.alpha;
  windcap::CapacityReport report =
      windcap::iterate_expand(net, p, parse_capacity_mode(mode), opts);
  if (!report.feasible) {
    std::cerr << "capacity program infeasible: " << report.message << "\n";
    return report.message.find("infeasible") != std::string::npos
               ? kExitInfeasible
               : kExitSolver;
  }
  windcap::VerificationSummary summary =
      windcap::verify_capacity(net, p, report, samples, common.seed);

  windcap::OutputWriter writer(common.out);
  writer.write("capacity_report.json",
               windcap::capacity_report_json(net, report));
  writer.write("capacity_report.csv", windcap::capacity_report_csv(net, report));
  writer.write("verification.json",
               windcap::verification_json(summary, common.seed));
  std::vector<std::string> inputs = {common.network};
  if (!scenario_path.empty()) inputs.push_back(scenario_path);
  writer.write_manifest("capacity", inputs, common.seed);
  return 0;
}

int run_sweep(const CommonArgs& common, int node_a, int node_b, int steps) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  auto range = [&net](int id) {
    int k = net.internal_index(id);
    return std::make_pair(net.node(k).q_min, net.node(k).q_max);
  };
  windcap::SweepGrid grid = windcap::sweep_2d(net, node_a, node_b,
                                              range(node_a), range(node_b),
                                              steps);
  windcap::OutputWriter writer(common.out);
  writer.write("sweep.csv", windcap::sweep_csv(grid));
  writer.write_manifest("sweep", {common.network}, common.seed);
  return 0;
}

int run_pq_curve(const CommonArgs& common, const std::string& mode,
                 double p_min, double p_max, int levels) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  if (levels < 2) throw windcap::InputError("need at least 2 levels");
  std::vector<double> p_levels;
  for (int i = 0; i < levels; ++i)
    p_levels.push_back(p_min + (p_max - p_min) * i / (levels - 1));
  std::vector<windcap::PqPoint> points =
      windcap::pq_curve(net, p_levels, parse_capacity_mode(mode));
  windcap::OutputWriter writer(common.out);
  writer.write("pq_curve.csv", windcap::pq_curve_csv(points));
  writer.write_manifest("pq-curve", {common.network}, common.seed);
  return 0;
}

int run_simulate(const CommonArgs& common, const std::string& scenario_path,
                 const std::string& mode, double t_end) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  windcap::Scenario sc = scenario_path.empty()
                             ? default_scenario()
                             : windcap::load_scenario(scenario_path);
  Eigen::VectorXd p = windcap::scenario_p(net, sc);

  windcap::ExpandOptions opts;
  opts.tol = common.tol;
  windcap::CapacityReport report =
      windcap::iterate_expand(net, p, windcap::CapacityMethod::cia_box, opts);
  if (!report.feasible) {
    std::cerr << "capacity program infeasible: " << report.message << "\n";
    return kExitInfeasible;
  }

  windcap::ControllerConfig cfg;
  if (mode == "cia")
    cfg.mode = windcap::DisaggMode::cia;
  else if (mode == "grid_agnostic")
    cfg.mode = windcap::DisaggMode::grid_agnostic;
  else
    throw windcap::InputError("unknown simulate mode '" + mode +
                              "' (expected cia or grid_agnostic)");

  windcap::SimTrace trace =
      windcap::simulate(net, p, report.nodal,
                        windcap::TheveninGrid::default_disturbance(), cfg,
                        t_end);
  if (!trace.diagnostic.empty())
    std::cerr << "simulation truncated: " << trace.diagnostic << "\n";

  windcap::OutputWriter writer(common.out);
  writer.write("trace.csv", windcap::trace_csv(net, trace));
  writer.write("controller.json", windcap::controller_config_json(cfg));
  std::vector<std::string> inputs = {common.network};
  if (!scenario_path.empty()) inputs.push_back(scenario_path);
  writer.write_manifest("simulate", inputs, common.seed);
  return trace.diagnostic.empty() ? 0 : kExitSolver;
}

int run_compare(const CommonArgs& common,
                const std::vector<std::string>& scenario_paths) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  std::vector<windcap::Scenario> scenarios;
  for (const std::string& path : scenario_paths)
    scenarios.push_back(windcap::load_scenario(path));
  if (scenarios.empty()) scenarios.push_back(default_scenario());
  std::vector<windcap::CompareEntry> table = windcap::compare(net, scenarios);

  windcap::OutputWriter writer(common.out);
  writer.write("compare.csv", windcap::compare_csv(table, net.base_mva()));
  std::vector<std::string> inputs = {common.network};
  inputs.insert(inputs.end(), scenario_paths.begin(), scenario_paths.end());
  writer.write_manifest("compare", inputs, common.seed);
  return 0;
}

int run_verify(const CommonArgs& common, const std::string& scenario_path,
               const std::string& mode, int samples) {
  windcap::RadialNetwork net = windcap::RadialNetwork::load(common.network);
  windcap::Scenario sc = scenario_path.empty()
                             ? default_scenario()
                             : windcap::load_scenario(scenario_path);
  Eigen::VectorXd p = windcap::scenario_p(net, sc);

  windcap::ExpandOptions opts;
  opts.tol = common.tol;
  windcap::CapacityReport report =
      windcap::iterate_expand(net, p, parse_capacity_mode(mode), opts);
  if (!report.feasible) {
    std::cerr << "capacity program infeasible: " << report.message << "\n";
    return kExitInfeasible;
  }
  windcap::VerificationSummary summary =
      windcap::verify_capacity(net, p, report, samples, common.seed);

  windcap::OutputWriter writer(common.out);
  writer.write("verification.json",
               windcap::verification_json(summary, common.seed));
  std::vector<std::string> inputs = {common.network};
  if (!scenario_path.empty()) inputs.push_back(scenario_path);
  writer.write_manifest("verify", inputs, common.seed);
  if (summary.admissible != summary.samples) {
    std::cerr << "verification failed: " << summary.admissible << "/"
              << summary.samples << " samples admissible\n";
    return kExitInfeasible;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive capacity and PCC voltage control for radial wind "
               "farm collector networks"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string scenario_path, mode = "box";
  int samples = 1000;
  int node_a = 0, node_b = 0, steps = 81, levels = 15;
  double p_min = 0.0, p_max = 1.65, t_end = 100.0;
  std::vector<std::string> scenario_paths;

  CLI::App* c_cap = app.add_subcommand("capacity", "nodal capacity box");
  add_common(c_cap, common);
  c_cap->add_option("--scenario", scenario_path, "scenario JSON file");
  c_cap->add_option("--mode", mode, "cia or box");
  c_cap->add_option("--samples", samples, "verification samples");

  CLI::App* c_sweep = app.add_subcommand("sweep", "2-node admissibility grid");
  add_common(c_sweep, common);
  c_sweep->add_option("--node-a", node_a, "first node id")->required();
  c_sweep->add_option("--node-b", node_b, "second node id")->required();
  c_sweep->add_option("--steps", steps, "grid points per axis");

  CLI::App* c_pq = app.add_subcommand("pq-curve", "capacity vs active power");
  add_common(c_pq, common);
  c_pq->add_option("--mode", mode, "cia or box");
  c_pq->add_option("--p-min", p_min, "lowest per-turbine level (MW)");
  c_pq->add_option("--p-max", p_max, "highest per-turbine level (MW)");
  c_pq->add_option("--levels", levels, "number of levels");

  std::string sim_mode = "cia";
  CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop PCC control");
  add_common(c_sim, common);
  c_sim->add_option("--scenario", scenario_path, "scenario JSON file");
  c_sim->add_option("--mode", sim_mode, "cia or grid_agnostic");
  c_sim->add_option("--t-end", t_end, "simulated time (s)");

  CLI::App* c_cmp = app.add_subcommand("compare", "method comparison table");
  add_common(c_cmp, common);
  c_cmp->add_option("--scenario", scenario_paths, "scenario JSON file(s)");

  CLI::App* c_ver = app.add_subcommand("verify", "Monte Carlo verification");
  add_common(c_ver, common);
  c_ver->add_option("--scenario", scenario_path, "scenario JSON file");
  c_ver->add_option("--mode", mode, "cia or box");
  c_ver->add_option("--samples", samples, "verification samples");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_cap->parsed()) return run_capacity(common, scenario_path, mode, samples);
    if (c_sweep->parsed()) return run_sweep(common, node_a, node_b, steps);
    if (c_pq->parsed())
      return run_pq_curve(common, mode, p_min, p_max, levels);
    if (c_sim->parsed())
      return run_simulate(common, scenario_path, sim_mode, t_end);
    if (c_cmp->parsed()) return run_compare(common, scenario_paths);
    if (c_ver->parsed())
      return run_verify(common, scenario_path, mode, samples);
  } catch (const windcap::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}

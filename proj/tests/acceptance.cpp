// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failed criteria.

#include "helpers.hpp"
#include "newton_ac.hpp"
#include "windcap/capacity.hpp"
#include "windcap/control.hpp"
#include "windcap/powerflow.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace windcap;

namespace {

int g_failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Scenario pattern_scenario(Scenario::Pattern pat, const char* name) {
  Scenario s;
  s.pattern = pat;
  s.name = name;
  return s;
}

// Copy of a network with different squared voltage limits on every node.
RadialNetwork with_v_limits(const RadialNetwork& net, double v_min_sq,
                            double v_max_sq) {
  std::vector<NodeSpec> nodes;
  std::vector<BranchSpec> branches;
  for (int k = 0; k < net.size(); ++k) {
    NodeSpec nd = net.node(k);
    nd.v_min = v_min_sq;
    nd.v_max = v_max_sq;
    nodes.push_back(nd);
    branches.push_back(net.branch(k));
  }
  return RadialNetwork(net.base_mva(), net.v0(), nodes, branches);
}

} // namespace

int main(int argc, char** argv) {
  std::string data_dir = "data";
  std::string cli;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--data-dir") data_dir = argv[i + 1];
    else if (flag == "--cli") cli = argv[i + 1];
  }

  RadialNetwork three = RadialNetwork::load(data_dir + "/three_node.json");
  RadialNetwork farm = RadialNetwork::load(data_dir + "/farm19.json");
  const std::vector<Scenario> patterns = {
      pattern_scenario(Scenario::Pattern::all_rated, "all_rated"),
      pattern_scenario(Scenario::Pattern::leaves_rated, "leaves_rated"),
      pattern_scenario(Scenario::Pattern::inner_rated, "inner_rated"),
  };

  // AC-1: matrix-model identities reproduce the oracle on random trees.
  {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    double worst = 0.0;
    int tested = 0;
    for (int trial = 0; trial < 100; ++trial) {
      int n = 2 + static_cast<int>(rng() % 29); // N <= 30
      RadialNetwork net = testing::random_radial(rng, n);
      Eigen::VectorXd q = testing::random_q(rng, net);
      PowerFlowSolution sol = solve(net, net.p(), q);
      if (!sol.converged) continue;
      NetworkMatrices mat = build_matrices(net);
      Eigen::VectorXd P = mat.C * net.p() - mat.D_R * sol.l;
      Eigen::VectorXd Q = mat.C * q - mat.D_X * sol.l;
      Eigen::VectorXd v = Eigen::VectorXd::Constant(net.size(), net.v0()) +
                          mat.M_p * net.p() + mat.M_q * q - mat.H * sol.l;
      worst = std::max({worst, (P - sol.P).lpNorm<Eigen::Infinity>(),
                        (Q - sol.Q).lpNorm<Eigen::Infinity>(),
                        (v - sol.v).lpNorm<Eigen::Infinity>()});
      ++tested;
    }
    double dt = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%d networks, max identity residual %.2e (limit 1e-8), %.1fs",
                  tested, worst, dt);
    report("AC-1", tested == 100 && worst <= 1e-8 && dt < 30.0, buf);
  }

  // AC-2 / AC-3: 1000 box samples per network x scenario are oracle-admissible
  // and the oracle currents/voltages respect the envelopes.
  std::vector<CapacityReport> farm_reports; // reused by AC-4's sanity check
  {
    auto t0 = std::chrono::steady_clock::now();
    bool all_admissible = true, all_envelope = true, all_feasible = true;
    std::string detail;
    for (const RadialNetwork* net : {&three, &farm}) {
      for (const Scenario& sc : patterns) {
        Eigen::VectorXd p = scenario_p(*net, sc);
        CapacityReport rep = iterate_expand(*net, p, CapacityMethod::cia_box);
        if (net == &farm) farm_reports.push_back(rep);
        if (!rep.feasible) {
          all_feasible = false;
          detail += sc.name + ":infeasible ";
          continue;
        }
        VerificationSummary sum = verify_capacity(*net, p, rep, 1000, 42);
        if (sum.admissible != sum.samples) all_admissible = false;
        if (sum.envelope_ok != sum.samples) all_envelope = false;
        detail += sc.name + ":" + std::to_string(sum.admissible) + "/1000 ";
      }
    }
    double dt = seconds_since(t0);
    detail += "(" + std::to_string(dt) + "s)";
    report("AC-2", all_feasible && all_admissible && dt < 120.0, detail);
    report("AC-3", all_feasible && all_envelope,
           all_envelope ? "oracle l and v inside the envelopes at every sample"
                        : "envelope violated at some sample");
  }

  // AC-4: CIA interval inside the relaxation interval for every scenario;
  // at the device-limited end of the inner-rated scenario the two agree.
  {
    std::vector<CompareEntry> rows = compare(farm, patterns);
    bool contained = true, verified = true;
    for (const CompareEntry& e : rows) {
      contained = contained && e.relax_lo <= e.cia_lo + 1e-6 &&
                  e.relax_hi >= e.cia_hi - 1e-6;
      verified = verified && e.cia_verified;
    }
    double gap_hi = std::abs(rows[2].relax_hi - rows[2].cia_hi);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "containment %s, inner_rated export-end gap %.2e pu "
                  "(limit 0.01)",
                  contained ? "holds" : "violated", gap_hi);
    report("AC-4", contained && verified && gap_hi <= 0.01, buf);
  }

  // AC-5: with voltage limits widened to [0.5, 1.5] pu the export capacity is
  // the device sum minus reactive line losses.
  {
    RadialNetwork wide = with_v_limits(farm, 0.25, 2.25);
    CapacityReport rep = iterate_expand(wide, wide.p(), CapacityMethod::cia);
    bool ok = rep.feasible;
    char buf[200];
    if (ok) {
      // Oracle head flow with every device at q_max is exactly the device sum
      // minus the downstream reactive line losses.
      PowerFlowSolution full = solve(wide, wide.p(), wide.q_max());
      double expect = full.q_head;
      ok = full.converged &&
           std::abs(rep.q_head_hi - expect) <= 0.05 * std::abs(expect);
      std::snprintf(buf, sizeof buf,
                    "Q_head+ %.4f pu vs device sum minus losses %.4f pu",
                    rep.q_head_hi, expect);
    } else {
      std::snprintf(buf, sizeof buf, "capacity infeasible: %s",
                    rep.message.c_str());
    }
    report("AC-5", ok, buf);
  }

  // AC-6: quadratic current model vs the exact (P^2+Q^2)/v along a full
  // single-node reactive sweep.
  {
    PowerFlowSolution base =
        solve(farm, farm.p(), Eigen::VectorXd::Zero(farm.size()));
    QuadraticModel model =
        build_quadratic_model(operating_point_from_pf(base));
    int node = farm.internal_index(2);
    double rel_worst = 0.0;
    bool converged = true;
    for (int s = 0; s <= 40; ++s) {
      Eigen::VectorXd q = Eigen::VectorXd::Zero(farm.size());
      q[node] = farm.node(node).q_min +
                (farm.node(node).q_max - farm.node(node).q_min) * s / 40.0;
      PowerFlowSolution pf = solve(farm, farm.p(), q);
      if (!pf.converged) { converged = false; break; }
      for (int k = 0; k < farm.size(); ++k) {
        double approx = quad_current(model, k, pf.P[k], pf.Q[k], pf.v[k]);
        double rel = std::abs(approx - pf.l[k]) / std::max(pf.l[k], 1e-6);
        rel_worst = std::max(rel_worst, rel);
      }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max relative model error %.3e (limit 0.02)",
                  rel_worst);
    report("AC-6", converged && rel_worst <= 0.02, buf);
  }

  // AC-7: the 3-node admissible set is non-convex and the capacity box sits
  // inside the admissible mask.
  {
    auto t0 = std::chrono::steady_clock::now();
    const int steps = 81;
    SweepGrid grid = sweep_2d(three, 2, 3, {-1.0, 1.0}, {-1.0, 1.0}, steps);
    CapacityReport rep = iterate_expand(three, three.p(), CapacityMethod::cia_box);
    int ka = three.internal_index(2), kb = three.internal_index(3);

    bool midpoint_gap = false;
    for (int ia = 0; ia < steps && !midpoint_gap; ia += 2)
      for (int ib = 0; ib < steps && !midpoint_gap; ib += 2)
        for (int ja = ia; ja < steps && !midpoint_gap; ja += 2)
          for (int jb = ib; jb < steps && !midpoint_gap; jb += 2) {
            if (!grid.verdicts[ia][ib].admissible ||
                !grid.verdicts[ja][jb].admissible)
              continue;
            if (!grid.verdicts[(ia + ja) / 2][(ib + jb) / 2].admissible)
              midpoint_gap = true;
          }

    bool box_inside = rep.feasible;
    for (int ia = 0; ia < steps && box_inside; ++ia)
      for (int ib = 0; ib < steps && box_inside; ++ib) {
        double qa = grid.q_a[ia], qb = grid.q_b[ib];
        bool in_box = qa >= rep.nodal.q_minus[ka] - 1e-12 &&
                      qa <= rep.nodal.q_plus[ka] + 1e-12 &&
                      qb >= rep.nodal.q_minus[kb] - 1e-12 &&
                      qb <= rep.nodal.q_plus[kb] + 1e-12;
        if (in_box && !grid.verdicts[ia][ib].admissible) box_inside = false;
      }
    double dt = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "non-convex midpoint %s, box inside mask %s, %.1fs",
                  midpoint_gap ? "found" : "missing",
                  box_inside ? "yes" : "no", dt);
    report("AC-7", midpoint_gap && box_inside && dt < 60.0, buf);
  }

  // AC-8: export capacity vs active level is non-increasing with a
  // device-to-voltage knee.
  {
    std::vector<double> levels;
    for (int i = 0; i < 9; ++i) levels.push_back(1.65 * i / 8.0);
    std::vector<PqPoint> curve = pq_curve(farm, levels, CapacityMethod::cia_box);
    bool non_increasing = true, starts_device = false, ends_voltage = false;
    for (size_t i = 0; i < curve.size(); ++i) {
      if (std::isnan(curve[i].q_head_plus)) non_increasing = false;
      if (i > 0 && curve[i].q_head_plus > curve[i - 1].q_head_plus + 1e-6)
        non_increasing = false;
    }
    starts_device = curve.front().binding_tag == "device";
    ends_voltage = curve.back().binding_tag == "voltage";
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "non-increasing %s, tags %s -> %s across 9 levels",
                  non_increasing ? "yes" : "no",
                  curve.front().binding_tag.c_str(),
                  curve.back().binding_tag.c_str());
    report("AC-8", non_increasing && starts_device && ends_voltage, buf);
  }

  // AC-9: capacity-aware disaggregation avoids the voltage violations the
  // grid-agnostic split produces, trading PCC tracking error for safety.
  {
    auto t0 = std::chrono::steady_clock::now();
    CapacityReport rep = iterate_expand(farm, farm.p(), CapacityMethod::cia_box);
    TheveninGrid grid = TheveninGrid::default_disturbance();
    ControllerConfig cia_cfg, ga_cfg;
    cia_cfg.mode = DisaggMode::cia;
    ga_cfg.mode = DisaggMode::grid_agnostic;
    SimTrace cia_tr = simulate(farm, farm.p(), rep.nodal, grid, cia_cfg, 100.0);
    SimTrace ga_tr = simulate(farm, farm.p(), rep.nodal, grid, ga_cfg, 100.0);
    double r_cia = rmse(cia_tr, cia_cfg.v_ref);
    double r_ga = rmse(ga_tr, ga_cfg.v_ref);
    double dt = seconds_since(t0);
    bool ok = rep.feasible && ga_tr.steady_state_violations() >= 1 &&
              cia_tr.steady_state_violations() == 0 && r_ga < r_cia &&
              r_cia / r_ga > 1.0 && dt < 60.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "violations cia=%d agnostic=%d, RMSE ratio %.2f, %.1fs",
                  cia_tr.steady_state_violations(),
                  ga_tr.steady_state_violations(), r_cia / r_ga, dt);
    report("AC-9", ok, buf);
  }

  // AC-10: every expansion iterate is admissible and the head interval only
  // grows until the stopping rule fires.
  {
    CapacityReport rep = iterate_expand(three, three.p(), CapacityMethod::cia);
    bool ok = rep.feasible && rep.iterations.size() >= 2;
    for (size_t i = 0; ok && i < rep.iterations.size(); ++i) {
      const CapacityIteration& it = rep.iterations[i];
      ok = check_admissible(three, three.p(), it.q_plus).admissible &&
           check_admissible(three, three.p(), it.q_minus).admissible;
      if (ok && i > 0)
        ok = it.q_head_hi >= rep.iterations[i - 1].q_head_hi - 1e-6 &&
             it.q_head_lo <= rep.iterations[i - 1].q_head_lo + 1e-6;
    }
    report("AC-10", ok,
           std::to_string(rep.iterations.size()) +
               " iterates, all admissible and monotone");
  }

  // AC-11: DistFlow sweep vs the independent Newton polar solver.
  {
    double worst = 0.0;
    bool ok = true;
    std::mt19937_64 rng(9);
    for (const RadialNetwork* net : {&three, &farm}) {
      for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd q = testing::random_q(rng, *net) * 0.5;
        PowerFlowSolution sweep = solve(*net, net->p(), q);
        auto newton = testing::newton_ac(*net, net->p(), q, net->v0());
        if (!sweep.converged || !newton.converged) { ok = false; break; }
        worst = std::max(worst,
                         (sweep.v - newton.v_sq).lpNorm<Eigen::Infinity>());
      }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max |v_sweep - v_newton| %.2e (limit 1e-7)",
                  worst);
    report("AC-11", ok && worst <= 1e-7, buf);
  }

  // AC-12: two identical CLI compare runs produce byte-identical outputs.
  {
    bool ok = !cli.empty();
    std::string detail = "cli binary not provided";
    if (ok) {
      std::string base = "/tmp/windcap_acceptance";
      std::string cmd_tail = " compare --network " + data_dir +
                             "/three_node.json --scenario " + data_dir +
                             "/scenario1.json --out ";
      ok = std::system((cli + cmd_tail + base + "_a > /dev/null 2>&1").c_str()) == 0 &&
           std::system((cli + cmd_tail + base + "_b > /dev/null 2>&1").c_str()) == 0;
      if (ok) {
        for (const char* name : {"/compare.csv", "/manifest.json"}) {
          std::string a = read_file(base + "_a" + name);
          std::string b = read_file(base + "_b" + name);
          if (a.empty() || a != b) { ok = false; break; }
        }
        detail = ok ? "compare.csv and manifest.json byte-identical"
                    : "outputs differ between runs";
      } else {
        detail = "cli run failed";
      }
    }
    report("AC-12", ok, detail);
  }

  return g_failures;
}

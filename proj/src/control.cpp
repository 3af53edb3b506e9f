#include "windcap/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace windcap {

namespace {

double interp_profile(const std::vector<std::pair<double, double>>& profile,
                      double t) {
  if (profile.empty()) throw InputError("empty time profile");
  if (t <= profile.front().first) return profile.front().second;
  if (t >= profile.back().first) return profile.back().second;
  for (size_t i = 1; i < profile.size(); ++i) {
    if (t <= profile[i].first) {
      double t0 = profile[i - 1].first, t1 = profile[i].first;
      double y0 = profile[i - 1].second, y1 = profile[i].second;
      if (t1 <= t0) return y1;
      return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
    }
  }
  return profile.back().second;
}

void mark_settled(std::vector<SimStep>& steps) {
  const int window = 10;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (static_cast<int>(i) < window) continue;
    bool flat = true;
    for (size_t j = i - window + 1; j <= i; ++j)
      if (std::abs(steps[j].v_pcc - steps[j - 1].v_pcc) >= 1e-6) flat = false;
    steps[i].settled = flat;
  }
}

} // namespace

const char* to_string(DisaggMode mode) {
  return mode == DisaggMode::cia ? "cia" : "grid_agnostic";
}

double TheveninGrid::v_at(double t) const { return interp_profile(v_grid, t); }

void TheveninGrid::validate() const {
  if (v_grid.empty()) throw InputError("grid profile is empty");
  for (size_t i = 1; i < v_grid.size(); ++i)
    if (v_grid[i].first < v_grid[i - 1].first)
      throw InputError("grid profile times must be non-decreasing");
  for (const auto& [t, v] : v_grid)
    if (v <= 0.0) throw InputError("grid voltage must be positive");
  if (r_th < 0.0 || (r_th == 0.0 && x_th == 0.0))
    throw InputError("invalid grid impedance");
}

TheveninGrid TheveninGrid::default_disturbance() {
  TheveninGrid grid;
  grid.v_grid = {{0.0, 1.00}, {5.0, 1.00}, {5.0, 0.94},
                 {10.0, 0.94}, {70.0, 1.00}};
  return grid;
}

PiOutput pi_step(const PiState& state, double v_pcc_meas,
                 const ControllerConfig& cfg) {
  double e = cfg.v_ref - v_pcc_meas;
  double u = cfg.kp * e + state.integrator;
  double out = std::clamp(u, cfg.sat_lo, cfg.sat_hi);
  PiOutput res;
  res.q_tg_ref = out;
  res.saturated = out != u;
  res.state.integrator =
      state.integrator + cfg.dt * (cfg.ki * e + cfg.anti_windup * (out - u));
  return res;
}

Eigen::VectorXd disaggregate(double q_tg_ref, const NodalCapacity& caps) {
  const int n = static_cast<int>(caps.q_plus.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  if (q_tg_ref == 0.0) return q;
  if (q_tg_ref > 0.0) {
    double total = caps.q_plus.sum();
    if (total <= 0.0)
      throw InputError("no reactive headroom in the export direction");
    q = caps.q_plus * (q_tg_ref / total);
  } else {
    double total = caps.q_minus.sum();
    if (total >= 0.0)
      throw InputError("no reactive headroom in the absorption direction");
    q = caps.q_minus * (q_tg_ref / total);
  }
  return q;
}

int SimTrace::steady_state_violations() const {
  int count = 0;
  for (const SimStep& s : steps)
    if (s.settled && s.violation) ++count;
  return count;
}

int SimTrace::any_violations() const {
  int count = 0;
  for (const SimStep& s : steps)
    if (s.violation) ++count;
  return count;
}

SimTrace simulate(const RadialNetwork& net, const Eigen::VectorXd& p,
                  const NodalCapacity& caps, const TheveninGrid& grid,
                  const ControllerConfig& cfg, double t_end) {
  grid.validate();
  const int n = net.size();
  if (p.size() != n || caps.q_plus.size() != n || caps.q_minus.size() != n)
    throw InputError("simulate dimension mismatch");

  // Augmented network: Thevenin source as the new head, a PCC node behind
  // z_th, and the farm hanging off the PCC via its original head branch.
  int pcc_id = 0;
  for (int k = 0; k < n; ++k) pcc_id = std::max(pcc_id, net.external_id(k));
  ++pcc_id;

  std::vector<NodeSpec> nodes;
  std::vector<BranchSpec> branches;
  NodeSpec pcc;
  pcc.id = pcc_id;
  pcc.v_min = 0.25; // wide PCC limits; only turbine nodes are enforced
  pcc.v_max = 2.25;
  pcc.alpha = 0.0;
  nodes.push_back(pcc);
  BranchSpec thev;
  thev.from_node = 0;
  thev.to_node = pcc_id;
  thev.r = grid.r_th;
  thev.x = grid.x_th;
  thev.l_max = 1e6;
  branches.push_back(thev);
  for (int k = 0; k < n; ++k) nodes.push_back(net.node(k));
  for (int k = 0; k < n; ++k) {
    BranchSpec br = net.branch(k);
    if (net.parent(k) < 0) br.from_node = pcc_id;
    branches.push_back(br);
  }
  RadialNetwork aug(net.base_mva(), grid.v_at(0.0) * grid.v_at(0.0),
                    std::move(nodes), std::move(branches));

  std::vector<int> farm_to_aug(n);
  for (int k = 0; k < n; ++k)
    farm_to_aug[k] = aug.internal_index(net.external_id(k));
  const int pcc_k = aug.internal_index(pcc_id);
  const int farm_head_k = aug.internal_index(net.external_id(
      [&net, n] {
        for (int k = 0; k < n; ++k)
          if (net.parent(k) < 0) return k;
        return 0;
      }()));

  Eigen::VectorXd p_aug = Eigen::VectorXd::Zero(n + 1);
  for (int k = 0; k < n; ++k) p_aug[farm_to_aug[k]] = p[k];

  ControllerConfig run = cfg;
  if (run.sat_lo == 0.0 && run.sat_hi == 0.0) {
    if (run.mode == DisaggMode::cia) {
      run.sat_lo = caps.q_minus.sum();
      run.sat_hi = caps.q_plus.sum();
    } else {
      run.sat_lo = net.q_min().sum();
      run.sat_hi = net.q_max().sum();
    }
  }
  NodalCapacity split;
  if (run.mode == DisaggMode::cia) {
    split = caps;
  } else {
    split.q_minus = net.q_min();
    split.q_plus = net.q_max();
  }

  const Eigen::VectorXd vmin = net.v_min(), vmax = net.v_max();

  SimTrace trace;
  PiState pi;
  PowerFlowOptions pf_opts;

  // Pre-disturbance measurement: zero dispatch at the initial grid voltage.
  PowerFlowSolution pf = solve(aug, p_aug, Eigen::VectorXd::Zero(n + 1),
                               grid.v_at(0.0) * grid.v_at(0.0), pf_opts);
  if (!pf.converged) {
    trace.diagnostic = "initial power flow did not converge";
    return trace;
  }
  double v_pcc_meas = std::sqrt(pf.v[pcc_k]);

  const int steps = static_cast<int>(std::floor(t_end / run.dt + 1e-9)) + 1;
  for (int s = 0; s < steps; ++s) {
    double t = s * run.dt;
    double vg = grid.v_at(t);

    PiOutput out = pi_step(pi, v_pcc_meas, run);
    pi = out.state;
    Eigen::VectorXd q = disaggregate(out.q_tg_ref, split);
    Eigen::VectorXd q_aug = Eigen::VectorXd::Zero(n + 1);
    for (int k = 0; k < n; ++k) q_aug[farm_to_aug[k]] = q[k];

    pf_opts.warm_start_l = pf.l;
    pf = solve(aug, p_aug, q_aug, vg * vg, pf_opts);
    if (!pf.converged) {
      trace.diagnostic =
          "power flow diverged at t = " + std::to_string(t) + " s";
      break;
    }

    SimStep step;
    step.t = t;
    step.v_grid = vg;
    step.v_pcc = std::sqrt(pf.v[pcc_k]);
    step.q_tg_ref = out.q_tg_ref;
    step.q_head = pf.Q[farm_head_k];
    step.q = q;
    step.v.resize(n);
    for (int k = 0; k < n; ++k) step.v[k] = pf.v[farm_to_aug[k]];
    step.integrator = pi.integrator;
    step.saturated = out.saturated;
    for (int k = 0; k < n; ++k)
      if (step.v[k] < vmin[k] - kAdmissibilitySlack ||
          step.v[k] > vmax[k] + kAdmissibilitySlack)
        step.violation = true;
    trace.steps.push_back(step);
    v_pcc_meas = step.v_pcc;
  }
  mark_settled(trace.steps);
  return trace;
}

DecentralizedState decentralized_steady_state(const RadialNetwork& net,
                                              const Eigen::VectorXd& p,
                                              const Eigen::VectorXd& q_ref,
                                              double v0_sq) {
  const int n = net.size();
  NetworkMatrices mat = build_matrices(net);
  const Eigen::VectorXd qmin = net.q_min(), qmax = net.q_max();
  const Eigen::VectorXd vmin = net.v_min(), vmax = net.v_max();

  Eigen::VectorXd target(n);
  for (int k = 0; k < n; ++k) target[k] = std::clamp(q_ref[k], qmin[k], qmax[k]);
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = target;

  DecentralizedState state;
  const double damping = 0.7;
  PowerFlowOptions pf_opts;
  PowerFlowSolution pf;
  for (int it = 0; it < 200; ++it) {
    pf = solve(net, p, q, v0_sq, pf_opts);
    state.inner_iterations = it + 1;
    if (!pf.converged) return state;
    pf_opts.warm_start_l = pf.l;

    Eigen::VectorXd q_next(n);
    for (int k = 0; k < n; ++k) {
      double sens = std::max(mat.M_q(k, k), 1e-9);
      if (pf.v[k] > vmax[k])
        correction[k] -= damping * (pf.v[k] - vmax[k]) / sens;
      else if (pf.v[k] < vmin[k])
        correction[k] += damping * (vmin[k] - pf.v[k]) / sens;
      else if (correction[k] != 0.0) {
        // Inside the band: relax the override back toward plain tracking.
        double margin = correction[k] > 0.0 ? (vmax[k] - pf.v[k])
                                            : (pf.v[k] - vmin[k]);
        double relax = damping * margin / sens;
        if (correction[k] > 0.0)
          correction[k] = std::max(0.0, correction[k] - relax);
        else
          correction[k] = std::min(0.0, correction[k] + relax);
      }
      q_next[k] = std::clamp(target[k] + correction[k], qmin[k], qmax[k]);
    }
    double move = (q_next - q).lpNorm<Eigen::Infinity>();
    q = q_next;
    if (move < 1e-8) {
      state.converged = true;
      break;
    }
  }
  pf = solve(net, p, q, v0_sq, pf_opts);
  if (!pf.converged) {
    state.converged = false;
    return state;
  }
  state.q = q;
  state.v = pf.v;
  state.q_head = pf.q_head;
  return state;
}

SimTrace decentralized_sim(const RadialNetwork& net, const Eigen::VectorXd& p,
                           const std::vector<std::pair<double, double>>& broadcast,
                           double dt, double t_end) {
  const int n = net.size();
  const Eigen::VectorXd vmin = net.v_min(), vmax = net.v_max();
  SimTrace trace;
  const int steps = static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
  for (int s = 0; s < steps; ++s) {
    double t = s * dt;
    double ref = interp_profile(broadcast, t);
    Eigen::VectorXd q_ref = Eigen::VectorXd::Constant(n, ref);
    DecentralizedState st = decentralized_steady_state(net, p, q_ref, net.v0());
    if (!st.converged) {
      trace.diagnostic =
          "decentralized fixed point failed at t = " + std::to_string(t) + " s";
      break;
    }
    SimStep step;
    step.t = t;
    step.v_grid = std::sqrt(net.v0());
    step.v_pcc = std::sqrt(net.v0());
    step.q_tg_ref = ref * n;
    step.q_head = st.q_head;
    step.q = st.q;
    step.v = st.v;
    for (int k = 0; k < n; ++k)
      if (st.v[k] < vmin[k] - kAdmissibilitySlack ||
          st.v[k] > vmax[k] + kAdmissibilitySlack)
        step.violation = true;
    trace.steps.push_back(step);
  }
  mark_settled(trace.steps);
  return trace;
}

double rmse(const SimTrace& trace, double v_ref) {
  if (trace.steps.empty()) return 0.0;
  double acc = 0.0;
  for (const SimStep& s : trace.steps) {
    double e = s.v_pcc - v_ref;
    acc += e * e;
  }
  return std::sqrt(acc / trace.steps.size());
}

} // namespace windcap

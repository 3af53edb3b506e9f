#include "windcap/powerflow.hpp"

#include <cmath>

namespace windcap {

PowerFlowSolution solve(const RadialNetwork& net, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& q, double v0_sq,
                        const PowerFlowOptions& opts) {
  const int n = net.size();
  if (p.size() != n || q.size() != n)
    throw InputError("injection vector dimension mismatch");
  if (v0_sq <= 0.0) throw InputError("head voltage must be positive");

  PowerFlowSolution sol;
  sol.v = Eigen::VectorXd::Constant(n, v0_sq);
  sol.l = opts.warm_start_l ? *opts.warm_start_l : Eigen::VectorXd::Zero(n);
  sol.P = Eigen::VectorXd::Zero(n);
  sol.Q = Eigen::VectorXd::Zero(n);

  for (int it = 1; it <= opts.max_iterations; ++it) {
    // Backward sweep: accumulate branch flows from the leaves toward the head
    // using the current squared-current iterate.
    for (int k = n - 1; k >= 0; --k) {
      double pk = p[k], qk = q[k];
      for (int h : net.children(k)) {
        pk += sol.P[h] - net.branch(h).r * sol.l[h];
        qk += sol.Q[h] - net.branch(h).x * sol.l[h];
      }
      sol.P[k] = pk;
      sol.Q[k] = qk;
    }
    // Forward sweep: propagate squared voltages from the head outward, then
    // refresh the squared currents.
    double max_dl = 0.0;
    bool bad_voltage = false;
    for (int k = 0; k < n; ++k) {
      const BranchSpec& br = net.branch(k);
      double vi = (net.parent(k) < 0) ? v0_sq : sol.v[net.parent(k)];
      double z2 = br.r * br.r + br.x * br.x;
      sol.v[k] = vi + 2.0 * br.r * sol.P[k] + 2.0 * br.x * sol.Q[k] -
                 z2 * sol.l[k];
      if (sol.v[k] <= 0.0) {
        bad_voltage = true;
        break;
      }
      double l_new = (sol.P[k] * sol.P[k] + sol.Q[k] * sol.Q[k]) / sol.v[k];
      max_dl = std::max(max_dl, std::abs(l_new - sol.l[k]));
      sol.l[k] = l_new;
    }
    sol.iterations = it;
    sol.residual = max_dl;
    if (bad_voltage) {
      sol.converged = false;
      return sol;
    }
    if (max_dl <= opts.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.p_head = sol.P[0];
  sol.q_head = sol.Q[0];
  return sol;
}

double distflow_residual(const RadialNetwork& net, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& q, double v0_sq,
                         const PowerFlowSolution& sol) {
  const int n = net.size();
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const BranchSpec& br = net.branch(k);
    double vi = (net.parent(k) < 0) ? v0_sq : sol.v[net.parent(k)];
    double z2 = br.r * br.r + br.x * br.x;
    double pk = p[k], qk = q[k];
    for (int h : net.children(k)) {
      pk += sol.P[h] - net.branch(h).r * sol.l[h];
      qk += sol.Q[h] - net.branch(h).x * sol.l[h];
    }
    worst = std::max(worst, std::abs(sol.v[k] - (vi + 2.0 * br.r * sol.P[k] +
                                                 2.0 * br.x * sol.Q[k] -
                                                 z2 * sol.l[k])));
    worst = std::max(worst, std::abs(sol.P[k] - pk));
    worst = std::max(worst, std::abs(sol.Q[k] - qk));
    worst = std::max(worst, std::abs(sol.l[k] * sol.v[k] -
                                     (sol.P[k] * sol.P[k] +
                                      sol.Q[k] * sol.Q[k])));
  }
  return worst;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::v_low: return "v_low";
    case ViolationKind::v_high: return "v_high";
    case ViolationKind::l_high: return "l_high";
    case ViolationKind::non_convergence: return "non_convergence";
  }
  return "?";
}

const Violation* AdmissibilityVerdict::worst() const {
  const Violation* out = nullptr;
  for (const auto& viol : violations)
    if (!out || viol.magnitude > out->magnitude) out = &viol;
  return out;
}

AdmissibilityVerdict check_admissible(const RadialNetwork& net,
                                      const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q,
                                      double v0_sq) {
  AdmissibilityVerdict verdict;
  verdict.solution = solve(net, p, q, v0_sq);
  const PowerFlowSolution& sol = verdict.solution;
  if (!sol.converged) {
    verdict.violations.push_back(
        {ViolationKind::non_convergence, 0, sol.residual});
    verdict.admissible = false;
    return verdict;
  }
  for (int k = 0; k < net.size(); ++k) {
    const NodeSpec& nd = net.node(k);
    if (sol.v[k] < nd.v_min - kAdmissibilitySlack)
      verdict.violations.push_back(
          {ViolationKind::v_low, nd.id, nd.v_min - sol.v[k]});
    if (sol.v[k] > nd.v_max + kAdmissibilitySlack)
      verdict.violations.push_back(
          {ViolationKind::v_high, nd.id, sol.v[k] - nd.v_max});
    if (sol.l[k] > net.branch(k).l_max + kAdmissibilitySlack)
      verdict.violations.push_back(
          {ViolationKind::l_high, nd.id, sol.l[k] - net.branch(k).l_max});
  }
  verdict.admissible = verdict.violations.empty();
  return verdict;
}

AdmissibilityVerdict check_admissible(const RadialNetwork& net,
                                      const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q) {
  return check_admissible(net, p, q, net.v0());
}

SweepGrid sweep_2d(const RadialNetwork& net, int node_a, int node_b,
                   std::pair<double, double> q_range_a,
                   std::pair<double, double> q_range_b, int steps,
                   const std::optional<Eigen::VectorXd>& base_q) {
  if (!net.has_node(node_a) || !net.has_node(node_b))
    throw InputError("sweep node id not in network");
  if (node_a == node_b) throw InputError("sweep nodes must differ");
  if (steps < 2) throw InputError("sweep requires steps >= 2");

  auto axis = [steps](std::pair<double, double> range) {
    if (range.first == range.second) {
      Eigen::VectorXd one(1);
      one[0] = range.first;
      return one;
    }
    return Eigen::VectorXd(
        Eigen::VectorXd::LinSpaced(steps, range.first, range.second));
  };

  SweepGrid grid;
  grid.node_a = node_a;
  grid.node_b = node_b;
  grid.q_a = axis(q_range_a);
  grid.q_b = axis(q_range_b);

  const int ka = net.internal_index(node_a);
  const int kb = net.internal_index(node_b);
  Eigen::VectorXd q0 =
      base_q ? *base_q : Eigen::VectorXd::Zero(net.size());
  Eigen::VectorXd p = net.p();

  grid.verdicts.resize(grid.q_a.size());
  for (int ia = 0; ia < grid.q_a.size(); ++ia) {
    grid.verdicts[ia].reserve(grid.q_b.size());
    for (int ib = 0; ib < grid.q_b.size(); ++ib) {
      Eigen::VectorXd q = q0;
      q[ka] = grid.q_a[ia];
      q[kb] = grid.q_b[ib];
      grid.verdicts[ia].push_back(check_admissible(net, p, q));
    }
  }
  return grid;
}

} // namespace windcap

#include "windcap/capacity.hpp"

#include "windcap/control.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace windcap {

namespace {

constexpr double kBindingTol = 1e-5;
// Reactive ranges narrower than this are pinned with equalities; a zero-width
// inequality box has no strict interior for the barrier method.
constexpr double kDegenerateQ = 1e-12;

void add_operational_limits(ConicProgram& prog, const CiaBlock& blk,
                            const RadialNetwork& net) {
  const Eigen::VectorXd vmin = net.v_min();
  const Eigen::VectorXd vmax = net.v_max();
  const Eigen::VectorXd lmax = net.l_max();
  for (int i = 0; i < blk.n; ++i) {
    prog.add_lower_bound(blk.off_V_minus + i, vmin[i]);
    prog.add_upper_bound(blk.off_V_plus + i, vmax[i]);
    prog.add_upper_bound(blk.off_l_ub + i, lmax[i]);
  }
}

// Nodal reactive injections implied by the anchor's branch flows.
Eigen::VectorXd anchor_q(const RadialNetwork& net, const OperatingPoint& op) {
  const int n = net.size();
  Eigen::VectorXd q = op.Q0;
  for (int k = 0; k < n; ++k)
    for (int h : net.children(k))
      q[k] -= op.Q0[h] - net.branch(h).x * op.l0[h];
  return q;
}

// Equality-consistent starting point: pick interior reactive corner hints,
// then solve the interval-bound and lower-envelope equalities for the
// dependent P/Q/V/l variables so the solver's equality projection is a no-op.
// l_ub is iterated until it clears the cone and envelope rows with margin.
Eigen::VectorXd block_hint(const CiaBlock& blk, const RadialNetwork& net,
                           const QuadraticModel& model,
                           const NetworkMatrices& mat,
                           const Eigen::VectorXd& p) {
  const int n = blk.n;
  const Eigen::VectorXd q0 = anchor_q(net, model.op);
  const Eigen::VectorXd qmin = net.q_min();
  const Eigen::VectorXd qmax = net.q_max();
  const Eigen::VectorXd lmax = net.l_max();
  const Eigen::VectorXd cp = mat.C * p;
  const Eigen::VectorXd v_base =
      Eigen::VectorXd::Constant(n, net.v0()) + mat.M_p * p;
  const Eigen::VectorXd& P0 = model.op.P0;
  const Eigen::VectorXd& Q0 = model.op.Q0;
  const Eigen::VectorXd& v0 = model.op.v0;
  const Eigen::VectorXd& l0 = model.op.l0;

  Eigen::VectorXd qp(n), qm(n);
  for (int i = 0; i < n; ++i) {
    if (blk.mode == CiaMode::box) {
      qp[i] = qmax[i] <= kDegenerateQ
                  ? 0.0
                  : std::clamp(q0[i], 0.05 * qmax[i], 0.95 * qmax[i]);
      qm[i] = qmin[i] >= -kDegenerateQ
                  ? 0.0
                  : std::clamp(q0[i], 0.95 * qmin[i], 0.05 * qmin[i]);
    } else {
      double w = qmax[i] - qmin[i];
      qp[i] = w <= kDegenerateQ
                  ? qmin[i]
                  : std::clamp(q0[i], qmin[i] + 0.05 * w, qmax[i] - 0.05 * w);
      qm[i] = qp[i];
    }
  }

  // Coefficient of l_lb in its own defining equality (through the interval
  // bounds that feed the lower envelope).
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const BranchQuadratic& bq = model.branches[k];
    T.row(k) = -bq.J_pos[1] * mat.D_X_neg.row(k) -
               bq.J_pos[2] * mat.H_neg.row(k) - bq.J_neg[0] * mat.D_R.row(k) -
               bq.J_neg[1] * mat.D_X_pos.row(k) - bq.J_neg[2] * mat.H_pos.row(k);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - T);

  Eigen::VectorXd l_ub = l0 + 0.001 * (Eigen::VectorXd::Ones(n) + l0);
  Eigen::VectorXd l_lb(n), Pp(n), Pm(n), Qp(n), Qm(n), Vp(n), Vm(n);
  for (int pass = 0; pass < 4; ++pass) {
    Pm = cp - mat.D_R * l_ub;
    Eigen::VectorXd Qm_c = mat.C * qm - mat.D_X_pos * l_ub;
    Eigen::VectorXd Vm_c = v_base + mat.M_q * qm - mat.H_pos * l_ub;
    Eigen::VectorXd Qp_c = mat.C * qp - mat.D_X_neg * l_ub;
    Eigen::VectorXd Vp_c = v_base + mat.M_q * qp - mat.H_neg * l_ub;
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) {
      const BranchQuadratic& bq = model.branches[k];
      rhs[k] = l0[k] +
               bq.J_pos[0] * (Pm[k] - P0[k]) + bq.J_pos[1] * (Qm_c[k] - Q0[k]) +
               bq.J_pos[2] * (Vm_c[k] - v0[k]) + bq.J_neg[0] * (cp[k] - P0[k]) +
               bq.J_neg[1] * (Qp_c[k] - Q0[k]) + bq.J_neg[2] * (Vp_c[k] - v0[k]);
    }
    l_lb = lu.solve(rhs);
    Pp = cp - mat.D_R * l_lb;
    Qp = Qp_c - mat.D_X_pos * l_lb;
    Qm = Qm_c - mat.D_X_neg * l_lb;
    Vp = Vp_c - mat.H_pos * l_lb;
    Vm = Vm_c - mat.H_neg * l_lb;

    for (int k = 0; k < n; ++k) {
      const BranchQuadratic& bq = model.branches[k];
      Eigen::Vector3d dp(Pp[k] - P0[k], Qp[k] - Q0[k], Vp[k] - v0[k]);
      Eigen::Vector3d dm(Pm[k] - P0[k], Qm[k] - Q0[k], Vm[k] - v0[k]);
      double lin = 2.0 * std::abs(bq.J_pos.dot(dp) + bq.J_neg.dot(dm));
      double req = std::max(l_lb[k], l0[k] + lin);
      for (int corner = 0; corner < 8; ++corner) {
        Eigen::Vector3d dc;
        for (int comp = 0; comp < 3; ++comp)
          dc[comp] = ((corner >> comp) & 1) ? dp[comp] : dm[comp];
        req = std::max(req, l0[k] + (bq.L.transpose() * dc).squaredNorm());
      }
      l_ub[k] = std::min(req + 1e-3 * (1.0 + std::abs(req)),
                         lmax[k] * (1.0 - 1e-9));
    }
  }

  Eigen::VectorXd hint = Eigen::VectorXd::Zero(blk.num_vars);
  hint.segment(blk.off_q_plus, n) = qp;
  hint.segment(blk.off_q_minus, n) = qm;
  hint.segment(blk.off_P_plus, n) = Pp;
  hint.segment(blk.off_P_minus, n) = Pm;
  hint.segment(blk.off_Q_plus, n) = Qp;
  hint.segment(blk.off_Q_minus, n) = Qm;
  hint.segment(blk.off_V_plus, n) = Vp;
  hint.segment(blk.off_V_minus, n) = Vm;
  hint.segment(blk.off_l_lb, n) = l_lb;
  hint.segment(blk.off_l_ub, n) = l_ub;
  return hint;
}

std::vector<std::string> binding_tags(const Eigen::VectorXd& x,
                                      const CiaBlock& blk,
                                      const RadialNetwork& net,
                                      bool upper_direction) {
  std::vector<std::string> tags;
  const Eigen::VectorXd vmin = net.v_min();
  const Eigen::VectorXd vmax = net.v_max();
  const Eigen::VectorXd lmax = net.l_max();
  const Eigen::VectorXd qmin = net.q_min();
  const Eigen::VectorXd qmax = net.q_max();
  bool dev = false, v_up = false, v_lo = false, cur = false;
  for (int i = 0; i < blk.n; ++i) {
    if (upper_direction) {
      if (qmax[i] > kBindingTol &&
          x[blk.off_q_plus + i] > qmax[i] - kBindingTol)
        dev = true;
    } else {
      if (qmin[i] < -kBindingTol &&
          x[blk.off_q_minus + i] < qmin[i] + kBindingTol)
        dev = true;
    }
    if (x[blk.off_V_plus + i] > vmax[i] - kBindingTol) v_up = true;
    if (x[blk.off_V_minus + i] < vmin[i] + kBindingTol) v_lo = true;
    if (x[blk.off_l_ub + i] > lmax[i] - kBindingTol * std::max(1.0, lmax[i]))
      cur = true;
  }
  if (dev) tags.push_back("device");
  if (v_up) tags.push_back("v_upper");
  if (v_lo) tags.push_back("v_lower");
  if (cur) tags.push_back("current");
  return tags;
}

DispatchResult run_dispatch(const RadialNetwork& net, const NetworkMatrices& mat,
                            const Eigen::VectorXd& p, const QuadraticModel& model,
                            const Eigen::VectorXd& alpha, bool upper) {
  const int n = net.size();
  CiaBlock blk =
      assemble_bounds(mat, model, p, CiaMode::single_dispatch, net.v0());
  ConicProgram prog = blk.to_program();
  add_operational_limits(prog, blk, net);

  const Eigen::VectorXd qmin = net.q_min();
  const Eigen::VectorXd qmax = net.q_max();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(blk.num_vars);
  for (int i = 0; i < n; ++i) {
    if (upper) {
      if (qmax[i] <= kDegenerateQ) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(blk.num_vars);
        row[blk.off_q_plus + i] = 1.0;
        prog.add_equality(row, 0.0);
        continue;
      }
      prog.add_lower_bound(blk.off_q_plus + i, 0.0);
      prog.add_upper_bound(blk.off_q_plus + i, qmax[i]);
      c[blk.off_q_plus + i] -= alpha[i];
    } else {
      if (qmin[i] >= -kDegenerateQ) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(blk.num_vars);
        row[blk.off_q_minus + i] = 1.0;
        prog.add_equality(row, 0.0);
        continue;
      }
      prog.add_lower_bound(blk.off_q_minus + i, qmin[i]);
      prog.add_upper_bound(blk.off_q_minus + i, 0.0);
      c[blk.off_q_minus + i] += alpha[i];
    }
  }
  // Upper direction maximizes the guaranteed export Q_head^-; the absorption
  // direction minimizes the guaranteed import bound Q_head^+.
  if (upper)
    c[blk.off_Q_minus + 0] -= 1.0;
  else
    c[blk.off_Q_plus + 0] += 1.0;
  prog.set_objective(c);

  ConicSolverOptions sopts;
  sopts.warm_start = block_hint(blk, net, model, mat, p);
  ConicSolveResult res = solve(prog, sopts);
  DispatchResult out;
  out.status = res.status;
  out.message = res.message;
  if (res.status != SolveStatus::optimal) return out;
  out.q = res.x.segment(upper ? blk.off_q_plus : blk.off_q_minus, n);
  out.q_head_bound =
      upper ? res.x[blk.off_Q_minus + 0] : res.x[blk.off_Q_plus + 0];
  out.l_lb = res.x.segment(blk.off_l_lb, n);
  out.l_ub = res.x.segment(blk.off_l_ub, n);
  out.V_minus = res.x.segment(blk.off_V_minus, n);
  out.V_plus = res.x.segment(blk.off_V_plus, n);
  out.binding = binding_tags(res.x, blk, net, upper);
  return out;
}

} // namespace

DispatchResult solve_p1(const RadialNetwork& net, const NetworkMatrices& mat,
                        const Eigen::VectorXd& p, const QuadraticModel& model,
                        const Eigen::VectorXd& alpha) {
  return run_dispatch(net, mat, p, model, alpha, /*upper=*/true);
}

DispatchResult solve_p2(const RadialNetwork& net, const NetworkMatrices& mat,
                        const Eigen::VectorXd& p, const QuadraticModel& model,
                        const Eigen::VectorXd& alpha) {
  return run_dispatch(net, mat, p, model, alpha, /*upper=*/false);
}

BoxResult solve_box(const RadialNetwork& net, const NetworkMatrices& mat,
                    const Eigen::VectorXd& p, const QuadraticModel& model,
                    const Eigen::VectorXd& alpha) {
  const int n = net.size();
  CiaBlock blk = assemble_bounds(mat, model, p, CiaMode::box, net.v0());
  ConicProgram prog = blk.to_program();
  add_operational_limits(prog, blk, net);

  const Eigen::VectorXd qmin = net.q_min();
  const Eigen::VectorXd qmax = net.q_max();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(blk.num_vars);
  for (int i = 0; i < n; ++i) {
    if (qmin[i] >= -kDegenerateQ) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(blk.num_vars);
      row[blk.off_q_minus + i] = 1.0;
      prog.add_equality(row, 0.0);
    } else {
      prog.add_lower_bound(blk.off_q_minus + i, qmin[i]);
      prog.add_upper_bound(blk.off_q_minus + i, 0.0);
      c[blk.off_q_minus + i] += alpha[i];
    }
    if (qmax[i] <= kDegenerateQ) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(blk.num_vars);
      row[blk.off_q_plus + i] = 1.0;
      prog.add_equality(row, 0.0);
    } else {
      prog.add_lower_bound(blk.off_q_plus + i, 0.0);
      prog.add_upper_bound(blk.off_q_plus + i, qmax[i]);
      c[blk.off_q_plus + i] -= alpha[i];
    }
  }
  prog.set_objective(c);

  ConicSolverOptions sopts;
  sopts.warm_start = block_hint(blk, net, model, mat, p);
  ConicSolveResult res = solve(prog, sopts);
  BoxResult out;
  out.status = res.status;
  out.message = res.message;
  if (res.status != SolveStatus::optimal) return out;
  out.caps.q_minus = res.x.segment(blk.off_q_minus, n).cwiseMin(0.0);
  out.caps.q_plus = res.x.segment(blk.off_q_plus, n).cwiseMax(0.0);
  out.l_lb = res.x.segment(blk.off_l_lb, n);
  out.l_ub = res.x.segment(blk.off_l_ub, n);
  out.V_minus = res.x.segment(blk.off_V_minus, n);
  out.V_plus = res.x.segment(blk.off_V_plus, n);
  auto up = binding_tags(res.x, blk, net, true);
  auto lo = binding_tags(res.x, blk, net, false);
  out.caps.binding = up;
  for (const auto& t : lo)
    if (std::find(up.begin(), up.end(), t) == up.end())
      out.caps.binding.push_back(t);
  return out;
}

const char* to_string(CapacityMethod method) {
  switch (method) {
    case CapacityMethod::cia: return "cia";
    case CapacityMethod::cia_box: return "cia_box";
    case CapacityMethod::relaxation: return "relaxation";
    case CapacityMethod::decentralized: return "decentralized";
  }
  return "?";
}

CapacityReport iterate_expand(const RadialNetwork& net, const Eigen::VectorXd& p,
                              CapacityMethod mode, const ExpandOptions& opts) {
  if (mode != CapacityMethod::cia && mode != CapacityMethod::cia_box)
    throw InputError("iterate_expand supports cia and cia_box modes");
  CapacityReport report;
  report.method = mode;

  NetworkMatrices mat = build_matrices(net);
  Eigen::VectorXd alpha = opts.alpha ? *opts.alpha : net.alpha();
  Eigen::VectorXd q0 =
      opts.initial_q ? *opts.initial_q : Eigen::VectorXd::Zero(net.size());

  PowerFlowSolution base = solve(net, p, q0);
  if (!base.converged) {
    report.message = "initial operating point did not converge";
    return report;
  }
  QuadraticModel model_up = build_quadratic_model(operating_point_from_pf(base));
  QuadraticModel model_dn = model_up;
  QuadraticModel model_box = model_up;

  double best_volume = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd prev_plus, prev_minus;
  int grow_stall = 0;
  double prev_movement = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= opts.k_max; ++k) {
    Eigen::VectorXd q_plus, q_minus, l_lb, l_ub, v_minus, v_plus;
    std::vector<std::string> bind_up, bind_lo;
    if (mode == CapacityMethod::cia) {
      DispatchResult r1 = solve_p1(net, mat, p, model_up, alpha);
      DispatchResult r2 = solve_p2(net, mat, p, model_dn, alpha);
      if (r1.status != SolveStatus::optimal ||
          r2.status != SolveStatus::optimal) {
        if (k == 1) {
          report.message = r1.status != SolveStatus::optimal ? r1.message
                                                             : r2.message;
          report.feasible = false;
          if (r1.status == SolveStatus::infeasible ||
              r2.status == SolveStatus::infeasible)
            report.message = "infeasible capacity program";
          return report;
        }
        report.warning = "solver failed at iteration " + std::to_string(k) +
                         "; keeping previous verified iterate";
        break;
      }
      q_plus = r1.q;
      q_minus = r2.q;
      l_lb = r1.l_lb.cwiseMin(r2.l_lb);
      l_ub = r1.l_ub.cwiseMax(r2.l_ub);
      v_minus = r2.V_minus;
      v_plus = r1.V_plus;
      bind_up = r1.binding;
      bind_lo = r2.binding;
    } else {
      BoxResult rb = solve_box(net, mat, p, model_box, alpha);
      if (rb.status != SolveStatus::optimal) {
        if (k == 1) {
          report.message = rb.status == SolveStatus::infeasible
                               ? "infeasible capacity program"
                               : rb.message;
          report.feasible = false;
          return report;
        }
        report.warning = "solver failed at iteration " + std::to_string(k) +
                         "; keeping previous verified iterate";
        break;
      }
      q_plus = rb.caps.q_plus;
      q_minus = rb.caps.q_minus;
      l_lb = rb.l_lb;
      l_ub = rb.l_ub;
      v_minus = rb.V_minus;
      v_plus = rb.V_plus;
      bind_up = rb.caps.binding;
    }

    AdmissibilityVerdict up = check_admissible(net, p, q_plus);
    AdmissibilityVerdict dn = check_admissible(net, p, q_minus);
    if (!up.admissible || !dn.admissible) {
      report.warning = "unverified corner at iteration " + std::to_string(k) +
                       "; keeping previous verified iterate";
      break;
    }

    double volume = (q_plus - q_minus).sum();
    double movement = std::numeric_limits<double>::infinity();
    if (prev_plus.size() > 0)
      movement = std::max((q_plus - prev_plus).lpNorm<Eigen::Infinity>(),
                          (q_minus - prev_minus).lpNorm<Eigen::Infinity>());

    if (volume < best_volume - 1e-12) {
      report.warning = "expansion stalled at iteration " + std::to_string(k) +
                       "; keeping best verified iterate";
      break;
    }

    CapacityIteration iter;
    iter.id = k;
    iter.q_head_lo = dn.solution.q_head;
    iter.q_head_hi = up.solution.q_head;
    iter.q_minus = q_minus;
    iter.q_plus = q_plus;
    report.iterations.push_back(iter);

    best_volume = volume;
    report.feasible = true;
    report.nodal.q_minus = q_minus;
    report.nodal.q_plus = q_plus;
    report.nodal.binding = bind_up;
    for (const auto& t : bind_lo)
      if (std::find(bind_up.begin(), bind_up.end(), t) == bind_up.end())
        report.nodal.binding.push_back(t);
    report.q_head_lo = dn.solution.q_head;
    report.q_head_hi = up.solution.q_head;
    report.l_lb = l_lb;
    report.l_ub = l_ub;
    report.V_minus = v_minus;
    report.V_plus = v_plus;

    if (movement < opts.tol) break;
    if (prev_plus.size() > 0 && movement >= prev_movement) {
      if (++grow_stall >= 3) {
        report.warning = "oscillation detected; keeping best verified iterate";
        break;
      }
    } else {
      grow_stall = 0;
    }
    prev_movement = movement;
    prev_plus = q_plus;
    prev_minus = q_minus;

    // Re-anchor the quadratic model at the new corner operating points.
    if (mode == CapacityMethod::cia) {
      model_up = build_quadratic_model(operating_point_from_pf(up.solution));
      model_dn = build_quadratic_model(operating_point_from_pf(dn.solution));
    } else {
      PowerFlowSolution mid = solve(net, p, 0.5 * (q_plus + q_minus));
      if (!mid.converged) break;
      model_box = build_quadratic_model(operating_point_from_pf(mid));
    }
  }
  return report;
}

RelaxationResult solve_relaxation(const RadialNetwork& net,
                                  const Eigen::VectorXd& p,
                                  Direction direction) {
  const int n = net.size();
  // Variable layout: [v, l, P, Q, q].
  const int off_v = 0, off_l = n, off_P = 2 * n, off_Q = 3 * n, off_q = 4 * n;
  ConicProgram prog(5 * n);

  for (int k = 0; k < n; ++k) {
    const BranchSpec& br = net.branch(k);
    double z2 = br.r * br.r + br.x * br.x;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(5 * n);
    row[off_v + k] = 1.0;
    if (net.parent(k) >= 0) row[off_v + net.parent(k)] = -1.0;
    row[off_P + k] = -2.0 * br.r;
    row[off_Q + k] = -2.0 * br.x;
    row[off_l + k] = z2;
    prog.add_equality(row, net.parent(k) < 0 ? net.v0() : 0.0);

    row = Eigen::VectorXd::Zero(5 * n);
    row[off_P + k] = 1.0;
    for (int h : net.children(k)) {
      row[off_P + h] = -1.0;
      row[off_l + h] = net.branch(h).r;
    }
    prog.add_equality(row, p[k]);

    row = Eigen::VectorXd::Zero(5 * n);
    row[off_Q + k] = 1.0;
    row[off_q + k] = -1.0;
    for (int h : net.children(k)) {
      row[off_Q + h] = -1.0;
      row[off_l + h] = net.branch(h).x;
    }
    prog.add_equality(row, 0.0);

    RotatedCone cone;
    cone.U.setZero(2, 5 * n);
    cone.U(0, off_P + k) = 1.0;
    cone.U(1, off_Q + k) = 1.0;
    cone.u0.setZero(2);
    cone.w = Eigen::VectorXd::Zero(5 * n);
    cone.w[off_l + k] = 1.0;
    cone.w0 = 0.0;
    cone.z = Eigen::VectorXd::Zero(5 * n);
    cone.z[off_v + k] = 1.0;
    cone.z0 = 0.0;
    prog.add_rotated_cone(std::move(cone));
  }

  const Eigen::VectorXd vmin = net.v_min(), vmax = net.v_max();
  const Eigen::VectorXd lmax = net.l_max();
  const Eigen::VectorXd qmin = net.q_min(), qmax = net.q_max();
  for (int k = 0; k < n; ++k) {
    prog.add_lower_bound(off_v + k, vmin[k]);
    prog.add_upper_bound(off_v + k, vmax[k]);
    prog.add_lower_bound(off_l + k, 0.0);
    prog.add_upper_bound(off_l + k, lmax[k]);
    if (qmax[k] - qmin[k] <= kDegenerateQ) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(5 * n);
      row[off_q + k] = 1.0;
      prog.add_equality(row, qmin[k]);
    } else {
      prog.add_lower_bound(off_q + k, qmin[k]);
      prog.add_upper_bound(off_q + k, qmax[k]);
    }
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(5 * n);
  c[off_Q + 0] = direction == Direction::maximize ? -1.0 : 1.0;
  prog.set_objective(c);

  ConicSolverOptions sopts;
  PowerFlowSolution pf = solve(net, p, Eigen::VectorXd::Zero(n));
  if (pf.converged) {
    Eigen::VectorXd hint(5 * n);
    hint.segment(off_v, n) = pf.v;
    // Sit slightly above the exact currents so the cones start strict.
    hint.segment(off_l, n) = pf.l.array() + 0.01 * (1.0 + pf.l.array());
    hint.segment(off_P, n) = pf.P;
    hint.segment(off_Q, n) = pf.Q;
    hint.segment(off_q, n).setZero();
    sopts.warm_start = hint;
  }
  ConicSolveResult res = solve(prog, sopts);
  RelaxationResult out;
  out.status = res.status;
  out.message = res.message;
  if (res.status != SolveStatus::optimal) return out;
  out.q_head = res.x[off_Q + 0];
  out.q = res.x.segment(off_q, n);
  return out;
}

std::vector<PqPoint> pq_curve(const RadialNetwork& net,
                              const std::vector<double>& p_levels_mw,
                              CapacityMethod mode) {
  std::vector<PqPoint> out;
  Eigen::VectorXd rated = net.p();
  std::vector<int> turbines;
  for (int k = 0; k < net.size(); ++k)
    if (rated[k] > 0.0) turbines.push_back(k);
  if (turbines.empty()) throw InputError("network has no rated turbines");

  for (double mw : p_levels_mw) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(net.size());
    for (int k : turbines) p[k] = mw / net.base_mva();
    ExpandOptions opts;
    opts.k_max = 8;
    CapacityReport rep = iterate_expand(net, p, mode, opts);
    PqPoint pt;
    pt.p_mw = mw;
    if (!rep.feasible) {
      pt.q_head_plus = std::numeric_limits<double>::quiet_NaN();
      pt.binding_tag = "infeasible";
    } else {
      pt.q_head_plus = rep.q_head_hi;
      const auto& tags = rep.nodal.binding;
      auto has = [&tags](const char* t) {
        return std::find(tags.begin(), tags.end(), t) != tags.end();
      };
      if (has("v_upper") || has("v_lower"))
        pt.binding_tag = "voltage";
      else if (has("device"))
        pt.binding_tag = "device";
      else
        pt.binding_tag = "other";
    }
    out.push_back(pt);
  }
  return out;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str());
}

Scenario scenario_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("scenario JSON parse error: ") + e.what());
  }
  Scenario sc;
  sc.name = j.value("name", "scenario");
  if (!j.contains("p_pattern"))
    throw InputError("scenario requires 'p_pattern'");
  const auto& pat = j["p_pattern"];
  if (pat.is_string()) {
    std::string s = pat.get<std::string>();
    if (s == "all_rated")
      sc.pattern = Scenario::Pattern::all_rated;
    else if (s == "leaves_rated")
      sc.pattern = Scenario::Pattern::leaves_rated;
    else if (s == "inner_rated")
      sc.pattern = Scenario::Pattern::inner_rated;
    else
      throw InputError("unknown p_pattern '" + s + "'");
  } else if (pat.is_array()) {
    sc.pattern = Scenario::Pattern::explicit_p;
    for (const auto& v : pat) sc.explicit_p_mw.push_back(v.get<double>());
  } else {
    throw InputError("p_pattern must be a string or an array");
  }
  if (j.contains("alpha")) {
    Eigen::VectorXd a(j["alpha"].size());
    for (int i = 0; i < a.size(); ++i) a[i] = j["alpha"][i].get<double>();
    sc.alpha = a;
  }
  return sc;
}

Eigen::VectorXd scenario_p(const RadialNetwork& net, const Scenario& scenario) {
  const int n = net.size();
  Eigen::VectorXd rated = net.p();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  switch (scenario.pattern) {
    case Scenario::Pattern::all_rated:
      p = rated;
      break;
    case Scenario::Pattern::leaves_rated:
      for (int k = 0; k < n; ++k)
        if (net.children(k).empty()) p[k] = rated[k];
      break;
    case Scenario::Pattern::inner_rated:
      for (int k = 0; k < n; ++k)
        if (!net.children(k).empty()) p[k] = rated[k];
      break;
    case Scenario::Pattern::explicit_p: {
      if (static_cast<int>(scenario.explicit_p_mw.size()) != n)
        throw InputError("explicit p vector length mismatch");
      // Explicit vectors align with nodes sorted by ascending external id.
      std::vector<int> ids(n);
      for (int k = 0; k < n; ++k) ids[k] = net.external_id(k);
      std::vector<int> sorted = ids;
      std::sort(sorted.begin(), sorted.end());
      std::map<int, double> by_id;
      for (int i = 0; i < n; ++i)
        by_id[sorted[i]] = scenario.explicit_p_mw[i] / net.base_mva();
      for (int k = 0; k < n; ++k) p[k] = by_id[ids[k]];
      break;
    }
  }
  return p;
}

std::vector<CompareEntry> compare(const RadialNetwork& net,
                                  const std::vector<Scenario>& scenarios) {
  std::vector<CompareEntry> out;
  for (const Scenario& sc : scenarios) {
    CompareEntry entry;
    entry.scenario = sc.name;
    Eigen::VectorXd p = scenario_p(net, sc);

    ExpandOptions opts;
    if (sc.alpha) opts.alpha = sc.alpha;
    CapacityReport rep = iterate_expand(net, p, CapacityMethod::cia, opts);
    entry.cia_verified = rep.feasible;
    entry.cia_lo = rep.q_head_lo;
    entry.cia_hi = rep.q_head_hi;

    RelaxationResult rhi = solve_relaxation(net, p, Direction::maximize);
    RelaxationResult rlo = solve_relaxation(net, p, Direction::minimize);
    entry.relax_hi = rhi.q_head;
    entry.relax_lo = rlo.q_head;

    DecentralizedState dhi =
        decentralized_steady_state(net, p, net.q_max(), net.v0());
    DecentralizedState dlo =
        decentralized_steady_state(net, p, net.q_min(), net.v0());
    entry.decen_hi = dhi.q_head;
    entry.decen_lo = dlo.q_head;
    out.push_back(entry);
  }
  return out;
}

VerificationSummary verify_capacity(const RadialNetwork& net,
                                    const Eigen::VectorXd& p,
                                    const CapacityReport& report, int samples,
                                    unsigned long long seed) {
  VerificationSummary summary;
  if (!report.feasible) return summary;
  const int n = net.size();
  for (int s = 0; s < samples; ++s) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * (s + 1));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::VectorXd q(n);
    for (int k = 0; k < n; ++k) {
      double u = uni(rng);
      q[k] = report.nodal.q_minus[k] +
             u * (report.nodal.q_plus[k] - report.nodal.q_minus[k]);
    }
    AdmissibilityVerdict verdict = check_admissible(net, p, q);
    ++summary.samples;
    if (verdict.admissible) ++summary.admissible;
    if (verdict.solution.converged && report.l_lb.size() == n) {
      bool ok = true;
      for (int k = 0; k < n; ++k) {
        if (verdict.solution.l[k] < report.l_lb[k] - 1e-6 ||
            verdict.solution.l[k] > report.l_ub[k] + 1e-6)
          ok = false;
        if (verdict.solution.v[k] < report.V_minus[k] - 1e-6 ||
            verdict.solution.v[k] > report.V_plus[k] + 1e-6)
          ok = false;
      }
      if (ok) ++summary.envelope_ok;
    }
  }
  return summary;
}

} // namespace windcap

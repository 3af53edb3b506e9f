#pragma once

#include "windcap/network.hpp"

#include <optional>
#include <vector>

namespace windcap {

/// Converged nonlinear DistFlow state. Branch flows (P, Q) follow the
/// receiving-end definition: P[k] is the flow on branch k measured at its
/// downstream node, so P[k] = p_k + sum over children (P_h - r_h l_h).
struct PowerFlowSolution {
  Eigen::VectorXd v; // squared node voltages (pu^2), internal order
  Eigen::VectorXd l; // squared branch currents (pu^2)
  Eigen::VectorXd P; // branch active flows (pu)
  Eigen::VectorXd Q; // branch reactive flows (pu)
  double q_head = 0.0; // Q on the head branch (pu)
  double p_head = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0; // final max |delta l| (pu^2)
};

struct PowerFlowOptions {
  double tol = 1e-10; // max |delta l| convergence threshold (pu^2)
  int max_iterations = 100;
  std::optional<Eigen::VectorXd> warm_start_l; // default flat start l = 0
};

PowerFlowSolution solve(const RadialNetwork& net, const Eigen::VectorXd& p,
                        const Eigen::VectorXd& q, double v0_sq,
                        const PowerFlowOptions& opts = {});

inline PowerFlowSolution solve(const RadialNetwork& net,
                               const Eigen::VectorXd& p,
                               const Eigen::VectorXd& q,
                               const PowerFlowOptions& opts = {}) {
  return solve(net, p, q, net.v0(), opts);
}

/// Max absolute residual of the DistFlow equations at a given state.
/// Independent of the sweep's own convergence measure.
double distflow_residual(const RadialNetwork& net, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& q, double v0_sq,
                         const PowerFlowSolution& sol);

enum class ViolationKind { v_low, v_high, l_high, non_convergence };

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int element_id;   // external node id (v_*) or branch to-node id (l_high)
  double magnitude; // amount beyond the limit
};

struct AdmissibilityVerdict {
  bool admissible = false;
  std::vector<Violation> violations;
  PowerFlowSolution solution;
  const Violation* worst() const;
};

/// Admissibility slack in pu^2; absorbs fixed-point truncation.
inline constexpr double kAdmissibilitySlack = 1e-6;

AdmissibilityVerdict check_admissible(const RadialNetwork& net,
                                      const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q);

AdmissibilityVerdict check_admissible(const RadialNetwork& net,
                                      const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q, double v0_sq);

struct SweepGrid {
  int node_a = 0; // external ids
  int node_b = 0;
  Eigen::VectorXd q_a; // grid axis values (pu)
  Eigen::VectorXd q_b;
  std::vector<std::vector<AdmissibilityVerdict>> verdicts; // [ia][ib]
};

/// Dense admissibility scan over two controllable nodes; all other nodes at
/// the base dispatch (zero unless provided).
SweepGrid sweep_2d(const RadialNetwork& net, int node_a, int node_b,
                   std::pair<double, double> q_range_a,
                   std::pair<double, double> q_range_b, int steps,
                   const std::optional<Eigen::VectorXd>& base_q = {});

} // namespace windcap

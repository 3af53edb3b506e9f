#pragma once

#include "windcap/conic.hpp"
#include "windcap/network.hpp"
#include "windcap/powerflow.hpp"

#include <string>
#include <vector>

namespace windcap {

/// Per-branch expansion point for the second-order current model.
struct OperatingPoint {
  Eigen::VectorXd P0; // branch active flows (pu)
  Eigen::VectorXd Q0; // branch reactive flows (pu)
  Eigen::VectorXd v0; // squared voltage at each branch's downstream node (pu^2)
  Eigen::VectorXd l0; // squared branch currents (pu^2)
};

OperatingPoint operating_point_from_pf(const PowerFlowSolution& sol);

/// Gradient and Hessian of l(P, Q, v) = (P^2 + Q^2) / v per branch, plus a
/// factor L with He = L L^T used for cone reformulation.
struct BranchQuadratic {
  Eigen::Vector3d J;
  Eigen::Vector3d J_pos, J_neg; // sign split, zeros in the + part
  Eigen::Matrix3d He;           // positive semi-definite
  Eigen::Matrix3d L;            // He = L L^T
};

struct QuadraticModel {
  OperatingPoint op;
  std::vector<BranchQuadratic> branches;
};

QuadraticModel build_quadratic_model(const OperatingPoint& op);

/// Second-order estimate of the squared branch current at (P, Q, v).
double quad_current(const QuadraticModel& model, int branch, double P,
                    double Q, double v);

enum class CiaMode { single_dispatch, box };

/// Symbolic convex constraint block over decision variables. Layout: N-long
/// variable groups at the offsets below; in single_dispatch mode the q group
/// is shared (off_q_minus == off_q_plus).
struct CiaBlock {
  CiaMode mode = CiaMode::single_dispatch;
  int n = 0; // branches == non-head nodes
  int num_vars = 0;
  int off_q_minus = 0, off_q_plus = 0;
  int off_P_plus = 0, off_P_minus = 0;
  int off_Q_plus = 0, off_Q_minus = 0;
  int off_V_plus = 0, off_V_minus = 0;
  int off_l_lb = 0, off_l_ub = 0;

  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<Eigen::VectorXd> in_rows; // row' x <= rhs
  std::vector<double> in_rhs;
  std::vector<RotatedCone> cones;

  /// Canonical conic form holding exactly the block's constraints (objective
  /// and operational limits are appended by the caller).
  ConicProgram to_program() const;
  std::string debug_dump() const;
};

/// Builds the interval-bound equalities, the affine lower current envelope
/// and the epigraph upper envelope (two linear rows plus eight sign-corner
/// cone rows per branch) around the given operating point.
CiaBlock assemble_bounds(const NetworkMatrices& mat, const QuadraticModel& model,
                         const Eigen::VectorXd& p, CiaMode mode, double v0_sq);

} // namespace windcap

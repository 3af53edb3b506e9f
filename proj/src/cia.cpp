#include "windcap/cia.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace windcap {

OperatingPoint operating_point_from_pf(const PowerFlowSolution& sol) {
  if (!sol.converged)
    throw InputError("operating point requires a converged power flow");
  OperatingPoint op;
  op.P0 = sol.P;
  op.Q0 = sol.Q;
  op.v0 = sol.v;
  op.l0 = sol.l;
  return op;
}

QuadraticModel build_quadratic_model(const OperatingPoint& op) {
  const int n = static_cast<int>(op.P0.size());
  QuadraticModel model;
  model.op = op;
  model.branches.reserve(n);
  for (int k = 0; k < n; ++k) {
    double P = op.P0[k], Q = op.Q0[k], v = op.v0[k];
    if (v <= 0.0) throw InputError("operating point has non-positive voltage");
    BranchQuadratic bq;
    double s2 = P * P + Q * Q;
    bq.J << 2.0 * P / v, 2.0 * Q / v, -s2 / (v * v);
    bq.J_pos = bq.J.cwiseMax(0.0);
    bq.J_neg = bq.J.cwiseMin(0.0);
    bq.He << 2.0 / v, 0.0, -2.0 * P / (v * v),
             0.0, 2.0 / v, -2.0 * Q / (v * v),
             -2.0 * P / (v * v), -2.0 * Q / (v * v), 2.0 * s2 / (v * v * v);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(bq.He);
    if (eig.eigenvalues().minCoeff() < -1e-9)
      throw std::logic_error("current Hessian unexpectedly indefinite");
    Eigen::Vector3d clamped = eig.eigenvalues().cwiseMax(0.0);
    bq.L = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
    model.branches.push_back(bq);
  }
  return model;
}

double quad_current(const QuadraticModel& model, int branch, double P,
                    double Q, double v) {
  const BranchQuadratic& bq = model.branches.at(branch);
  Eigen::Vector3d delta(P - model.op.P0[branch], Q - model.op.Q0[branch],
                        v - model.op.v0[branch]);
  return model.op.l0[branch] + bq.J.dot(delta) +
         0.5 * delta.dot(bq.He * delta);
}

namespace {

// Sparse-ish helper: a row vector over the block's variables.
Eigen::VectorXd zero_row(int num_vars) {
  return Eigen::VectorXd::Zero(num_vars);
}

} // namespace

CiaBlock assemble_bounds(const NetworkMatrices& mat, const QuadraticModel& model,
                         const Eigen::VectorXd& p, CiaMode mode, double v0_sq) {
  const int n = static_cast<int>(mat.C.rows());
  if (p.size() != n || static_cast<int>(model.branches.size()) != n)
    throw InputError("cia assembly dimension mismatch");
  if (mode == CiaMode::box && mat.M_q.minCoeff() < -1e-12)
    throw InputError(
        "box mode requires entrywise nonnegative reactive sensitivity M_q; "
        "strongly capacitive collector networks are not supported");

  CiaBlock blk;
  blk.mode = mode;
  blk.n = n;
  int off = 0;
  blk.off_q_minus = off;
  off += n;
  if (mode == CiaMode::box) {
    blk.off_q_plus = off;
    off += n;
  } else {
    blk.off_q_plus = blk.off_q_minus;
  }
  blk.off_P_plus = off; off += n;
  blk.off_P_minus = off; off += n;
  blk.off_Q_plus = off; off += n;
  blk.off_Q_minus = off; off += n;
  blk.off_V_plus = off; off += n;
  blk.off_V_minus = off; off += n;
  blk.off_l_lb = off; off += n;
  blk.off_l_ub = off; off += n;
  blk.num_vars = off;

  const Eigen::VectorXd cp = mat.C * p;
  const Eigen::VectorXd v_base =
      Eigen::VectorXd::Constant(n, v0_sq) + mat.M_p * p;

  // Interval-bound equalities for P, Q, V.
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = zero_row(blk.num_vars);
    row[blk.off_P_plus + i] = 1.0;
    for (int j = 0; j < n; ++j) row[blk.off_l_lb + j] += mat.D_R(i, j);
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(cp[i]);

    row = zero_row(blk.num_vars);
    row[blk.off_P_minus + i] = 1.0;
    for (int j = 0; j < n; ++j) row[blk.off_l_ub + j] += mat.D_R(i, j);
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(cp[i]);

    row = zero_row(blk.num_vars);
    row[blk.off_Q_plus + i] = 1.0;
    for (int j = 0; j < n; ++j) {
      row[blk.off_q_plus + j] -= mat.C(i, j);
      row[blk.off_l_lb + j] += mat.D_X_pos(i, j);
      row[blk.off_l_ub + j] += mat.D_X_neg(i, j);
    }
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(0.0);

    row = zero_row(blk.num_vars);
    row[blk.off_Q_minus + i] = 1.0;
    for (int j = 0; j < n; ++j) {
      row[blk.off_q_minus + j] -= mat.C(i, j);
      row[blk.off_l_ub + j] += mat.D_X_pos(i, j);
      row[blk.off_l_lb + j] += mat.D_X_neg(i, j);
    }
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(0.0);

    row = zero_row(blk.num_vars);
    row[blk.off_V_plus + i] = 1.0;
    for (int j = 0; j < n; ++j) {
      row[blk.off_q_plus + j] -= mat.M_q(i, j);
      row[blk.off_l_lb + j] += mat.H_pos(i, j);
      row[blk.off_l_ub + j] += mat.H_neg(i, j);
    }
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(v_base[i]);

    row = zero_row(blk.num_vars);
    row[blk.off_V_minus + i] = 1.0;
    for (int j = 0; j < n; ++j) {
      row[blk.off_q_minus + j] -= mat.M_q(i, j);
      row[blk.off_l_ub + j] += mat.H_pos(i, j);
      row[blk.off_l_lb + j] += mat.H_neg(i, j);
    }
    blk.eq_rows.push_back(row);
    blk.eq_rhs.push_back(v_base[i]);
  }

  // Adds coef * (J-split term over delta^+/delta^-) for branch k to row.
  auto add_jterm = [&](Eigen::VectorXd& row, int k, const Eigen::Vector3d& j_up,
                       const Eigen::Vector3d& j_dn, double coef,
                       double& const_accum) {
    // j_up pairs with delta^+, j_dn with delta^-.
    row[blk.off_P_plus + k] += coef * j_up[0];
    row[blk.off_Q_plus + k] += coef * j_up[1];
    row[blk.off_V_plus + k] += coef * j_up[2];
    row[blk.off_P_minus + k] += coef * j_dn[0];
    row[blk.off_Q_minus + k] += coef * j_dn[1];
    row[blk.off_V_minus + k] += coef * j_dn[2];
    Eigen::Vector3d x0(model.op.P0[k], model.op.Q0[k], model.op.v0[k]);
    const_accum += coef * (j_up + j_dn).dot(x0);
  };

  for (int k = 0; k < n; ++k) {
    const BranchQuadratic& bq = model.branches[k];
    const double l0 = model.op.l0[k];

    // Lower envelope: l_lb = l0 + J+' delta^- + J-' delta^+, then l_lb >= 0.
    {
      Eigen::VectorXd row = zero_row(blk.num_vars);
      row[blk.off_l_lb + k] = 1.0;
      double shift = 0.0;
      add_jterm(row, k, -bq.J_neg, -bq.J_pos, 1.0, shift);
      // row: l_lb - J+' x^- - J-' x^+ = l0 - (J+ + J-)' x0; shift carries the
      // constant moved to the rhs.
      blk.eq_rows.push_back(row);
      blk.eq_rhs.push_back(l0 + shift);
      // No l_lb >= 0 clip: the affine under-estimator stays a valid lower
      // bound when negative, while the clip can empty the interior once the
      // corners push the envelope to zero.

      Eigen::VectorXd order = zero_row(blk.num_vars);
      order[blk.off_l_lb + k] = 1.0; // l_lb <= l_ub
      order[blk.off_l_ub + k] = -1.0;
      blk.in_rows.push_back(order);
      blk.in_rhs.push_back(0.0);
    }

    // Upper envelope, linear part: l_ub >= l0 +- 2 (J+' delta^+ + J-' delta^-).
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd row = zero_row(blk.num_vars);
      row[blk.off_l_ub + k] = -1.0;
      double shift = 0.0;
      add_jterm(row, k, 2.0 * sign * bq.J_pos, 2.0 * sign * bq.J_neg, 1.0,
                shift);
      blk.in_rows.push_back(row);
      blk.in_rhs.push_back(-l0 + shift);
    }

    // Upper envelope, quadratic part: one rotated cone per sign corner,
    // ||L' delta_c||^2 <= l_ub - l0.
    Eigen::Matrix3d Lt = bq.L.transpose();
    for (int corner = 0; corner < 8; ++corner) {
      RotatedCone cone;
      cone.U.setZero(3, blk.num_vars);
      cone.u0.setZero(3);
      Eigen::Vector3d x0(model.op.P0[k], model.op.Q0[k], model.op.v0[k]);
      for (int comp = 0; comp < 3; ++comp) {
        bool plus = (corner >> comp) & 1;
        int base = comp == 0 ? (plus ? blk.off_P_plus : blk.off_P_minus)
                 : comp == 1 ? (plus ? blk.off_Q_plus : blk.off_Q_minus)
                             : (plus ? blk.off_V_plus : blk.off_V_minus);
        for (int r = 0; r < 3; ++r) cone.U(r, base + k) += Lt(r, comp);
      }
      cone.u0 = -Lt * x0;
      cone.w = zero_row(blk.num_vars);
      cone.w[blk.off_l_ub + k] = 1.0;
      cone.w0 = -l0;
      cone.z = zero_row(blk.num_vars);
      cone.z0 = 1.0;
      blk.cones.push_back(std::move(cone));
    }
  }
  return blk;
}

ConicProgram CiaBlock::to_program() const {
  ConicProgram prog(num_vars);
  for (size_t i = 0; i < eq_rows.size(); ++i)
    prog.add_equality(eq_rows[i], eq_rhs[i]);
  for (size_t i = 0; i < in_rows.size(); ++i)
    prog.add_inequality(in_rows[i], in_rhs[i]);
  for (const RotatedCone& cone : cones) prog.add_rotated_cone(cone);
  return prog;
}

std::string CiaBlock::debug_dump() const {
  std::ostringstream out;
  out << "CiaBlock mode="
      << (mode == CiaMode::box ? "box" : "single_dispatch") << " n=" << n
      << " vars=" << num_vars << "\n";
  auto print_rows = [&](const char* tag,
                        const std::vector<Eigen::VectorXd>& rows,
                        const std::vector<double>& rhs, const char* rel) {
    for (size_t i = 0; i < rows.size(); ++i) {
      out << tag << "[" << i << "]:";
      for (int j = 0; j < rows[i].size(); ++j)
        if (rows[i][j] != 0.0) out << " " << rows[i][j] << "*x" << j;
      out << " " << rel << " " << rhs[i] << "\n";
    }
  };
  print_rows("eq", eq_rows, eq_rhs, "=");
  print_rows("in", in_rows, in_rhs, "<=");
  out << "cones=" << cones.size() << " (rotated, 8 sign corners per branch)\n";
  return out.str();
}

} // namespace windcap

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace windcap {

/// ||U x + u0||^2 <= (w' x + w0) (z' x + z0) with both right-hand factors
/// nonnegative.
struct RotatedCone {
  Eigen::MatrixXd U;
  Eigen::VectorXd u0;
  Eigen::VectorXd w;
  double w0 = 0.0;
  Eigen::VectorXd z;
  double z0 = 0.0;
};

/// Solver-agnostic convex program in canonical form:
///   minimize c' x
///   s.t.     Aeq x = beq
///            Ain x <= bin
///            rotated-cone constraints.
class ConicProgram {
public:
  explicit ConicProgram(int num_vars);

  int num_vars() const { return n_; }
  void set_objective(const Eigen::VectorXd& c);
  void add_equality(const Eigen::VectorXd& row, double rhs);
  void add_inequality(const Eigen::VectorXd& row, double rhs); // row' x <= rhs
  void add_lower_bound(int var, double lo);                    // x[var] >= lo
  void add_upper_bound(int var, double hi);
  void add_rotated_cone(RotatedCone cone);

  const Eigen::VectorXd& objective() const { return c_; }
  Eigen::MatrixXd equality_matrix() const;
  Eigen::VectorXd equality_rhs() const;
  Eigen::MatrixXd inequality_matrix() const;
  Eigen::VectorXd inequality_rhs() const;
  const std::vector<RotatedCone>& cones() const { return cones_; }
  int num_equalities() const { return static_cast<int>(eq_rows_.size()); }
  int num_inequalities() const { return static_cast<int>(in_rows_.size()); }

private:
  int n_;
  Eigen::VectorXd c_;
  std::vector<Eigen::VectorXd> eq_rows_;
  std::vector<double> eq_rhs_;
  std::vector<Eigen::VectorXd> in_rows_;
  std::vector<double> in_rhs_;
  std::vector<RotatedCone> cones_;
};

enum class SolveStatus { optimal, infeasible, numerical_failure };

const char* to_string(SolveStatus status);

struct ConicSolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;
  double objective = 0.0;
  int newton_iterations = 0;
  std::string message;
};

struct ConicSolverOptions {
  double tol = 1e-8;        // target duality gap (absolute, on scaled problem)
  double barrier_mu = 20.0; // barrier parameter growth factor
  int max_newton_per_center = 600;
  /// Starting guess; projected onto the equality constraints. A guess near
  /// the feasible region keeps the phase-I search short.
  std::optional<Eigen::VectorXd> warm_start;
};

/// Primal barrier interior-point method (phase-I feasibility search followed
/// by a phase-II path following). Deterministic for fixed inputs.
ConicSolveResult solve(const ConicProgram& prog,
                       const ConicSolverOptions& opts = {});

} // namespace windcap

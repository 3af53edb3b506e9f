#include "windcap/conic.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace windcap {

ConicProgram::ConicProgram(int num_vars) : n_(num_vars) {
  c_ = Eigen::VectorXd::Zero(n_);
}

void ConicProgram::set_objective(const Eigen::VectorXd& c) {
  if (c.size() != n_) throw std::invalid_argument("objective dimension mismatch");
  c_ = c;
}

void ConicProgram::add_equality(const Eigen::VectorXd& row, double rhs) {
  if (row.size() != n_) throw std::invalid_argument("equality dimension mismatch");
  eq_rows_.push_back(row);
  eq_rhs_.push_back(rhs);
}

void ConicProgram::add_inequality(const Eigen::VectorXd& row, double rhs) {
  if (row.size() != n_) throw std::invalid_argument("inequality dimension mismatch");
  in_rows_.push_back(row);
  in_rhs_.push_back(rhs);
}

void ConicProgram::add_lower_bound(int var, double lo) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
  row[var] = -1.0;
  add_inequality(row, -lo);
}

void ConicProgram::add_upper_bound(int var, double hi) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
  row[var] = 1.0;
  add_inequality(row, hi);
}

void ConicProgram::add_rotated_cone(RotatedCone cone) {
  if (cone.U.cols() != n_ || cone.w.size() != n_ || cone.z.size() != n_ ||
      cone.U.rows() != cone.u0.size())
    throw std::invalid_argument("cone dimension mismatch");
  cones_.push_back(std::move(cone));
}

Eigen::MatrixXd ConicProgram::equality_matrix() const {
  Eigen::MatrixXd A(eq_rows_.size(), n_);
  for (size_t i = 0; i < eq_rows_.size(); ++i) A.row(i) = eq_rows_[i];
  return A;
}

Eigen::VectorXd ConicProgram::equality_rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), eq_rhs_.size());
}

Eigen::MatrixXd ConicProgram::inequality_matrix() const {
  Eigen::MatrixXd A(in_rows_.size(), n_);
  for (size_t i = 0; i < in_rows_.size(); ++i) A.row(i) = in_rows_[i];
  return A;
}

Eigen::VectorXd ConicProgram::inequality_rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(in_rhs_.data(), in_rhs_.size());
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

namespace {

// Standard second-order cone ||F x + g|| <= a' x + b.
struct Soc {
  Eigen::MatrixXd F;
  Eigen::VectorXd g;
  Eigen::VectorXd a;
  double b;
};

struct BarrierProblem {
  int n = 0;
  Eigen::VectorXd c;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  std::vector<Eigen::VectorXd> lin_a; // a' x <= b
  std::vector<double> lin_b;
  std::vector<Soc> socs;

  double barrier_param() const {
    return static_cast<double>(lin_a.size()) + 2.0 * socs.size();
  }
};

bool strictly_feasible(const BarrierProblem& bp, const Eigen::VectorXd& x) {
  for (size_t i = 0; i < bp.lin_a.size(); ++i)
    if (bp.lin_b[i] - bp.lin_a[i].dot(x) <= 0.0) return false;
  for (const Soc& soc : bp.socs) {
    double alpha = soc.a.dot(x) + soc.b;
    if (alpha <= 0.0) return false;
    Eigen::VectorXd u = soc.F * x + soc.g;
    if (alpha * alpha - u.squaredNorm() <= 0.0) return false;
  }
  return true;
}

double barrier_value(const BarrierProblem& bp, const Eigen::VectorXd& x) {
  double phi = 0.0;
  for (size_t i = 0; i < bp.lin_a.size(); ++i)
    phi -= std::log(bp.lin_b[i] - bp.lin_a[i].dot(x));
  for (const Soc& soc : bp.socs) {
    double alpha = soc.a.dot(x) + soc.b;
    Eigen::VectorXd u = soc.F * x + soc.g;
    phi -= std::log(alpha * alpha - u.squaredNorm());
  }
  return phi;
}

void barrier_derivatives(const BarrierProblem& bp, const Eigen::VectorXd& x,
                         Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  grad.setZero(bp.n);
  hess.setZero(bp.n, bp.n);
  for (size_t i = 0; i < bp.lin_a.size(); ++i) {
    double s = bp.lin_b[i] - bp.lin_a[i].dot(x);
    grad += bp.lin_a[i] / s;
    hess += (bp.lin_a[i] * bp.lin_a[i].transpose()) / (s * s);
  }
  for (const Soc& soc : bp.socs) {
    double alpha = soc.a.dot(x) + soc.b;
    Eigen::VectorXd u = soc.F * x + soc.g;
    double f = alpha * alpha - u.squaredNorm();
    Eigen::VectorXd df = 2.0 * alpha * soc.a - 2.0 * soc.F.transpose() * u;
    grad -= df / f;
    hess += (df * df.transpose()) / (f * f);
    hess -= (2.0 / f) * (soc.a * soc.a.transpose());
    hess += (2.0 / f) * (soc.F.transpose() * soc.F);
  }
}

// Equality-constrained Newton centering of t c'x + phi(x). Returns false on
// iteration-budget exhaustion or a stalled line search far from the center.
bool center(const BarrierProblem& bp, double t, Eigen::VectorXd& x,
            int& newton_count, const ConicSolverOptions& opts,
            const std::function<bool(const Eigen::VectorXd&)>& early_exit) {
  const int n = bp.n;
  const int m = static_cast<int>(bp.Aeq.rows());
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  double prev_dec2 = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_newton_per_center; ++it) {
    barrier_derivatives(bp, x, grad, hess);
    Eigen::VectorXd psi_grad = t * bp.c + grad;

    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -psi_grad;
    if (m > 0) rhs.tail(m) = bp.beq - bp.Aeq * x;

    // Unregularized solve first; slack scales differ by many orders of
    // magnitude, so any blanket diagonal shift distorts the flat directions.
    // Escalate only when the factorization returns a non-descent direction.
    Eigen::VectorXd dx;
    double decrement2 = -1.0;
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
      kkt.topLeftCorner(n, n) = hess;
      if (reg > 0.0) kkt.topLeftCorner(n, n).diagonal().array() += reg;
      if (m > 0) {
        kkt.topRightCorner(n, m) = bp.Aeq.transpose();
        kkt.bottomLeftCorner(m, n) = bp.Aeq;
      }
      Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
      dx = sol.head(n);
      decrement2 = -psi_grad.dot(dx);
      if (std::isfinite(decrement2) && decrement2 > 0.0) break;
      reg = reg == 0.0 ? 1e-12 * std::max(1.0, hess.diagonal().maxCoeff())
                       : reg * 100.0;
    }
    ++newton_count;
    // A non-descent direction after steady progress means the decrement hit
    // the floating-point noise floor for this t: accept the point as centered.
    bool at_noise_floor = prev_dec2 < 10.0;
    if (!std::isfinite(decrement2)) return at_noise_floor;
    if (decrement2 <= 0.0) return at_noise_floor || decrement2 > -1e-9;
    prev_dec2 = decrement2;
    // Approximate centering suffices for path following; the achievable
    // decrement floor grows with t through rounding in the gradient.
    double center_tol = std::min(1e-3, 1e-9 * (1.0 + t));
    if (decrement2 / 2.0 < center_tol) return true;

    double psi0 = t * bp.c.dot(x) + barrier_value(bp, x);
    // Fraction-to-boundary: start the backtracking just inside the largest
    // feasible step instead of halving down from 1.
    double step_max = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < bp.lin_a.size(); ++i) {
      double d = bp.lin_a[i].dot(dx);
      if (d > 0.0)
        step_max = std::min(step_max, (bp.lin_b[i] - bp.lin_a[i].dot(x)) / d);
    }
    for (const Soc& soc : bp.socs) {
      double alpha = soc.a.dot(x) + soc.b;
      double da = soc.a.dot(dx);
      Eigen::VectorXd u = soc.F * x + soc.g;
      Eigen::VectorXd du = soc.F * dx;
      double qa = da * da - du.squaredNorm();
      double qb = 2.0 * (alpha * da - u.dot(du));
      double qc = alpha * alpha - u.squaredNorm();
      // Smallest positive root of qa s^2 + qb s + qc = 0 (qc > 0 inside).
      double root = std::numeric_limits<double>::infinity();
      double disc = qb * qb - 4.0 * qa * qc;
      if (std::abs(qa) < 1e-300) {
        if (qb < 0.0) root = -qc / qb;
      } else if (qa < 0.0) {
        root = (-qb - std::sqrt(disc)) / (2.0 * qa);
      } else if (disc >= 0.0 && qb < 0.0) {
        root = (-qb - std::sqrt(disc)) / (2.0 * qa);
      }
      if (root > 0.0) step_max = std::min(step_max, root);
      // alpha itself must stay positive.
      if (da < 0.0) step_max = std::min(step_max, -alpha / da);
    }
    double step = std::min(1.0, 0.99 * step_max);
    bool moved = false;
    for (int ls = 0; ls < 70; ++ls) {
      Eigen::VectorXd cand = x + step * dx;
      if (strictly_feasible(bp, cand)) {
        double psi = t * bp.c.dot(cand) + barrier_value(bp, cand);
        if (psi <= psi0 - 0.01 * step * decrement2) {
          x = cand;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) return decrement2 / 2.0 < 1e-4; // stalled; accept if near-centered
    if (early_exit && early_exit(x)) return true;
  }
  return false;
}

// Follows the central path until the duality-gap estimate drops below tol.
bool barrier_solve(const BarrierProblem& bp, Eigen::VectorXd& x,
                   int& newton_count, const ConicSolverOptions& opts,
                   const std::function<bool(const Eigen::VectorXd&)>& early_exit,
                   double t0 = 1.0) {
  double t = t0;
  double m_barrier = std::max(1.0, bp.barrier_param());
  for (int outer = 0; outer < 30; ++outer) {
    if (!center(bp, t, x, newton_count, opts, early_exit)) {
      // Iterates stay strictly feasible; a late-path stall still leaves a
      // near-optimal point. Only hard-fail when the gap is genuinely large.
      double scale = 1.0 + std::abs(bp.c.dot(x));
      return m_barrier / t <= 1e-6 * scale;
    }
    if (early_exit && early_exit(x)) return true;
    double scale = 1.0 + std::abs(bp.c.dot(x));
    if (m_barrier / t <= opts.tol * scale) return true;
    t *= opts.barrier_mu;
  }
  return false;
}

Soc rotated_to_standard(const RotatedCone& rc, int n) {
  // ||u||^2 <= w z, w,z >= 0  <=>  ||(2u, w - z)|| <= w + z.
  Soc soc;
  const int k = static_cast<int>(rc.U.rows());
  soc.F.resize(k + 1, n);
  soc.g.resize(k + 1);
  soc.F.topRows(k) = 2.0 * rc.U;
  soc.g.head(k) = 2.0 * rc.u0;
  soc.F.row(k) = (rc.w - rc.z).transpose();
  soc.g[k] = rc.w0 - rc.z0;
  soc.a = rc.w + rc.z;
  soc.b = rc.w0 + rc.z0;
  return soc;
}

} // namespace

ConicSolveResult solve(const ConicProgram& prog, const ConicSolverOptions& opts) {
  ConicSolveResult result;
  const int n = prog.num_vars();

  BarrierProblem bp;
  bp.n = n;
  double c_scale = std::max(1.0, prog.objective().lpNorm<Eigen::Infinity>());
  bp.c = prog.objective() / c_scale;
  bp.Aeq = prog.equality_matrix();
  bp.beq = prog.equality_rhs();
  for (int i = 0; i < prog.num_inequalities(); ++i) {
    bp.lin_a.push_back(prog.inequality_matrix().row(i).transpose());
    bp.lin_b.push_back(prog.inequality_rhs()[i]);
  }
  for (const RotatedCone& rc : prog.cones())
    bp.socs.push_back(rotated_to_standard(rc, n));

  // Equality-consistent starting point: project the caller's guess (or the
  // origin) onto the equality constraints.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (opts.warm_start && opts.warm_start->size() == n) x = *opts.warm_start;
  if (bp.Aeq.rows() > 0) {
    Eigen::VectorXd residual = bp.beq - bp.Aeq * x;
    x += bp.Aeq.completeOrthogonalDecomposition().solve(residual);
    double res = (bp.Aeq * x - bp.beq).lpNorm<Eigen::Infinity>();
    if (res > 1e-8 * (1.0 + bp.beq.lpNorm<Eigen::Infinity>())) {
      result.status = SolveStatus::infeasible;
      result.message = "inconsistent equality constraints";
      return result;
    }
  }

  // Warm starts often land within ~1e-4 of the feasible set after the
  // equality projection. Repair the handful of violated linear rows with a
  // min-norm correction in the equality null space before resorting to the
  // phase-I search.
  for (int rep = 0; rep < 5 && !strictly_feasible(bp, x); ++rep) {
    double margin = 1e-5 * (1 << rep);
    std::vector<int> tight;
    for (size_t i = 0; i < bp.lin_a.size(); ++i)
      if (bp.lin_b[i] - bp.lin_a[i].dot(x) < margin) tight.push_back((int)i);
    if (tight.empty()) break; // remaining violation sits in a cone
    const int me = (int)bp.Aeq.rows();
    Eigen::MatrixXd A(me + (int)tight.size(), n);
    Eigen::VectorXd b(me + (int)tight.size());
    if (me > 0) {
      A.topRows(me) = bp.Aeq;
      b.head(me).setZero();
    }
    for (size_t j = 0; j < tight.size(); ++j) {
      int i = tight[j];
      A.row(me + (int)j) = bp.lin_a[i].transpose();
      b[me + (int)j] = bp.lin_b[i] - 2.0 * margin - bp.lin_a[i].dot(x);
    }
    Eigen::VectorXd dx = A.completeOrthogonalDecomposition().solve(b);
    if (!dx.allFinite()) break;
    x += dx;
  }

  if (bp.lin_a.empty() && bp.socs.empty()) {
    // Purely linear-equality problem; optimal iff the reduced gradient is zero.
    Eigen::VectorXd proj = bp.c;
    if (bp.Aeq.rows() > 0) {
      Eigen::MatrixXd At = bp.Aeq.transpose();
      proj -= At * At.completeOrthogonalDecomposition().solve(bp.c);
    }
    if (proj.lpNorm<Eigen::Infinity>() > 1e-9) {
      result.status = SolveStatus::numerical_failure;
      result.message = "problem is unbounded without inequality constraints";
      return result;
    }
    result.status = SolveStatus::optimal;
    result.x = x;
    result.objective = prog.objective().dot(x);
    return result;
  }

  int newton = 0;
  if (!strictly_feasible(bp, x)) {
    // Phase I: minimize the worst constraint violation s over (x, s).
    BarrierProblem ph1;
    ph1.n = n + 1;
    ph1.c = Eigen::VectorXd::Zero(n + 1);
    ph1.c[n] = 1.0;
    ph1.Aeq.setZero(bp.Aeq.rows(), n + 1);
    ph1.Aeq.leftCols(n) = bp.Aeq;
    ph1.beq = bp.beq;
    for (size_t i = 0; i < bp.lin_a.size(); ++i) {
      Eigen::VectorXd row(n + 1);
      row.head(n) = bp.lin_a[i];
      row[n] = -1.0;
      ph1.lin_a.push_back(row);
      ph1.lin_b.push_back(bp.lin_b[i]);
    }
    for (const Soc& soc : bp.socs) {
      Soc aug;
      aug.F.setZero(soc.F.rows(), n + 1);
      aug.F.leftCols(n) = soc.F;
      aug.g = soc.g;
      aug.a.setZero(n + 1);
      aug.a.head(n) = soc.a;
      aug.a[n] = 1.0;
      aug.b = soc.b;
      ph1.socs.push_back(aug);
    }
    double s0 = 1.0;
    for (size_t i = 0; i < bp.lin_a.size(); ++i)
      s0 = std::max(s0, bp.lin_a[i].dot(x) - bp.lin_b[i] + 1.0);
    for (const Soc& soc : bp.socs)
      s0 = std::max(s0, (soc.F * x + soc.g).norm() - soc.a.dot(x) - soc.b + 1.0);
    Eigen::VectorXd x1(n + 1);
    x1.head(n) = x;
    x1[n] = s0;

    const double margin = 1e-7;
    auto feasible_enough = [n, margin](const Eigen::VectorXd& y) {
      return y[n] < -margin;
    };
    // Weight the slack objective against the barrier from the start; plain
    // t0 = 1 centers away from a nearly feasible warm start before coming
    // back, which wastes the whole Newton budget.
    double t0 = std::max(1.0, ph1.barrier_param() / std::max(s0, 1.0));
    bool ph1_ok = barrier_solve(ph1, x1, newton, opts, feasible_enough, t0);
    result.newton_iterations = newton;
    if (!feasible_enough(x1)) {
      result.status = ph1_ok ? SolveStatus::infeasible
                             : SolveStatus::numerical_failure;
      result.message = ph1_ok ? "no strictly feasible point found"
                              : "phase-I centering failed";
      return result;
    }
    x = x1.head(n);
  }

  // Warm starts land near the optimum; starting the path at t proportional
  // to the barrier parameter keeps the first center close instead of
  // dragging the iterate to the analytic center and back.
  double t0 = std::max(1.0, bp.barrier_param() /
                                (1.0 + std::abs(bp.c.dot(x))) / 100.0);
  if (!barrier_solve(bp, x, newton, opts, nullptr, t0)) {
    result.newton_iterations = newton;
    result.status = SolveStatus::numerical_failure;
    result.message = "phase-II path following failed";
    result.x = x;
    result.objective = prog.objective().dot(x);
    return result;
  }
  result.newton_iterations = newton;
  result.status = SolveStatus::optimal;
  result.x = x;
  result.objective = prog.objective().dot(x);
  return result;
}

} // namespace windcap

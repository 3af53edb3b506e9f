#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "windcap/conic.hpp"

using namespace windcap;

namespace {

Eigen::VectorXd unit(int n, int i, double s = 1.0) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[i] = s;
  return e;
}

} // namespace

TEST_CASE("bound-constrained LP") {
  // min x0 - 2 x1  s.t.  0 <= x <= 1  ->  x = (0, 1), objective -2.
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d(1.0, -2.0));
  for (int i = 0; i < 2; ++i) {
    prog.add_lower_bound(i, 0.0);
    prog.add_upper_bound(i, 1.0);
  }
  ConicSolveResult res = solve(prog);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(res.x[0] == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("LP with equality coupling") {
  // min x0 + x1  s.t.  x0 + 2 x1 = 4, x >= 0  ->  x = (0, 2).
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d(1.0, 1.0));
  prog.add_equality(Eigen::Vector2d(1.0, 2.0), 4.0);
  prog.add_lower_bound(0, 0.0);
  prog.add_lower_bound(1, 0.0);
  ConicSolveResult res = solve(prog);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("distance minimization through a rotated cone") {
  // min t  s.t.  ||x - (1,2)||^2 <= t * 1, x fixed to (4, 6)  ->  t = 25.
  ConicProgram prog(3); // [x0, x1, t]
  prog.set_objective(unit(3, 2));
  prog.add_equality(unit(3, 0), 4.0);
  prog.add_equality(unit(3, 1), 6.0);
  RotatedCone cone;
  cone.U.setZero(2, 3);
  cone.U(0, 0) = 1.0;
  cone.U(1, 1) = 1.0;
  cone.u0 = Eigen::Vector2d(-1.0, -2.0);
  cone.w = unit(3, 2);
  cone.w0 = 0.0;
  cone.z = Eigen::VectorXd::Zero(3);
  cone.z0 = 1.0;
  prog.add_rotated_cone(cone);
  ConicSolveResult res = solve(prog);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.x[2] == doctest::Approx(25.0).epsilon(1e-5));
}

TEST_CASE("linear objective over a ball") {
  // min 3 x0 + 4 x1  s.t.  ||x||^2 <= 1  ->  x = -(3,4)/5, objective -5.
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d(3.0, 4.0));
  RotatedCone cone;
  cone.U = Eigen::MatrixXd::Identity(2, 2);
  cone.u0 = Eigen::Vector2d::Zero();
  cone.w = Eigen::VectorXd::Zero(2);
  cone.w0 = 1.0;
  cone.z = Eigen::VectorXd::Zero(2);
  cone.z0 = 1.0;
  prog.add_rotated_cone(cone);
  ConicSolveResult res = solve(prog);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(-5.0).epsilon(1e-5));
  CHECK(res.x[0] == doctest::Approx(-0.6).epsilon(1e-4));
  CHECK(res.x[1] == doctest::Approx(-0.8).epsilon(1e-4));
}

TEST_CASE("infeasible boxes are reported as infeasible") {
  ConicProgram prog(1);
  prog.set_objective(unit(1, 0));
  prog.add_lower_bound(0, 1.0);
  prog.add_upper_bound(0, 0.0);
  ConicSolveResult res = solve(prog);
  CHECK(res.status == SolveStatus::infeasible);
}

TEST_CASE("inconsistent equalities are reported as infeasible") {
  ConicProgram prog(1);
  prog.set_objective(unit(1, 0));
  prog.add_equality(unit(1, 0), 1.0);
  prog.add_equality(unit(1, 0), 2.0);
  ConicSolveResult res = solve(prog);
  CHECK(res.status == SolveStatus::infeasible);
}

TEST_CASE("equality-only programs solve by projection") {
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d::Zero());
  prog.add_equality(Eigen::Vector2d(1.0, 1.0), 2.0);
  ConicSolveResult res = solve(prog);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.x.sum() == doctest::Approx(2.0));
}

TEST_CASE("a feasible warm start is honored") {
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d(1.0, 0.0));
  for (int i = 0; i < 2; ++i) {
    prog.add_lower_bound(i, -1.0);
    prog.add_upper_bound(i, 1.0);
  }
  ConicSolverOptions opts;
  opts.warm_start = Eigen::Vector2d(0.5, 0.5);
  ConicSolveResult res = solve(prog, opts);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.x[0] == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("deterministic: repeat solves give identical iterates") {
  ConicProgram prog(2);
  prog.set_objective(Eigen::Vector2d(1.0, 2.0));
  prog.add_lower_bound(0, 0.0);
  prog.add_lower_bound(1, 0.0);
  prog.add_inequality(Eigen::Vector2d(-1.0, -1.0), -1.0); // x0 + x1 >= 1
  ConicSolveResult a = solve(prog);
  ConicSolveResult b = solve(prog);
  REQUIRE(a.status == SolveStatus::optimal);
  CHECK(a.x == b.x); // bitwise equal, not just close
  CHECK(a.newton_iterations == b.newton_iterations);
}

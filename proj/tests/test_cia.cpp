#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "windcap/cia.hpp"
#include "windcap/powerflow.hpp"

#include <random>

using namespace windcap;

namespace {

OperatingPoint single_point(double P, double Q, double v) {
  OperatingPoint op;
  op.P0 = Eigen::VectorXd::Constant(1, P);
  op.Q0 = Eigen::VectorXd::Constant(1, Q);
  op.v0 = Eigen::VectorXd::Constant(1, v);
  op.l0 = Eigen::VectorXd::Constant(1, (P * P + Q * Q) / v);
  return op;
}

} // namespace

TEST_CASE("gradient and Hessian at a hand-computed expansion point") {
  // l(P,Q,v) = (P^2+Q^2)/v at (0.1, 0, 1): dl/dP = 0.2, dl/dQ = 0,
  // dl/dv = -0.01; Hessian rows [2,0,-0.2], [0,2,0], [-0.2,0,0.02].
  QuadraticModel m = build_quadratic_model(single_point(0.1, 0.0, 1.0));
  const BranchQuadratic& bq = m.branches[0];
  CHECK(bq.J[0] == doctest::Approx(0.2));
  CHECK(bq.J[1] == doctest::Approx(0.0));
  CHECK(bq.J[2] == doctest::Approx(-0.01));
  CHECK(bq.He(0, 0) == doctest::Approx(2.0));
  CHECK(bq.He(0, 2) == doctest::Approx(-0.2));
  CHECK(bq.He(2, 2) == doctest::Approx(0.02));
  CHECK((bq.L * bq.L.transpose() - bq.He).norm() < 1e-9);
  CHECK((bq.J_pos + bq.J_neg - bq.J).norm() < 1e-12);
  CHECK(bq.J_pos.minCoeff() >= 0.0);
  CHECK(bq.J_neg.maxCoeff() <= 0.0);
}

TEST_CASE("flat expansion point gives the pure quadratic Hessian") {
  QuadraticModel m = build_quadratic_model(single_point(0.0, 0.0, 1.0));
  Eigen::Matrix3d expect;
  expect << 2, 0, 0, 0, 2, 0, 0, 0, 0;
  CHECK((m.branches[0].He - expect).norm() < 1e-12);
  CHECK(m.branches[0].J.norm() < 1e-12);
}

TEST_CASE("second-order model reproduces l exactly in P and Q") {
  // For fixed v the current function is a quadratic in (P, Q), so the Taylor
  // model is exact along those axes.
  QuadraticModel m = build_quadratic_model(single_point(0.2, -0.1, 1.05));
  for (double dP : {-0.3, 0.0, 0.4})
    for (double dQ : {-0.2, 0.25}) {
      double P = 0.2 + dP, Q = -0.1 + dQ;
      double exact = (P * P + Q * Q) / 1.05;
      CHECK(quad_current(m, 0, P, Q, 1.05) == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("model error in v is third order") {
  QuadraticModel m = build_quadratic_model(single_point(0.3, 0.1, 1.0));
  auto err = [&](double dv) {
    double exact = (0.3 * 0.3 + 0.1 * 0.1) / (1.0 + dv);
    return std::abs(quad_current(m, 0, 0.3, 0.1, 1.0 + dv) - exact);
  };
  // Halving the step shrinks the remainder by about 8x.
  double e1 = err(0.08), e2 = err(0.04);
  CHECK(e1 / e2 > 6.0);
  CHECK(e1 / e2 < 10.0);
}

TEST_CASE("interval equalities of the assembled block match the tangent split") {
  // First-order Taylor under-estimates the jointly convex current function,
  // and the linear/quadratic envelope rows dominate it from above.
  QuadraticModel m = build_quadratic_model(single_point(0.25, -0.15, 0.98));
  const BranchQuadratic& bq = m.branches[0];
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int s = 0; s < 200; ++s) {
    Eigen::Vector3d d(u(rng), u(rng), 0.2 * u(rng));
    double exact = (std::pow(0.25 + d[0], 2) + std::pow(-0.15 + d[1], 2)) /
                   (0.98 + d[2]);
    double l0 = m.op.l0[0];
    double lower = l0 + bq.J.dot(d);
    CHECK(lower <= exact + 1e-12);
    double upper = std::max(l0 + 2.0 * std::abs(bq.J.dot(d)),
                            l0 + (bq.L.transpose() * d).squaredNorm());
    // u + w <= max(2u, 2w) with u the linear and w the curvature half.
    CHECK(l0 + bq.J.dot(d) + 0.5 * d.dot(bq.He * d) <= upper + 1e-12);
  }
}

TEST_CASE("block layout and constraint counts") {
  RadialNetwork net = testing::three_node();
  NetworkMatrices mat = build_matrices(net);
  PowerFlowSolution pf = solve(net, net.p(), Eigen::VectorXd::Zero(2));
  QuadraticModel model = build_quadratic_model(operating_point_from_pf(pf));

  CiaBlock single = assemble_bounds(mat, model, net.p(),
                                    CiaMode::single_dispatch, net.v0());
  CHECK(single.n == 2);
  CHECK(single.off_q_plus == single.off_q_minus);
  CHECK(single.num_vars == 9 * 2);
  CHECK(single.cones.size() == 8 * 2);
  CHECK(single.eq_rows.size() == 7 * 2); // 6 interval rows + lower envelope
  CHECK(single.in_rows.size() == 3 * 2); // ordering + 2 linear upper rows

  CiaBlock box = assemble_bounds(mat, model, net.p(), CiaMode::box, net.v0());
  CHECK(box.off_q_plus != box.off_q_minus);
  CHECK(box.num_vars == 10 * 2);
  CHECK(box.to_program().num_vars() == box.num_vars);
}

TEST_CASE("unconverged operating points are rejected") {
  PowerFlowSolution bad;
  bad.converged = false;
  CHECK_THROWS_AS(operating_point_from_pf(bad), InputError);
}

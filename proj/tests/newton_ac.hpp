#pragma once

// Independent full-AC power-flow oracle in polar coordinates, used only to
// cross-validate the DistFlow sweep. Deliberately shares no code with the
// library: bus-admittance Newton-Raphson with the head node as slack.

#include "windcap/network.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

namespace windcap::testing {

struct NewtonAcResult {
  Eigen::VectorXd v_sq; // squared magnitudes, internal node order
  bool converged = false;
};

inline NewtonAcResult newton_ac(const RadialNetwork& net,
                                const Eigen::VectorXd& p,
                                const Eigen::VectorXd& q, double v0_sq) {
  const int n = net.size();
  using C = std::complex<double>;
  // Ybus over head (index 0) + n nodes (index k+1).
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  for (int k = 0; k < n; ++k) {
    C y = 1.0 / C(net.branch(k).r, net.branch(k).x);
    int a = net.parent(k) + 1, b = k + 1;
    Y(a, a) += y;
    Y(b, b) += y;
    Y(a, b) -= y;
    Y(b, a) -= y;
  }
  Eigen::VectorXd vm = Eigen::VectorXd::Constant(n + 1, std::sqrt(v0_sq));
  Eigen::VectorXd th = Eigen::VectorXd::Zero(n + 1);

  auto injections = [&](Eigen::VectorXd& P, Eigen::VectorXd& Q) {
    P.setZero(n + 1);
    Q.setZero(n + 1);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        double g = Y(i, j).real(), b = Y(i, j).imag();
        double d = th[i] - th[j];
        P[i] += vm[i] * vm[j] * (g * std::cos(d) + b * std::sin(d));
        Q[i] += vm[i] * vm[j] * (g * std::sin(d) - b * std::cos(d));
      }
  };

  NewtonAcResult out;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd Pc, Qc;
    injections(Pc, Qc);
    Eigen::VectorXd mis(2 * n);
    for (int k = 0; k < n; ++k) {
      mis[k] = p[k] - Pc[k + 1];
      mis[n + k] = q[k] - Qc[k + 1];
    }
    if (mis.lpNorm<Eigen::Infinity>() < 1e-12) {
      out.converged = true;
      break;
    }
    // Numerical Jacobian keeps this oracle free of hand-derived formulas.
    Eigen::MatrixXd J(2 * n, 2 * n);
    const double h = 1e-7;
    for (int col = 0; col < 2 * n; ++col) {
      double* var = col < n ? &th[col + 1] : &vm[col - n + 1];
      double save = *var;
      *var = save + h;
      Eigen::VectorXd Pp, Qp;
      injections(Pp, Qp);
      *var = save;
      for (int k = 0; k < n; ++k) {
        J(k, col) = (Pp[k + 1] - Pc[k + 1]) / h;
        J(n + k, col) = (Qp[k + 1] - Qc[k + 1]) / h;
      }
    }
    Eigen::VectorXd step = J.partialPivLu().solve(mis);
    for (int k = 0; k < n; ++k) {
      th[k + 1] += step[k];
      vm[k + 1] += step[n + k];
    }
  }
  out.v_sq.resize(n);
  for (int k = 0; k < n; ++k) out.v_sq[k] = vm[k + 1] * vm[k + 1];
  return out;
}

} // namespace windcap::testing

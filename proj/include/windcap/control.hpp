#pragma once

#include "windcap/capacity.hpp"
#include "windcap/network.hpp"
#include "windcap/powerflow.hpp"

#include <string>
#include <utility>
#include <vector>

namespace windcap {

enum class DisaggMode { cia, grid_agnostic };
const char* to_string(DisaggMode mode);

struct ControllerConfig {
  double kp = 5.0;
  double ki = 2.0;
  double dt = 0.1;        // s
  double v_ref = 1.06;    // PCC target magnitude (pu)
  double sat_lo = 0.0;    // saturation on the total reference (pu)
  double sat_hi = 0.0;
  double anti_windup = 20.0; // back-calculation gain (1/s)
  DisaggMode mode = DisaggMode::cia;
};

/// External grid: piecewise-linear source-voltage schedule behind a series
/// impedance.
struct TheveninGrid {
  std::vector<std::pair<double, double>> v_grid; // (t [s], magnitude [pu])
  double r_th = 0.01; // pu
  double x_th = 0.05;

  double v_at(double t) const;
  void validate() const;
  /// Fault-then-ramp default: 1.00 pu, step to 0.94 pu at t = 5 s, linear
  /// recovery to 1.00 pu over [10 s, 70 s].
  static TheveninGrid default_disturbance();
};

struct PiState {
  double integrator = 0.0;
};

struct PiOutput {
  double q_tg_ref = 0.0;
  bool saturated = false;
  PiState state;
};

PiOutput pi_step(const PiState& state, double v_pcc_meas,
                 const ControllerConfig& cfg);

/// Splits the total reference across turbines proportionally to the active
/// side of their nodal capacities.
Eigen::VectorXd disaggregate(double q_tg_ref, const NodalCapacity& caps);

struct SimStep {
  double t = 0.0;
  double v_grid = 0.0;  // magnitude (pu)
  double v_pcc = 0.0;   // magnitude (pu)
  double q_tg_ref = 0.0;
  double q_head = 0.0;  // physical head-branch flow from the oracle (pu)
  Eigen::VectorXd q;    // per-turbine commands (pu, farm internal order)
  Eigen::VectorXd v;    // squared farm node voltages (pu^2)
  double integrator = 0.0;
  bool saturated = false;
  bool violation = false; // any turbine node outside its voltage limits
  bool settled = false;   // |dv_pcc| < 1e-6 pu over the trailing 10 steps
};

struct SimTrace {
  std::vector<SimStep> steps;
  std::string diagnostic; // nonempty when truncated
  int steady_state_violations() const;
  int any_violations() const;
};

/// Closed-loop quasi-static PCC voltage regulation: PI + saturation +
/// anti-windup, disaggregation within caps, power flow of the farm behind the
/// Thevenin branch per step. Measurement uses the previous step's PCC voltage.
SimTrace simulate(const RadialNetwork& net, const Eigen::VectorXd& p,
                  const NodalCapacity& caps, const TheveninGrid& grid,
                  const ControllerConfig& cfg, double t_end);

struct DecentralizedState {
  Eigen::VectorXd q;
  Eigen::VectorXd v; // squared
  double q_head = 0.0;
  bool converged = false;
  int inner_iterations = 0;
};

/// Local-override fixed point: every turbine tracks its reference unless its
/// terminal voltage hits a limit, in which case it backs off proportionally.
DecentralizedState decentralized_steady_state(const RadialNetwork& net,
                                              const Eigen::VectorXd& p,
                                              const Eigen::VectorXd& q_ref,
                                              double v0_sq);

/// Quasi-static run of the decentralized baseline under a piecewise-linear
/// broadcast schedule (same reference for every turbine).
SimTrace decentralized_sim(const RadialNetwork& net, const Eigen::VectorXd& p,
                           const std::vector<std::pair<double, double>>& broadcast,
                           double dt, double t_end);

double rmse(const SimTrace& trace, double v_ref);

} // namespace windcap

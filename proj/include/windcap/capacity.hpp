#pragma once

#include "windcap/cia.hpp"
#include "windcap/conic.hpp"
#include "windcap/network.hpp"
#include "windcap/powerflow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace windcap {

/// Per-node admissible reactive range [q_minus, q_plus] (pu, internal order).
struct NodalCapacity {
  Eigen::VectorXd q_minus; // <= 0
  Eigen::VectorXd q_plus;  // >= 0
  std::vector<std::string> binding; // active constraint classes at the solve
};

struct DispatchResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd q;        // returned dispatch (pu)
  double q_head_bound = 0;  // guaranteed head-branch bound from the program
  Eigen::VectorXd l_lb, l_ub, V_minus, V_plus; // envelopes at the solution
  std::vector<std::string> binding;
  std::string message;
};

struct BoxResult {
  SolveStatus status = SolveStatus::numerical_failure;
  NodalCapacity caps;
  Eigen::VectorXd l_lb, l_ub, V_minus, V_plus;
  std::string message;
};

/// Upper-capacity program: maximizes the guaranteed head reactive export over
/// dispatches 0 <= q <= q_max, subject to the CIA constraint block.
DispatchResult solve_p1(const RadialNetwork& net, const NetworkMatrices& mat,
                        const Eigen::VectorXd& p, const QuadraticModel& model,
                        const Eigen::VectorXd& alpha);

/// Absorption direction: q_min <= q <= 0, minimizes the guaranteed head
/// import bound.
DispatchResult solve_p2(const RadialNetwork& net, const NetworkMatrices& mat,
                        const Eigen::VectorXd& p, const QuadraticModel& model,
                        const Eigen::VectorXd& alpha);

/// Joint box program: maximizes sum alpha_i (q_i^+ - q_i^-) with coupled
/// corner variables; any dispatch inside the returned box is admissible.
BoxResult solve_box(const RadialNetwork& net, const NetworkMatrices& mat,
                    const Eigen::VectorXd& p, const QuadraticModel& model,
                    const Eigen::VectorXd& alpha);

enum class CapacityMethod { cia, cia_box, relaxation, decentralized };
const char* to_string(CapacityMethod method);

struct CapacityIteration {
  int id = 0;
  double q_head_lo = 0.0; // oracle Q_head at the absorption corner (pu)
  double q_head_hi = 0.0; // oracle Q_head at the export corner (pu)
  Eigen::VectorXd q_minus, q_plus;
};

struct CapacityReport {
  CapacityMethod method = CapacityMethod::cia;
  bool feasible = false;
  NodalCapacity nodal;
  double q_head_lo = 0.0, q_head_hi = 0.0; // oracle-evaluated at the corners
  Eigen::VectorXd l_lb, l_ub, V_minus, V_plus; // envelopes of the final solve
  std::vector<CapacityIteration> iterations;
  std::string warning;
  std::string message;
};

struct ExpandOptions {
  double tol = 1e-4; // stop when max corner movement drops below this (pu)
  int k_max = 20;
  std::optional<Eigen::VectorXd> initial_q; // operating dispatch, default 0
  std::optional<Eigen::VectorXd> alpha;     // priority override
};

/// Iterative expansion: solve, re-anchor the quadratic model at the returned
/// corner operating points, re-solve; keeps the best oracle-verified iterate.
CapacityReport iterate_expand(const RadialNetwork& net, const Eigen::VectorXd& p,
                              CapacityMethod mode, const ExpandOptions& opts = {});

enum class Direction { maximize, minimize };

struct RelaxationResult {
  SolveStatus status = SolveStatus::numerical_failure;
  double q_head = 0.0; // outer bound (pu)
  Eigen::VectorXd q;   // relaxed dispatch, for oracle replay
  std::string message;
};

/// Second-order-cone relaxation of the DistFlow equations (current equality
/// relaxed to l v >= P^2 + Q^2); returns an outer bound on Q_head.
RelaxationResult solve_relaxation(const RadialNetwork& net,
                                  const Eigen::VectorXd& p, Direction direction);

struct PqPoint {
  double p_mw = 0.0;      // per-turbine active level
  double q_head_plus = 0; // oracle Q_head at the export corner (pu)
  std::string binding_tag; // "device" or "voltage" (or "other")
};

std::vector<PqPoint> pq_curve(const RadialNetwork& net,
                              const std::vector<double>& p_levels_mw,
                              CapacityMethod mode);

/// Scenario file: active-power pattern plus optional priority weights.
struct Scenario {
  std::string name;
  enum class Pattern { all_rated, leaves_rated, inner_rated, explicit_p } pattern =
      Pattern::all_rated;
  std::vector<double> explicit_p_mw; // node order as in the network file ids
  std::optional<Eigen::VectorXd> alpha;
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
/// Active injections (pu, internal order) for the scenario pattern.
Eigen::VectorXd scenario_p(const RadialNetwork& net, const Scenario& scenario);

struct CompareEntry {
  std::string scenario;
  double cia_lo = 0, cia_hi = 0;         // oracle-verified corner Q_head (pu)
  double relax_lo = 0, relax_hi = 0;     // outer bounds (pu)
  double decen_lo = 0, decen_hi = 0;     // decentralized achieved Q_head (pu)
  bool cia_verified = false;             // corners oracle-admissible
};

std::vector<CompareEntry> compare(const RadialNetwork& net,
                                  const std::vector<Scenario>& scenarios);

struct VerificationSummary {
  int samples = 0;
  int admissible = 0;
  int envelope_ok = 0; // oracle l within [l_lb, l_ub] and v within [V-, V+]
  double pass_rate() const {
    return samples == 0 ? 1.0 : static_cast<double>(admissible) / samples;
  }
};

/// Uniform Monte Carlo over the nodal box; deterministic seed-per-sample.
VerificationSummary verify_capacity(const RadialNetwork& net,
                                    const Eigen::VectorXd& p,
                                    const CapacityReport& report, int samples,
                                    unsigned long long seed);

} // namespace windcap

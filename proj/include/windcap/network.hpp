#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace windcap {

/// Thrown on invalid input data (files, topology, limits).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Per-node data in pu on the network base. Voltage limits are squared
/// magnitudes (pu^2), matching the DistFlow variable v = |V|^2.
struct NodeSpec {
  int id = 0;           // external node id (head node is id 0, not listed here)
  double p = 0.0;       // active injection, generation positive (pu)
  double q_min = 0.0;   // device reactive limits (pu), q_min <= 0 <= q_max
  double q_max = 0.0;
  double v_min = 0.81;  // squared-voltage limits (pu^2)
  double v_max = 1.21;
  double alpha = 1.0;   // nonnegative priority weight
};

struct BranchSpec {
  int from_node = 0;  // closer to the head node
  int to_node = 0;
  double r = 0.0;     // pu
  double x = 0.0;     // pu
  double l_max = 0.0; // squared-current limit (pu^2)
};

/// Immutable radial collector network. Nodes are re-indexed internally by BFS
/// from the head node so that every parent precedes its children; branch k
/// is the unique branch ending at (internal) node k.
class RadialNetwork {
public:
  RadialNetwork(double base_mva, double v0_sq, std::vector<NodeSpec> nodes,
                std::vector<BranchSpec> branches);

  /// Parses the network JSON schema (see README). Magnitude limits in the
  /// file (v0, v_min_pu, v_max_pu, l_max_pu) are squared on load.
  static RadialNetwork load(const std::string& path);
  static RadialNetwork from_json_text(const std::string& text);

  int size() const { return static_cast<int>(nodes_.size()); } // N (non-head)
  double base_mva() const { return base_mva_; }
  double v0() const { return v0_; } // squared head voltage (pu^2)

  const NodeSpec& node(int k) const { return nodes_[k]; }
  const BranchSpec& branch(int k) const { return branches_[k]; }
  /// Internal index of the parent node of node k; -1 when the parent is the
  /// head node.
  int parent(int k) const { return parent_[k]; }
  const std::vector<int>& children(int k) const { return children_[k]; }

  int internal_index(int external_id) const;
  int external_id(int k) const { return nodes_[k].id; }
  bool has_node(int external_id) const;

  Eigen::VectorXd p() const;
  Eigen::VectorXd q_min() const;
  Eigen::VectorXd q_max() const;
  Eigen::VectorXd v_min() const;
  Eigen::VectorXd v_max() const;
  Eigen::VectorXd l_max() const;
  Eigen::VectorXd alpha() const;

  /// Copy with a different squared head voltage (pu^2).
  RadialNetwork with_v0(double v0_sq) const;

private:
  double base_mva_;
  double v0_;
  std::vector<NodeSpec> nodes_;      // internal (topological) order
  std::vector<BranchSpec> branches_; // branch k ends at node k
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
};

/// Topology/impedance matrices of the compact DistFlow matrix model.
/// All entries follow the internal node/branch ordering of RadialNetwork.
struct NetworkMatrices {
  Eigen::MatrixXd B;   // (N+1) x N incidence, row 0 = head node
  Eigen::MatrixXd A;   // strictly upper triangular under topological order
  Eigen::MatrixXd C;   // (I - A)^-1, 0/1 path indicator
  Eigen::MatrixXd D_R; // C * A * R
  Eigen::MatrixXd D_X;
  Eigen::MatrixXd M_p; // 2 C^T R C
  Eigen::MatrixXd M_q; // 2 C^T X C
  Eigen::MatrixXd H;   // C^T (2 (R D_R + X D_X) + Z^2)
  // Sign splits; zeros live in the + part.
  Eigen::MatrixXd D_X_pos, D_X_neg;
  Eigen::MatrixXd H_pos, H_neg;
};

NetworkMatrices build_matrices(const RadialNetwork& net);

} // namespace windcap

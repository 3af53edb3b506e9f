#pragma once

#include "windcap/network.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace windcap::testing {

inline const char* kThreeNodeJson = R"({
  "name": "three_node",
  "base_mva": 1.0,
  "v0": 1.0,
  "nodes": [
    {"id": 2, "p_mw": 0.005, "q_min_mvar": -1.0, "q_max_mvar": 1.0, "v_min_pu": 0.9, "v_max_pu": 1.1},
    {"id": 3, "p_mw": 0.01, "q_min_mvar": -1.0, "q_max_mvar": 1.0, "v_min_pu": 0.9, "v_max_pu": 1.1}
  ],
  "branches": [
    {"from": 0, "to": 2, "r_pu": 0.228, "x_pu": 0.092, "l_max_pu": 10.0},
    {"from": 2, "to": 3, "r_pu": 0.228, "x_pu": 0.092, "l_max_pu": 10.0}
  ]
})";

inline RadialNetwork three_node() {
  return RadialNetwork::from_json_text(kThreeNodeJson);
}

// Random radial network with n non-head nodes, modest impedances and small
// injections so the sweep always converges. Node ids are shuffled so tests
// also exercise the internal re-indexing.
inline RadialNetwork random_radial(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> rz(0.005, 0.05);
  std::uniform_real_distribution<double> rp(-0.05, 0.1);
  std::vector<NodeSpec> nodes(n);
  std::vector<BranchSpec> branches(n);
  std::vector<int> ids(n);
  for (int k = 0; k < n; ++k) ids[k] = k + 1;
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int k = 0; k < n; ++k) {
    nodes[k].id = ids[k];
    nodes[k].p = rp(rng);
    nodes[k].q_min = -0.1;
    nodes[k].q_max = 0.1;
    nodes[k].v_min = 0.25; // wide limits: these nets probe model identities
    nodes[k].v_max = 4.0;
    branches[k].from_node =
        k == 0 ? 0 : ids[std::uniform_int_distribution<int>(0, k - 1)(rng)];
    branches[k].to_node = ids[k];
    branches[k].r = rz(rng);
    branches[k].x = rz(rng);
    branches[k].l_max = 1e6;
  }
  return RadialNetwork(1.0, 1.0, nodes, branches);
}

inline Eigen::VectorXd random_q(std::mt19937_64& rng, const RadialNetwork& net) {
  Eigen::VectorXd q(net.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < net.size(); ++k) {
    double lo = net.node(k).q_min, hi = net.node(k).q_max;
    q[k] = lo + u(rng) * (hi - lo);
  }
  return q;
}

} // namespace windcap::testing

#include "windcap/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

namespace windcap {

namespace {

using json = nlohmann::json;

double get_num(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw InputError(std::string("missing or non-numeric field '") + key + "'");
  return j.at(key).get<double>();
}

} // namespace

RadialNetwork::RadialNetwork(double base_mva, double v0_sq,
                             std::vector<NodeSpec> nodes,
                             std::vector<BranchSpec> branches)
    : base_mva_(base_mva), v0_(v0_sq) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw InputError("network has no nodes");
  if (base_mva <= 0.0) throw InputError("base_mva must be positive");
  if (v0_sq <= 0.0) throw InputError("head voltage v0 must be positive");
  if (static_cast<int>(branches.size()) != n)
    throw InputError("non-radial: expected " + std::to_string(n) +
                     " branches for " + std::to_string(n) + " nodes, got " +
                     std::to_string(branches.size()));

  std::map<int, int> pos; // external id -> position in input vector
  for (int i = 0; i < n; ++i) {
    const NodeSpec& nd = nodes[i];
    if (nd.id == 0) throw InputError("node id 0 is reserved for the head node");
    if (!pos.emplace(nd.id, i).second)
      throw InputError("duplicate node id " + std::to_string(nd.id));
    if (!(nd.v_min > 0.0) || !(nd.v_min < nd.v_max))
      throw InputError("node " + std::to_string(nd.id) +
                       ": voltage limits must satisfy 0 < v_min < v_max");
    if (nd.q_min > 0.0 || nd.q_max < 0.0)
      throw InputError("node " + std::to_string(nd.id) +
                       ": device limits must satisfy q_min <= 0 <= q_max");
    if (nd.alpha < 0.0)
      throw InputError("node " + std::to_string(nd.id) + ": alpha must be >= 0");
  }

  // Adjacency over external ids; every branch endpoint must exist.
  std::map<int, std::vector<int>> adj; // node id -> incident branch indices
  std::vector<int> branch_of_node(n, -1);
  for (int b = 0; b < n; ++b) {
    const BranchSpec& br = branches[b];
    if (br.r < 0.0)
      throw InputError("branch " + std::to_string(br.from_node) + "->" +
                       std::to_string(br.to_node) + ": negative resistance");
    if (br.r == 0.0 && br.x == 0.0)
      throw InputError("degenerate branch " + std::to_string(br.from_node) +
                       "->" + std::to_string(br.to_node) + ": zero impedance");
    if (br.l_max < 0.0)
      throw InputError("branch " + std::to_string(br.from_node) + "->" +
                       std::to_string(br.to_node) + ": negative current limit");
    if (br.from_node != 0 && !pos.count(br.from_node))
      throw InputError("branch references unknown node " +
                       std::to_string(br.from_node));
    if (!pos.count(br.to_node))
      throw InputError("branch references unknown node " +
                       std::to_string(br.to_node));
    int& slot = branch_of_node[pos.at(br.to_node)];
    if (slot != -1)
      throw InputError("non-radial: node " + std::to_string(br.to_node) +
                       " is the to-node of more than one branch");
    slot = b;
    adj[br.from_node].push_back(b);
    adj[br.to_node].push_back(b);
  }
  for (int i = 0; i < n; ++i)
    if (branch_of_node[i] == -1)
      throw InputError("non-radial: node " + std::to_string(nodes[i].id) +
                       " is not the to-node of any branch");

  // BFS from the head node establishes the internal topological order and
  // proves connectivity (N branches + connected => tree).
  std::vector<int> order;
  std::vector<char> visited_branch(n, 0);
  std::map<int, char> visited_node;
  visited_node[0] = 1;
  std::queue<int> frontier;
  frontier.push(0);
  std::map<int, int> internal; // external id -> internal index
  while (!frontier.empty()) {
    int at = frontier.front();
    frontier.pop();
    auto it = adj.find(at);
    if (it == adj.end()) continue;
    for (int b : it->second) {
      if (visited_branch[b]) continue;
      visited_branch[b] = 1;
      const BranchSpec& br = branches[b];
      int other = (br.from_node == at) ? br.to_node : br.from_node;
      if (visited_node.count(other))
        throw InputError("non-radial: cycle through node " +
                         std::to_string(other));
      if (br.to_node != other)
        throw InputError("branch " + std::to_string(br.from_node) + "->" +
                         std::to_string(br.to_node) +
                         ": from-node must be closer to the head");
      visited_node[other] = 1;
      internal[other] = static_cast<int>(order.size());
      order.push_back(pos.at(other));
      frontier.push(other);
    }
  }
  if (static_cast<int>(order.size()) != n)
    throw InputError("non-radial: network is not connected to the head node");

  nodes_.reserve(n);
  branches_.reserve(n);
  parent_.resize(n);
  children_.resize(n);
  for (int k = 0; k < n; ++k) {
    const NodeSpec& nd = nodes[order[k]];
    nodes_.push_back(nd);
    branches_.push_back(branches[branch_of_node[order[k]]]);
    int from = branches_.back().from_node;
    parent_[k] = (from == 0) ? -1 : internal.at(from);
    if (parent_[k] >= 0) children_[parent_[k]].push_back(k);
  }
}

RadialNetwork RadialNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open network file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

RadialNetwork RadialNetwork::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("network JSON parse error: ") + e.what());
  }
  double base = get_num(j, "base_mva");
  if (base <= 0.0) throw InputError("base_mva must be positive");
  double v0_mag = get_num(j, "v0");
  if (!j.contains("nodes") || !j["nodes"].is_array() ||
      !j.contains("branches") || !j["branches"].is_array())
    throw InputError("network JSON requires 'nodes' and 'branches' arrays");

  std::vector<NodeSpec> nodes;
  for (const auto& jn : j["nodes"]) {
    NodeSpec nd;
    nd.id = static_cast<int>(get_num(jn, "id"));
    nd.p = get_num(jn, "p_mw") / base;
    nd.q_min = get_num(jn, "q_min_mvar") / base;
    nd.q_max = get_num(jn, "q_max_mvar") / base;
    double vmin = get_num(jn, "v_min_pu");
    double vmax = get_num(jn, "v_max_pu");
    nd.v_min = vmin * vmin;
    nd.v_max = vmax * vmax;
    nd.alpha = jn.contains("alpha") ? get_num(jn, "alpha") : 1.0;
    nodes.push_back(nd);
  }
  std::vector<BranchSpec> branches;
  for (const auto& jb : j["branches"]) {
    BranchSpec br;
    br.from_node = static_cast<int>(get_num(jb, "from"));
    br.to_node = static_cast<int>(get_num(jb, "to"));
    br.r = get_num(jb, "r_pu");
    br.x = get_num(jb, "x_pu");
    double lmax = get_num(jb, "l_max_pu");
    br.l_max = lmax * lmax;
    branches.push_back(br);
  }
  return RadialNetwork(base, v0_mag * v0_mag, std::move(nodes),
                       std::move(branches));
}

int RadialNetwork::internal_index(int external_id) const {
  for (int k = 0; k < size(); ++k)
    if (nodes_[k].id == external_id) return k;
  throw InputError("unknown node id " + std::to_string(external_id));
}

bool RadialNetwork::has_node(int external_id) const {
  for (const auto& nd : nodes_)
    if (nd.id == external_id) return true;
  return false;
}

#define WINDCAP_NODE_VECTOR(name, field)            \
  Eigen::VectorXd RadialNetwork::name() const {     \
    Eigen::VectorXd out(size());                    \
    for (int k = 0; k < size(); ++k)                \
      out[k] = nodes_[k].field;                     \
    return out;                                     \
  }

WINDCAP_NODE_VECTOR(p, p)
WINDCAP_NODE_VECTOR(q_min, q_min)
WINDCAP_NODE_VECTOR(q_max, q_max)
WINDCAP_NODE_VECTOR(v_min, v_min)
WINDCAP_NODE_VECTOR(v_max, v_max)
WINDCAP_NODE_VECTOR(alpha, alpha)
#undef WINDCAP_NODE_VECTOR

Eigen::VectorXd RadialNetwork::l_max() const {
  Eigen::VectorXd out(size());
  for (int k = 0; k < size(); ++k) out[k] = branches_[k].l_max;
  return out;
}

RadialNetwork RadialNetwork::with_v0(double v0_sq) const {
  RadialNetwork copy = *this;
  if (v0_sq <= 0.0) throw InputError("head voltage v0 must be positive");
  copy.v0_ = v0_sq;
  return copy;
}

NetworkMatrices build_matrices(const RadialNetwork& net) {
  const int n = net.size();
  NetworkMatrices m;
  m.B = Eigen::MatrixXd::Zero(n + 1, n);
  for (int k = 0; k < n; ++k) {
    m.B(k + 1, k) = 1.0; // branch k ends at node k
    int par = net.parent(k);
    m.B(par + 1, k) = 1.0; // row 0 is the head node
  }
  // A = [0 I] B - I: A(i,k) = 1 iff node i is the (non-head) parent of branch k.
  m.A = m.B.bottomRows(n) - Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd r(n), x(n), z2(n);
  for (int k = 0; k < n; ++k) {
    r[k] = net.branch(k).r;
    x[k] = net.branch(k).x;
    z2[k] = r[k] * r[k] + x[k] * x[k];
  }

  Eigen::MatrixXd ima = Eigen::MatrixXd::Identity(n, n) - m.A;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ima);
  if (!lu.isInvertible())
    throw InputError("singular (I - A): malformed or mis-ordered topology");
  m.C = lu.inverse();
  m.D_R = m.C * m.A * r.asDiagonal();
  m.D_X = m.C * m.A * x.asDiagonal();
  m.M_p = 2.0 * m.C.transpose() * r.asDiagonal() * m.C;
  m.M_q = 2.0 * m.C.transpose() * x.asDiagonal() * m.C;
  m.H = m.C.transpose() *
        (2.0 * (r.asDiagonal() * m.D_R + x.asDiagonal() * m.D_X) +
         Eigen::MatrixXd(z2.asDiagonal()));

  auto split = [](const Eigen::MatrixXd& src, Eigen::MatrixXd& pos,
                  Eigen::MatrixXd& neg) {
    pos = src.cwiseMax(0.0);
    neg = src.cwiseMin(0.0);
  };
  split(m.D_X, m.D_X_pos, m.D_X_neg);
  split(m.H, m.H_pos, m.H_neg);
  return m;
}

} // namespace windcap

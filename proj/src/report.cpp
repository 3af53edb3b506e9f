#include "windcap/report.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace windcap {

std::string fmt_g(double value) {
  if (value == 0.0) value = 0.0; // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

OutputWriter::OutputWriter(std::string out_dir) : dir_(std::move(out_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw InputError("cannot create output directory: " + dir_);
}

void OutputWriter::write(const std::string& name, const std::string& content) {
  std::string path = dir_ + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + path);
  out << content;
  if (!out) throw InputError("write failed: " + path);
  hashes_[name] = fnv1a_hex(content);
}

void OutputWriter::write_manifest(const std::string& command,
                                  const std::vector<std::string>& inputs,
                                  unsigned long long seed) {
  std::ostringstream out;
  out << "{\n  \"tool\": \"windcap 1.0.0\",\n  \"command\": \"" << command
      << "\",\n  \"seed\": " << seed << ",\n  \"inputs\": [";
  for (size_t i = 0; i < inputs.size(); ++i)
    out << (i ? ", " : "") << "\"" << inputs[i] << "\"";
  out << "],\n  \"outputs\": {";
  bool first = true;
  for (const auto& [name, hash] : hashes_) {
    out << (first ? "" : ",") << "\n    \"" << name << "\": \"" << hash << "\"";
    first = false;
  }
  out << "\n  }\n}\n";
  std::string path = dir_ + "/manifest.json";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open output file: " + path);
  f << out.str();
}

namespace {

void json_vector(std::ostringstream& out, const Eigen::VectorXd& v) {
  out << "[";
  for (int i = 0; i < v.size(); ++i) out << (i ? ", " : "") << fmt_g(v[i]);
  out << "]";
}

} // namespace

std::string capacity_report_json(const RadialNetwork& net,
                                 const CapacityReport& report) {
  std::ostringstream out;
  out << "{\n  \"method\": \"" << to_string(report.method) << "\",\n"
      << "  \"feasible\": " << (report.feasible ? "true" : "false") << ",\n"
      << "  \"base_mva\": " << fmt_g(net.base_mva()) << ",\n";
  if (!report.message.empty()) out << "  \"message\": \"" << report.message << "\",\n";
  if (!report.warning.empty()) out << "  \"warning\": \"" << report.warning << "\",\n";
  out << "  \"q_head_lo_pu\": " << fmt_g(report.q_head_lo) << ",\n"
      << "  \"q_head_hi_pu\": " << fmt_g(report.q_head_hi) << ",\n"
      << "  \"binding\": [";
  for (size_t i = 0; i < report.nodal.binding.size(); ++i)
    out << (i ? ", " : "") << "\"" << report.nodal.binding[i] << "\"";
  out << "],\n  \"nodes\": [";
  if (report.feasible) {
    for (int k = 0; k < net.size(); ++k) {
      out << (k ? ",\n    " : "\n    ") << "{\"node\": " << net.external_id(k)
          << ", \"q_minus_mvar\": "
          << fmt_g(report.nodal.q_minus[k] * net.base_mva())
          << ", \"q_plus_mvar\": "
          << fmt_g(report.nodal.q_plus[k] * net.base_mva()) << "}";
    }
    out << "\n  ";
  }
  out << "],\n  \"iterations\": [";
  for (size_t i = 0; i < report.iterations.size(); ++i) {
    const CapacityIteration& it = report.iterations[i];
    out << (i ? ",\n    " : "\n    ") << "{\"k\": " << it.id
        << ", \"q_head_lo_pu\": " << fmt_g(it.q_head_lo)
        << ", \"q_head_hi_pu\": " << fmt_g(it.q_head_hi) << "}";
  }
  if (!report.iterations.empty()) out << "\n  ";
  out << "]\n}\n";
  return out.str();
}

std::string capacity_report_csv(const RadialNetwork& net,
                                const CapacityReport& report) {
  std::ostringstream out;
  out << "node,q_minus_mvar,q_plus_mvar,binding_tag\n";
  if (!report.feasible) return out.str();
  std::string tags;
  for (size_t i = 0; i < report.nodal.binding.size(); ++i)
    tags += (i ? ";" : "") + report.nodal.binding[i];
  // Rows in ascending external node id so files are stable across loaders.
  std::vector<int> order(net.size());
  for (int k = 0; k < net.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&net](int a, int b) {
    return net.external_id(a) < net.external_id(b);
  });
  for (int k : order)
    out << net.external_id(k) << ","
        << fmt_g(report.nodal.q_minus[k] * net.base_mva()) << ","
        << fmt_g(report.nodal.q_plus[k] * net.base_mva()) << "," << tags
        << "\n";
  return out.str();
}

std::string verification_json(const VerificationSummary& summary,
                              unsigned long long seed) {
  std::ostringstream out;
  out << "{\n  \"seed\": " << seed << ",\n  \"samples\": " << summary.samples
      << ",\n  \"admissible\": " << summary.admissible
      << ",\n  \"envelope_ok\": " << summary.envelope_ok
      << ",\n  \"pass_rate\": " << fmt_g(summary.pass_rate()) << "\n}\n";
  return out.str();
}

std::string sweep_csv(const SweepGrid& grid) {
  std::ostringstream out;
  out << "q_a_pu,q_b_pu,admissible,worst_kind,worst_magnitude\n";
  for (int ia = 0; ia < grid.q_a.size(); ++ia) {
    for (int ib = 0; ib < grid.q_b.size(); ++ib) {
      const AdmissibilityVerdict& v = grid.verdicts[ia][ib];
      const Violation* worst = v.worst();
      out << fmt_g(grid.q_a[ia]) << "," << fmt_g(grid.q_b[ib]) << ","
          << (v.admissible ? 1 : 0) << ","
          << (worst ? to_string(worst->kind) : "none") << ","
          << fmt_g(worst ? worst->magnitude : 0.0) << "\n";
    }
  }
  return out.str();
}

std::string pq_curve_csv(const std::vector<PqPoint>& points) {
  std::ostringstream out;
  out << "p_mw,q_head_plus_pu,binding_tag\n";
  for (const PqPoint& pt : points)
    out << fmt_g(pt.p_mw) << "," << fmt_g(pt.q_head_plus) << ","
        << pt.binding_tag << "\n";
  return out.str();
}

std::string compare_csv(const std::vector<CompareEntry>& entries,
                        double base_mva) {
  std::ostringstream out;
  out << "method";
  for (const CompareEntry& e : entries) out << "," << e.scenario;
  out << "\n";
  auto cell = [base_mva](double lo, double hi) {
    return "[" + fmt_g(lo * base_mva) + "; " + fmt_g(hi * base_mva) + "]";
  };
  out << "cia";
  for (const CompareEntry& e : entries) out << "," << cell(e.cia_lo, e.cia_hi);
  out << "\nrelaxation";
  for (const CompareEntry& e : entries)
    out << "," << cell(e.relax_lo, e.relax_hi);
  out << "\ndecentralized";
  for (const CompareEntry& e : entries)
    out << "," << cell(e.decen_lo, e.decen_hi);
  out << "\ncia_verified";
  for (const CompareEntry& e : entries)
    out << "," << (e.cia_verified ? 1 : 0);
  out << "\n";
  return out.str();
}

std::string trace_csv(const RadialNetwork& net, const SimTrace& trace) {
  std::ostringstream out;
  const double base = net.base_mva();
  out << "t_s,v_grid_pu,v_pcc_pu,q_tg_ref_mvar,q_head_mvar,min_node_v_pu,"
         "max_node_v_pu,saturated,violation";
  for (int k = 0; k < net.size(); ++k)
    out << ",q_" << net.external_id(k) << "_mvar";
  out << "\n";
  for (const SimStep& s : trace.steps) {
    double vmin = 1.0, vmax = 1.0;
    if (s.v.size() > 0) {
      vmin = std::sqrt(s.v.minCoeff());
      vmax = std::sqrt(s.v.maxCoeff());
    }
    out << fmt_g(s.t) << "," << fmt_g(s.v_grid) << "," << fmt_g(s.v_pcc) << ","
        << fmt_g(s.q_tg_ref * base) << "," << fmt_g(s.q_head * base) << ","
        << fmt_g(vmin) << "," << fmt_g(vmax) << "," << (s.saturated ? 1 : 0)
        << "," << (s.violation ? 1 : 0);
    for (int k = 0; k < s.q.size(); ++k) out << "," << fmt_g(s.q[k] * base);
    out << "\n";
  }
  return out.str();
}

std::string controller_config_json(const ControllerConfig& cfg) {
  std::ostringstream out;
  out << "{\n  \"kp\": " << fmt_g(cfg.kp) << ",\n  \"ki\": " << fmt_g(cfg.ki)
      << ",\n  \"dt\": " << fmt_g(cfg.dt)
      << ",\n  \"v_ref\": " << fmt_g(cfg.v_ref)
      << ",\n  \"sat_lo\": " << fmt_g(cfg.sat_lo)
      << ",\n  \"sat_hi\": " << fmt_g(cfg.sat_hi)
      << ",\n  \"anti_windup\": " << fmt_g(cfg.anti_windup)
      << ",\n  \"mode\": \"" << to_string(cfg.mode) << "\"\n}\n";
  return out.str();
}

} // namespace windcap

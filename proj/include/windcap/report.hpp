#pragma once

#include "windcap/capacity.hpp"
#include "windcap/control.hpp"
#include "windcap/powerflow.hpp"

#include <map>
#include <string>
#include <vector>

namespace windcap {

/// Shortest round-trip-safe decimal at 9 significant digits; used everywhere
/// a float reaches an output file so reruns are byte-identical.
std::string fmt_g(double value);

/// FNV-1a 64-bit over the raw bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Collects emitted files and writes a manifest JSON next to them.
class OutputWriter {
public:
  explicit OutputWriter(std::string out_dir);
  /// Writes out_dir/name and records its hash. Throws InputError on I/O
  /// failure.
  void write(const std::string& name, const std::string& content);
  /// Writes out_dir/manifest.json covering every file written so far.
  void write_manifest(const std::string& command,
                      const std::vector<std::string>& inputs,
                      unsigned long long seed);
  const std::string& dir() const { return dir_; }

private:
  std::string dir_;
  std::map<std::string, std::string> hashes_; // name -> fnv1a
};

std::string capacity_report_json(const RadialNetwork& net,
                                 const CapacityReport& report);
std::string capacity_report_csv(const RadialNetwork& net,
                                const CapacityReport& report);
std::string verification_json(const VerificationSummary& summary,
                              unsigned long long seed);
std::string sweep_csv(const SweepGrid& grid);
std::string pq_curve_csv(const std::vector<PqPoint>& points);
std::string compare_csv(const std::vector<CompareEntry>& entries,
                        double base_mva);
std::string trace_csv(const RadialNetwork& net, const SimTrace& trace);
std::string controller_config_json(const ControllerConfig& cfg);

} // namespace windcap

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "roughflow/config.hpp"

namespace roughflow {

inline constexpr const char* kLibraryVersion = "0.1.0";

// One asserted property: a measured value against a pinned bound. `upper`
// passes when measured <= bound, `lower` when measured >= bound.
struct CriterionResult {
  enum class Bound { upper, lower };

  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  Bound kind = Bound::upper;
  bool pass = false;
  std::string detail;
};

CriterionResult check_upper(const std::string& name, double measured,
                            double bound, const std::string& detail = "");
CriterionResult check_lower(const std::string& name, double measured,
                            double bound, const std::string& detail = "");

// What a command did: asserted criteria, free-form named metrics, and the
// files it wrote (paths relative to the output directory).
struct Report {
  std::string command;
  std::vector<CriterionResult> criteria;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> artifacts;

  void add_metric(const std::string& name, double value);
  bool all_pass() const;
};

// Serialized report document (deterministic field order, round-trip decimal
// numbers). Written by the suite commands and consumed by tests.
std::string report_to_json(const Report& report);
void write_report(const Report& report, const std::string& out_dir,
                  const std::string& filename);

// Every run drops a manifest next to its artifacts: command, config
// provenance (basename + content hash), seed, format, library version, and
// the artifact list. Contains nothing run-dependent beyond those, so equal
// config + seed gives byte-identical files.
void write_manifest(const RunConfig& rc, const Report& report);

// Creates rc.out_dir (recursively) and returns it; ConfigError on failure.
std::string ensure_out_dir(const RunConfig& rc);

// out_dir + "/" + name with exactly one separator.
std::string join_path(const std::string& dir, const std::string& name);

std::string hash_hex(std::uint64_t h);

}  // namespace roughflow

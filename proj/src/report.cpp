#include "roughflow/report.hpp"

#include <filesystem>

#include <json.hpp>

#include "io_util.hpp"
#include "roughflow/errors.hpp"

namespace roughflow {

using nlohmann::json;

CriterionResult check_upper(const std::string& name, double measured,
                            double bound, const std::string& detail) {
  CriterionResult c;
  c.name = name;
  c.measured = measured;
  c.bound = bound;
  c.kind = CriterionResult::Bound::upper;
  c.pass = measured <= bound;
  c.detail = detail;
  return c;
}

CriterionResult check_lower(const std::string& name, double measured,
                            double bound, const std::string& detail) {
  CriterionResult c;
  c.name = name;
  c.measured = measured;
  c.bound = bound;
  c.kind = CriterionResult::Bound::lower;
  c.pass = measured >= bound;
  c.detail = detail;
  return c;
}

void Report::add_metric(const std::string& name, double value) {
  metrics.emplace_back(name, value);
}

bool Report::all_pass() const {
  for (const CriterionResult& c : criteria)
    if (!c.pass) return false;
  return true;
}

std::string report_to_json(const Report& report) {
  json doc;
  doc["command"] = report.command;
  json crits = json::array();
  for (const CriterionResult& c : report.criteria) {
    json e;
    e["name"] = c.name;
    e["measured"] = c.measured;
    e["bound"] = c.bound;
    e["kind"] = c.kind == CriterionResult::Bound::upper ? "upper" : "lower";
    e["pass"] = c.pass;
    if (!c.detail.empty()) e["detail"] = c.detail;
    crits.push_back(std::move(e));
  }
  doc["criteria"] = std::move(crits);
  json mets = json::object();
  for (const auto& [k, v] : report.metrics) mets[k] = v;
  doc["metrics"] = std::move(mets);
  doc["artifacts"] = report.artifacts;
  doc["all_pass"] = report.all_pass();
  return doc.dump(2) + "\n";
}

void write_report(const Report& report, const std::string& out_dir,
                  const std::string& filename) {
  io::write_file(join_path(out_dir, filename), report_to_json(report));
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

void write_manifest(const RunConfig& rc, const Report& report) {
  json doc;
  doc["command"] = report.command;
  doc["config"] = {{"file", rc.config_file},
                   {"hash", "fnv1a64:" + hash_hex(rc.config_hash)}};
  doc["seed"] = rc.seed;
  doc["format"] = rc.format;
  doc["library"] = {{"name", "roughflow"}, {"version", kLibraryVersion}};
  doc["artifacts"] = report.artifacts;
  io::write_file(join_path(rc.out_dir, "manifest.json"), doc.dump(2) + "\n");
}

std::string ensure_out_dir(const RunConfig& rc) {
  std::error_code ec;
  std::filesystem::create_directories(rc.out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + rc.out_dir +
                      "': " + ec.message());
  return rc.out_dir;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

}  // namespace roughflow

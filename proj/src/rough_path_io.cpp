#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "io_util.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/rough_path.hpp"

namespace roughflow {

using nlohmann::json;

void save_rough_path_csv(const RoughPath& p, const std::string& level1_path,
                         const std::string& level2_path) {
  const std::size_t n = p.n();
  const int d = p.d;
  std::ostringstream l1;
  l1 << "t";
  for (int a = 1; a <= d; ++a) l1 << ",w_" << a;
  l1 << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    l1 << io::format_double(p.grid.point(i));
    for (int a = 0; a < d; ++a) l1 << "," << io::format_double(p.w_at(i)[a]);
    l1 << "\n";
  }
  io::write_file(level1_path, l1.str());

  std::ostringstream l2;
  l2 << "s,t";
  for (int a = 1; a <= d; ++a)
    for (int b = 1; b <= d; ++b) l2 << ",w2_" << a << b;
  l2 << "\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      l2 << io::format_double(p.grid.point(i)) << ","
         << io::format_double(p.grid.point(j));
      const double* blk = p.w2_at(i, j);
      for (int e = 0; e < d * d; ++e) l2 << "," << io::format_double(blk[e]);
      l2 << "\n";
    }
  io::write_file(level2_path, l2.str());
}

RoughPath load_rough_path_csv(const std::string& level1_path,
                              const std::string& level2_path, double gamma) {
  // First level: t, w_1..w_d.
  std::istringstream l1(io::read_file(level1_path));
  std::string line;
  if (!std::getline(l1, line)) throw InvalidInput(level1_path + ": empty file");
  const auto head1 = io::split_csv(line);
  if (head1.size() < 2 || head1[0] != "t")
    throw InvalidInput(level1_path + ": bad header");
  const int d = static_cast<int>(head1.size()) - 1;
  std::vector<double> times;
  std::vector<double> w;
  std::size_t lineno = 1;
  while (std::getline(l1, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = io::split_csv(line);
    if (toks.size() != head1.size())
      throw InvalidInput(level1_path + ":" + std::to_string(lineno) +
                         ": wrong column count");
    times.push_back(io::parse_double(toks[0], level1_path));
    for (int a = 0; a < d; ++a) {
      const double v = io::parse_double(toks[1 + a], level1_path);
      if (!std::isfinite(v))
        throw InvalidInput(level1_path + ":" + std::to_string(lineno) +
                           ": non-finite sample");
      w.push_back(v);
    }
  }
  const TimeGrid grid = TimeGrid::from_points(times);
  const std::size_t n = grid.n_points();

  // Second level: s, t, w2_11..w2_dd for all pairs s <= t.
  std::istringstream l2(io::read_file(level2_path));
  if (!std::getline(l2, line)) throw InvalidInput(level2_path + ": empty file");
  const auto head2 = io::split_csv(line);
  if (head2.size() != 2 + static_cast<std::size_t>(d) * d || head2[0] != "s" ||
      head2[1] != "t")
    throw InvalidInput(level2_path + ": bad header");
  const std::size_t dd = static_cast<std::size_t>(d) * d;
  std::vector<double> w2((n * (n + 1) / 2) * dd, 0.0);
  std::vector<char> seen(n * (n + 1) / 2, 0);
  RoughPath probe;  // only for pair_index arithmetic
  probe.grid = grid;
  probe.d = d;
  lineno = 1;
  while (std::getline(l2, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = io::split_csv(line);
    if (toks.size() != head2.size())
      throw InvalidInput(level2_path + ":" + std::to_string(lineno) +
                         ": wrong column count");
    const double s = io::parse_double(toks[0], level2_path);
    const double t = io::parse_double(toks[1], level2_path);
    std::size_t i, j;
    try {
      i = grid.index_of(s);
      j = grid.index_of(t);
    } catch (const Error&) {
      throw InvalidInput(level2_path + ":" + std::to_string(lineno) +
                         ": pair times are off the first-level grid");
    }
    if (i > j)
      throw InvalidInput(level2_path + ":" + std::to_string(lineno) +
                         ": need s <= t");
    const std::size_t idx = probe.pair_index(i, j);
    seen[idx] = 1;
    for (std::size_t e = 0; e < dd; ++e) {
      const double v = io::parse_double(toks[2 + e], level2_path);
      if (!std::isfinite(v))
        throw InvalidInput(level2_path + ":" + std::to_string(lineno) +
                           ": non-finite increment");
      w2[idx * dd + e] = v;
    }
  }
  for (std::size_t idx = 0; idx < seen.size(); ++idx)
    if (!seen[idx])
      throw InvalidInput(level2_path + ": missing pair rows (table incomplete)");
  // Deserialization does not re-audit Chen; verification is an explicit step
  // so that corrupted tables can be loaded and diagnosed.
  return make_rough_path(grid, d, gamma, std::move(w), std::move(w2),
                         /*validate=*/false);
}

void save_rough_path_json(const RoughPath& p, const std::string& path) {
  json doc;
  doc["format"] = "rough-path/1";
  doc["grid"] = {{"t0", p.grid.t0()}, {"t1", p.grid.t1()}, {"n_points", p.n()}};
  doc["d"] = p.d;
  doc["gamma"] = p.gamma;
  json w = json::array();
  for (std::size_t i = 0; i < p.n(); ++i) {
    json row = json::array();
    for (int a = 0; a < p.d; ++a) row.push_back(p.w_at(i)[a]);
    w.push_back(std::move(row));
  }
  doc["w"] = std::move(w);
  json w2 = json::array();
  for (std::size_t i = 0; i < p.n(); ++i)
    for (std::size_t j = i; j < p.n(); ++j) {
      json blk = json::array();
      const double* src = p.w2_at(i, j);
      for (int e = 0; e < p.d * p.d; ++e) blk.push_back(src[e]);
      w2.push_back(std::move(blk));
    }
  doc["w2"] = std::move(w2);
  io::write_file(path, doc.dump(2) + "\n");
}

RoughPath load_rough_path_json(const std::string& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "rough-path/1")
      throw InvalidInput(path + ": unknown format tag");
    const auto& g = doc.at("grid");
    const TimeGrid grid(g.at("t0").get<double>(), g.at("t1").get<double>(),
                        g.at("n_points").get<std::size_t>());
    const int d = doc.at("d").get<int>();
    const double gamma = doc.at("gamma").get<double>();
    const std::size_t n = grid.n_points();
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    std::vector<double> w;
    w.reserve(n * d);
    for (const auto& row : doc.at("w")) {
      if (row.size() != static_cast<std::size_t>(d))
        throw InvalidInput(path + ": first-level row width mismatch");
      for (const auto& v : row) w.push_back(v.get<double>());
    }
    std::vector<double> w2;
    w2.reserve((n * (n + 1) / 2) * dd);
    for (const auto& blk : doc.at("w2")) {
      if (blk.size() != dd)
        throw InvalidInput(path + ": second-level block width mismatch");
      for (const auto& v : blk) w2.push_back(v.get<double>());
    }
    for (double v : w)
      if (!std::isfinite(v)) throw InvalidInput(path + ": non-finite sample");
    for (double v : w2)
      if (!std::isfinite(v)) throw InvalidInput(path + ": non-finite increment");
    return make_rough_path(grid, d, gamma, std::move(w), std::move(w2),
                           /*validate=*/false);
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

}  // namespace roughflow

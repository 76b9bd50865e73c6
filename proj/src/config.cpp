#include "roughflow/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include "io_util.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_word(const std::string& w, bool allow_dash) {
  if (w.empty()) return false;
  for (char c : w) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    (allow_dash && c == '-');
    if (!ok) return false;
  }
  return true;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void ConfigFile::fail(int line, const std::string& what) const {
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
}

ConfigFile ConfigFile::parse_text(const std::string& text,
                                  const std::string& origin) {
  ConfigFile cf;
  cf.origin_ = origin;
  cf.hash_ = fnv1a64(text);

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        cf.fail(lineno, "malformed section header '" + line + "'");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_word(name, /*allow_dash=*/true))
        cf.fail(lineno, "bad section name '" + name + "'");
      if (cf.sections_.count(name))
        cf.fail(lineno, "section [" + name + "] reopened (first at line " +
                            std::to_string(cf.section_lines_[name]) + ")");
      cf.sections_[name];
      cf.section_lines_[name] = lineno;
      section = name;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      cf.fail(lineno, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_word(key, /*allow_dash=*/false))
      cf.fail(lineno, "malformed key '" + key + "'");
    if (value.empty()) cf.fail(lineno, "empty value for key '" + key + "'");
    if (section.empty())
      cf.fail(lineno, "key '" + key + "' outside any [section]");
    auto& sec = cf.sections_[section];
    if (auto it = sec.find(key); it != sec.end())
      cf.fail(lineno, "duplicate key '" + key + "' in [" + section +
                          "] (first at line " +
                          std::to_string(it->second.line) + ")");
    sec[key] = Entry{value, lineno, false};
  }
  return cf;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_text(text, path);
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  kit->second.used = true;
  return &kit->second;
}

const ConfigFile::Entry& ConfigFile::require(const std::string& section,
                                             const std::string& key) {
  const Entry* e = find(section, key);
  if (!e)
    throw ConfigError(origin_ + ": missing required key '" + key + "' in [" +
                      section + "]");
  return *e;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) {
  return require(section, key).value;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key,
                                   const std::string& fallback) {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key) {
  const Entry& e = require(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size() || !std::isfinite(v)) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    fail(e.line, "[" + section + "] " + key + ": expected a number, got '" +
                     e.value + "'");
  }
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long ConfigFile::get_int(const std::string& section,
                              const std::string& key) {
  const Entry& e = require(section, key);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(e.value, &pos);
    if (pos != e.value.size()) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    fail(e.line, "[" + section + "] " + key + ": expected an integer, got '" +
                     e.value + "'");
  }
}

long long ConfigFile::get_int(const std::string& section,
                              const std::string& key, long long fallback) {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  fail(e->line, "[" + section + "] " + key +
                    ": expected true/false/1/0, got '" + e->value + "'");
}

std::vector<double> ConfigFile::get_list(const std::string& section,
                                         const std::string& key) {
  const Entry& e = require(section, key);
  std::vector<double> out;
  std::istringstream in(e.value);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size() || !std::isfinite(v)) throw InvalidInput("");
      out.push_back(v);
    } catch (const std::exception&) {
      fail(e.line, "[" + section + "] " + key + ": expected numbers, got '" +
                       tok + "'");
    }
  }
  return out;
}

std::vector<double> ConfigFile::get_list(const std::string& section,
                                         const std::string& key,
                                         const std::vector<double>& fallback) {
  return has(section, key) ? get_list(section, key) : fallback;
}

std::vector<std::string> ConfigFile::get_words(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<std::string> out;
  std::istringstream in(e->value);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void ConfigFile::finish() const {
  std::vector<std::string> complaints;
  for (const auto& [name, keys] : sections_) {
    bool any_used = false;
    for (const auto& [key, entry] : keys) any_used |= entry.used;
    if (!any_used && !keys.empty()) {
      // Nothing in the section was asked for: flag the header once.
      complaints.push_back(origin_ + ":" +
                           std::to_string(section_lines_.at(name)) +
                           ": unknown section [" + name + "]");
      continue;
    }
    for (const auto& [key, entry] : keys)
      if (!entry.used)
        complaints.push_back(origin_ + ":" + std::to_string(entry.line) +
                             ": key '" + key + "' in [" + name +
                             "] is not recognized for this run");
  }
  if (complaints.empty()) return;
  std::string msg = "unrecognized configuration keys:";
  for (const std::string& c : complaints) msg += "\n  " + c;
  throw ConfigError(msg);
}

int ConfigFile::line_of(const std::string& section,
                        const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return 0;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? 0 : kit->second.line;
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void semantic_fail(const ConfigFile& cf,
                                const std::string& section,
                                const std::string& key,
                                const std::string& what) {
  const int line = cf.line_of(section, key);
  std::string at = cf.origin();
  if (line > 0) at += ":" + std::to_string(line);
  throw ConfigError(at + ": [" + section + "] " + key + ": " + what);
}

void check_gamma_range(const ConfigFile& cf, const std::string& section,
                       double gamma) {
  if (!(gamma > 1.0 / 3.0 && gamma <= 0.5))
    semantic_fail(cf, section, "gamma", "must lie in (1/3, 1/2]");
}

DriverParams parse_driver(ConfigFile& cf) {
  DriverParams dp;
  dp.kind = cf.get_string("driver", "kind", "bm");
  if (dp.kind != "smooth" && dp.kind != "bm" && dp.kind != "pure-area")
    semantic_fail(cf, "driver", "kind",
                  "must be smooth, bm, or pure-area (got '" + dp.kind + "')");
  dp.d = static_cast<int>(cf.get_int("driver", "d", 1));
  if (dp.d < 1) semantic_fail(cf, "driver", "d", "must be >= 1");
  dp.gamma = cf.get_double("driver", "gamma", 0.45);
  check_gamma_range(cf, "driver", dp.gamma);
  dp.t0 = cf.get_double("driver", "t0", 0.0);
  dp.t1 = cf.get_double("driver", "t1", 1.0);
  if (!(dp.t1 > dp.t0))
    semantic_fail(cf, "driver", "t1", "needs t1 > t0");
  dp.n_points = static_cast<int>(cf.get_int("driver", "n_points", 129));
  if (dp.n_points < 2)
    semantic_fail(cf, "driver", "n_points", "must be >= 2");

  if (dp.kind == "bm") {
    dp.refinement = static_cast<int>(cf.get_int("driver", "refinement", 16));
    if (dp.refinement < 4)
      semantic_fail(cf, "driver", "refinement", "must be >= 4");
  } else if (dp.kind == "smooth") {
    dp.shape = cf.get_string("driver", "shape", "trig");
    if (dp.shape != "trig" && dp.shape != "poly2")
      semantic_fail(cf, "driver", "shape",
                    "must be trig or poly2 (got '" + dp.shape + "')");
    dp.smooth_refine =
        static_cast<int>(cf.get_int("driver", "smooth_refine", 16));
    if (dp.smooth_refine < 1)
      semantic_fail(cf, "driver", "smooth_refine", "must be >= 1");
    if (dp.shape == "trig") {
      dp.harmonics = static_cast<int>(cf.get_int("driver", "harmonics", 3));
      if (dp.harmonics < 1)
        semantic_fail(cf, "driver", "harmonics", "must be >= 1");
      dp.scale = cf.get_double("driver", "scale", 1.0);
    }
  } else {
    dp.area = cf.get_list("driver", "area");
    const std::size_t want =
        static_cast<std::size_t>(dp.d) * static_cast<std::size_t>(dp.d);
    if (dp.area.size() != want)
      semantic_fail(cf, "driver", "area",
                    "expected the full d*d block (" + std::to_string(want) +
                        " values), got " + std::to_string(dp.area.size()));
  }
  return dp;
}

OperatorParams parse_operator(ConfigFile& cf) {
  OperatorParams sp;
  sp.kind = cf.get_string("operator", "kind", "parabolic");
  if (sp.kind == "parabolic") {
    sp.m = static_cast<int>(cf.get_int("operator", "m", 1));
    if (sp.m < 1) semantic_fail(cf, "operator", "m", "must be >= 1");
    sp.mu = cf.get_double("operator", "mu", 0.0);
    sp.n_modes = static_cast<int>(cf.get_int("operator", "n_modes", 8));
    if (sp.n_modes < 1)
      semantic_fail(cf, "operator", "n_modes", "must be >= 1");
  } else if (sp.kind == "custom") {
    sp.eigenvalues = cf.get_list("operator", "eigenvalues");
    if (sp.eigenvalues.empty())
      semantic_fail(cf, "operator", "eigenvalues", "must be nonempty");
    sp.n_modes = static_cast<int>(sp.eigenvalues.size());
  } else {
    semantic_fail(cf, "operator", "kind",
                  "must be parabolic or custom (got '" + sp.kind + "')");
  }
  if (cf.has("operator", "gap")) {
    const std::vector<double> gap = cf.get_list("operator", "gap");
    if (gap.size() != 2)
      semantic_fail(cf, "operator", "gap",
                    "expected two values: alpha beta");
    sp.has_gap = true;
    sp.alpha_gap = gap[0];
    sp.beta_gap = gap[1];
  }
  return sp;
}

NonlinParams parse_nonlin(ConfigFile& cf, const std::string& section) {
  NonlinParams np;
  np.kind = cf.get_string(section, "kind", "zero");
  if (np.kind == "linear") {
    np.gains = cf.get_list(section, "gains");
    if (np.gains.empty())
      semantic_fail(cf, section, "gains", "must be nonempty");
  } else if (np.kind == "collocation") {
    np.profile = cf.get_string(section, "profile");
    np.amplitude = cf.get_double(section, "amplitude", 1.0);
  } else if (np.kind != "zero") {
    semantic_fail(cf, section, "kind",
                  "must be zero, linear, or collocation (got '" + np.kind +
                      "')");
  }
  if (np.kind != "zero")
    np.channel_scales = cf.get_list(section, "channel_scales", {});
  return np;
}

SolverParams parse_solver(ConfigFile& cf) {
  SolverParams sp;
  // gamma is not a key here: the solve always measures in the driver's
  // exponent, so the commands copy it over before running.
  sp.cfg.T = cf.get_double("solver", "T", 1.0);
  sp.cfg.eta = cf.get_double("solver", "eta", 0.1);
  sp.cfg.picard_tol = cf.get_double("solver", "picard_tol", 1e-8);
  sp.cfg.max_picard = static_cast<int>(cf.get_int("solver", "max_picard", 40));
  sp.cfg.step_shrink = cf.get_double("solver", "step_shrink", 0.5);
  sp.cfg.integrator_tol = cf.get_double("solver", "integrator_tol", 1e-10);
  sp.xi = cf.get_list("solver", "xi", {});
  try {
    sp.cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(cf.origin() + ": [solver] " + e.what());
  }
  return sp;
}

ManifoldParams parse_manifold(ConfigFile& cf) {
  ManifoldParams mp;
  mp.cfg.alpha = cf.get_double("manifold", "alpha", 2.0);
  mp.cfg.beta = cf.get_double("manifold", "beta", 1.0);
  mp.cfg.delta =
      cf.get_double("manifold", "delta", 0.5 * (mp.cfg.alpha - mp.cfg.beta));
  mp.cfg.eta = cf.get_double("manifold", "eta", 0.1);
  mp.cfg.K = cf.get_double("manifold", "K", 0.02);
  mp.cfg.gap_C = cf.get_double("manifold", "gap_C", 1.0);
  mp.cfg.K_max = static_cast<int>(cf.get_int("manifold", "K_max", 12));
  mp.cfg.lp_tol = cf.get_double("manifold", "lp_tol", 1e-8);
  mp.cfg.max_lp_iters =
      static_cast<int>(cf.get_int("manifold", "max_lp_iters", 60));
  mp.cfg.enforce_gap = cf.get_bool("manifold", "enforce_gap", true);
  try {
    mp.cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(cf.origin() + ": [manifold] " + e.what());
  }
  mp.ball_radius = cf.get_double("manifold", "ball_radius", 0.1);
  if (!(mp.ball_radius >= 0.0))
    semantic_fail(cf, "manifold", "ball_radius", "must be >= 0");
  mp.n_samples = static_cast<int>(cf.get_int("manifold", "n_samples", 9));
  if (mp.n_samples < 1)
    semantic_fail(cf, "manifold", "n_samples", "must be >= 1");
  mp.per_unit = static_cast<int>(cf.get_int("manifold", "per_unit", 33));
  if (mp.per_unit < 2)
    semantic_fail(cf, "manifold", "per_unit", "must be >= 2");
  mp.invariance_xi = cf.get_list("manifold", "invariance_xi", {});
  mp.t_forward = cf.get_double("manifold", "t_forward", 1.0);
  if (!(mp.t_forward > 0.0))
    semantic_fail(cf, "manifold", "t_forward", "must be > 0");
  return mp;
}

VerifyParams parse_verify(ConfigFile& cf) {
  VerifyParams vp;
  vp.driver_file = cf.get_string("verify", "driver_file", "");
  vp.checks = cf.get_words("verify", "checks", {});
  vp.bm_seeds = static_cast<int>(cf.get_int("verify", "bm_seeds", 5));
  if (vp.bm_seeds < 1)
    semantic_fail(cf, "verify", "bm_seeds", "must be >= 1");
  vp.quad_cases = static_cast<int>(cf.get_int("verify", "quad_cases", 5));
  if (vp.quad_cases < 1)
    semantic_fail(cf, "verify", "quad_cases", "must be >= 1");
  return vp;
}

ProbeParams parse_probe(ConfigFile& cf) {
  ProbeParams pp;
  pp.gammas = cf.get_list("probe", "gammas", pp.gammas);
  for (double g : pp.gammas) check_gamma_range(cf, "probe", g);
  pp.drivers = cf.get_words("probe", "drivers", pp.drivers);
  for (const std::string& k : pp.drivers)
    if (k != "smooth" && k != "bm")
      semantic_fail(cf, "probe", "drivers",
                    "must list smooth and/or bm (got '" + k + "')");
  pp.betas = cf.get_list("probe", "betas", pp.betas);
  for (double b : pp.betas)
    if (b < 0.0) semantic_fail(cf, "probe", "betas", "must be >= 0");
  pp.n_points = static_cast<int>(cf.get_int("probe", "n_points", 257));
  if (pp.n_points < 9)
    semantic_fail(cf, "probe", "n_points", "must be >= 9");
  return pp;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  ConfigFile cf = ConfigFile::parse_text(text, origin);
  RunConfig rc;
  rc.config_file = std::filesystem::path(origin).filename().string();
  rc.config_hash = cf.content_hash();

  if (cf.has_section("run")) {
    const long long seed = cf.get_int("run", "seed", 0);
    if (seed < 0) semantic_fail(cf, "run", "seed", "must be >= 0");
    rc.seed = static_cast<std::uint64_t>(seed);
    rc.out_dir = cf.get_string("run", "out", "out");
    rc.format = cf.get_string("run", "format", "csv");
    if (rc.format != "csv" && rc.format != "json")
      semantic_fail(cf, "run", "format",
                    "must be csv or json (got '" + rc.format + "')");
  }
  if (cf.has_section("driver")) rc.driver = parse_driver(cf);
  if (cf.has_section("operator")) rc.op = parse_operator(cf);
  if (cf.has_section("drift")) rc.drift = parse_nonlin(cf, "drift");
  if (cf.has_section("diffusion")) rc.diffusion = parse_nonlin(cf, "diffusion");
  if (cf.has_section("solver")) rc.solver = parse_solver(cf);
  if (cf.has_section("manifold")) rc.manifold = parse_manifold(cf);
  if (cf.has_section("verify")) rc.verify = parse_verify(cf);
  if (cf.has_section("probe")) rc.probe = parse_probe(cf);

  cf.finish();
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path);
}

// ---------------------------------------------------------------------------

RoughPath build_driver(const DriverParams& dp, std::uint64_t master_seed) {
  const TimeGrid target(dp.t0, dp.t1,
                        static_cast<std::size_t>(dp.n_points));
  if (dp.kind == "bm")
    return build_bm_lift(sub_seed(master_seed, "driver"), target, dp.d,
                         dp.gamma, dp.refinement);
  if (dp.kind == "pure-area") return pure_area_path(dp.area, target, dp.gamma);

  const TimeGrid fine =
      target.refined(static_cast<std::size_t>(dp.smooth_refine));
  const std::size_t n = fine.n_points();
  std::vector<double> samples(n * static_cast<std::size_t>(dp.d), 0.0);
  if (dp.shape == "poly2") {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = fine.point(i);
      for (int a = 0; a < dp.d; ++a) samples[i * dp.d + a] = t * t;
    }
  } else {
    // Random trigonometric polynomial, zero at t0, one full period per span.
    std::mt19937_64 rng = make_rng(master_seed, "driver");
    std::normal_distribution<double> nd(0.0, 1.0);
    const double span = dp.t1 - dp.t0;
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (int a = 0; a < dp.d; ++a) {
      const double lin = nd(rng);
      std::vector<double> cs(static_cast<std::size_t>(dp.harmonics));
      std::vector<double> ds(static_cast<std::size_t>(dp.harmonics));
      for (int j = 0; j < dp.harmonics; ++j) {
        cs[j] = nd(rng);
        ds[j] = nd(rng);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (fine.point(i) - dp.t0) / span;
        double v = lin * u;
        for (int j = 0; j < dp.harmonics; ++j) {
          const double ph = kTwoPi * (j + 1) * u;
          v += (cs[j] * std::sin(ph) + ds[j] * (std::cos(ph) - 1.0)) /
               static_cast<double>(j + 1);
        }
        samples[i * dp.d + a] = dp.scale * v;
      }
    }
  }
  return build_smooth_lift(fine, samples, dp.d, target, dp.gamma);
}

SpectralOperator build_operator(const OperatorParams& sp) {
  if (sp.kind == "parabolic") {
    if (sp.has_gap)
      return SpectralOperator::preset_parabolic(sp.m, sp.mu, sp.n_modes,
                                                sp.alpha_gap, sp.beta_gap);
    return SpectralOperator::preset_parabolic(sp.m, sp.mu, sp.n_modes);
  }
  if (sp.has_gap)
    return SpectralOperator(sp.eigenvalues, sp.alpha_gap, sp.beta_gap);
  return SpectralOperator(sp.eigenvalues);
}

Nonlinearity build_nonlinearity(const NonlinParams& np, std::size_t n_modes,
                                std::size_t out_width) {
  if (np.kind == "zero") return Nonlinearity::zero(n_modes, out_width);
  if (np.kind == "linear") {
    std::vector<double> gains = np.gains;
    if (gains.size() == 1) gains.assign(n_modes, gains[0]);
    if (gains.size() != n_modes)
      throw ConfigError("linear nonlinearity: expected " +
                        std::to_string(n_modes) + " gains (or one), got " +
                        std::to_string(gains.size()));
    return Nonlinearity::linear(std::move(gains), out_width,
                                np.channel_scales);
  }
  return Nonlinearity::collocation(np.profile, n_modes, out_width,
                                   np.amplitude, np.channel_scales);
}

}  // namespace roughflow

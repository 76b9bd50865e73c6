#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roughflow/manifold.hpp"
#include "roughflow/nonlinearity.hpp"
#include "roughflow/ree_solver.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/spectral_operator.hpp"

namespace roughflow {

// Flat key-value run configuration with [section] headers:
//
//   # comment
//   [driver]
//   kind = bm
//   n_points = 129
//
// Keys are single tokens, values run to the end of the line ('#' starts a
// trailing comment); list values are whitespace-separated. Every diagnostic
// carries the offending line number. A key is "unknown" when no consumer
// asked for it -- finish() turns leftovers into errors, so a config cannot
// silently carry typos or settings the selected command ignores.
class ConfigFile {
 public:
  static ConfigFile parse_text(const std::string& text,
                               const std::string& origin = "<memory>");
  static ConfigFile load(const std::string& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  // Typed access; the non-defaulted forms throw ConfigError when absent.
  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  long long get_int(const std::string& section, const std::string& key);
  long long get_int(const std::string& section, const std::string& key,
                    long long fallback);
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback);
  std::vector<double> get_list(const std::string& section,
                               const std::string& key);
  std::vector<double> get_list(const std::string& section,
                               const std::string& key,
                               const std::vector<double>& fallback);
  std::vector<std::string> get_words(const std::string& section,
                                     const std::string& key,
                                     const std::vector<std::string>& fallback);

  // Throws ConfigError listing every key no getter consumed.
  void finish() const;

  // Source line of a present key (0 when absent); lets semantic checks point
  // at the offending line after the value was already read.
  int line_of(const std::string& section, const std::string& key) const;

  // FNV-1a over the raw file bytes; stable provenance tag for manifests.
  std::uint64_t content_hash() const { return hash_; }
  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& require(const std::string& section, const std::string& key);
  [[noreturn]] void fail(int line, const std::string& what) const;

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, int> section_lines_;
  std::string origin_ = "<memory>";
  std::uint64_t hash_ = 0;
};

// ---------------------------------------------------------------------------
// Parameter groups. A RunConfig carries every group whose section appears in
// the file; each command picks the ones it needs and reports the rest of the
// file's keys as unknown via ConfigFile::finish.

struct DriverParams {
  std::string kind = "bm";  // smooth | bm | pure-area
  int d = 1;
  double gamma = 0.45;
  double t0 = 0.0;
  double t1 = 1.0;
  int n_points = 129;
  int refinement = 16;        // bm: internal refinement of the lift
  std::string shape = "trig"; // smooth: trig | poly2
  int harmonics = 3;          // smooth/trig
  int smooth_refine = 16;     // smooth: internal grid factor
  double scale = 1.0;         // smooth/trig amplitude
  std::vector<double> area;   // pure-area: full d*d block, row-major
};

struct OperatorParams {
  std::string kind = "parabolic";  // parabolic | custom
  int m = 1;
  double mu = 0.0;
  int n_modes = 8;
  std::vector<double> eigenvalues;  // custom
  bool has_gap = false;
  double alpha_gap = 0.0;
  double beta_gap = 0.0;
};

struct NonlinParams {
  std::string kind = "zero";  // zero | linear | collocation
  std::string profile = "tanh";
  double amplitude = 1.0;
  std::vector<double> gains;           // linear: n_modes entries (or one, broadcast)
  std::vector<double> channel_scales;  // optional, out_width entries
};

struct SolverParams {
  SolveConfig cfg;
  std::vector<double> xi;  // initial coefficients; padded with zeros
};

struct ManifoldParams {
  LPConfig cfg;
  double ball_radius = 0.1;
  int n_samples = 9;
  int per_unit = 33;                  // grid points per unit history interval
  std::vector<double> invariance_xi;  // unstable coordinates; empty = skip
  double t_forward = 1.0;
};

struct VerifyParams {
  std::string driver_file;          // JSON driver replacing the Chen fixtures
  std::vector<std::string> checks;  // empty = the full suite
  int bm_seeds = 5;
  int quad_cases = 5;
};

struct ProbeParams {
  std::vector<double> gammas = {0.4, 0.5};
  std::vector<std::string> drivers = {"smooth", "bm"};
  std::vector<double> betas = {0.0};
  int n_points = 257;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string format = "csv";  // csv | json

  std::optional<DriverParams> driver;
  std::optional<OperatorParams> op;
  std::optional<NonlinParams> drift;
  std::optional<NonlinParams> diffusion;
  std::optional<SolverParams> solver;
  std::optional<ManifoldParams> manifold;
  std::optional<VerifyParams> verify;
  std::optional<ProbeParams> probe;

  std::string config_file;  // basename of the source file
  std::uint64_t config_hash = 0;
};

// Parses and validates every recognized section, then rejects leftovers.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin);

// Config-to-object builders. The driver consumes the "driver" sub-stream of
// the master seed; everything else is deterministic in the parameters.
RoughPath build_driver(const DriverParams& dp, std::uint64_t master_seed);
SpectralOperator build_operator(const OperatorParams& sp);
Nonlinearity build_nonlinearity(const NonlinParams& np, std::size_t n_modes,
                                std::size_t out_width);

}  // namespace roughflow

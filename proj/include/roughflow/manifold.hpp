#pragma once

#include <string>
#include <utility>
#include <vector>

#include "roughflow/controlled_path.hpp"
#include "roughflow/nonlinearity.hpp"
#include "roughflow/ree_solver.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/spectral_operator.hpp"

namespace roughflow {

// Discrete Lyapunov-Perron machinery for the local unstable manifold of the
// origin.  Trajectories are pieced together over unit intervals [i-1, i],
// i = 0, -1, ..., -(K_max-1), each piece a mildly controlled path driven by
// the matching window of one extended driver.

struct LPConfig {
  double alpha = 2.0;   // backward bound rate on the unstable block
  double beta = 1.0;    // forward decay rate on the stable block
  double delta = 0.5;   // exponential weight of the sequence norm; (alpha-beta)/2 by default
  double gamma = 0.45;
  double eta = 0.1;
  double K = 0.02;      // per-interval integral budget used by the cut-off radius and gap value
  double gap_C = 1.0;   // embedding constant fed to the gap value
  int K_max = 12;       // history depth in unit intervals
  double lp_tol = 1e-8;
  int max_lp_iters = 60;
  bool enforce_gap = true;

  void validate() const;
};

// Value of the smallness expression controlling the contraction, and whether
// it clears the 1/2 threshold.  Pure arithmetic in the config rates; C is the
// embedding constant.  alpha <= delta makes the expression meaningless and
// throws ConfigError.
std::pair<double, bool> gap_condition(const LPConfig& cfg, double C);

// A backward solution candidate: K_max unit-interval pieces, pieces[s] living
// on [-s-1, -s].  Adjacent pieces share their seam values exactly.
struct LPSequence {
  std::vector<ControlledPath> pieces;

  int depth() const { return static_cast<int>(pieces.size()); }
};

// Zero sequence on the windows of p_ext matching cfg.K_max.
LPSequence zero_sequence(const RoughPath& p_ext, std::size_t n_modes,
                         const LPConfig& cfg);

// Weighted distance sup_i e^{-delta*(i-1)} * ||a_i - b_i||_D between two
// sequences on the same windows.
double sequence_distance(const SpectralOperator& op, const LPSequence& a,
                         const LPSequence& b, const RoughPath& p_ext,
                         const LPConfig& cfg);

struct LPApplyInfo {
  double tail_bound = 0.0;   // bound on the dropped deep-history contribution
  double k_measured = 0.0;   // largest observed per-interval integral ratio
  double seq_norm = 0.0;     // weighted norm of the input sequence
};

// One application of the Lyapunov-Perron transform: propagates unit-interval
// integrals of (f_R, g_R) along the sequence, backward through the unstable
// block and forward through the stable one, anchored at the unstable
// coordinate xi_u.  f_R and g_R are used as given (already truncated by the
// caller when that matters).  xi_u must carry no stable mass.
LPSequence lp_apply(const SpectralOperator& op, const Nonlinearity& f_R,
                    const Nonlinearity& g_R, const LPSequence& seq,
                    const std::vector<double>& xi_u, const RoughPath& p_ext,
                    const LPConfig& cfg, LPApplyInfo* info = nullptr);

struct LPFixedPoint {
  LPSequence seq;
  int iterations = 0;
  std::vector<double> rates;   // successive distance ratios
  double final_distance = 0.0;
  double tail_bound = 0.0;
  double gap_value = 0.0;
  bool gap_ok = false;
};

// Iterates lp_apply from the zero sequence until the weighted distance drops
// below lp_tol.  Rates at or above 0.9 abort with AssumptionError; running out
// of iterations throws ConvergenceError carrying the distance trace.
LPFixedPoint lp_fixed_point(const SpectralOperator& op, const Nonlinearity& f_R,
                            const Nonlinearity& g_R,
                            const std::vector<double>& xi_u,
                            const RoughPath& p_ext, const LPConfig& cfg);

struct GraphExtraction {
  std::vector<double> h_direct;  // stable block of the top piece at global time 0
  std::vector<double> h_series;  // same point recovered by re-applying the transform
  double mismatch = 0.0;
};

GraphExtraction extract_graph(const SpectralOperator& op,
                              const Nonlinearity& f_R, const Nonlinearity& g_R,
                              const LPFixedPoint& fixed,
                              const std::vector<double>& xi_u,
                              const RoughPath& p_ext, const LPConfig& cfg);

struct GraphSample {
  std::vector<double> xi_u;
  std::vector<double> h_u;
  bool converged = false;
  int iterations = 0;
  std::string note;
};

struct ManifoldGraph {
  std::vector<GraphSample> samples;
  double radius = 0.0;           // half-width of the sampled unstable mesh
  double lipschitz_estimate = 0.0;
  double gap_value = 0.0;
  bool gap_ok = false;
  double k_admissible = 0.0;     // largest budget K clearing the gap threshold
  double tail_bound = 0.0;
  CutoffConfig cutoff;
  LPConfig cfg;
};

// Samples the graph of the local unstable manifold over a mesh in the
// unstable block (n_samples points per axis, tensor-product for two unstable
// modes).  f and g are the raw nonlinearities; the cut-off radius is solved
// from the driver norms and cfg.K, and the mesh half-width is
// min(ball_radius, R/4).  Samples whose fixed-point iteration fails are kept
// with converged = false and an explanatory note.
ManifoldGraph build_manifold(const SpectralOperator& op, const Nonlinearity& f,
                             const Nonlinearity& g, const RoughPath& p_ext,
                             const LPConfig& cfg, double ball_radius,
                             int n_samples);

struct InvarianceCheck {
  double defect = 0.0;
  bool out_of_ball = false;
  std::vector<double> z_forward;     // evolved graph point
  std::vector<double> h_shifted;     // graph of the shifted driver at the evolved base
};

// Evolves the graph point over xi_u forward by t_forward with the full
// dynamics, rebuilds the graph for the shifted driver at the evolved unstable
// coordinate, and reports the stable-block distance.
InvarianceCheck invariance_defect(const ManifoldGraph& graph,
                                  const SpectralOperator& op,
                                  const Nonlinearity& f, const Nonlinearity& g,
                                  const RoughPath& p_ext,
                                  const std::vector<double>& xi_u,
                                  const SolveConfig& solve_cfg,
                                  double t_forward = 1.0);

}  // namespace roughflow

#pragma once

#include "roughflow/config.hpp"
#include "roughflow/report.hpp"

namespace roughflow {

// Command entry points behind the roughflow binary. Each consumes a parsed
// RunConfig, writes its artifacts plus a manifest under rc.out_dir, and
// returns the Report whose criteria decide the exit code. Configuration
// or numerical failures surface as exceptions from the library's hierarchy.

// Generates a driver from [driver], audits it (Chen defect, Hoelder norms),
// and serializes it in the configured format.
Report cmd_driver(const RunConfig& rc);

// Runs the global mild solve of [driver]/[operator]/[drift]/[diffusion]/
// [solver] and emits the trajectory plus per-segment diagnostics.
Report cmd_solve(const RunConfig& rc);

// Samples the local unstable manifold graph over the configured mesh and
// emits it with the gap-condition report; optionally checks invariance at
// [manifold] invariance_xi.
Report cmd_manifold(const RunConfig& rc);

// Property suite over the library invariants (Chen, quadrature oracles,
// error order, semigroup smoothing, solver oracles, cocycle, gap value,
// contraction, tangency). Deterministic in config + seed.
Report cmd_verify(const RunConfig& rc);

// Regression harness for the one-step error-order probe across driver
// families and Hoelder exponents.
Report cmd_probe_order(const RunConfig& rc);

}  // namespace roughflow

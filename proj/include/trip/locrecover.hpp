#pragma once

#include "trip/edgeestimate.hpp"

namespace trip {

struct LocRecoverOpts {
  SolverMode mode = SolverMode::kExact;
  int max_outer = 100;
  int max_inner = 100;   // fast-mode sweeps per outer iteration
  double tol = 1e-9;     // max coordinate change
  double damping = 0.7;
  // Robust loss; production default is fixed Cauchy c = 0.1. The annealed
  // variant is exposed through the same spec but is not the default.
  LossSpec loss{};
};

struct LocationEstimate {
  std::vector<int> nodes;       // sorted node ids with estimates (= C(S_k))
  std::vector<Vec3> x;          // per nodes[] entry, zero-mean
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

// Fixed-Cauchy displacement averaging over the weighted length-resolved edges:
// minimizes sum w_e rho(||x_i - x_j - ell_e d_e||) by IRLS. The weighted
// least-squares step decouples into three weighted-Laplacian systems sharing
// the per-edge scalar weights. Initialization grows an incremental consensus
// placement from the highest-w edge (each node placed at the weighted mean of
// the largest agreeing cluster of predictions from placed neighbors).
// Throws std::runtime_error when the estimated edges do not connect the node
// set (the error names the components) or on non-finite iterates.
LocationEstimate recover_locations(const ViewingGraph& g,
                                   const std::vector<EdgeLengthEstimate>& estimates,
                                   const LocRecoverOpts& opts);

}  // namespace trip

#pragma once

#include <functional>
#include <vector>

#include "trip/prefilter.hpp"

namespace trip {

enum class LossFamily { kCauchy, kWelsch, kTukey, kTls };

// Robust loss configuration. Production mode is fixed Cauchy with c = 0.1;
// annealed mode runs a geometric schedule sigma_{k+1} = tau * sigma_k.
struct LossSpec {
  LossFamily family = LossFamily::kCauchy;
  double scale = 0.1;

  bool annealed = false;
  double sigma0 = 0.0;  // 0 = derive from the spanning-tree init residuals
  double tau = 0.5;
  int stages = 20;
};

// IRLS weight psi(r)/r in (0,1] at the given scale.
double loss_weight(double residual, LossFamily family, double scale);

// rho(r); used for objective traces.
double loss_rho(double residual, LossFamily family, double scale);

// Per-family profile-admissibility constants: the clean-window lower slope
// m(a) at the window maximizing a*m(a)/(2K), the score bound K, the maximizer
// a, and h_prof = a*m(a)/(2K). All four families give h_prof = 1/2.
struct ProfileConstants {
  double m_a = 0.0;
  double k_bound = 0.0;
  double window_a = 0.0;
  double h_prof = 0.0;
};
ProfileConstants profile_constants(LossFamily family);

// Shared-edge constraint: z_u - z_t ~ g with g = log(h_{t,e} / h_{u,e}) and
// prior weight w0 = sqrt(pi_t * pi_u). t < u are pool record ordinals.
struct ScaleConstraint {
  int t = 0;
  int u = 0;
  int e = 0;
  double g = 0.0;
  double w0 = 1.0;
};

enum class SolverMode { kExact, kFast };

struct SyncOpts {
  SolverMode mode = SolverMode::kExact;
  int max_outer = 50;
  int max_inner = 100;   // fast-mode sweeps per outer iteration
  double tol = 1e-8;     // max |z change| across an outer iteration
  double damping = 0.7;  // fast-mode synchronous update damping
};

struct ScaleSolution {
  std::vector<double> z;               // per record, mean-zero per component
  std::vector<double> sync_residual;   // per constraint |z_u - z_t - g|
  std::vector<double> bar_r;           // per record; +inf when isolated
  std::vector<int> incident_count;     // per record, |N_t|
  std::vector<int> component;          // per record; -1 when isolated
  std::vector<double> objective;       // sum w0 * rho(res) after each outer solve
  int iterations = 0;
  bool converged = false;
};

// One constraint per unordered pair of triangles co-resident in an edge fiber;
// pairs sharing two fibers emit one constraint per shared fiber.
std::vector<ScaleConstraint> build_constraint_graph(const TrianglePool& pool);

// Minimum-weight spanning forest under cost sqrt(r_t * r_u), relative
// log-scales propagated from a zero root per component. Ties break on the
// smaller constraint ordinal.
std::vector<double> spanning_tree_init(const std::vector<ScaleConstraint>& constraints,
                                       const TrianglePool& pool);

// Robust IRLS to stationarity of sum w0 * rho(|z_u - z_t - g|). The first
// outer iteration solves with the prior weights alone (there are no previous
// residuals); z0 warm-starts the inner solver. Components are gauged to
// mean-zero z independently. Throws std::runtime_error on non-finite iterates.
ScaleSolution synchronize_scales(const std::vector<ScaleConstraint>& constraints,
                                 const std::vector<double>& z0, const LossSpec& spec,
                                 const SyncOpts& opts);

// Called after each annealing stage with (stage, sigma, z at stage end).
using StageProbe = std::function<void(int, double, const std::vector<double>&)>;

// Geometric annealing sigma_{k+1} = tau * sigma_k, warm-starting each stage
// from the previous one. sigma0 <= 0 selects max(scale, 2 * max |initial
// residual|) so nothing is hard-downweighted at stage 0.
ScaleSolution annealed_synchronize(const std::vector<ScaleConstraint>& constraints,
                                   const std::vector<double>& z0, const LossSpec& spec,
                                   const SyncOpts& opts, const StageProbe& probe = nullptr);

// bar_r: unweighted mean of |z_u - z_t - g| over constraints incident to each
// record; +inf for records with no constraints.
std::vector<double> incident_residual_scores(const std::vector<double>& z,
                                             const std::vector<ScaleConstraint>& constraints,
                                             std::size_t record_count);

}  // namespace trip

#include "trip/scalesync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trip {

namespace {
constexpr double kResidualFloor = 1e-12;  // avoids 0/0 in weights
constexpr double kPcgRelTol = 1e-10;
}  // namespace

double loss_weight(double residual, LossFamily family, double scale) {
  const double r = std::max(std::abs(residual), kResidualFloor);
  const double x = r / scale;
  switch (family) {
    case LossFamily::kCauchy:
      return 1.0 / (1.0 + x * x);
    case LossFamily::kWelsch:
      return std::exp(-x * x);
    case LossFamily::kTukey: {
      const double s = std::max(0.0, 1.0 - x * x);
      return s * s;
    }
    case LossFamily::kTls:
      return x < 1.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double loss_rho(double residual, LossFamily family, double scale) {
  const double r = std::abs(residual);
  const double x = r / scale;
  switch (family) {
    case LossFamily::kCauchy:
      return 0.5 * scale * scale * std::log1p(x * x);
    case LossFamily::kWelsch:
      return 0.5 * scale * scale * (1.0 - std::exp(-x * x));
    case LossFamily::kTukey: {
      // integral of psi(r) = r (1 - (r/s)^2)^2 on [0, r], capped at s^2/6
      if (x >= 1.0) return scale * scale / 6.0;
      const double u = 1.0 - x * x;
      return scale * scale * (1.0 - u * u * u) / 6.0;
    }
    case LossFamily::kTls:
      return 0.5 * std::min(r * r, scale * scale);
  }
  return 0.0;
}

ProfileConstants profile_constants(LossFamily family) {
  switch (family) {
    case LossFamily::kCauchy:
      // m(a) = 1/(1+a^2), K = 1/2, maximizer a = 1
      return {0.5, 0.5, 1.0, 0.5};
    case LossFamily::kWelsch:
      // m(a) = e^{-a^2}, K = 1/sqrt(2e), maximizer a = 1/sqrt(2)
      return {std::exp(-0.5), 1.0 / std::sqrt(2.0 * M_E), 1.0 / std::sqrt(2.0), 0.5};
    case LossFamily::kTls:
      // m(a) = 1 for 0 < a < 1, K = 1, limiting maximizer a -> 1
      return {1.0, 1.0, 1.0, 0.5};
    case LossFamily::kTukey: {
      // m(a) = (1-a^2)^2, K = 16/(25 sqrt 5), maximizer a = 1/sqrt(5)
      const double a = 1.0 / std::sqrt(5.0);
      const double m = (1.0 - a * a) * (1.0 - a * a);
      const double k = 16.0 / (25.0 * std::sqrt(5.0));
      return {m, k, a, a * m / (2.0 * k)};
    }
  }
  return {};
}

std::vector<ScaleConstraint> build_constraint_graph(const TrianglePool& pool) {
  std::vector<ScaleConstraint> constraints;
  for (std::size_t e = 0; e < pool.fibers.size(); ++e) {
    const auto& fiber = pool.fibers[e];
    for (std::size_t a = 0; a < fiber.size(); ++a) {
      for (std::size_t b = a + 1; b < fiber.size(); ++b) {
        int t = fiber[a].record;
        int u = fiber[b].record;
        double ht = fiber[a].h;
        double hu = fiber[b].h;
        if (t > u) {
          std::swap(t, u);
          std::swap(ht, hu);
        }
        ScaleConstraint c;
        c.t = t;
        c.u = u;
        c.e = static_cast<int>(e);
        c.g = std::log(ht / hu);
        c.w0 = std::sqrt(pool.records[static_cast<std::size_t>(t)].pi *
                         pool.records[static_cast<std::size_t>(u)].pi);
        constraints.push_back(c);
      }
    }
  }
  return constraints;
}

std::vector<double> spanning_tree_init(const std::vector<ScaleConstraint>& constraints,
                                       const TrianglePool& pool) {
  const std::size_t count = pool.records.size();
  std::vector<double> z(count, 0.0);
  if (count == 0) return z;

  std::vector<std::size_t> order(constraints.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> cost(constraints.size());
  for (std::size_t c = 0; c < constraints.size(); ++c)
    cost[c] = std::sqrt(pool.records[static_cast<std::size_t>(constraints[c].t)].r *
                        pool.records[static_cast<std::size_t>(constraints[c].u)].r);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cost[a] != cost[b]) return cost[a] < cost[b];
    return a < b;  // smaller constraint ordinal wins
  });

  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };

  std::vector<std::vector<std::pair<int, double>>> tree(count);  // (nbr, z_nbr - z_self)
  for (std::size_t idx : order) {
    const ScaleConstraint& c = constraints[idx];
    const int rt = find(c.t);
    const int ru = find(c.u);
    if (rt == ru) continue;
    parent[static_cast<std::size_t>(rt)] = ru;
    tree[static_cast<std::size_t>(c.t)].push_back({c.u, c.g});
    tree[static_cast<std::size_t>(c.u)].push_back({c.t, -c.g});
  }

  std::vector<char> seen(count, 0);
  std::vector<int> stack;
  for (std::size_t s = 0; s < count; ++s) {
    if (seen[s]) continue;
    seen[s] = 1;
    z[s] = 0.0;  // root convention
    stack.push_back(static_cast<int>(s));
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [u, dz] : tree[static_cast<std::size_t>(v)]) {
        if (seen[static_cast<std::size_t>(u)]) continue;
        seen[static_cast<std::size_t>(u)] = 1;
        z[static_cast<std::size_t>(u)] = z[static_cast<std::size_t>(v)] + dz;
        stack.push_back(u);
      }
    }
  }
  return z;
}

namespace {

struct SyncProblem {
  std::size_t count = 0;
  const std::vector<ScaleConstraint>* constraints = nullptr;
  std::vector<int> component;          // -1 for isolated records
  std::vector<std::vector<int>> comp_members;
  // CSR-ish incidence: per record, list of (constraint index, +1 if record is u)
  std::vector<std::vector<std::pair<int, int>>> incidence;

  void build(const std::vector<ScaleConstraint>& cons, std::size_t n) {
    count = n;
    constraints = &cons;
    incidence.assign(n, {});
    for (std::size_t c = 0; c < cons.size(); ++c) {
      incidence[static_cast<std::size_t>(cons[c].t)].push_back({static_cast<int>(c), -1});
      incidence[static_cast<std::size_t>(cons[c].u)].push_back({static_cast<int>(c), +1});
    }
    component.assign(n, -1);
    int nc = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < n; ++s) {
      if (component[s] >= 0 || incidence[s].empty()) continue;
      component[s] = nc;
      stack.push_back(static_cast<int>(s));
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (const auto& [ci, side] : incidence[static_cast<std::size_t>(v)]) {
          const ScaleConstraint& c = cons[static_cast<std::size_t>(ci)];
          const int other = (side > 0) ? c.t : c.u;
          if (component[static_cast<std::size_t>(other)] < 0) {
            component[static_cast<std::size_t>(other)] = nc;
            stack.push_back(other);
          }
        }
      }
      ++nc;
    }
    comp_members.assign(static_cast<std::size_t>(nc), {});
    for (std::size_t v = 0; v < n; ++v)
      if (component[v] >= 0) comp_members[static_cast<std::size_t>(component[v])].push_back(
          static_cast<int>(v));
  }

  void center_per_component(std::vector<double>& z) const {
    for (const auto& members : comp_members) {
      double mean = 0.0;
      for (int v : members) mean += z[static_cast<std::size_t>(v)];
      mean /= static_cast<double>(members.size());
      for (int v : members) z[static_cast<std::size_t>(v)] -= mean;
    }
  }
};

// Weighted Laplacian application y = L_w z restricted to non-isolated records.
void apply_laplacian(const SyncProblem& p, const std::vector<double>& w,
                     const std::vector<double>& z, std::vector<double>& y) {
  std::fill(y.begin(), y.end(), 0.0);
  const auto& cons = *p.constraints;
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const double wc = w[c];
    const double diff = z[static_cast<std::size_t>(cons[c].u)] -
                        z[static_cast<std::size_t>(cons[c].t)];
    y[static_cast<std::size_t>(cons[c].u)] += wc * diff;
    y[static_cast<std::size_t>(cons[c].t)] -= wc * diff;
  }
}

// Jacobi-preconditioned CG on the gauge-projected system L_w z = b. The
// all-ones direction is projected out per component every iteration instead of
// pinning a node.
void solve_pcg(const SyncProblem& p, const std::vector<double>& w, const std::vector<double>& b,
               std::vector<double>& z) {
  const std::size_t n = p.count;
  const auto& cons = *p.constraints;
  std::vector<double> diag(n, 0.0);
  for (std::size_t c = 0; c < cons.size(); ++c) {
    diag[static_cast<std::size_t>(cons[c].t)] += w[c];
    diag[static_cast<std::size_t>(cons[c].u)] += w[c];
  }
  for (std::size_t v = 0; v < n; ++v)
    if (p.component[v] >= 0 && diag[v] <= 0.0) diag[v] = 1.0;

  std::size_t active = 0;
  for (const auto& members : p.comp_members) active += members.size();
  const int max_iter = static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(
                           std::max<std::size_t>(active, 1)))));

  std::vector<double> r(n, 0.0), pdir(n, 0.0), ap(n, 0.0), mr(n, 0.0);
  p.center_per_component(z);
  apply_laplacian(p, w, z, ap);
  double bnorm2 = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (p.component[v] < 0) continue;
    r[v] = b[v] - ap[v];
    bnorm2 += b[v] * b[v];
  }
  if (bnorm2 == 0.0) return;

  auto project = [&](std::vector<double>& vec) {
    for (const auto& members : p.comp_members) {
      double mean = 0.0;
      for (int v : members) mean += vec[static_cast<std::size_t>(v)];
      mean /= static_cast<double>(members.size());
      for (int v : members) vec[static_cast<std::size_t>(v)] -= mean;
    }
  };
  project(r);

  double rz = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (p.component[v] < 0) continue;
    mr[v] = r[v] / diag[v];
    rz += r[v] * mr[v];
  }
  pdir = mr;

  for (int it = 0; it < max_iter; ++it) {
    double rnorm2 = 0.0;
    for (std::size_t v = 0; v < n; ++v)
      if (p.component[v] >= 0) rnorm2 += r[v] * r[v];
    if (rnorm2 <= kPcgRelTol * kPcgRelTol * bnorm2) break;

    apply_laplacian(p, w, pdir, ap);
    double pap = 0.0;
    for (std::size_t v = 0; v < n; ++v)
      if (p.component[v] >= 0) pap += pdir[v] * ap[v];
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t v = 0; v < n; ++v) {
      if (p.component[v] < 0) continue;
      z[v] += alpha * pdir[v];
      r[v] -= alpha * ap[v];
    }
    project(r);
    double rz_new = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (p.component[v] < 0) continue;
      mr[v] = r[v] / diag[v];
      rz_new += r[v] * mr[v];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t v = 0; v < n; ++v)
      if (p.component[v] >= 0) pdir[v] = mr[v] + beta * pdir[v];
  }
  p.center_per_component(z);
}

// Damped synchronous local-averaging sweeps: z_t <- sum w (z_u - g_oriented) / sum w.
void solve_sweeps(const SyncProblem& p, const std::vector<double>& w, const SyncOpts& opts,
                  std::vector<double>& z) {
  const std::size_t n = p.count;
  const auto& cons = *p.constraints;
  std::vector<double> num(n), den(n), znew(n);
  for (int sweep = 0; sweep < opts.max_inner; ++sweep) {
    std::fill(num.begin(), num.end(), 0.0);
    std::fill(den.begin(), den.end(), 0.0);
    for (std::size_t c = 0; c < cons.size(); ++c) {
      const double wc = w[c];
      const auto t = static_cast<std::size_t>(cons[c].t);
      const auto u = static_cast<std::size_t>(cons[c].u);
      num[t] += wc * (z[u] - cons[c].g);
      num[u] += wc * (z[t] + cons[c].g);
      den[t] += wc;
      den[u] += wc;
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (p.component[v] < 0 || den[v] <= 0.0) {
        znew[v] = z[v];
        continue;
      }
      znew[v] = (1.0 - opts.damping) * z[v] + opts.damping * num[v] / den[v];
      change = std::max(change, std::abs(znew[v] - z[v]));
    }
    z.swap(znew);
    if (change < opts.tol * 0.1) break;
  }
  p.center_per_component(z);
}

}  // namespace

ScaleSolution synchronize_scales(const std::vector<ScaleConstraint>& constraints,
                                 const std::vector<double>& z0, const LossSpec& spec,
                                 const SyncOpts& opts) {
  const std::size_t n = z0.size();
  SyncProblem p;
  p.build(constraints, n);

  ScaleSolution sol;
  sol.z = z0;
  p.center_per_component(sol.z);
  sol.component = p.component;

  std::vector<double> w(constraints.size(), 0.0);
  std::vector<double> b(n, 0.0);
  std::vector<double> prev(n, 0.0);

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // First iteration: prior weights only (no previous residuals yet).
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      double wc = constraints[c].w0;
      if (outer > 0) {
        const double res = sol.z[static_cast<std::size_t>(constraints[c].u)] -
                           sol.z[static_cast<std::size_t>(constraints[c].t)] - constraints[c].g;
        wc *= loss_weight(res, spec.family, spec.scale);
      }
      w[c] = wc;
    }
    std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      b[static_cast<std::size_t>(constraints[c].u)] += w[c] * constraints[c].g;
      b[static_cast<std::size_t>(constraints[c].t)] -= w[c] * constraints[c].g;
    }

    prev = sol.z;
    if (opts.mode == SolverMode::kExact)
      solve_pcg(p, w, b, sol.z);
    else
      solve_sweeps(p, w, opts, sol.z);

    double obj = 0.0;
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!std::isfinite(sol.z[v]))
        throw std::runtime_error("scale synchronization produced a non-finite iterate");
      change = std::max(change, std::abs(sol.z[v] - prev[v]));
    }
    for (const auto& c : constraints) {
      const double res = sol.z[static_cast<std::size_t>(c.u)] -
                         sol.z[static_cast<std::size_t>(c.t)] - c.g;
      obj += c.w0 * loss_rho(res, spec.family, spec.scale);
    }
    sol.objective.push_back(obj);
    sol.iterations = outer + 1;
    if (outer > 0 && change < opts.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.sync_residual.resize(constraints.size());
  for (std::size_t c = 0; c < constraints.size(); ++c)
    sol.sync_residual[c] = std::abs(sol.z[static_cast<std::size_t>(constraints[c].u)] -
                                    sol.z[static_cast<std::size_t>(constraints[c].t)] -
                                    constraints[c].g);
  sol.bar_r = incident_residual_scores(sol.z, constraints, n);
  sol.incident_count.assign(n, 0);
  for (const auto& c : constraints) {
    ++sol.incident_count[static_cast<std::size_t>(c.t)];
    ++sol.incident_count[static_cast<std::size_t>(c.u)];
  }
  return sol;
}

ScaleSolution annealed_synchronize(const std::vector<ScaleConstraint>& constraints,
                                   const std::vector<double>& z0, const LossSpec& spec,
                                   const SyncOpts& opts, const StageProbe& probe) {
  double sigma0 = spec.sigma0;
  if (!(sigma0 > 0.0)) {
    double max_res = 0.0;
    for (const auto& c : constraints)
      max_res = std::max(max_res, std::abs(z0[static_cast<std::size_t>(c.u)] -
                                           z0[static_cast<std::size_t>(c.t)] - c.g));
    sigma0 = std::max(spec.scale, 2.0 * max_res);
  }

  ScaleSolution sol;
  sol.z = z0;
  double sigma = sigma0;
  for (int stage = 0; stage < spec.stages; ++stage) {
    LossSpec stage_spec = spec;
    stage_spec.scale = sigma;
    stage_spec.annealed = false;
    sol = synchronize_scales(constraints, sol.z, stage_spec, opts);
    if (probe) probe(stage, sigma, sol.z);
    sigma *= spec.tau;
  }
  return sol;
}

std::vector<double> incident_residual_scores(const std::vector<double>& z,
                                             const std::vector<ScaleConstraint>& constraints,
                                             std::size_t record_count) {
  std::vector<double> sum(record_count, 0.0);
  std::vector<int> deg(record_count, 0);
  for (const auto& c : constraints) {
    const double res = std::abs(z[static_cast<std::size_t>(c.u)] -
                                z[static_cast<std::size_t>(c.t)] - c.g);
    sum[static_cast<std::size_t>(c.t)] += res;
    sum[static_cast<std::size_t>(c.u)] += res;
    ++deg[static_cast<std::size_t>(c.t)];
    ++deg[static_cast<std::size_t>(c.u)];
  }
  std::vector<double> bar(record_count, std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < record_count; ++t)
    if (deg[t] > 0) bar[t] = sum[t] / deg[t];
  return bar;
}

}  // namespace trip

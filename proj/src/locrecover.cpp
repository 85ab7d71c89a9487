#include "trip/locrecover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace trip {

namespace {

constexpr double kResidualFloor = 1e-12;
constexpr double kPcgRelTol = 1e-10;
constexpr double kConsensusTolFactor = 0.3;  // x local median edge length

struct LocEdge {
  int i = 0;  // local indices
  int j = 0;
  Vec3 v = Vec3::Zero();  // x_i - x_j target
  double w = 0.0;
};

struct LocProblem {
  int m = 0;
  std::vector<LocEdge> edges;
  std::vector<std::vector<int>> incident;  // local node -> edge indices

  void center(std::vector<Vec3>& x) const {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : x) mean += p;
    mean /= static_cast<double>(m);
    for (auto& p : x) p -= mean;
  }
};

// Incremental consensus placement. Nodes are placed one at a time at the
// weighted mean of the largest mutually-agreeing cluster of predictions
// x_j + v from already-placed neighbors; agreement tolerance is relative to
// the local median edge length. Nodes with only disagreeing or single
// predictions wait until nothing better remains.
std::vector<Vec3> consensus_init(const LocProblem& p) {
  const int m = p.m;
  std::vector<Vec3> x(static_cast<std::size_t>(m), Vec3::Zero());
  std::vector<char> placed(static_cast<std::size_t>(m), 0);

  std::vector<double> typical_len(static_cast<std::size_t>(m), 0.0);
  for (int v = 0; v < m; ++v) {
    std::vector<double> lens;
    lens.reserve(p.incident[static_cast<std::size_t>(v)].size());
    for (int e : p.incident[static_cast<std::size_t>(v)])
      lens.push_back(p.edges[static_cast<std::size_t>(e)].v.norm());
    std::sort(lens.begin(), lens.end());
    typical_len[static_cast<std::size_t>(v)] = lens.empty() ? 1.0 : lens[(lens.size() - 1) / 2];
  }

  // Seed with the highest-weight edge (ties by edge index).
  int seed = 0;
  for (std::size_t e = 1; e < p.edges.size(); ++e)
    if (p.edges[e].w > p.edges[static_cast<std::size_t>(seed)].w) seed = static_cast<int>(e);
  const LocEdge& se = p.edges[static_cast<std::size_t>(seed)];
  x[static_cast<std::size_t>(se.i)] = 0.5 * se.v;
  x[static_cast<std::size_t>(se.j)] = -0.5 * se.v;
  placed[static_cast<std::size_t>(se.i)] = 1;
  placed[static_cast<std::size_t>(se.j)] = 1;

  struct Score {
    int cluster = 0;
    double weight = 0.0;
    Vec3 pos = Vec3::Zero();
  };
  auto evaluate = [&](int node) -> Score {
    std::vector<std::pair<Vec3, double>> preds;
    for (int e : p.incident[static_cast<std::size_t>(node)]) {
      const LocEdge& ed = p.edges[static_cast<std::size_t>(e)];
      if (ed.i == node && placed[static_cast<std::size_t>(ed.j)])
        preds.push_back({x[static_cast<std::size_t>(ed.j)] + ed.v, ed.w});
      else if (ed.j == node && placed[static_cast<std::size_t>(ed.i)])
        preds.push_back({x[static_cast<std::size_t>(ed.i)] - ed.v, ed.w});
    }
    Score best;
    if (preds.empty()) return best;
    const double tol =
        kConsensusTolFactor * std::max(typical_len[static_cast<std::size_t>(node)], 1e-12);
    for (std::size_t a = 0; a < preds.size(); ++a) {
      int cluster = 0;
      double weight = 0.0;
      Vec3 wsum = Vec3::Zero();
      for (const auto& [pos, w] : preds) {
        if ((pos - preds[a].first).norm() <= tol) {
          ++cluster;
          weight += w;
          wsum += w * pos;
        }
      }
      if (cluster > best.cluster || (cluster == best.cluster && weight > best.weight)) {
        best.cluster = cluster;
        best.weight = weight;
        best.pos = wsum / weight;
      }
    }
    return best;
  };

  // Lazy max-heap keyed by (cluster size, total weight, -node). Stale entries
  // are re-validated on pop.
  using Entry = std::tuple<int, double, int>;
  std::priority_queue<Entry> heap;
  auto push_neighbors = [&](int node) {
    for (int e : p.incident[static_cast<std::size_t>(node)]) {
      const LocEdge& ed = p.edges[static_cast<std::size_t>(e)];
      const int other = (ed.i == node) ? ed.j : ed.i;
      if (placed[static_cast<std::size_t>(other)]) continue;
      const Score s = evaluate(other);
      if (s.cluster > 0) heap.push({s.cluster, s.weight, -other});
    }
  };
  push_neighbors(se.i);
  push_neighbors(se.j);

  while (!heap.empty()) {
    const auto [cl, wt, negnode] = heap.top();
    heap.pop();
    const int node = -negnode;
    if (placed[static_cast<std::size_t>(node)]) continue;
    const Score s = evaluate(node);
    if (s.cluster != cl || s.weight != wt) {
      if (s.cluster > 0) heap.push({s.cluster, s.weight, -node});
      continue;
    }
    x[static_cast<std::size_t>(node)] = s.pos;
    placed[static_cast<std::size_t>(node)] = 1;
    push_neighbors(node);
  }
  return x;
}

void apply_laplacian(const LocProblem& p, const std::vector<double>& w,
                     const std::vector<Vec3>& x, std::vector<Vec3>& y) {
  std::fill(y.begin(), y.end(), Vec3::Zero());
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    const Vec3 diff = w[e] * (x[static_cast<std::size_t>(p.edges[e].i)] -
                              x[static_cast<std::size_t>(p.edges[e].j)]);
    y[static_cast<std::size_t>(p.edges[e].i)] += diff;
    y[static_cast<std::size_t>(p.edges[e].j)] -= diff;
  }
}

// PCG on the three coordinate systems at once (they share L_w).
void solve_pcg(const LocProblem& p, const std::vector<double>& w, const std::vector<Vec3>& b,
               std::vector<Vec3>& x) {
  const std::size_t n = static_cast<std::size_t>(p.m);
  std::vector<double> diag(n, 0.0);
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    diag[static_cast<std::size_t>(p.edges[e].i)] += w[e];
    diag[static_cast<std::size_t>(p.edges[e].j)] += w[e];
  }
  for (auto& d : diag)
    if (d <= 0.0) d = 1.0;

  const int max_iter =
      static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))));

  auto project = [&](std::vector<Vec3>& vec) {
    Vec3 mean = Vec3::Zero();
    for (const auto& v : vec) mean += v;
    mean /= static_cast<double>(n);
    for (auto& v : vec) v -= mean;
  };

  std::vector<Vec3> r(n), pdir(n), ap(n), mr(n);
  p.center(x);
  apply_laplacian(p, w, x, ap);
  double bnorm2 = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    r[v] = b[v] - ap[v];
    bnorm2 += b[v].squaredNorm();
  }
  if (bnorm2 == 0.0) return;
  project(r);

  double rz = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    mr[v] = r[v] / diag[v];
    rz += r[v].dot(mr[v]);
  }
  pdir = mr;

  for (int it = 0; it < max_iter; ++it) {
    double rnorm2 = 0.0;
    for (std::size_t v = 0; v < n; ++v) rnorm2 += r[v].squaredNorm();
    if (rnorm2 <= kPcgRelTol * kPcgRelTol * bnorm2) break;

    apply_laplacian(p, w, pdir, ap);
    double pap = 0.0;
    for (std::size_t v = 0; v < n; ++v) pap += pdir[v].dot(ap[v]);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t v = 0; v < n; ++v) {
      x[v] += alpha * pdir[v];
      r[v] -= alpha * ap[v];
    }
    project(r);
    double rz_new = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      mr[v] = r[v] / diag[v];
      rz_new += r[v].dot(mr[v]);
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t v = 0; v < n; ++v) pdir[v] = mr[v] + beta * pdir[v];
  }
  p.center(x);
}

// Damped synchronous sweeps x_i <- sum_j w (x_j + v_oriented) / sum_j w.
void solve_sweeps(const LocProblem& p, const std::vector<double>& w, const LocRecoverOpts& opts,
                  std::vector<Vec3>& x) {
  const std::size_t n = static_cast<std::size_t>(p.m);
  std::vector<Vec3> num(n);
  std::vector<double> den(n);
  std::vector<Vec3> xnew(n);
  for (int sweep = 0; sweep < opts.max_inner; ++sweep) {
    std::fill(num.begin(), num.end(), Vec3::Zero());
    std::fill(den.begin(), den.end(), 0.0);
    for (std::size_t e = 0; e < p.edges.size(); ++e) {
      const LocEdge& ed = p.edges[e];
      num[static_cast<std::size_t>(ed.i)] += w[e] * (x[static_cast<std::size_t>(ed.j)] + ed.v);
      num[static_cast<std::size_t>(ed.j)] += w[e] * (x[static_cast<std::size_t>(ed.i)] - ed.v);
      den[static_cast<std::size_t>(ed.i)] += w[e];
      den[static_cast<std::size_t>(ed.j)] += w[e];
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (den[v] <= 0.0) {
        xnew[v] = x[v];
        continue;
      }
      xnew[v] = (1.0 - opts.damping) * x[v] + (opts.damping / den[v]) * num[v];
      change = std::max(change, (xnew[v] - x[v]).lpNorm<Eigen::Infinity>());
    }
    x.swap(xnew);
    if (change < opts.tol * 0.1) break;
  }
  p.center(x);
}

}  // namespace

LocationEstimate recover_locations(const ViewingGraph& g,
                                   const std::vector<EdgeLengthEstimate>& estimates,
                                   const LocRecoverOpts& opts) {
  if (estimates.empty()) throw std::runtime_error("no edge length estimates to average");

  // Local indexing over the nodes the estimates touch.
  std::vector<int> nodes;
  for (const auto& est : estimates) {
    nodes.push_back(g.edges[static_cast<std::size_t>(est.e)].i);
    nodes.push_back(g.edges[static_cast<std::size_t>(est.e)].j);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<int> local(static_cast<std::size_t>(g.n), -1);
  for (std::size_t v = 0; v < nodes.size(); ++v) local[static_cast<std::size_t>(nodes[v])] =
      static_cast<int>(v);

  LocProblem p;
  p.m = static_cast<int>(nodes.size());
  p.incident.assign(nodes.size(), {});
  for (const auto& est : estimates) {
    const auto& m = g.edges[static_cast<std::size_t>(est.e)];
    LocEdge e;
    e.i = local[static_cast<std::size_t>(m.i)];
    e.j = local[static_cast<std::size_t>(m.j)];
    e.v = est.ell * m.d;
    e.w = est.w;
    p.incident[static_cast<std::size_t>(e.i)].push_back(static_cast<int>(p.edges.size()));
    p.incident[static_cast<std::size_t>(e.j)].push_back(static_cast<int>(p.edges.size()));
    p.edges.push_back(e);
  }

  // Connectivity check; error names the components.
  {
    std::vector<int> comp(nodes.size(), -1);
    int nc = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < nodes.size(); ++s) {
      if (comp[s] >= 0) continue;
      comp[s] = nc;
      stack.push_back(static_cast<int>(s));
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int e : p.incident[static_cast<std::size_t>(v)]) {
          const LocEdge& ed = p.edges[static_cast<std::size_t>(e)];
          const int other = (ed.i == v) ? ed.j : ed.i;
          if (comp[static_cast<std::size_t>(other)] < 0) {
            comp[static_cast<std::size_t>(other)] = nc;
            stack.push_back(other);
          }
        }
      }
      ++nc;
    }
    if (nc > 1) {
      std::string msg = "estimated edges do not connect the node set; components:";
      for (int c = 0; c < nc; ++c) {
        msg += " {";
        int shown = 0;
        for (std::size_t v = 0; v < nodes.size(); ++v) {
          if (comp[v] != c) continue;
          if (shown++ > 0) msg += ",";
          if (shown > 8) {
            msg += "...";
            break;
          }
          msg += std::to_string(nodes[v]);
        }
        msg += "}";
      }
      throw std::runtime_error(msg);
    }
  }

  LocationEstimate out;
  out.nodes = nodes;
  out.x = consensus_init(p);
  p.center(out.x);

  const LossSpec& loss = opts.loss;
  std::vector<double> w(p.edges.size(), 0.0);
  std::vector<Vec3> b(nodes.size());
  std::vector<Vec3> prev(nodes.size());

  // Annealed variant: geometric schedule on the scale, fixed mode runs a
  // single stage at loss.scale.
  std::vector<double> schedule;
  if (loss.annealed) {
    double sigma = loss.sigma0;
    if (!(sigma > 0.0)) {
      double max_res = 0.0;
      for (std::size_t e = 0; e < p.edges.size(); ++e) {
        const LocEdge& ed = p.edges[e];
        max_res = std::max(max_res, (out.x[static_cast<std::size_t>(ed.i)] -
                                     out.x[static_cast<std::size_t>(ed.j)] - ed.v)
                                        .norm());
      }
      sigma = std::max(loss.scale, 2.0 * max_res);
    }
    for (int s = 0; s < loss.stages; ++s) {
      schedule.push_back(sigma);
      sigma *= loss.tau;
    }
  } else {
    schedule.push_back(loss.scale);
  }

  for (double sigma : schedule) {
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      for (std::size_t e = 0; e < p.edges.size(); ++e) {
        const LocEdge& ed = p.edges[e];
        const double res =
            std::max((out.x[static_cast<std::size_t>(ed.i)] -
                      out.x[static_cast<std::size_t>(ed.j)] - ed.v)
                         .norm(),
                     kResidualFloor);
        w[e] = ed.w * loss_weight(res, loss.family, sigma);
      }
      std::fill(b.begin(), b.end(), Vec3::Zero());
      for (std::size_t e = 0; e < p.edges.size(); ++e) {
        const LocEdge& ed = p.edges[e];
        b[static_cast<std::size_t>(ed.i)] += w[e] * ed.v;
        b[static_cast<std::size_t>(ed.j)] -= w[e] * ed.v;
      }

      prev = out.x;
      if (opts.mode == SolverMode::kExact)
        solve_pcg(p, w, b, out.x);
      else
        solve_sweeps(p, w, opts, out.x);

      double obj = 0.0;
      double change = 0.0;
      for (std::size_t v = 0; v < nodes.size(); ++v) {
        if (!out.x[v].allFinite())
          throw std::runtime_error("displacement averaging produced a non-finite iterate");
        change = std::max(change, (out.x[v] - prev[v]).lpNorm<Eigen::Infinity>());
      }
      for (std::size_t e = 0; e < p.edges.size(); ++e) {
        const LocEdge& ed = p.edges[e];
        const double res = (out.x[static_cast<std::size_t>(ed.i)] -
                            out.x[static_cast<std::size_t>(ed.j)] - ed.v)
                               .norm();
        obj += ed.w * loss_rho(res, loss.family, sigma);
      }
      out.objective.push_back(obj);
      ++out.iterations;
      if (change < opts.tol) {
        out.converged = true;
        break;
      }
      out.converged = false;
    }
  }
  p.center(out.x);
  return out;
}

}  // namespace trip

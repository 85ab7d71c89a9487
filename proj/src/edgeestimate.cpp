#include "trip/edgeestimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trip {

namespace {

constexpr double kCauchyC = 0.1;  // robust scale shared across the pipeline

// Lower median of a sorted vector.
double lower_median(const std::vector<double>& sorted) {
  return sorted[(sorted.size() - 1) / 2];
}

struct UnionFind {
  std::vector<int> parent;
  std::vector<int> size;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)), size(static_cast<std::size_t>(n), 1) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  // Returns the size of the merged component.
  int unite(int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return size[static_cast<std::size_t>(ra)];
    if (size[static_cast<std::size_t>(ra)] < size[static_cast<std::size_t>(rb)]) std::swap(ra, rb);
    parent[static_cast<std::size_t>(rb)] = ra;
    size[static_cast<std::size_t>(ra)] += size[static_cast<std::size_t>(rb)];
    return size[static_cast<std::size_t>(ra)];
  }
};

}  // namespace

SelectionState select_triangle_prefix(const TrianglePool& pool, const ScaleSolution& sync,
                                      const ViewingGraph& g, const SelectionParams& params) {
  if (!(params.gamma > 0.0) || params.gamma > 1.0)
    throw std::invalid_argument("gamma must be in (0, 1]");
  if (params.m_min < 1) throw std::invalid_argument("m_min must be >= 1");

  const std::size_t count = pool.records.size();

  // Support-regularized ranking score (sum |r_sync| + kappa)/(|N_t| + 1);
  // isolated records stay at +inf and sort last.
  std::vector<double> score(count, std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < count; ++t) {
    const int deg = sync.incident_count[t];
    if (deg > 0) score[t] = (sync.bar_r[t] * deg + params.score_kappa) / (deg + 1);
  }

  SelectionState state;
  state.selected.assign(count, 0);
  state.active.assign(g.edges.size(), 0);
  state.in_component.assign(static_cast<std::size_t>(g.n), 0);

  state.order.resize(count);
  std::iota(state.order.begin(), state.order.end(), 0);
  std::sort(state.order.begin(), state.order.end(), [&](int a, int b) {
    const auto sa = score[static_cast<std::size_t>(a)];
    const auto sb = score[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    const auto& ra = pool.records[static_cast<std::size_t>(a)];
    const auto& rb = pool.records[static_cast<std::size_t>(b)];
    if (ra.r != rb.r) return ra.r < rb.r;
    return ra.tri < rb.tri;
  });

  // Fiber membership per record (the edges where the record survived).
  std::vector<std::vector<int>> member_edges(count);
  for (std::size_t e = 0; e < pool.fibers.size(); ++e)
    for (const auto& entry : pool.fibers[e])
      member_edges[static_cast<std::size_t>(entry.record)].push_back(static_cast<int>(e));

  UnionFind uf(g.n);
  std::vector<int> support(g.edges.size(), 0);
  int largest = g.n > 0 ? 1 : 0;
  const double target = params.gamma * g.n;

  state.prefix = 0;
  bool reached = g.n > 0 && static_cast<double>(largest) >= target;
  for (std::size_t rank = 0; rank < count && !reached; ++rank) {
    const int t = state.order[rank];
    state.selected[static_cast<std::size_t>(t)] = 1;
    state.prefix = static_cast<int>(rank) + 1;
    for (int e : member_edges[static_cast<std::size_t>(t)]) {
      if (++support[static_cast<std::size_t>(e)] == params.m_min) {
        state.active[static_cast<std::size_t>(e)] = 1;
        const int merged = uf.unite(g.edges[static_cast<std::size_t>(e)].i,
                                    g.edges[static_cast<std::size_t>(e)].j);
        largest = std::max(largest, merged);
      }
    }
    if (static_cast<double>(largest) >= target) reached = true;
  }
  state.shortfall = !reached;

  // Largest component; ties break toward the smaller minimum node id via the
  // ascending scan.
  int best_root = -1;
  for (int v = 0; v < g.n; ++v) {
    const int r = uf.find(v);
    if (best_root < 0 || uf.size[static_cast<std::size_t>(r)] >
                             uf.size[static_cast<std::size_t>(best_root)])
      best_root = r;
  }
  if (best_root >= 0) {
    for (int v = 0; v < g.n; ++v) {
      if (uf.find(v) == best_root) {
        state.component.push_back(v);
        state.in_component[static_cast<std::size_t>(v)] = 1;
      }
    }
  }
  state.coverage = g.n > 0 ? static_cast<double>(state.component.size()) / g.n : 0.0;
  return state;
}

std::vector<EdgeLengthEstimate> aggregate_edge_lengths(const SelectionState& state,
                                                       const ScaleSolution& sync,
                                                       const TrianglePool& pool,
                                                       const ViewingGraph& g) {
  std::vector<EdgeLengthEstimate> estimates;
  for (std::size_t e = 0; e < pool.fibers.size(); ++e) {
    if (!state.active[e]) continue;
    const auto& m = g.edges[e];
    if (!state.in_component[static_cast<std::size_t>(m.i)] ||
        !state.in_component[static_cast<std::size_t>(m.j)])
      continue;

    EdgeLengthEstimate est;
    est.e = static_cast<int>(e);
    for (const auto& entry : pool.fibers[e])
      if (state.selected[static_cast<std::size_t>(entry.record)])
        est.proposals.push_back(std::exp(sync.z[static_cast<std::size_t>(entry.record)]) *
                                entry.h);
    if (est.proposals.empty()) continue;
    std::sort(est.proposals.begin(), est.proposals.end());
    est.ell = lower_median(est.proposals);

    std::vector<double> dev;
    dev.reserve(est.proposals.size());
    for (double p : est.proposals) dev.push_back(std::abs(p / est.ell - 1.0));
    std::sort(dev.begin(), dev.end());
    est.delta = lower_median(dev);

    const double x = est.delta / kCauchyC;
    const double support = static_cast<double>(est.proposals.size());
    est.w = (1.0 / (1.0 + x * x)) * (support / (support + 1.0));
    estimates.push_back(std::move(est));
  }
  return estimates;
}

}  // namespace trip

#include "trip/prefilter.hpp"

#include <algorithm>
#include <stdexcept>

namespace trip {

Vec3 side_ratios(const Vec3& a, const Vec3& b, const Vec3& c) {
  return Vec3(b.cross(c).norm(), c.cross(a).norm(), a.cross(b).norm());
}

double closure_residual(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& h) {
  const double hn = h.norm();
  if (!(hn > 0.0)) throw std::invalid_argument("degenerate triangle: zero side-ratio vector");
  return (h[0] * a + h[1] * b + h[2] * c).norm() / hn;
}

TrianglePool prefilter_triangles(const ViewingGraph& g, const TriangleIndex& tri,
                                 const PrefilterParams& params) {
  if (!(params.collinearity_eps > 0.0) || !(params.residual_max >= 0.0) || params.pool_cap < 1 ||
      !(params.reliability_scale > 0.0))
    throw std::invalid_argument("invalid prefilter params");

  struct Candidate {
    std::array<int, 3> tri;
    Vec3 h;
    double r;
    double pi;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(tri.triples.size());

  for (const auto& t : tri.triples) {
    const int i = t[0], j = t[1], k = t[2];
    // Signs resolved from canonical storage: a = d_ij, b = d_jk, c = d_ki = -d_ik.
    const Vec3 a = g.direction(i, j);
    const Vec3 b = g.direction(j, k);
    const Vec3 c = g.direction(k, i);
    const Vec3 h = side_ratios(a, b, c);
    if (h.minCoeff() < params.collinearity_eps) continue;
    const double r = closure_residual(a, b, c, h);
    if (r > params.residual_max) continue;
    const double x = r / params.reliability_scale;
    candidates.push_back({t, h, r, 1.0 / (1.0 + x * x)});
  }

  // Per-edge fibers: sort incident candidates by (r, triple) and truncate at
  // the cap. A candidate evicted from every fiber is dropped entirely.
  std::vector<std::vector<std::pair<int, double>>> fiber_cands(g.edges.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& [i, j, k] = candidates[c].tri;
    fiber_cands[static_cast<std::size_t>(g.edge_ordinal(i, j))].push_back(
        {static_cast<int>(c), candidates[c].h[0]});
    fiber_cands[static_cast<std::size_t>(g.edge_ordinal(j, k))].push_back(
        {static_cast<int>(c), candidates[c].h[1]});
    fiber_cands[static_cast<std::size_t>(g.edge_ordinal(i, k))].push_back(
        {static_cast<int>(c), candidates[c].h[2]});
  }

  // Truncate each fiber at the cap, then compact the surviving candidates in
  // lexicographic triple order so record ordinals double as the tie-break key.
  std::vector<char> survives(candidates.size(), 0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto& list = fiber_cands[e];
    std::sort(list.begin(), list.end(), [&](const auto& lhs, const auto& rhs) {
      const Candidate& a = candidates[static_cast<std::size_t>(lhs.first)];
      const Candidate& b = candidates[static_cast<std::size_t>(rhs.first)];
      if (a.r != b.r) return a.r < b.r;
      return a.tri < b.tri;
    });
    if (static_cast<int>(list.size()) > params.pool_cap)
      list.resize(static_cast<std::size_t>(params.pool_cap));
    for (const auto& [cand, hval] : list) survives[static_cast<std::size_t>(cand)] = 1;
  }

  TrianglePool pool;
  pool.fibers.assign(g.edges.size(), {});
  std::vector<int> record_of(candidates.size(), -1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!survives[c]) continue;
    record_of[c] = static_cast<int>(pool.records.size());
    pool.records.push_back({candidates[c].tri, candidates[c].h, candidates[c].r, candidates[c].pi});
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    for (const auto& [cand, hval] : fiber_cands[e])
      pool.fibers[e].push_back({record_of[static_cast<std::size_t>(cand)], hval});
  return pool;
}

}  // namespace trip

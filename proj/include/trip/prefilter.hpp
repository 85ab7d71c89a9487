#pragma once

#include "trip/viewgraph.hpp"

namespace trip {

struct PrefilterParams {
  double collinearity_eps = 1e-3;
  double residual_max = 0.05;
  int pool_cap = 4;
  double reliability_scale = 0.01;
};

// One retained triangle. h is indexed so h[0] pairs with edge (i,j), h[1] with
// (j,k), h[2] with (k,i); r is the normalized closure residual; pi the
// Cauchy-shaped reliability score.
struct TriangleRecord {
  std::array<int, 3> tri{};
  Vec3 h = Vec3::Zero();
  double r = 0.0;
  double pi = 1.0;
};

struct FiberEntry {
  int record = 0;   // index into TrianglePool::records
  double h = 0.0;   // side-ratio entry of that triangle for this edge
};

struct TrianglePool {
  std::vector<TriangleRecord> records;
  // Per camera edge: surviving incident triangles sorted by r ascending,
  // at most pool_cap entries. A record appears in <= 3 fibers; it is retained
  // iff it survives in at least one.
  std::vector<std::vector<FiberEntry>> fibers;
};

// h_t = (||b x c||, ||c x a||, ||a x b||) for a = d_ij, b = d_jk, c = d_ki.
Vec3 side_ratios(const Vec3& a, const Vec3& b, const Vec3& c);

// ||h1 a + h2 b + h3 c|| / ||h||; throws std::invalid_argument when ||h|| = 0.
double closure_residual(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& h);

TrianglePool prefilter_triangles(const ViewingGraph& g, const TriangleIndex& tri,
                                 const PrefilterParams& params);

}  // namespace trip

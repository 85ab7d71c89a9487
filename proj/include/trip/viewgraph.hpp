#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace trip {

using Vec3 = Eigen::Vector3d;

// Unit direction measurement for the unordered camera pair {i, j}, stored in
// canonical orientation i < j. d points from j toward i, i.e. the clean value
// is (x_i - x_j) / ||x_i - x_j||. Consumers needing d_ji negate on read.
struct DirectionMeasurement {
  int i = 0;
  int j = 0;
  Vec3 d = Vec3::Zero();
};

struct ViewingGraph {
  int n = 0;
  std::vector<DirectionMeasurement> edges;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists

  static std::uint64_t pair_key(int i, int j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
  }

  // Edge ordinal of the unordered pair, or -1.
  int edge_ordinal(int i, int j) const {
    auto it = edge_index.find(pair_key(i, j));
    return it == edge_index.end() ? -1 : it->second;
  }

  // Oriented measurement d_ij for any order of (i, j).
  Vec3 direction(int i, int j) const {
    const int e = edge_ordinal(i, j);
    const DirectionMeasurement& m = edges[static_cast<std::size_t>(e)];
    return (i == m.i) ? m.d : Vec3(-m.d);
  }

  std::unordered_map<std::uint64_t, int> edge_index;
};

// All 3-cliques, each listed once as (i, j, k) with i < j < k, plus the fiber
// of triangles containing each edge.
struct TriangleIndex {
  std::vector<std::array<int, 3>> triples;
  std::vector<std::vector<int>> edge_fibers;  // per edge ordinal
};

// Validates, renormalizes and canonicalizes the measurements. Throws
// std::invalid_argument on self-loops, zero vectors, out-of-range ids, or
// duplicate pairs whose directions disagree by more than 1e-6 rad; consistent
// duplicates are dropped keeping the first.
ViewingGraph build_viewing_graph(int n,
                                 const std::vector<std::tuple<int, int, Vec3>>& measurements);

// Sorted-neighbor intersection; cost ~ sum over edges of min endpoint degree.
TriangleIndex enumerate_triangles(const ViewingGraph& g);

}  // namespace trip

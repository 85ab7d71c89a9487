#include "trip/viewgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trip {

namespace {
constexpr double kDuplicateAngleTol = 1e-6;  // rad
}

ViewingGraph build_viewing_graph(int n,
                                 const std::vector<std::tuple<int, int, Vec3>>& measurements) {
  if (n < 0) throw std::invalid_argument("node count must be nonnegative");
  ViewingGraph g;
  g.n = n;
  g.adjacency.assign(static_cast<std::size_t>(n), {});

  for (const auto& [a, b, v] : measurements) {
    if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::invalid_argument("node id out of range: (" + std::to_string(a) + "," +
                                  std::to_string(b) + ")");
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw std::invalid_argument("zero or non-finite direction for pair (" + std::to_string(a) +
                                  "," + std::to_string(b) + ")");
    DirectionMeasurement m;
    m.i = std::min(a, b);
    m.j = std::max(a, b);
    m.d = (a < b) ? Vec3(v / norm) : Vec3(-v / norm);

    const std::uint64_t key = ViewingGraph::pair_key(m.i, m.j);
    auto it = g.edge_index.find(key);
    if (it != g.edge_index.end()) {
      const Vec3& prev = g.edges[static_cast<std::size_t>(it->second)].d;
      const double cosang = std::clamp(prev.dot(m.d), -1.0, 1.0);
      if (std::acos(cosang) > kDuplicateAngleTol)
        throw std::invalid_argument("inconsistent duplicate measurement for pair (" +
                                    std::to_string(m.i) + "," + std::to_string(m.j) + ")");
      continue;  // consistent duplicate: keep the first
    }
    g.edge_index.emplace(key, static_cast<int>(g.edges.size()));
    g.edges.push_back(m);
  }

  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    g.adjacency[static_cast<std::size_t>(g.edges[e].i)].push_back(g.edges[e].j);
    g.adjacency[static_cast<std::size_t>(g.edges[e].j)].push_back(g.edges[e].i);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

TriangleIndex enumerate_triangles(const ViewingGraph& g) {
  TriangleIndex index;
  index.edge_fibers.assign(g.edges.size(), {});

  // For each edge (i, j) with i < j, intersect the sorted neighbor lists and
  // keep common neighbors k > j so each clique appears once.
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const int i = g.edges[e].i;
    const int j = g.edges[e].j;
    const auto& ni = g.adjacency[static_cast<std::size_t>(i)];
    const auto& nj = g.adjacency[static_cast<std::size_t>(j)];
    auto a = ni.begin();
    auto b = nj.begin();
    while (a != ni.end() && b != nj.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        if (*a > j) index.triples.push_back({i, j, *a});
        ++a;
        ++b;
      }
    }
  }
  std::sort(index.triples.begin(), index.triples.end());

  for (std::size_t t = 0; t < index.triples.size(); ++t) {
    const auto& [i, j, k] = index.triples[t];
    index.edge_fibers[static_cast<std::size_t>(g.edge_ordinal(i, j))].push_back(
        static_cast<int>(t));
    index.edge_fibers[static_cast<std::size_t>(g.edge_ordinal(j, k))].push_back(
        static_cast<int>(t));
    index.edge_fibers[static_cast<std::size_t>(g.edge_ordinal(i, k))].push_back(
        static_cast<int>(t));
  }
  return index;
}

}  // namespace trip

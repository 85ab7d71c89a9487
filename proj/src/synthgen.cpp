#include "trip/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "trip/rng.hpp"

namespace trip {

namespace {

std::vector<Vec3> grid_locations(const SceneConfig& cfg, CounterRng& rng) {
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.n))));
  std::vector<Vec3> x;
  x.reserve(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    const int row = i / side;
    const int col = i % side;
    x.emplace_back(cfg.grid_spacing * col, cfg.grid_spacing * row,
                   rng.next_uniform(-cfg.grid_z_jitter, cfg.grid_z_jitter));
  }
  return x;
}

std::vector<Vec3> torus_locations(const SceneConfig& cfg, CounterRng& rng) {
  std::vector<Vec3> x;
  x.reserve(static_cast<std::size_t>(cfg.n));
  const double step = 2.0 * M_PI / cfg.n;
  for (int i = 0; i < cfg.n; ++i) {
    const double theta = step * i + cfg.torus_theta_jitter * step * rng.next_uniform(-0.5, 0.5);
    const double phi = rng.next_uniform(0.0, 2.0 * M_PI);
    const double ring = cfg.torus_R + cfg.torus_r * std::cos(phi);
    x.emplace_back(ring * std::cos(theta), ring * std::sin(theta), cfg.torus_r * std::sin(phi));
  }
  return x;
}

// k nearest neighbors of each node by ground-truth distance (ties by id).
std::vector<std::vector<int>> knn_lists(const std::vector<Vec3>& x, int k) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<int>> nn(static_cast<std::size_t>(n));
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist[static_cast<std::size_t>(j)] = {
        (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).squaredNorm(), j};
    dist[static_cast<std::size_t>(i)].first = std::numeric_limits<double>::infinity();
    const int take = std::min(k, n - 1);
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    nn[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(take));
    for (int t = 0; t < take; ++t) nn[static_cast<std::size_t>(i)].push_back(
        dist[static_cast<std::size_t>(t)].second);
  }
  return nn;
}

struct EdgeSetBuilder {
  std::set<std::pair<int, int>> edges;
  bool add(int i, int j) {
    if (i == j) return false;
    if (i > j) std::swap(i, j);
    return edges.insert({i, j}).second;
  }
  bool contains(int i, int j) const {
    if (i > j) std::swap(i, j);
    return edges.count({i, j}) > 0;
  }
};

// Every clean edge must lie in at least one triangle whose three edges are all
// clean. Fixes add the cheapest completing vertex (min d(i,k)+d(j,k)); the new
// triangle covers its own new edges as well, so the loop terminates.
void repair_witnesses(EdgeSetBuilder& clean, const std::vector<Vec3>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [i, j] : clean.edges) {
    adj[static_cast<std::size_t>(i)].insert(j);
    adj[static_cast<std::size_t>(j)].insert(i);
  }
  std::vector<std::pair<int, int>> queue(clean.edges.begin(), clean.edges.end());
  while (!queue.empty()) {
    const auto [i, j] = queue.back();
    queue.pop_back();
    bool witnessed = false;
    for (int k : adj[static_cast<std::size_t>(i)]) {
      if (k != j && adj[static_cast<std::size_t>(j)].count(k)) {
        witnessed = true;
        break;
      }
    }
    if (witnessed) continue;
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const double cost = (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(k)]).norm() +
                          (x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(k)]).norm();
      if (cost < best_cost) {
        best_cost = cost;
        best = k;
      }
    }
    if (best < 0) throw std::invalid_argument("cannot build a triangle witness: n < 3");
    for (int other : {i, j}) {
      if (!clean.contains(other, best)) {
        clean.add(other, best);
        adj[static_cast<std::size_t>(other)].insert(best);
        adj[static_cast<std::size_t>(best)].insert(other);
        queue.push_back({std::min(other, best), std::max(other, best)});
      }
    }
  }
}

void repair_connectivity(EdgeSetBuilder& clean, const std::vector<Vec3>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  int components = n;
  for (const auto& [i, j] : clean.edges) {
    if (find(i) != find(j)) {
      parent[static_cast<std::size_t>(find(i))] = find(j);
      --components;
    }
  }
  while (components > 1) {
    // Shortest ground-truth pair across different components.
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (find(i) == find(j)) continue;
        const double d =
            (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).squaredNorm();
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    clean.add(bi, bj);
    parent[static_cast<std::size_t>(find(bi))] = find(bj);
    --components;
  }
}

// Distance threshold for "far-range" candidate pairs: 80th percentile of the
// pairwise distance distribution (sampled when n is large).
double far_range_threshold(const std::vector<Vec3>& x, CounterRng& rng) {
  const int n = static_cast<int>(x.size());
  std::vector<double> d2;
  const std::int64_t total = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (total <= 200000) {
    d2.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        d2.push_back(
            (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).squaredNorm());
  } else {
    d2.reserve(200000);
    for (int s = 0; s < 200000; ++s) {
      const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
      if (j >= i) ++j;
      d2.push_back(
          (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).squaredNorm());
    }
  }
  std::sort(d2.begin(), d2.end());
  return std::sqrt(d2[static_cast<std::size_t>(0.8 * (d2.size() - 1))]);
}

// Uniform model: corrupted edges are new pairs, half from the local non-clean
// 2k-NN pool, half far-range.
std::vector<std::pair<int, int>> sample_uniform_corruption(const SceneConfig& cfg,
                                                           const std::vector<Vec3>& x,
                                                           const EdgeSetBuilder& clean,
                                                           CounterRng& rng) {
  const int n = cfg.n;
  const std::size_t clean_count = clean.edges.size();
  const int target = static_cast<int>(std::llround(cfg.q / (1.0 - cfg.q) *
                                                   static_cast<double>(clean_count)));
  if (target <= 0) return {};

  std::vector<std::pair<int, int>> local_pool;
  {
    const auto nn = knn_lists(x, std::min(2 * cfg.k_good, n - 1));
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < n; ++i) {
      for (int j : nn[static_cast<std::size_t>(i)]) {
        const auto p = std::minmax(i, j);
        if (!clean.contains(p.first, p.second) && seen.insert({p.first, p.second}).second)
          local_pool.push_back({p.first, p.second});
      }
    }
  }
  std::sort(local_pool.begin(), local_pool.end());
  rng.shuffle(local_pool);

  const double far_thresh = far_range_threshold(x, rng);
  std::set<std::pair<int, int>> taken;
  std::vector<std::pair<int, int>> bad;

  const int local_target = target / 2;
  for (const auto& p : local_pool) {
    if (static_cast<int>(bad.size()) >= local_target) break;
    if (taken.insert(p).second) bad.push_back(p);
  }
  // Far-range pairs by rejection sampling from the seeded stream.
  std::uint64_t attempts = 0;
  const std::uint64_t max_attempts = 1000ull * static_cast<std::uint64_t>(target) + 100000ull;
  while (static_cast<int>(bad.size()) < target && attempts++ < max_attempts) {
    const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    const auto p = std::minmax(i, j);
    if ((x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]).norm() <= far_thresh)
      continue;
    if (clean.contains(p.first, p.second) || taken.count({p.first, p.second})) continue;
    taken.insert({p.first, p.second});
    bad.push_back({p.first, p.second});
  }
  // Exhausted far pool: fall back to the local pool to hit the target.
  for (const auto& p : local_pool) {
    if (static_cast<int>(bad.size()) >= target) break;
    if (taken.insert(p).second) bad.push_back(p);
  }
  std::sort(bad.begin(), bad.end());
  return bad;
}

// Clustered model: corrupt existing edges incident to a bad-node set, in
// place, skipping corruptions that would disconnect the clean subgraph or
// strip the last all-clean witness from a surviving clean edge.
std::vector<std::pair<int, int>> sample_clustered_corruption(const SceneConfig& cfg,
                                                             const std::vector<Vec3>& x,
                                                             const EdgeSetBuilder& clean,
                                                             CounterRng& rng) {
  const int n = cfg.n;
  const std::size_t total_edges = clean.edges.size();
  const int target = static_cast<int>(std::llround(cfg.q * static_cast<double>(total_edges)));
  if (target <= 0) return {};

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int initial_bad = std::max<int>(1, static_cast<int>(std::ceil(cfg.bad_node_frac * n)));

  std::vector<char> is_bad(static_cast<std::size_t>(n), 0);
  std::set<std::pair<int, int>> corrupted;
  std::vector<std::set<int>> clean_adj(static_cast<std::size_t>(n));
  for (const auto& [i, j] : clean.edges) {
    clean_adj[static_cast<std::size_t>(i)].insert(j);
    clean_adj[static_cast<std::size_t>(j)].insert(i);
  }

  auto clean_connected_without = [&](int ci, int cj) {
    // BFS from ci avoiding the candidate edge; early exit on reaching cj.
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack = {ci};
    seen[static_cast<std::size_t>(ci)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v == cj) return true;
      for (int u : clean_adj[static_cast<std::size_t>(v)]) {
        if ((v == ci && u == cj) || (v == cj && u == ci)) continue;
        if (!seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = 1;
          stack.push_back(u);
        }
      }
    }
    return false;
  };
  auto has_witness = [&](int i, int j) {
    for (int k : clean_adj[static_cast<std::size_t>(i)])
      if (k != j && clean_adj[static_cast<std::size_t>(j)].count(k)) return true;
    return false;
  };
  auto try_corrupt = [&](int i, int j) {
    if (i > j) std::swap(i, j);
    if (corrupted.count({i, j})) return false;
    if (!clean_connected_without(i, j)) return false;
    // Witness safety: only edges incident to i or j can lose their witness.
    clean_adj[static_cast<std::size_t>(i)].erase(j);
    clean_adj[static_cast<std::size_t>(j)].erase(i);
    bool ok = true;
    for (int v : {i, j}) {
      for (int u : clean_adj[static_cast<std::size_t>(v)]) {
        if (!has_witness(std::min(v, u), std::max(v, u))) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (!ok) {
      clean_adj[static_cast<std::size_t>(i)].insert(j);
      clean_adj[static_cast<std::size_t>(j)].insert(i);
      return false;
    }
    corrupted.insert({i, j});
    return true;
  };

  // Corrupt incident edges of the first initial_bad nodes; grow the bad set
  // only while short of the target.
  for (int idx = 0; idx < n; ++idx) {
    if (idx >= initial_bad && static_cast<int>(corrupted.size()) >= target) break;
    if (static_cast<int>(corrupted.size()) >= target) break;
    const int node = order[static_cast<std::size_t>(idx)];
    is_bad[static_cast<std::size_t>(node)] = 1;
    std::vector<std::pair<int, int>> incident;
    for (const auto& [i, j] : clean.edges)
      if ((i == node || j == node) && !corrupted.count({i, j})) incident.push_back({i, j});
    rng.shuffle(incident);
    for (const auto& [i, j] : incident) {
      if (static_cast<int>(corrupted.size()) >= target) break;
      try_corrupt(i, j);
    }
  }
  return {corrupted.begin(), corrupted.end()};
}

// Deterministic orthonormal basis of the plane orthogonal to unit d.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& d) {
  int smallest = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(d[a]) < std::abs(d[smallest])) smallest = a;
  Vec3 axis = Vec3::Zero();
  axis[smallest] = 1.0;
  const Vec3 u = axis.cross(d).normalized();
  const Vec3 v = d.cross(u);
  return {u, v};
}

}  // namespace

SyntheticScene generate_scene(const SceneConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("scene needs n >= 4");
  if (cfg.k_good < 3) throw std::invalid_argument("k_good must be >= 3 (triangle witnesses)");
  if (cfg.n < cfg.k_good + 1) throw std::invalid_argument("n must exceed k_good");
  if (cfg.q < 0.0 || cfg.q >= 1.0) throw std::invalid_argument("q must be in [0, 1)");
  if (cfg.sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");

  SyntheticScene scene;
  scene.cfg = cfg;

  CounterRng scene_rng(cfg.seed, CounterRng::kSceneStream);
  scene.x_true = (cfg.geometry == Geometry::kGrid) ? grid_locations(cfg, scene_rng)
                                                   : torus_locations(cfg, scene_rng);

  // Clean graph: symmetric kNN union, repaired for connectivity and witnesses.
  EdgeSetBuilder clean;
  {
    const auto nn = knn_lists(scene.x_true, cfg.k_good);
    for (int i = 0; i < cfg.n; ++i)
      for (int j : nn[static_cast<std::size_t>(i)]) clean.add(i, j);
  }
  repair_connectivity(clean, scene.x_true);
  repair_witnesses(clean, scene.x_true);

  CounterRng corr_rng(cfg.seed, CounterRng::kCorruptionStream);
  std::vector<std::pair<int, int>> bad_edges;
  std::set<std::pair<int, int>> bad_set;
  if (cfg.q > 0.0) {
    bad_edges = (cfg.model == CorruptionModel::kUniform)
                    ? sample_uniform_corruption(cfg, scene.x_true, clean, corr_rng)
                    : sample_clustered_corruption(cfg, scene.x_true, clean, corr_rng);
    bad_set.insert(bad_edges.begin(), bad_edges.end());
  }

  // Shared distractor layout, one draw per node from the corruption stream.
  scene.y_latent.reserve(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    const double a = corr_rng.next_normal();
    const double b = corr_rng.next_normal();
    scene.y_latent.emplace_back(a, b, 0.0);
  }

  for (const auto& e : clean.edges) {
    scene.edges.push_back(e);
    scene.corrupt.push_back(bad_set.count(e) ? 1 : 0);
  }
  if (cfg.model == CorruptionModel::kUniform) {
    for (const auto& e : bad_edges) {
      scene.edges.push_back(e);
      scene.corrupt.push_back(1);
    }
  }
  // Canonical edge order.
  std::vector<std::size_t> perm(scene.edges.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](std::size_t a, std::size_t b) { return scene.edges[a] < scene.edges[b]; });
  std::vector<std::pair<int, int>> edges_sorted;
  std::vector<char> corrupt_sorted;
  for (std::size_t p : perm) {
    edges_sorted.push_back(scene.edges[p]);
    corrupt_sorted.push_back(scene.corrupt[p]);
  }
  scene.edges = std::move(edges_sorted);
  scene.corrupt = std::move(corrupt_sorted);
  return scene;
}

void render_measurements(SyntheticScene& scene) {
  const SceneConfig& cfg = scene.cfg;
  CounterRng noise_rng(cfg.seed, CounterRng::kNoiseStream);
  CounterRng resample_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL, CounterRng::kCorruptionStream);

  scene.directions.assign(scene.edges.size(), Vec3::Zero());
  for (std::size_t e = 0; e < scene.edges.size(); ++e) {
    const auto [i, j] = scene.edges[e];
    if (scene.corrupt[e]) {
      Vec3 diff = scene.y_latent[static_cast<std::size_t>(i)] -
                  scene.y_latent[static_cast<std::size_t>(j)];
      while (!(diff.norm() > 0.0)) {  // probability-zero collision guard
        scene.y_latent[static_cast<std::size_t>(j)] =
            Vec3(resample_rng.next_normal(), resample_rng.next_normal(), 0.0);
        diff = scene.y_latent[static_cast<std::size_t>(i)] -
               scene.y_latent[static_cast<std::size_t>(j)];
      }
      scene.directions[e] = diff.normalized();
    } else {
      const Vec3 d_star = (scene.x_true[static_cast<std::size_t>(i)] -
                           scene.x_true[static_cast<std::size_t>(j)])
                              .normalized();
      if (cfg.sigma > 0.0) {
        const auto [u, v] = tangent_basis(d_star);
        const double e1 = noise_rng.next_normal();
        const double e2 = noise_rng.next_normal();
        scene.directions[e] = (d_star + cfg.sigma * (e1 * u + e2 * v)).normalized();
      } else {
        scene.directions[e] = d_star;
      }
    }
  }
}

SyntheticScene make_scene(const SceneConfig& cfg) {
  SyntheticScene scene = generate_scene(cfg);
  render_measurements(scene);
  return scene;
}

std::vector<std::tuple<int, int, Vec3>> scene_measurements(const SyntheticScene& scene) {
  std::vector<std::tuple<int, int, Vec3>> out;
  out.reserve(scene.edges.size());
  for (std::size_t e = 0; e < scene.edges.size(); ++e)
    out.emplace_back(scene.edges[e].first, scene.edges[e].second, scene.directions[e]);
  return out;
}

}  // namespace trip

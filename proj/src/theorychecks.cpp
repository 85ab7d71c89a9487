#include "trip/theorychecks.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "trip/rng.hpp"
#include "trip/synthgen.hpp"

namespace trip {

namespace {

long long binom3(long long n) { return n * (n - 1) * (n - 2) / 6; }

// Closed-form Green values, common denominator 6 n^2 (n-1)^2 (n-2)^2.
struct GreenClosedForm {
  long long num[4];
  long long den;
};

GreenClosedForm green_closed_form(long long n) {
  GreenClosedForm cf{};
  const long long d = n * n * (n - 1) * (n - 1) * (n - 2) * (n - 2);
  cf.den = 6 * d;
  cf.num[0] = -6 * (11 * n * n - 26 * n + 12);
  cf.num[1] = 2 * (2 * n * n * n - 39 * n * n + 82 * n - 36);
  cf.num[2] = n * n * n * n + 5 * n * n * n - 88 * n * n + 172 * n - 72;
  cf.num[3] = (n - 3) * (2 * n * n * n * n + n * n * n + 16 * n * n - 52 * n + 24);
  return cf;
}

}  // namespace

JohnsonGreenLevels johnson_green_levels(int n) {
  if (n < 6) throw std::invalid_argument("Johnson check needs n >= 6");
  if (n > 14) throw std::invalid_argument("Johnson check is desk-scale: n <= 14");

  JohnsonGreenLevels out;
  out.n = n;

  // Vertices: 3-subsets of [n], lexicographic.
  std::vector<std::array<int, 3>> verts;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) verts.push_back({i, j, k});
  const int N = static_cast<int>(verts.size());

  auto intersection_size = [](const std::array<int, 3>& a, const std::array<int, 3>& b) {
    int c = 0;
    for (int x : a)
      for (int y : b)
        if (x == y) ++c;
    return c;
  };

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      if (intersection_size(verts[static_cast<std::size_t>(a)],
                            verts[static_cast<std::size_t>(b)]) == 2) {
        L(a, b) = L(b, a) = -1.0;
      }
    }
  }
  for (int a = 0; a < N; ++a) L(a, a) = -L.row(a).sum();

  // Green row at x = {0,1,2}: solve L g = e_x - (1/N) 1 on the zero-mean
  // subspace via the rank-one shift L + (1/N) 1 1^T.
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(N, -1.0 / N);
  rhs(0) += 1.0;
  Eigen::MatrixXd shifted = L + Eigen::MatrixXd::Constant(N, N, 1.0 / N);
  Eigen::VectorXd green = shifted.ldlt().solve(rhs);
  green.array() -= green.mean();

  // Levels by intersection size with x.
  std::array<std::vector<double>, 4> levels;
  for (int b = 0; b < N; ++b)
    levels[static_cast<std::size_t>(
               intersection_size(verts[0], verts[static_cast<std::size_t>(b)]))]
        .push_back(green(b));

  const GreenClosedForm cf = green_closed_form(n);
  out.level_sizes = {binom3(n - 3), 3LL * (n - 3) * (n - 4) / 2, 3LL * (n - 3), 1LL};
  for (int r = 0; r < 4; ++r) {
    const auto& lv = levels[static_cast<std::size_t>(r)];
    double mean = 0.0;
    for (double v : lv) mean += v;
    mean /= static_cast<double>(lv.size());
    out.green[static_cast<std::size_t>(r)] = mean;
    for (double v : lv)
      out.max_within_level_spread = std::max(out.max_within_level_spread, std::abs(v - mean));
    out.green_closed[static_cast<std::size_t>(r)] =
        static_cast<double>(cf.num[r]) / static_cast<double>(cf.den);
    out.max_closed_form_err =
        std::max(out.max_closed_form_err,
                 std::abs(mean - out.green_closed[static_cast<std::size_t>(r)]));
    if (static_cast<long long>(lv.size()) != out.level_sizes[static_cast<std::size_t>(r)])
      throw std::runtime_error("level size mismatch in Johnson graph construction");
  }

  out.abs_row_sum = green.array().abs().sum();
  out.row_sum_bound = 4.0 / (n - 3);

  // Spectrum {0, n, 2(n-1), 3(n-2)} with multiplicities {1, n-1, n(n-3)/2, rest}.
  out.spectrum = {0.0, static_cast<double>(n), 2.0 * (n - 1), 3.0 * (n - 2)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
  const Eigen::VectorXd ev = eig.eigenvalues();
  std::vector<double> expected;
  expected.push_back(0.0);
  for (int m = 0; m < n - 1; ++m) expected.push_back(static_cast<double>(n));
  for (int m = 0; m < n * (n - 3) / 2; ++m) expected.push_back(2.0 * (n - 1));
  while (static_cast<int>(expected.size()) < N) expected.push_back(3.0 * (n - 2));
  for (int a = 0; a < N; ++a)
    out.max_spectrum_err =
        std::max(out.max_spectrum_err, std::abs(ev(a) - expected[static_cast<std::size_t>(a)]));

  // Exact integer identities.
  out.level_size_identity =
      out.level_sizes[0] + out.level_sizes[1] + out.level_sizes[2] + out.level_sizes[3] ==
      binom3(n);
  long long weighted = 0;
  for (int r = 0; r < 4; ++r)
    weighted += out.level_sizes[static_cast<std::size_t>(r)] * cf.num[r];
  out.zero_mean_identity = (weighted == 0);

  out.ok = out.max_closed_form_err <= 1e-10 && out.max_within_level_spread <= 1e-10 &&
           out.max_spectrum_err <= 1e-8 && out.abs_row_sum <= out.row_sum_bound + 1e-12 &&
           out.level_size_identity && out.zero_mean_identity;
  return out;
}

bool johnson_green_diff_exact_n6() {
  const GreenClosedForm cf = green_closed_form(6);
  // G1 - G0 = (num1 - num0) / den == 2 / (3 n (n-1)(n-2)) == 1/180 at n = 6.
  const long long diff_num = cf.num[1] - cf.num[0];
  return diff_num * 180 == cf.den && cf.den == 6 * 36 * 25 * 16;
}

DecayTrace exact_recovery_experiment(int n, int corrupt_edge_count, LossFamily family, double tau,
                                     int stages, std::uint64_t seed) {
  if (n < 6 || n > 40) throw std::invalid_argument("decay experiment is desk-scale: 6 <= n <= 40");

  DecayTrace trace;

  // Generic nondegenerate locations.
  CounterRng scene_rng(seed, CounterRng::kSceneStream);
  std::vector<Vec3> x(static_cast<std::size_t>(n));
  for (auto& p : x) p = Vec3(scene_rng.next_normal(), scene_rng.next_normal(),
                             scene_rng.next_normal());

  // Complete graph; corrupted edges sampled without replacement.
  std::vector<std::pair<int, int>> all_edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all_edges.push_back({i, j});
  CounterRng corr_rng(seed, CounterRng::kCorruptionStream);
  std::vector<std::size_t> order(all_edges.size());
  std::iota(order.begin(), order.end(), 0);
  corr_rng.shuffle(order);
  std::vector<char> corrupt(all_edges.size(), 0);
  for (int c = 0; c < corrupt_edge_count; ++c) corrupt[order[static_cast<std::size_t>(c)]] = 1;

  std::vector<int> bad_degree(static_cast<std::size_t>(n), 0);
  for (std::size_t e = 0; e < all_edges.size(); ++e) {
    if (!corrupt[e]) continue;
    ++bad_degree[static_cast<std::size_t>(all_edges[e].first)];
    ++bad_degree[static_cast<std::size_t>(all_edges[e].second)];
  }
  trace.delta_e = bad_degree.empty() ? 0 : *std::max_element(bad_degree.begin(), bad_degree.end());

  // Coherent distractor directions on corrupted edges.
  std::vector<Vec3> y(static_cast<std::size_t>(n));
  for (auto& p : y) p = Vec3(corr_rng.next_normal(), corr_rng.next_normal(), 0.0);
  std::vector<std::tuple<int, int, Vec3>> measurements;
  for (std::size_t e = 0; e < all_edges.size(); ++e) {
    const auto [i, j] = all_edges[e];
    const Vec3 d = corrupt[e]
                       ? Vec3((y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)])
                                  .normalized())
                       : Vec3((x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)])
                                  .normalized());
    measurements.emplace_back(i, j, d);
  }

  const ViewingGraph g = build_viewing_graph(n, measurements);
  const TriangleIndex tri = enumerate_triangles(g);

  // Full-triangle mode: keep every nondegenerate triangle, uncapped fibers,
  // unit prior weights (reliability scale -> infinity gives pi = 1).
  PrefilterParams params;
  params.collinearity_eps = 1e-9;
  params.residual_max = std::numeric_limits<double>::infinity();
  params.pool_cap = n;
  params.reliability_scale = 1e18;
  const TrianglePool pool = prefilter_triangles(g, tri, params);
  const std::vector<ScaleConstraint> constraints = build_constraint_graph(pool);

  // Ground-truth log-scales and the clean triangle set.
  const std::size_t records = pool.records.size();
  std::vector<char> clean_record(records, 0);
  std::vector<double> z_star(records, 0.0);
  for (std::size_t t = 0; t < records; ++t) {
    const auto& rec = pool.records[t];
    const int i = rec.tri[0], j = rec.tri[1], k = rec.tri[2];
    const bool is_clean = !corrupt[static_cast<std::size_t>(g.edge_ordinal(i, j))] &&
                          !corrupt[static_cast<std::size_t>(g.edge_ordinal(j, k))] &&
                          !corrupt[static_cast<std::size_t>(g.edge_ordinal(i, k))];
    clean_record[t] = is_clean ? 1 : 0;
    if (is_clean)
      z_star[t] = std::log((x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)])
                               .norm() /
                           rec.h[0]);
  }

  // Clean triangle-overlap connectivity (experiment validity flag).
  {
    std::vector<int> parent(records);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
      while (parent[static_cast<std::size_t>(v)] != v) {
        parent[static_cast<std::size_t>(v)] =
            parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        v = parent[static_cast<std::size_t>(v)];
      }
      return v;
    };
    for (const auto& c : constraints)
      if (clean_record[static_cast<std::size_t>(c.t)] &&
          clean_record[static_cast<std::size_t>(c.u)])
        parent[static_cast<std::size_t>(find(c.t))] = find(c.u);
    int root = -1;
    bool connected = true;
    for (std::size_t t = 0; t < records; ++t) {
      if (!clean_record[t]) continue;
      if (root < 0)
        root = find(static_cast<int>(t));
      else if (find(static_cast<int>(t)) != root)
        connected = false;
    }
    trace.clean_overlap_connected = connected;
  }

  auto clean_error = [&](const std::vector<double>& z) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < records; ++t) {
      if (!clean_record[t]) continue;
      const double d = z[t] - z_star[t];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    return 0.5 * (hi - lo);  // min over alpha of the sup norm
  };

  const std::vector<double> z0 = spanning_tree_init(constraints, pool);

  LossSpec spec;
  spec.family = family;
  spec.scale = 0.1;
  spec.annealed = true;
  spec.tau = tau;
  spec.stages = stages;

  SyncOpts opts;
  opts.mode = SolverMode::kExact;

  const ScaleSolution final_sol = annealed_synchronize(
      constraints, z0, spec, opts,
      [&](int /*stage*/, double sigma, const std::vector<double>& z) {
        trace.sigma.push_back(sigma);
        trace.error.push_back(clean_error(z));
      });

  trace.nonincreasing = true;
  for (std::size_t k = 1; k < trace.error.size(); ++k)
    if (trace.error[k] > trace.error[k - 1] + 1e-12) trace.nonincreasing = false;
  trace.final_error = trace.error.empty() ? 0.0 : trace.error.back();

  // Clean-edge lengths at the final stage: median proposal over clean
  // triangles, compared to truth modulo one global scale.
  double max_rel = 0.0;
  {
    std::vector<double> ratios;  // true length / estimated length per clean edge
    std::vector<std::vector<double>> proposals(g.edges.size());
    for (std::size_t e = 0; e < pool.fibers.size(); ++e) {
      if (corrupt[e]) continue;
      for (const auto& entry : pool.fibers[e])
        if (clean_record[static_cast<std::size_t>(entry.record)])
          proposals[e].push_back(
              std::exp(final_sol.z[static_cast<std::size_t>(entry.record)]) * entry.h);
    }
    std::vector<double> est_len(g.edges.size(), 0.0);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (corrupt[e] || proposals[e].empty()) continue;
      std::sort(proposals[e].begin(), proposals[e].end());
      est_len[e] = proposals[e][(proposals[e].size() - 1) / 2];
      const double truth = (x[static_cast<std::size_t>(g.edges[e].i)] -
                            x[static_cast<std::size_t>(g.edges[e].j)])
                               .norm();
      ratios.push_back(truth / est_len[e]);
    }
    std::sort(ratios.begin(), ratios.end());
    const double scale = ratios[(ratios.size() - 1) / 2];
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (corrupt[e] || est_len[e] <= 0.0) continue;
      const double truth = (x[static_cast<std::size_t>(g.edges[e].i)] -
                            x[static_cast<std::size_t>(g.edges[e].j)])
                               .norm();
      max_rel = std::max(max_rel, std::abs(est_len[e] * scale - truth) / truth);
    }
  }
  trace.clean_length_rel_err = max_rel;
  return trace;
}

}  // namespace trip

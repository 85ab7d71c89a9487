#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "trip/viewgraph.hpp"

namespace trip {

enum class Geometry { kGrid, kTorus };
enum class CorruptionModel { kUniform, kClustered };

struct SceneConfig {
  Geometry geometry = Geometry::kGrid;
  int n = 100;
  int k_good = 8;
  double q = 0.0;      // corruption probability in [0, 1)
  double sigma = 0.0;  // tangent-plane noise level
  CorruptionModel model = CorruptionModel::kUniform;
  std::uint64_t seed = 0;

  double grid_spacing = 1.0;
  double grid_z_jitter = 0.05;
  double torus_R = 2.0;
  double torus_r = 0.5;
  double torus_theta_jitter = 0.1;  // fraction of the angular step
  double bad_node_frac = 0.1;       // clustered model
};

struct SyntheticScene {
  SceneConfig cfg;
  std::vector<Vec3> x_true;
  std::vector<std::pair<int, int>> edges;  // canonical i < j, sorted
  std::vector<char> corrupt;               // label per edge
  std::vector<Vec3> y_latent;              // shared distractor layout, z = 0
  std::vector<Vec3> directions;            // filled by render_measurements
};

// Builds ground-truth locations, the symmetric kNN clean graph (repaired to be
// connected with an all-clean triangle witness per clean edge), and the
// corrupted edge set for the configured model. Directions are not rendered.
// Throws std::invalid_argument on infeasible configs.
SyntheticScene generate_scene(const SceneConfig& cfg);

// Fills scene.directions: clean edges get Normalize(d* + sigma * eps_perp)
// with a 2D Gaussian in the tangent plane of d*; corrupted edges get the
// coherent distractor (y_i - y_j)/||y_i - y_j||.
void render_measurements(SyntheticScene& scene);

// generate + render.
SyntheticScene make_scene(const SceneConfig& cfg);

// Convenience: measurements tuple list for build_viewing_graph.
std::vector<std::tuple<int, int, Vec3>> scene_measurements(const SyntheticScene& scene);

}  // namespace trip

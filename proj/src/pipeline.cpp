#include "trip/pipeline.hpp"

#include <chrono>
#include <stdexcept>

namespace trip {

namespace {
double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

PipelineResult run_pipeline(const ViewingGraph& g, const PipelineConfig& cfg) {
  PipelineResult result;
  const auto start = std::chrono::steady_clock::now();

  auto t0 = std::chrono::steady_clock::now();
  const TriangleIndex tri = enumerate_triangles(g);
  result.triangle_count = static_cast<int>(tri.triples.size());
  const TrianglePool pool = prefilter_triangles(g, tri, cfg.prefilter);
  result.retained_triangles = static_cast<int>(pool.records.size());
  result.prefilter_stage.seconds = seconds_since(t0);
  if (pool.records.empty()) throw std::runtime_error("no usable triangles");

  t0 = std::chrono::steady_clock::now();
  const std::vector<ScaleConstraint> constraints = build_constraint_graph(pool);
  result.constraint_count = static_cast<int>(constraints.size());
  const std::vector<double> z0 = spanning_tree_init(constraints, pool);
  const ScaleSolution sync =
      cfg.sync_loss.annealed
          ? annealed_synchronize(constraints, z0, cfg.sync_loss, cfg.sync_opts)
          : synchronize_scales(constraints, z0, cfg.sync_loss, cfg.sync_opts);
  result.sync_stage.seconds = seconds_since(t0);
  result.sync_stage.iterations = sync.iterations;
  result.sync_stage.converged = sync.converged;

  t0 = std::chrono::steady_clock::now();
  const SelectionState state = select_triangle_prefix(pool, sync, g, cfg.selection);
  result.selected_triangles = state.prefix;
  result.coverage = state.coverage;
  result.coverage_shortfall = state.shortfall;
  int active = 0;
  for (char a : state.active) active += a;
  result.active_edges = active;
  const std::vector<EdgeLengthEstimate> estimates =
      aggregate_edge_lengths(state, sync, pool, g);
  result.estimated_edges = static_cast<int>(estimates.size());
  result.selection_stage.seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  result.locations = recover_locations(g, estimates, cfg.loc_opts);
  result.location_stage.seconds = seconds_since(t0);
  result.location_stage.iterations = result.locations.iterations;
  result.location_stage.converged = result.locations.converged;

  result.total_seconds = seconds_since(start);
  return result;
}

}  // namespace trip

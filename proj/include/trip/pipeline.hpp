#pragma once

#include <string>

#include "trip/edgeestimate.hpp"
#include "trip/locrecover.hpp"
#include "trip/prefilter.hpp"
#include "trip/scalesync.hpp"

namespace trip {

inline constexpr const char* kVersion = "trip 0.1.0";

struct PipelineConfig {
  PrefilterParams prefilter{};
  SelectionParams selection{};
  LossSpec sync_loss{};
  SyncOpts sync_opts{};
  LocRecoverOpts loc_opts{};
  int threads = 1;  // accepted and recorded; stage internals are sequential
};

struct StageReport {
  double seconds = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct PipelineResult {
  LocationEstimate locations;
  double coverage = 0.0;
  bool coverage_shortfall = false;
  int triangle_count = 0;       // enumerated
  int retained_triangles = 0;   // after prefilter
  int constraint_count = 0;
  int selected_triangles = 0;
  int active_edges = 0;
  int estimated_edges = 0;
  StageReport prefilter_stage, sync_stage, selection_stage, location_stage;
  double total_seconds = 0.0;
};

// prefilter -> scalesync -> edgeestimate -> locrecover. Throws
// std::runtime_error("no usable triangles") when the pool is empty.
PipelineResult run_pipeline(const ViewingGraph& g, const PipelineConfig& cfg);

}  // namespace trip

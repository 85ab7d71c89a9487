#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trip/viewgraph.hpp"

namespace trip {

// Similarity mapping ground truth into the estimate frame: x_est ~ s R x_gt + t.
struct SimilarityTransform {
  double s = 1.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Vec3 t = Vec3::Zero();
};

struct ErrorReport {
  std::vector<int> nodes;       // evaluated node set
  std::vector<double> errors;   // per node, ground-truth scene units
  double median = 0.0;          // lower median
  double mean = 0.0;
  double p90 = 0.0;             // nearest-rank
  double runtime_sec = 0.0;
  double coverage = 0.0;
};

// Two-pass robust fit: closed-form least-squares similarity (centroid + SVD
// with determinant sign correction), then a refit on the nodes whose residual
// is within 3x the median residual. Throws std::runtime_error with fewer than
// 3 usable nodes or a rank-deficient (collinear) configuration.
SimilarityTransform robust_similarity_align(const std::vector<Vec3>& est,
                                            const std::vector<Vec3>& gt);

// Applies the inverse of the fitted transform to the estimates so errors are
// expressed in ground-truth units; lower-median / mean / nearest-rank p90.
ErrorReport compute_error_report(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                                 const std::vector<int>& nodes, double runtime_sec);

}  // namespace trip

#include "trip/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trip {

namespace {

// Closed-form least-squares similarity gt -> est (Umeyama construction).
SimilarityTransform fit_similarity(const std::vector<Vec3>& est, const std::vector<Vec3>& gt) {
  const std::size_t n = est.size();
  Vec3 mu_est = Vec3::Zero(), mu_gt = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_est += est[i];
    mu_gt += gt[i];
  }
  mu_est /= static_cast<double>(n);
  mu_gt /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_gt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (est[i] - mu_est) * (gt[i] - mu_gt).transpose();
    var_gt += (gt[i] - mu_gt).squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_gt /= static_cast<double>(n);
  if (!(var_gt > 0.0)) throw std::runtime_error("alignment failure: degenerate ground truth");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  // Collinear inputs leave the rotation about the common axis undetermined.
  if (!(d(1) > 1e-12 * std::max(d(0), 1e-300)))
    throw std::runtime_error("alignment failure: rank-deficient (collinear) configuration");

  Eigen::Vector3d signs = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) signs(2) = -1.0;

  SimilarityTransform T;
  T.R = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  T.s = d.dot(signs) / var_gt;
  if (!(T.s > 0.0)) throw std::runtime_error("alignment failure: nonpositive scale");
  T.t = mu_est - T.s * T.R * mu_gt;
  return T;
}

double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

SimilarityTransform robust_similarity_align(const std::vector<Vec3>& est,
                                            const std::vector<Vec3>& gt) {
  if (est.size() != gt.size()) throw std::invalid_argument("alignment inputs differ in size");
  if (est.size() < 3) throw std::runtime_error("alignment failure: fewer than 3 nodes");

  const SimilarityTransform first = fit_similarity(est, gt);

  std::vector<double> residual(est.size());
  for (std::size_t i = 0; i < est.size(); ++i)
    residual[i] = (est[i] - (first.s * first.R * gt[i] + first.t)).norm();
  const double threshold = 3.0 * lower_median(residual);

  std::vector<Vec3> est_trim, gt_trim;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (residual[i] <= threshold) {
      est_trim.push_back(est[i]);
      gt_trim.push_back(gt[i]);
    }
  }
  if (est_trim.size() < 3 || est_trim.size() == est.size()) return first;
  try {
    return fit_similarity(est_trim, gt_trim);
  } catch (const std::runtime_error&) {
    return first;  // trimmed set degenerate; keep the full fit
  }
}

ErrorReport compute_error_report(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                                 const std::vector<int>& nodes, double runtime_sec) {
  const SimilarityTransform T = robust_similarity_align(est, gt);

  ErrorReport report;
  report.nodes = nodes;
  report.runtime_sec = runtime_sec;
  report.errors.resize(est.size());
  // Map estimates onto the ground truth (inverse transform) so the statistics
  // are in scene units.
  const Eigen::Matrix3d Rinv = T.R.transpose();
  for (std::size_t i = 0; i < est.size(); ++i)
    report.errors[i] = (Rinv * (est[i] - T.t) / T.s - gt[i]).norm();

  std::vector<double> sorted = report.errors;
  std::sort(sorted.begin(), sorted.end());
  report.median = sorted[(sorted.size() - 1) / 2];
  double sum = 0.0;
  for (double e : sorted) sum += e;
  report.mean = sum / static_cast<double>(sorted.size());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(sorted.size())));
  report.p90 = sorted[std::max<std::size_t>(rank, 1) - 1];
  return report;
}

}  // namespace trip

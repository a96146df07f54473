#include "nfr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nfr/errors.hpp"
#include "nfr/kdtree.hpp"

namespace nfr {

GeodesicErrorReport geodesic_error(const PointMap& predicted, const PointMap& ground_truth,
                                   const GeodesicMatrix& geo, double total_area, int curve_samples,
                                   double curve_max) {
  if (predicted.soft_mode || ground_truth.soft_mode)
    fail(ErrorCode::ParseError, "geodesic error expects hard maps");
  if (predicted.domain_size() != ground_truth.domain_size())
    fail(ErrorCode::SizeMismatch, "predicted and ground-truth maps differ in size");
  if (total_area <= 0.0) fail(ErrorCode::ParseError, "total area must be positive");

  const int n = predicted.domain_size();
  const double scale = 1.0 / std::sqrt(total_area);
  GeodesicErrorReport report;
  report.per_point.resize(n);
  for (int j = 0; j < n; ++j) {
    const int p = predicted.hard[j];
    const int g = ground_truth.hard[j];
    if (p < 0 || p >= geo.dist.rows() || g < 0 || g >= geo.dist.rows())
      fail(ErrorCode::SizeMismatch, "map entry outside the geodesic matrix");
    report.per_point[j] = geo.dist(p, g) * scale;
  }
  report.mean = report.per_point.mean();

  report.curve_thresholds.resize(curve_samples);
  report.curve_recall.resize(curve_samples);
  for (int s = 0; s < curve_samples; ++s) {
    const double t = curve_samples == 1 ? curve_max
                                        : curve_max * static_cast<double>(s) / (curve_samples - 1);
    report.curve_thresholds[s] = t;
    report.curve_recall[s] =
        static_cast<double>((report.per_point.array() <= t).count()) / static_cast<double>(n);
  }
  return report;
}

RecallReport euclidean_recall(const Eigen::MatrixX3d& predicted,
                              const Eigen::MatrixX3d& ground_truth,
                              const std::vector<double>& thresholds) {
  if (predicted.rows() != ground_truth.rows())
    fail(ErrorCode::SizeMismatch, "point sets differ in size");
  const long n = predicted.rows();
  Eigen::VectorXd dist(n);
  for (long i = 0; i < n; ++i) dist[i] = (predicted.row(i) - ground_truth.row(i)).norm();

  RecallReport report;
  report.average_error = dist.mean();
  report.thresholds = thresholds;
  for (double t : thresholds)
    report.recalls.push_back(static_cast<double>((dist.array() <= t).count()) /
                             static_cast<double>(n));
  return report;
}

ChamferReport chamfer_metric(const PointCloud& a, const PointCloud& b) {
  const long na = a.points.rows(), nb = b.points.rows();
  KdTree3 tree_a(a.points), tree_b(b.points);

  ChamferReport report;
  for (long i = 0; i < na; ++i) {
    double d2 = 0.0;
    tree_b.nearest(a.points.row(i).transpose(), &d2);
    report.forward_sq += d2;
    report.forward += std::sqrt(d2);
  }
  for (long j = 0; j < nb; ++j) {
    double d2 = 0.0;
    tree_a.nearest(b.points.row(j).transpose(), &d2);
    report.backward_sq += d2;
    report.backward += std::sqrt(d2);
  }
  report.forward_sq /= static_cast<double>(na);
  report.forward /= static_cast<double>(na);
  report.backward_sq /= static_cast<double>(nb);
  report.backward /= static_cast<double>(nb);
  report.symmetric_sq = report.forward_sq + report.backward_sq;
  report.symmetric = report.forward + report.backward;
  return report;
}

}  // namespace nfr

#pragma once

#include <Eigen/Core>
#include <vector>

#include "nfr/fmaps.hpp"
#include "nfr/geodesics.hpp"
#include "nfr/pointcloud.hpp"

namespace nfr {

struct GeodesicErrorReport {
  double mean = 0.0;               // normalized by sqrt(total area)
  Eigen::VectorXd per_point;
  Eigen::VectorXd curve_thresholds;
  Eigen::VectorXd curve_recall;    // fraction of points below each threshold
};

GeodesicErrorReport geodesic_error(const PointMap& predicted, const PointMap& ground_truth,
                                   const GeodesicMatrix& geo, double total_area,
                                   int curve_samples = 101, double curve_max = 0.25);

struct RecallReport {
  double average_error = 0.0;
  std::vector<double> thresholds;
  std::vector<double> recalls;
};

RecallReport euclidean_recall(const Eigen::MatrixX3d& predicted, const Eigen::MatrixX3d& ground_truth,
                              const std::vector<double>& thresholds);

struct ChamferReport {
  double forward_sq = 0.0;   // mean of min squared, a -> b
  double backward_sq = 0.0;  // b -> a
  double symmetric_sq = 0.0;
  double forward = 0.0;      // unsquared variants
  double backward = 0.0;
  double symmetric = 0.0;
};

ChamferReport chamfer_metric(const PointCloud& a, const PointCloud& b);

}  // namespace nfr

#pragma once

#include <Eigen/Core>

#include "nfr/mesh.hpp"
#include "nfr/pointcloud.hpp"

namespace nfr {

// Moves the shape's centroid to the origin and applies the transpose of the
// given rotation: p' = R^T (p - centroid). Meshes use the area-weighted
// centroid, clouds the arithmetic mean.
Mesh center_and_orient(const Mesh& mesh, const Eigen::Matrix3d& rotation);
PointCloud center_and_orient(const PointCloud& cloud, const Eigen::Matrix3d& rotation);

}  // namespace nfr

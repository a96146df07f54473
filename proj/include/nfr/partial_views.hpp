#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "nfr/mesh.hpp"
#include "nfr/pointcloud.hpp"

namespace nfr {

struct ViewSamplingConfig {
  int grid_resolution = 256;
  int points_per_view = 1000;
  bool jitter = false;       // sub-pixel ray offsets
  std::uint64_t seed = 0;
};

// The 12 unit vertex directions of a regular icosahedron.
Eigen::MatrixX3d icosahedron_directions();

// Orthographic ray casting from each view direction toward the mesh
// centroid; keeps the first hit per ray. Output points lie on the surface
// and carry the index of the nearest mesh vertex as provenance (one cloud
// point per distinct vertex).
std::vector<PointCloud> sample_partial_views(const Mesh& mesh,
                                             const Eigen::MatrixX3d& directions,
                                             const ViewSamplingConfig& config = {});

std::vector<PointCloud> sample_partial_views(const Mesh& mesh, int n_views,
                                             int points_per_view);

}  // namespace nfr

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nfr/mesh.hpp"

namespace nfr {

// Unordered 3D points. Provenance, when present, holds one index into the
// parent mesh per point (unique and in range).
struct PointCloud {
  Eigen::MatrixX3d points;
  std::vector<int> provenance;

  int point_count() const { return static_cast<int>(points.rows()); }
  bool has_provenance() const { return !provenance.empty(); }
};

PointCloud make_point_cloud(Eigen::MatrixX3d points, std::vector<int> provenance = {});
PointCloud cloud_from_mesh_vertices(const Mesh& mesh);

// XYZ ("x y z" per line) or ascii PLY. A sidecar file <path>.prov with one
// integer per point is picked up automatically when present.
PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace nfr

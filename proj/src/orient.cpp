#include "nfr/orient.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

constexpr double kRotationTol = 1e-9;

void check_rotation(const Eigen::Matrix3d& rotation) {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > kRotationTol)
    fail(ErrorCode::NotARotation, "matrix is not orthonormal (deviation " + std::to_string(ortho) + ")");
  if (std::abs(rotation.determinant() - 1.0) > kRotationTol)
    fail(ErrorCode::NotARotation, "matrix determinant is not +1");
}

Eigen::MatrixX3d transform(const Eigen::MatrixX3d& points, const Eigen::Vector3d& centroid,
                           const Eigen::Matrix3d& rotation) {
  return (points.rowwise() - centroid.transpose()) * rotation;  // rows * R == (R^T p)^T
}

}  // namespace

Mesh center_and_orient(const Mesh& mesh, const Eigen::Matrix3d& rotation) {
  check_rotation(rotation);
  return make_mesh(transform(mesh.vertices, mesh.area_centroid(), rotation), mesh.faces);
}

PointCloud center_and_orient(const PointCloud& cloud, const Eigen::Matrix3d& rotation) {
  check_rotation(rotation);
  Eigen::Vector3d centroid = cloud.points.colwise().mean();
  return make_point_cloud(transform(cloud.points, centroid, rotation), cloud.provenance);
}

}  // namespace nfr

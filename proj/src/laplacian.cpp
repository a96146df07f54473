#include "nfr/laplacian.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

constexpr double kCotClampLo = 1e-6;
constexpr double kCotClampHi = 1e6;

}  // namespace

LaplacianOperator cotan_laplacian(const Mesh& mesh) {
  const int n = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.face_count()) * 12);

  for (int f = 0; f < mesh.face_count(); ++f) {
    const int idx[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    Eigen::Vector3d p[3];
    for (int c = 0; c < 3; ++c) p[c] = mesh.vertices.row(idx[c]);
    for (int c = 0; c < 3; ++c) {
      // angle at corner c is opposite the edge (c+1, c+2)
      const Eigen::Vector3d e1 = p[(c + 1) % 3] - p[c];
      const Eigen::Vector3d e2 = p[(c + 2) % 3] - p[c];
      const double cross = e1.cross(e2).norm();
      if (cross <= 0.0) fail(ErrorCode::DegenerateGeometry, "zero-area corner in face " + std::to_string(f));
      const double cot = std::clamp(e1.dot(e2) / cross, kCotClampLo, kCotClampHi);
      const double w = 0.5 * cot;  // half of this corner's contribution to the opposite edge
      const int i = idx[(c + 1) % 3], j = idx[(c + 2) % 3];
      triplets.emplace_back(i, j, -w);
      triplets.emplace_back(j, i, -w);
      triplets.emplace_back(i, i, w);
      triplets.emplace_back(j, j, w);
    }
  }

  LaplacianOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.mass = mesh.vertex_areas;
  return op;
}

}  // namespace nfr

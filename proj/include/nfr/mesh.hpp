#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace nfr {

// Indexed triangle surface. Vertex areas are lumped (one third of each
// incident face area) and the neighbor lists are sorted and symmetric.
struct Mesh {
  Eigen::MatrixX3d vertices;
  Eigen::MatrixX3i faces;
  Eigen::VectorXd vertex_areas;
  std::vector<std::vector<int>> adjacency;
  std::uint64_t content_hash = 0;

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }
  double total_area() const { return vertex_areas.sum(); }
  double bbox_diagonal() const;
  // Area-weighted centroid, used for mass centering.
  Eigen::Vector3d area_centroid() const;
};

// Validates indices and face areas, then fills in the derived fields.
Mesh make_mesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i faces);

// ASCII OFF or PLY, chosen by file extension (.off / .ply).
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ull);

}  // namespace nfr

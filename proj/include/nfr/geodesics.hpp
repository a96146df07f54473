#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "nfr/mesh.hpp"

namespace nfr {

// Pairwise shortest-path distances along mesh edges with Euclidean edge
// weights. Unreachable pairs are +inf.
struct GeodesicMatrix {
  Eigen::MatrixXd dist;
  std::uint64_t mesh_tag = 0;

  double operator()(int i, int j) const { return dist(i, j); }
};

GeodesicMatrix geodesic_matrix(const Mesh& mesh);

std::vector<double> dijkstra_from(const Mesh& mesh, int source);

// For every vertex, the k nearest of the given source vertices by graph
// distance, sorted by (distance, source list position).
std::vector<std::vector<std::pair<int, double>>> k_nearest_sources(
    const Mesh& mesh, const std::vector<int>& sources, int k);

}  // namespace nfr

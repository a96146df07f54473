#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nfr/mesh.hpp"

namespace nfr {

// Embedded deformation graph: sparse nodes on the source mesh, symmetric
// node adjacency, and per-vertex skinning weights (nonnegative, summing
// to 1).
struct DeformationGraph {
  Eigen::MatrixX3d nodes;                                  // rest positions g
  std::vector<int> node_vertices;                          // original vertex per node
  std::vector<std::vector<int>> neighbors;                 // 1-ring over decimated connectivity
  std::vector<std::vector<std::pair<int, double>>> skin;   // per mesh vertex: (node, weight)
  bool used_fallback = false;
  std::uint64_t mesh_tag = 0;

  int node_count() const { return static_cast<int>(nodes.rows()); }
};

// Per-node axis-angle rotations and translations.
struct GraphParams {
  Eigen::MatrixX3d theta;
  Eigen::MatrixX3d delta;

  static GraphParams identity(int node_count) {
    GraphParams p;
    p.theta = Eigen::MatrixX3d::Zero(node_count, 3);
    p.delta = Eigen::MatrixX3d::Zero(node_count, 3);
    return p;
  }
};

// Nodes from quadric decimation to target_nodes (farthest-point fallback on
// tiny or stubborn meshes, flagged in the result); K=4 geodesically nearest
// nodes per vertex with squared falloff weights.
DeformationGraph build_graph(const Mesh& mesh, int target_nodes);

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& theta);
std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(const Eigen::Vector3d& theta);

Eigen::MatrixX3d apply_graph(const DeformationGraph& graph, const GraphParams& params,
                             const Eigen::MatrixX3d& vertices);

struct ArapEnergy {
  double value = 0.0;
  Eigen::MatrixX3d grad_theta;
  Eigen::MatrixX3d grad_delta;
};

// Deviation of node transforms from a shared rigid motion plus beta-weighted
// rotation smoothness across graph edges; analytic gradients.
ArapEnergy arap_energy(const DeformationGraph& graph, const GraphParams& params, double beta);
double arap_energy_value(const DeformationGraph& graph, const GraphParams& params, double beta);

// Debug dump: nodes, edges, and skin weights as text.
void save_graph(const DeformationGraph& graph, const std::string& path);

}  // namespace nfr

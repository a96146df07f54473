#include "nfr/defgraph.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "nfr/decimate.hpp"
#include "nfr/errors.hpp"
#include "nfr/geodesics.hpp"

namespace nfr {

namespace {

constexpr double kSmallAngle = 1e-8;
constexpr int kSkinNodes = 4;

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Farthest-point sampling by graph distance, deterministic from vertex 0.
std::vector<int> farthest_point_nodes(const Mesh& mesh, int count) {
  const int n = mesh.vertex_count();
  std::vector<int> nodes{0};
  std::vector<double> min_dist = dijkstra_from(mesh, 0);
  while (static_cast<int>(nodes.size()) < count) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::isinf(min_dist[i]) ? std::numeric_limits<double>::max() : min_dist[i];
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0 || best_d <= 0.0) break;  // all vertices already nodes
    nodes.push_back(best);
    std::vector<double> d = dijkstra_from(mesh, best);
    for (int i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], d[i]);
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

// Voronoi adjacency: nodes are linked when a mesh edge spans their regions.
std::vector<std::vector<int>> voronoi_neighbors(const Mesh& mesh, const std::vector<int>& nodes) {
  auto assignment = k_nearest_sources(mesh, nodes, 1);
  const int h = static_cast<int>(nodes.size());
  std::vector<std::set<int>> links(h);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (assignment[v].empty()) continue;
    const int a = assignment[v][0].first;
    for (int u : mesh.adjacency[v]) {
      if (assignment[u].empty()) continue;
      const int b = assignment[u][0].first;
      if (a != b) {
        links[a].insert(b);
        links[b].insert(a);
      }
    }
  }
  std::vector<std::vector<int>> out(h);
  for (int i = 0; i < h; ++i) out[i].assign(links[i].begin(), links[i].end());
  return out;
}

void build_skinning(const Mesh& mesh, DeformationGraph& graph) {
  const int n = mesh.vertex_count();
  const int h = graph.node_count();
  graph.skin.assign(n, {});

  if (h == n) {
    // no decimation happened: every vertex rides its own node
    std::vector<int> node_of(n, -1);
    for (int node = 0; node < h; ++node) node_of[graph.node_vertices[node]] = node;
    for (int v = 0; v < n; ++v) graph.skin[v] = {{node_of[v], 1.0}};
    return;
  }

  const int k = std::min(kSkinNodes, h);
  auto nearest = k_nearest_sources(mesh, graph.node_vertices, k + 1);
  for (int v = 0; v < n; ++v) {
    const auto& list = nearest[v];  // ascending distance
    if (list.empty())
      fail(ErrorCode::DegenerateGeometry,
           "vertex " + std::to_string(v) + " cannot reach any graph node");
    double cutoff;
    if (static_cast<int>(list.size()) > k)
      cutoff = list[k].second;
    else
      cutoff = list.back().second * 1.05 + 1e-12;
    const int used = std::min<int>(k, static_cast<int>(list.size()));
    auto& skin = graph.skin[v];
    double total = 0.0;
    for (int i = 0; i < used; ++i) {
      const double w = cutoff > 0.0 ? std::pow(std::max(0.0, 1.0 - list[i].second / cutoff), 2) : 0.0;
      skin.emplace_back(list[i].first, w);
      total += w;
    }
    if (total <= 0.0) {
      for (auto& entry : skin) entry.second = 1.0 / used;
    } else {
      for (auto& entry : skin) entry.second /= total;
    }
  }
}

}  // namespace

DeformationGraph build_graph(const Mesh& mesh, int target_nodes) {
  const int n = mesh.vertex_count();
  if (target_nodes > n) target_nodes = n;
  if (target_nodes < 1) fail(ErrorCode::ParseError, "target_nodes must be positive");

  DeformationGraph graph;
  graph.mesh_tag = mesh.content_hash;

  bool fallback = target_nodes < 4 && target_nodes < n;
  if (!fallback) {
    DecimationResult dec = qem_decimate(mesh, target_nodes);
    if (dec.reached_target) {
      graph.node_vertices = dec.kept;
      std::vector<int> node_of(n, -1);
      for (int i = 0; i < static_cast<int>(dec.kept.size()); ++i) node_of[dec.kept[i]] = i;
      graph.neighbors.assign(dec.kept.size(), {});
      for (auto [u, v] : dec.edges) {
        graph.neighbors[node_of[u]].push_back(node_of[v]);
        graph.neighbors[node_of[v]].push_back(node_of[u]);
      }
      for (auto& nb : graph.neighbors) std::sort(nb.begin(), nb.end());
    } else {
      fallback = true;
    }
  }
  if (fallback) {
    graph.used_fallback = true;
    graph.node_vertices = farthest_point_nodes(mesh, target_nodes);
    graph.neighbors = voronoi_neighbors(mesh, graph.node_vertices);
  }

  const int h = static_cast<int>(graph.node_vertices.size());
  graph.nodes.resize(h, 3);
  for (int i = 0; i < h; ++i) graph.nodes.row(i) = mesh.vertices.row(graph.node_vertices[i]);
  build_skinning(mesh, graph);
  return graph;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& theta) {
  const double angle2 = theta.squaredNorm();
  if (angle2 < kSmallAngle * kSmallAngle) {
    const Eigen::Matrix3d k = skew(theta);
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double angle = std::sqrt(angle2);
  const Eigen::Matrix3d k = skew(theta / angle);
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

std::array<Eigen::Matrix3d, 3> rodrigues_jacobian(const Eigen::Vector3d& theta) {
  std::array<Eigen::Matrix3d, 3> jac;
  const double angle2 = theta.squaredNorm();
  if (angle2 < kSmallAngle * kSmallAngle) {
    for (int i = 0; i < 3; ++i) jac[i] = skew(Eigen::Vector3d::Unit(i));
    return jac;
  }
  const Eigen::Matrix3d r = rodrigues(theta);
  const Eigen::Matrix3d eye_minus_r = Eigen::Matrix3d::Identity() - r;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(i);
    const Eigen::Vector3d cross = theta.cross(eye_minus_r * e);
    jac[i] = (theta[i] * skew(theta) + skew(cross)) / angle2 * r;
  }
  return jac;
}

Eigen::MatrixX3d apply_graph(const DeformationGraph& graph, const GraphParams& params,
                             const Eigen::MatrixX3d& vertices) {
  const int h = graph.node_count();
  if (params.theta.rows() != h || params.delta.rows() != h)
    fail(ErrorCode::DimensionMismatch, "parameter row count does not match the node count");
  if (vertices.rows() != static_cast<long>(graph.skin.size()))
    fail(ErrorCode::DimensionMismatch, "vertex count does not match the skinning table");

  std::vector<Eigen::Matrix3d> rotations(h);
  for (int node = 0; node < h; ++node) rotations[node] = rodrigues(params.theta.row(node));

  // blend of R_h (p - g_h) + g_h + d_h, written so identity transforms are
  // exact regardless of weight rounding
  Eigen::MatrixX3d out(vertices.rows(), 3);
  for (long v = 0; v < vertices.rows(); ++v) {
    const Eigen::Vector3d p = vertices.row(v);
    Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
    for (const auto& [node, weight] : graph.skin[v]) {
      const Eigen::Vector3d g = graph.nodes.row(node);
      const Eigen::Vector3d d = params.delta.row(node);
      displacement +=
          weight * ((rotations[node] - Eigen::Matrix3d::Identity()) * (p - g) + d);
    }
    out.row(v) = p + displacement;
  }
  return out;
}

ArapEnergy arap_energy(const DeformationGraph& graph, const GraphParams& params, double beta) {
  if (beta < 0.0) fail(ErrorCode::ParseError, "beta must be nonnegative");
  const int h = graph.node_count();
  if (params.theta.rows() != h || params.delta.rows() != h)
    fail(ErrorCode::DimensionMismatch, "parameter row count does not match the node count");

  std::vector<Eigen::Matrix3d> rot(h);
  std::vector<std::array<Eigen::Matrix3d, 3>> jac(h);
  for (int node = 0; node < h; ++node) {
    rot[node] = rodrigues(params.theta.row(node));
    jac[node] = rodrigues_jacobian(params.theta.row(node));
  }

  ArapEnergy result;
  result.grad_theta = Eigen::MatrixX3d::Zero(h, 3);
  result.grad_delta = Eigen::MatrixX3d::Zero(h, 3);

  for (int node = 0; node < h; ++node) {
    const Eigen::Vector3d g_h = graph.nodes.row(node);
    for (int nb : graph.neighbors[node]) {
      const Eigen::Vector3d g_l = graph.nodes.row(nb);
      const Eigen::Vector3d rel = g_l - g_h;
      // R(g_l - g_h) + g_h + d_h - (g_l + d_l), grouped for exact zeros
      const Eigen::Vector3d d = (rot[node] - Eigen::Matrix3d::Identity()) * rel +
                                (params.delta.row(node) - params.delta.row(nb)).transpose();
      result.value += d.squaredNorm();
      result.grad_delta.row(node) += 2.0 * d.transpose();
      result.grad_delta.row(nb) -= 2.0 * d.transpose();
      for (int m = 0; m < 3; ++m)
        result.grad_theta(node, m) += 2.0 * d.dot(jac[node][m] * rel);

      if (beta > 0.0) {
        const Eigen::Matrix3d diff = rot[node] - rot[nb];
        result.value += beta * diff.squaredNorm();
        for (int m = 0; m < 3; ++m) {
          result.grad_theta(node, m) += 2.0 * beta * diff.cwiseProduct(jac[node][m]).sum();
          result.grad_theta(nb, m) -= 2.0 * beta * diff.cwiseProduct(jac[nb][m]).sum();
        }
      }
    }
  }
  return result;
}

double arap_energy_value(const DeformationGraph& graph, const GraphParams& params, double beta) {
  const int h = graph.node_count();
  std::vector<Eigen::Matrix3d> rot(h);
  for (int node = 0; node < h; ++node) rot[node] = rodrigues(params.theta.row(node));
  double value = 0.0;
  for (int node = 0; node < h; ++node) {
    const Eigen::Vector3d g_h = graph.nodes.row(node);
    for (int nb : graph.neighbors[node]) {
      const Eigen::Vector3d g_l = graph.nodes.row(nb);
      const Eigen::Vector3d d = (rot[node] - Eigen::Matrix3d::Identity()) * (g_l - g_h) +
                                (params.delta.row(node) - params.delta.row(nb)).transpose();
      value += d.squaredNorm();
      if (beta > 0.0) value += beta * (rot[node] - rot[nb]).squaredNorm();
    }
  }
  return value;
}

void save_graph(const DeformationGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  out << "nodes " << graph.node_count() << '\n';
  for (int i = 0; i < graph.node_count(); ++i)
    out << graph.node_vertices[i] << ' ' << graph.nodes(i, 0) << ' ' << graph.nodes(i, 1) << ' '
        << graph.nodes(i, 2) << '\n';
  out << "edges\n";
  for (int i = 0; i < graph.node_count(); ++i)
    for (int j : graph.neighbors[i])
      if (i < j) out << i << ' ' << j << '\n';
  out << "skin\n";
  for (std::size_t v = 0; v < graph.skin.size(); ++v) {
    out << v;
    for (const auto& [node, weight] : graph.skin[v]) out << ' ' << node << ':' << weight;
    out << '\n';
  }
}

}  // namespace nfr

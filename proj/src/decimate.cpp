#include "nfr/decimate.hpp"

#include <Eigen/Geometry>

#include <Eigen/Dense>
#include <algorithm>
#include <queue>
#include <set>
#include <tuple>

namespace nfr {

namespace {

double quadric_error(const Eigen::Matrix4d& q, const Eigen::Vector3d& p) {
  Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
  return h.dot(q * h);
}

struct Candidate {
  double cost;
  int u, v;        // u < v; collapse removes `removed`, keeps the other
  int keep;
  std::uint32_t version_u, version_v;
};

struct CandidateOrder {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return std::tie(a.cost, a.u, a.v) > std::tie(b.cost, b.u, b.v);
  }
};

}  // namespace

DecimationResult qem_decimate(const Mesh& mesh, int target_vertices) {
  const int n = mesh.vertex_count();
  DecimationResult result;
  if (target_vertices >= n) {
    result.kept.resize(n);
    for (int i = 0; i < n; ++i) result.kept[i] = i;
    for (int i = 0; i < n; ++i)
      for (int j : mesh.adjacency[i])
        if (i < j) result.edges.emplace_back(i, j);
    result.reached_target = true;
    return result;
  }

  std::vector<Eigen::Matrix4d> quadrics(n, Eigen::Matrix4d::Zero());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    Eigen::Vector3d normal = (b - a).cross(c - a);
    const double norm = normal.norm();
    if (norm <= 0.0) continue;
    normal /= norm;
    Eigen::Vector4d plane(normal.x(), normal.y(), normal.z(), -normal.dot(a));
    const Eigen::Matrix4d k = plane * plane.transpose();
    for (int corner = 0; corner < 3; ++corner) quadrics[mesh.faces(f, corner)] += k;
  }

  std::vector<std::set<int>> nbrs(n);
  for (int i = 0; i < n; ++i) nbrs[i].insert(mesh.adjacency[i].begin(), mesh.adjacency[i].end());
  std::vector<char> alive(n, 1);
  std::vector<std::uint32_t> version(n, 0);

  auto make_candidate = [&](int u, int v) {
    if (u > v) std::swap(u, v);
    const Eigen::Matrix4d q = quadrics[u] + quadrics[v];
    const double cost_u = quadric_error(q, mesh.vertices.row(u));
    const double cost_v = quadric_error(q, mesh.vertices.row(v));
    Candidate c;
    c.u = u;
    c.v = v;
    c.keep = cost_u <= cost_v ? u : v;
    c.cost = std::min(cost_u, cost_v);
    c.version_u = version[u];
    c.version_v = version[v];
    return c;
  };

  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> heap;
  for (int i = 0; i < n; ++i)
    for (int j : nbrs[i])
      if (i < j) heap.push(make_candidate(i, j));

  int remaining = n;
  bool relaxed = false;  // second pass drops the link-condition check
  while (remaining > target_vertices) {
    if (heap.empty()) {
      if (relaxed) break;
      relaxed = true;
      for (int i = 0; i < n; ++i)
        if (alive[i])
          for (int j : nbrs[i])
            if (i < j) heap.push(make_candidate(i, j));
      if (heap.empty()) break;
      continue;
    }
    Candidate c = heap.top();
    heap.pop();
    if (!alive[c.u] || !alive[c.v]) continue;
    if (version[c.u] != c.version_u || version[c.v] != c.version_v) continue;

    if (!relaxed) {
      // link condition: shared neighborhood limited to the two face wings
      int common = 0;
      const auto& small = nbrs[c.u].size() < nbrs[c.v].size() ? nbrs[c.u] : nbrs[c.v];
      const auto& large = nbrs[c.u].size() < nbrs[c.v].size() ? nbrs[c.v] : nbrs[c.u];
      for (int w : small) common += large.count(w) ? 1 : 0;
      if (common > 2) continue;
    }

    const int keep = c.keep;
    const int drop = keep == c.u ? c.v : c.u;
    alive[drop] = 0;
    quadrics[keep] += quadrics[drop];
    nbrs[keep].erase(drop);
    for (int w : nbrs[drop]) {
      if (w == keep) continue;
      nbrs[w].erase(drop);
      nbrs[w].insert(keep);
      nbrs[keep].insert(w);
    }
    nbrs[drop].clear();
    ++version[keep];
    --remaining;

    for (int w : nbrs[keep]) heap.push(make_candidate(keep, w));
  }

  for (int i = 0; i < n; ++i)
    if (alive[i]) result.kept.push_back(i);
  for (int i : result.kept)
    for (int j : nbrs[i])
      if (i < j) result.edges.emplace_back(i, j);
  result.reached_target = remaining <= target_vertices;
  return result;
}

}  // namespace nfr

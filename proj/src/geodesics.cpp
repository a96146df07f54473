#include "nfr/geodesics.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "nfr/parallel.hpp"

namespace nfr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using HeapItem = std::pair<double, int>;  // (distance, vertex), min-heap

}  // namespace

std::vector<double> dijkstra_from(const Mesh& mesh, int source) {
  const int n = mesh.vertex_count();
  std::vector<double> dist(n, kInf);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (int u : mesh.adjacency[v]) {
      const double w = (mesh.vertices.row(v) - mesh.vertices.row(u)).norm();
      const double cand = d + w;
      if (cand < dist[u]) {
        dist[u] = cand;
        heap.emplace(cand, u);
      }
    }
  }
  return dist;
}

GeodesicMatrix geodesic_matrix(const Mesh& mesh) {
  const int n = mesh.vertex_count();
  GeodesicMatrix geo;
  geo.dist.resize(n, n);
  geo.mesh_tag = mesh.content_hash;
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<double> row = dijkstra_from(mesh, static_cast<int>(i));
    for (int j = 0; j < n; ++j) geo.dist(static_cast<int>(i), j) = row[j];
  });
  // enforce exact symmetry against floating-point relaxation-order noise
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = std::min(geo.dist(i, j), geo.dist(j, i));
      geo.dist(i, j) = d;
      geo.dist(j, i) = d;
    }
  return geo;
}

std::vector<std::vector<std::pair<int, double>>> k_nearest_sources(
    const Mesh& mesh, const std::vector<int>& sources, int k) {
  const int n = mesh.vertex_count();
  std::vector<std::vector<std::pair<int, double>>> best(n);

  // Multi-source Dijkstra where each vertex may be settled once per source,
  // up to k times total. Ties resolve by source list position.
  struct Item {
    double dist;
    int source_pos;
    int vertex;
    bool operator>(const Item& o) const {
      if (dist != o.dist) return dist > o.dist;
      if (source_pos != o.source_pos) return source_pos > o.source_pos;
      return vertex > o.vertex;
    }
  };
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  std::vector<std::vector<char>> settled(n);
  const int s = static_cast<int>(sources.size());
  for (int i = 0; i < n; ++i) settled[i].assign(s, 0);
  for (int p = 0; p < s; ++p) heap.push({0.0, p, sources[p]});

  while (!heap.empty()) {
    Item it = heap.top();
    heap.pop();
    auto& list = best[it.vertex];
    if (static_cast<int>(list.size()) >= k) continue;
    if (settled[it.vertex][it.source_pos]) continue;
    settled[it.vertex][it.source_pos] = 1;
    list.emplace_back(it.source_pos, it.dist);
    for (int u : mesh.adjacency[it.vertex]) {
      if (static_cast<int>(best[u].size()) >= k || settled[u][it.source_pos]) continue;
      const double w = (mesh.vertices.row(it.vertex) - mesh.vertices.row(u)).norm();
      heap.push({it.dist + w, it.source_pos, u});
    }
  }
  return best;
}

}  // namespace nfr

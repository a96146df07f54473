#include "nfr/partial_views.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nfr/errors.hpp"
#include "nfr/kdtree.hpp"

namespace nfr {

namespace {

constexpr double kRayEps = 1e-12;

// Watertight enough for sampling: intersect ray (origin, dir) with triangle,
// no back-face culling. Returns t or infinity.
double moller_trumbore(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                       const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                       const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a;
  const Eigen::Vector3d e2 = c - a;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < kRayEps) return std::numeric_limits<double>::infinity();
  const double inv_det = 1.0 / det;
  const Eigen::Vector3d s = origin - a;
  const double u = s.dot(p) * inv_det;
  if (u < -1e-9 || u > 1.0 + 1e-9) return std::numeric_limits<double>::infinity();
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv_det;
  if (v < -1e-9 || u + v > 1.0 + 1e-9) return std::numeric_limits<double>::infinity();
  const double t = e2.dot(q) * inv_det;
  return t > kRayEps ? t : std::numeric_limits<double>::infinity();
}

void orthonormal_frame(const Eigen::Vector3d& dir, Eigen::Vector3d& u, Eigen::Vector3d& v) {
  const Eigen::Vector3d helper =
      std::abs(dir.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  u = dir.cross(helper).normalized();
  v = dir.cross(u);
}

}  // namespace

Eigen::MatrixX3d icosahedron_directions() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Eigen::MatrixX3d dirs(12, 3);
  int r = 0;
  for (double s0 : {-1.0, 1.0})
    for (double s1 : {-phi, phi}) {
      dirs.row(r++) = Eigen::Vector3d(0, s0, s1);
      dirs.row(r++) = Eigen::Vector3d(s0, s1, 0);
      dirs.row(r++) = Eigen::Vector3d(s1, 0, s0);
    }
  dirs.rowwise().normalize();
  return dirs;
}

std::vector<PointCloud> sample_partial_views(const Mesh& mesh,
                                             const Eigen::MatrixX3d& directions,
                                             const ViewSamplingConfig& config) {
  const int res = config.grid_resolution;
  if (res < 2) fail(ErrorCode::ParseError, "grid resolution must be at least 2");
  if (config.points_per_view < 1) fail(ErrorCode::ParseError, "points_per_view must be positive");

  const Eigen::Vector3d centroid = mesh.area_centroid();
  double radius = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i)
    radius = std::max(radius, (mesh.vertices.row(i).transpose() - centroid).norm());
  const double half = radius * 1.05;

  KdTree3 vertex_tree(mesh.vertices);
  std::vector<PointCloud> views;

  for (int view = 0; view < directions.rows(); ++view) {
    const Eigen::Vector3d dir = directions.row(view).normalized();
    Eigen::Vector3d u, v;
    orthonormal_frame(dir, u, v);
    const Eigen::Vector3d ray_dir = -dir;
    const Eigen::Vector3d plane_origin = centroid + dir * (2.0 * radius + 1.0);

    std::mt19937_64 rng(config.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(view));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Per-cell jitter offsets (fixed to cell centers unless enabled).
    Eigen::MatrixXd off_u(res, res), off_v(res, res);
    for (int iy = 0; iy < res; ++iy)
      for (int ix = 0; ix < res; ++ix) {
        off_u(iy, ix) = config.jitter ? unit(rng) : 0.5;
        off_v(iy, ix) = config.jitter ? unit(rng) : 0.5;
      }

    const double cell = 2.0 * half / res;
    auto cell_of = [&](double coord) {
      int c = static_cast<int>(std::floor((coord + half) / cell));
      return std::clamp(c, 0, res - 1);
    };

    // Bin triangles into the pixel grid by projected bounding box, then
    // depth-test each covered ray.
    Eigen::MatrixXd depth = Eigen::MatrixXd::Constant(res, res, std::numeric_limits<double>::infinity());
    Eigen::MatrixXi hit_face = Eigen::MatrixXi::Constant(res, res, -1);

    for (int f = 0; f < mesh.face_count(); ++f) {
      const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
      const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
      const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
      double umin = std::numeric_limits<double>::infinity(), umax = -umin;
      double vmin = umin, vmax = -umin;
      for (const auto& p : {a, b, c}) {
        const Eigen::Vector3d rel = p - centroid;
        umin = std::min(umin, rel.dot(u));
        umax = std::max(umax, rel.dot(u));
        vmin = std::min(vmin, rel.dot(v));
        vmax = std::max(vmax, rel.dot(v));
      }
      const int cu0 = cell_of(umin - cell), cu1 = cell_of(umax + cell);
      const int cv0 = cell_of(vmin - cell), cv1 = cell_of(vmax + cell);
      for (int iv = cv0; iv <= cv1; ++iv)
        for (int iu = cu0; iu <= cu1; ++iu) {
          const double du = -half + (iu + off_u(iv, iu)) * cell;
          const double dv = -half + (iv + off_v(iv, iu)) * cell;
          const Eigen::Vector3d origin = plane_origin + u * du + v * dv;
          const double t = moller_trumbore(origin, ray_dir, a, b, c);
          if (t < depth(iv, iu)) {
            depth(iv, iu) = t;
            hit_face(iv, iu) = f;
          }
        }
    }

    // Collect hits in scanline order and keep the first sample per vertex.
    std::vector<Eigen::Vector3d> samples;
    std::vector<int> prov;
    std::vector<char> vertex_taken(mesh.vertex_count(), 0);
    for (int iv = 0; iv < res; ++iv)
      for (int iu = 0; iu < res; ++iu) {
        if (hit_face(iv, iu) < 0) continue;
        const double du = -half + (iu + off_u(iv, iu)) * cell;
        const double dv = -half + (iv + off_v(iv, iu)) * cell;
        const Eigen::Vector3d origin = plane_origin + u * du + v * dv;
        const Eigen::Vector3d point = origin + ray_dir * depth(iv, iu);
        const int nearest = vertex_tree.nearest(point);
        if (vertex_taken[nearest]) continue;
        vertex_taken[nearest] = 1;
        samples.push_back(point);
        prov.push_back(nearest);
      }

    if (samples.empty())
      fail(ErrorCode::NoVisibleSurface, "view " + std::to_string(view) + " produced no surface hits");

    // Deterministic stride subsample down to the per-view budget.
    const int budget = config.points_per_view;
    std::vector<int> keep;
    if (static_cast<int>(samples.size()) <= budget) {
      keep.resize(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) keep[i] = static_cast<int>(i);
    } else {
      keep.reserve(budget);
      const double stride = static_cast<double>(samples.size()) / budget;
      for (int i = 0; i < budget; ++i) keep.push_back(static_cast<int>(i * stride));
    }

    Eigen::MatrixX3d pts(keep.size(), 3);
    std::vector<int> kept_prov(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      pts.row(i) = samples[keep[i]];
      kept_prov[i] = prov[keep[i]];
    }
    views.push_back(make_point_cloud(std::move(pts), std::move(kept_prov)));
  }
  return views;
}

std::vector<PointCloud> sample_partial_views(const Mesh& mesh, int n_views, int points_per_view) {
  Eigen::MatrixX3d dirs = icosahedron_directions();
  if (n_views != 12) {
    if (n_views < 1 || n_views > 12)
      fail(ErrorCode::ParseError, "n_views must be in [1, 12] for icosahedron sampling");
    dirs = dirs.topRows(n_views).eval();
  }
  ViewSamplingConfig config;
  config.points_per_view = points_per_view;
  return sample_partial_views(mesh, dirs, config);
}

}  // namespace nfr

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "nfr/mesh.hpp"

namespace nfrtest {

// Regular tetrahedron with unit edge length (total area sqrt(3)).
inline nfr::Mesh tetrahedron() {
  Eigen::MatrixX3d v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0.5, std::sqrt(3.0) / 2.0, 0, 0.5, std::sqrt(3.0) / 6.0,
      std::sqrt(6.0) / 3.0;
  Eigen::MatrixX3i f(4, 3);
  f << 0, 2, 1, 0, 1, 3, 1, 2, 3, 0, 3, 2;
  return nfr::make_mesh(v, f);
}

// Unit square in the z=0 plane split into two triangles.
inline nfr::Mesh unit_square() {
  Eigen::MatrixX3d v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  Eigen::MatrixX3i f(2, 3);
  f << 0, 1, 2, 0, 2, 3;
  return nfr::make_mesh(v, f);
}

// Two rows of vertices with rungs, a strip whose edge graph is hand-checkable.
inline nfr::Mesh strip(int columns, double dx = 1.0) {
  Eigen::MatrixX3d v(2 * columns, 3);
  for (int i = 0; i < columns; ++i) {
    v.row(2 * i) << i * dx, 0, 0;
    v.row(2 * i + 1) << i * dx, 1, 0;
  }
  Eigen::MatrixX3i f(2 * (columns - 1), 3);
  for (int i = 0; i + 1 < columns; ++i) {
    f.row(2 * i) << 2 * i, 2 * i + 2, 2 * i + 1;
    f.row(2 * i + 1) << 2 * i + 1, 2 * i + 2, 2 * i + 3;
  }
  return nfr::make_mesh(v, f);
}

// Flat triangulated plane facing +z.
inline nfr::Mesh grid_plane(int nx, int ny, double size = 1.0) {
  Eigen::MatrixX3d v(nx * ny, 3);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      v.row(y * nx + x) << size * x / (nx - 1) - size / 2, size * y / (ny - 1) - size / 2, 0;
  Eigen::MatrixX3i f(2 * (nx - 1) * (ny - 1), 3);
  int r = 0;
  for (int y = 0; y + 1 < ny; ++y)
    for (int x = 0; x + 1 < nx; ++x) {
      const int a = y * nx + x, b = a + 1, c = a + nx, d = c + 1;
      f.row(r++) << a, b, d;
      f.row(r++) << a, d, c;
    }
  return nfr::make_mesh(v, f);
}

// Icosphere by midpoint subdivision of a regular icosahedron.
inline nfr::Mesh icosphere(int subdivisions, double radius = 1.0) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& t : faces) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Eigen::MatrixX3d v(verts.size(), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) v.row(i) = verts[i] * radius;
  Eigen::MatrixX3i f(faces.size(), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) f.row(i) << faces[i][0], faces[i][1], faces[i][2];
  return nfr::make_mesh(v, f);
}

// Irregular closed surface with a simple spectrum: anisotropic axes plus a
// smooth deterministic radial bump field.
inline nfr::Mesh bumpy_ellipsoid(int subdivisions, double bump = 0.12,
                                 const Eigen::Vector3d& axes = {1.0, 0.8, 0.65}) {
  nfr::Mesh sphere = icosphere(subdivisions);
  Eigen::MatrixX3d v(sphere.vertex_count(), 3);
  for (int i = 0; i < sphere.vertex_count(); ++i) {
    const Eigen::Vector3d u = sphere.vertices.row(i);
    const double wobble = 1.0 + bump * std::sin(3.0 * u.x() + 0.9) * std::cos(2.0 * u.y() - 0.4) +
                          0.5 * bump * std::sin(5.0 * u.z() + 0.2);
    v.row(i) = (u.cwiseProduct(axes)) * wobble;
  }
  return nfr::make_mesh(v, sphere.faces);
}

// Closed torus grid with exactly nu*nv vertices.
inline nfr::Mesh torus(int nu, int nv, double major = 1.0, double minor = 0.4, double bump = 0.0) {
  Eigen::MatrixX3d v(nu * nv, 3);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double a = 2.0 * M_PI * i / nu;
      const double b = 2.0 * M_PI * j / nv;
      double r = minor * (1.0 + bump * std::sin(3.0 * a + 0.7) * std::cos(2.0 * b + 0.3));
      v.row(i * nv + j) << (major + r * std::cos(b)) * std::cos(a),
          (major + r * std::cos(b)) * std::sin(a), r * std::sin(b);
    }
  Eigen::MatrixX3i f(2 * nu * nv, 3);
  int r = 0;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const int a = i * nv + j;
      const int b = i * nv + (j + 1) % nv;
      const int c = ((i + 1) % nu) * nv + j;
      const int d = ((i + 1) % nu) * nv + (j + 1) % nv;
      f.row(r++) << a, b, d;
      f.row(r++) << a, d, c;
    }
  return nfr::make_mesh(v, f);
}

inline std::vector<int> random_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// New mesh whose vertex i is old vertex perm[i]; an exact isometry of the
// input with relabeled vertices.
inline nfr::Mesh permute_mesh(const nfr::Mesh& mesh, const std::vector<int>& perm) {
  const int n = mesh.vertex_count();
  std::vector<int> inverse(n);
  for (int i = 0; i < n; ++i) inverse[perm[i]] = i;
  Eigen::MatrixX3d v(n, 3);
  for (int i = 0; i < n; ++i) v.row(i) = mesh.vertices.row(perm[i]);
  Eigen::MatrixX3i f(mesh.face_count(), 3);
  for (int t = 0; t < mesh.face_count(); ++t)
    for (int c = 0; c < 3; ++c) f(t, c) = inverse[mesh.faces(t, c)];
  return nfr::make_mesh(v, f);
}

// Smooth bend: x-displacement varying sinusoidally with height, scaled to
// the requested fraction of the bounding-box diagonal.
inline nfr::Mesh bend_mesh(const nfr::Mesh& mesh, double fraction_of_bbox) {
  const double amplitude = fraction_of_bbox * mesh.bbox_diagonal();
  const double z_min = mesh.vertices.col(2).minCoeff();
  const double z_max = mesh.vertices.col(2).maxCoeff();
  Eigen::MatrixX3d v = mesh.vertices;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double s = (v(i, 2) - z_min) / (z_max - z_min);
    v(i, 0) += amplitude * std::sin(M_PI * s);
    v(i, 1) += 0.35 * amplitude * std::sin(2.0 * M_PI * s + 0.5);
  }
  return nfr::make_mesh(v, mesh.faces);
}

inline Eigen::Matrix3d rotation(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Central finite differences for scalar functions of a parameter vector.
template <typename F>
Eigen::VectorXd finite_difference(F&& f, Eigen::VectorXd x, double h = 1e-6) {
  Eigen::VectorXd grad(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace nfrtest

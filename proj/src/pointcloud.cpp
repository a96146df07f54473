#include "nfr/pointcloud.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

Eigen::MatrixX3d parse_xyz(std::istream& in, const std::string& path) {
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;  // blank line
    if (!(ls >> y >> z))
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected three coordinates");
    pts.emplace_back(x, y, z);
  }
  Eigen::MatrixX3d m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(i) = pts[i];
  return m;
}

Eigen::MatrixX3d parse_ply_points(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    fail(ErrorCode::ParseError, path + ": missing ply header");
  long count = -1;
  int n_props = 0, ix = -1, iy = -1, iz = -1;
  bool in_vertex = false, ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (kw == "element") {
      std::string name;
      long c;
      ls >> name >> c;
      in_vertex = name == "vertex";
      if (in_vertex) count = c;
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (name == "x") ix = n_props;
      if (name == "y") iy = n_props;
      if (name == "z") iz = n_props;
      ++n_props;
    } else if (kw == "end_header") {
      break;
    }
  }
  if (!ascii) fail(ErrorCode::ParseError, path + ": only ascii ply is supported");
  if (count < 0 || ix < 0 || iy < 0 || iz < 0)
    fail(ErrorCode::ParseError, path + ": vertex element lacks x/y/z");
  Eigen::MatrixX3d pts(count, 3);
  std::vector<double> row(n_props);
  for (long i = 0; i < count; ++i) {
    for (int p = 0; p < n_props; ++p)
      if (!(in >> row[p])) fail(ErrorCode::ParseError, path + ": truncated vertex data");
    pts(i, 0) = row[ix];
    pts(i, 1) = row[iy];
    pts(i, 2) = row[iz];
  }
  return pts;
}

}  // namespace

PointCloud make_point_cloud(Eigen::MatrixX3d points, std::vector<int> provenance) {
  if (points.rows() == 0) fail(ErrorCode::ParseError, "point cloud is empty");
  if (!points.allFinite()) fail(ErrorCode::NonFiniteEntry, "non-finite point coordinate");
  if (!provenance.empty()) {
    if (static_cast<long>(provenance.size()) != points.rows())
      fail(ErrorCode::CountMismatch, "provenance length does not match point count");
    std::unordered_set<int> seen;
    for (int idx : provenance) {
      if (idx < 0) fail(ErrorCode::ParseError, "negative provenance index");
      if (!seen.insert(idx).second)
        fail(ErrorCode::ParseError, "duplicate provenance index " + std::to_string(idx));
    }
  }
  PointCloud cloud;
  cloud.points = std::move(points);
  cloud.provenance = std::move(provenance);
  return cloud;
}

PointCloud cloud_from_mesh_vertices(const Mesh& mesh) {
  std::vector<int> prov(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) prov[i] = i;
  return make_point_cloud(mesh.vertices, std::move(prov));
}

PointCloud load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  const std::string ext = lower_ext(path);
  Eigen::MatrixX3d pts;
  if (ext == "xyz")
    pts = parse_xyz(in, path);
  else if (ext == "ply")
    pts = parse_ply_points(in, path);
  else
    fail(ErrorCode::ParseError, path + ": unsupported point cloud format ." + ext);

  std::vector<int> prov;
  std::ifstream prov_in(path + ".prov");
  if (prov_in) {
    long idx;
    while (prov_in >> idx) prov.push_back(static_cast<int>(idx));
  }
  return make_point_cloud(std::move(pts), std::move(prov));
}

void save_point_cloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  const std::string ext = lower_ext(path);
  if (ext == "xyz") {
    for (int i = 0; i < cloud.point_count(); ++i)
      out << cloud.points(i, 0) << ' ' << cloud.points(i, 1) << ' ' << cloud.points(i, 2) << '\n';
  } else if (ext == "ply") {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.point_count()
        << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (int i = 0; i < cloud.point_count(); ++i)
      out << cloud.points(i, 0) << ' ' << cloud.points(i, 1) << ' ' << cloud.points(i, 2) << '\n';
  } else {
    fail(ErrorCode::ParseError, path + ": unsupported point cloud format ." + ext);
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);

  if (cloud.has_provenance()) {
    std::ofstream prov_out(path + ".prov");
    if (!prov_out) fail(ErrorCode::IoError, "cannot write " + path + ".prov");
    for (int idx : cloud.provenance) prov_out << idx << '\n';
  }
}

}  // namespace nfr

#include "nfr/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

constexpr double kDegenerateAreaEps = 1e-12;

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Token stream that skips blank lines and '#' comments.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    for (;;) {
      if (!(line_ >> tok)) {
        std::string raw;
        do {
          if (!std::getline(in_, raw)) return false;
          auto hash = raw.find('#');
          if (hash != std::string::npos) raw.erase(hash);
        } while (raw.find_first_not_of(" \t\r\n") == std::string::npos);
        line_.clear();
        line_.str(raw);
        continue;
      }
      return true;
    }
  }

  double number(const char* what) {
    std::string tok;
    if (!next(tok)) fail(ErrorCode::ParseError, std::string("unexpected end of file reading ") + what);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, std::string("expected a number for ") + what + ", got '" + tok + "'");
    }
  }

  long integer(const char* what) {
    double v = number(what);
    if (v != std::floor(v)) fail(ErrorCode::ParseError, std::string("expected an integer for ") + what);
    return static_cast<long>(v);
  }

 private:
  std::istream& in_;
  std::istringstream line_;
};

Mesh parse_off(std::istream& in, const std::string& path) {
  TokenReader tokens(in);
  std::string header;
  if (!tokens.next(header)) fail(ErrorCode::ParseError, path + ": empty file");
  if (header != "OFF") fail(ErrorCode::ParseError, path + ": missing OFF header");
  long nv = tokens.integer("vertex count");
  long nf = tokens.integer("face count");
  tokens.integer("edge count");
  if (nv <= 0) fail(ErrorCode::EmptyMesh, path + ": no vertices");

  Eigen::MatrixX3d vertices(nv, 3);
  for (long i = 0; i < nv; ++i)
    for (int c = 0; c < 3; ++c) vertices(i, c) = tokens.number("vertex coordinate");

  Eigen::MatrixX3i faces(nf, 3);
  for (long f = 0; f < nf; ++f) {
    long cnt = tokens.integer("face vertex count");
    if (cnt != 3) fail(ErrorCode::ParseError, path + ": only triangular faces are supported");
    for (int c = 0; c < 3; ++c) faces(f, c) = static_cast<int>(tokens.integer("face index"));
  }
  return make_mesh(std::move(vertices), std::move(faces));
}

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<std::string> properties;  // scalar property names, in order
  bool has_list = false;                // face-style list property
};

Mesh parse_ply(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    fail(ErrorCode::ParseError, path + ": missing ply header");

  std::vector<PlyElement> elements;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (kw == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (kw == "property") {
      if (elements.empty()) fail(ErrorCode::ParseError, path + ": property before element");
      std::string type;
      ls >> type;
      if (type == "list") {
        elements.back().has_list = true;
      } else {
        std::string name;
        ls >> name;
        elements.back().properties.push_back(name);
      }
    } else if (kw == "end_header") {
      break;
    } else if (kw == "comment" || kw == "obj_info" || kw.empty()) {
      continue;
    }
  }
  if (!ascii) fail(ErrorCode::ParseError, path + ": only ascii ply is supported");

  Eigen::MatrixX3d vertices;
  Eigen::MatrixX3i faces(0, 3);
  TokenReader tokens(in);
  for (const PlyElement& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
        if (el.properties[p] == "x") ix = p;
        if (el.properties[p] == "y") iy = p;
        if (el.properties[p] == "z") iz = p;
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(ErrorCode::ParseError, path + ": vertex element lacks x/y/z");
      vertices.resize(el.count, 3);
      std::vector<double> row(el.properties.size());
      for (long i = 0; i < el.count; ++i) {
        for (std::size_t p = 0; p < row.size(); ++p) row[p] = tokens.number("vertex property");
        vertices(i, 0) = row[ix];
        vertices(i, 1) = row[iy];
        vertices(i, 2) = row[iz];
      }
    } else if (el.name == "face") {
      faces.resize(el.count, 3);
      for (long f = 0; f < el.count; ++f) {
        long cnt = tokens.integer("face vertex count");
        if (cnt != 3) fail(ErrorCode::ParseError, path + ": only triangular faces are supported");
        for (int c = 0; c < 3; ++c) faces(f, c) = static_cast<int>(tokens.integer("face index"));
      }
    } else {
      // skip unknown elements
      for (long i = 0; i < el.count; ++i)
        for (std::size_t p = 0; p < el.properties.size(); ++p) tokens.number("skipped property");
    }
  }
  if (vertices.rows() == 0) fail(ErrorCode::EmptyMesh, path + ": no vertices");
  return make_mesh(std::move(vertices), std::move(faces));
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

double Mesh::bbox_diagonal() const {
  if (vertices.rows() == 0) return 0.0;
  Eigen::Vector3d lo = vertices.colwise().minCoeff();
  Eigen::Vector3d hi = vertices.colwise().maxCoeff();
  return (hi - lo).norm();
}

Eigen::Vector3d Mesh::area_centroid() const {
  const double total = vertex_areas.sum();
  if (total <= 0.0) return vertices.colwise().mean();
  return (vertices.transpose() * vertex_areas) / total;
}

Mesh make_mesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i faces) {
  const int n = static_cast<int>(vertices.rows());
  const int nf = static_cast<int>(faces.rows());
  if (n == 0) fail(ErrorCode::EmptyMesh, "mesh has no vertices");
  if (!vertices.allFinite()) fail(ErrorCode::ParseError, "non-finite vertex coordinate");

  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  mesh.vertex_areas = Eigen::VectorXd::Zero(n);
  mesh.adjacency.assign(n, {});

  for (int f = 0; f < nf; ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    for (int idx : {a, b, c})
      if (idx < 0 || idx >= n)
        fail(ErrorCode::ParseError, "face index " + std::to_string(idx) + " out of range");
    if (a == b || b == c || a == c)
      fail(ErrorCode::DegenerateGeometry, "face " + std::to_string(f) + " repeats a vertex");
    const Eigen::Vector3d e1 = mesh.vertices.row(b) - mesh.vertices.row(a);
    const Eigen::Vector3d e2 = mesh.vertices.row(c) - mesh.vertices.row(a);
    const double area = 0.5 * e1.cross(e2).norm();
    if (area <= kDegenerateAreaEps)
      fail(ErrorCode::DegenerateGeometry, "face " + std::to_string(f) + " has near-zero area");
    const double third = area / 3.0;
    mesh.vertex_areas[a] += third;
    mesh.vertex_areas[b] += third;
    mesh.vertex_areas[c] += third;
    mesh.adjacency[a].push_back(b);
    mesh.adjacency[a].push_back(c);
    mesh.adjacency[b].push_back(a);
    mesh.adjacency[b].push_back(c);
    mesh.adjacency[c].push_back(a);
    mesh.adjacency[c].push_back(b);
  }
  for (auto& nbrs : mesh.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }

  std::uint64_t h = fnv1a64(mesh.vertices.data(), sizeof(double) * mesh.vertices.size());
  h = fnv1a64(mesh.faces.data(), sizeof(int) * mesh.faces.size(), h);
  mesh.content_hash = h;
  return mesh;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  const std::string ext = lower_ext(path);
  if (ext == "off") return parse_off(in, path);
  if (ext == "ply") return parse_ply(in, path);
  fail(ErrorCode::ParseError, path + ": unsupported mesh format ." + ext);
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  const std::string ext = lower_ext(path);
  if (ext == "off") {
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
    for (int i = 0; i < mesh.vertex_count(); ++i)
      out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (int f = 0; f < mesh.face_count(); ++f)
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  } else if (ext == "ply") {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.face_count() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    for (int i = 0; i < mesh.vertex_count(); ++i)
      out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (int f = 0; f < mesh.face_count(); ++f)
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  } else {
    fail(ErrorCode::ParseError, path + ": unsupported mesh format ." + ext);
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace nfr

#include "nfr/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

std::uint64_t points_hash(const Eigen::MatrixX3d& points) {
  return fnv1a64(points.data(), sizeof(double) * points.size());
}

Eigen::VectorXd descriptor_scales(const Eigen::VectorXd& mu, int n_scales) {
  if (n_scales < 1) fail(ErrorCode::ParseError, "n_scales must be positive");
  const double mu_max = mu.size() > 0 ? mu[mu.size() - 1] : 0.0;
  double mu_lo = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    if (mu[i] > 1e-8 * std::max(mu_max, 1e-300)) {
      mu_lo = mu[i];
      break;
    }
  Eigen::VectorXd scales(n_scales);
  if (mu_lo <= 0.0 || mu_max <= 0.0) {
    scales.setOnes();  // constant-only basis: any scale gives equal rows
    return scales;
  }
  const double t_min = 4.0 * std::log(10.0) / mu_max;
  const double t_max = 4.0 * std::log(10.0) / mu_lo;
  const double log_min = std::log(t_min), log_max = std::log(t_max);
  for (int s = 0; s < n_scales; ++s) {
    const double f = n_scales == 1 ? 0.0 : static_cast<double>(s) / (n_scales - 1);
    scales[s] = std::exp(log_min + f * (log_max - log_min));
  }
  return scales;
}

Eigen::MatrixXd heat_kernel_rows(const Eigen::MatrixXd& phi, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& scales) {
  const Eigen::MatrixXd phi_sq = phi.cwiseProduct(phi);
  Eigen::MatrixXd values(phi.rows(), scales.size());
  for (int s = 0; s < scales.size(); ++s)
    values.col(s) = phi_sq * (-scales[s] * mu.array()).exp().matrix();
  return values;
}

}  // namespace

FeatureMatrix coordinate_features(const Mesh& mesh) {
  FeatureMatrix f;
  f.values = mesh.vertices;
  f.provider = "coordinates";
  f.shape_tag = mesh.content_hash;
  return f;
}

FeatureMatrix coordinate_features(const PointCloud& cloud) {
  FeatureMatrix f;
  f.values = cloud.points;
  f.provider = "coordinates";
  f.shape_tag = points_hash(cloud.points);
  return f;
}

FeatureMatrix spectral_descriptor(const SpectralBasis& basis, int n_scales) {
  const Eigen::VectorXd scales = descriptor_scales(basis.mu, n_scales);
  FeatureMatrix f;
  f.values = heat_kernel_rows(basis.phi, basis.mu, scales);
  for (int c = 0; c < f.values.cols(); ++c) {
    const double norm = std::sqrt(f.values.col(c).cwiseProduct(f.values.col(c)).dot(basis.mass));
    if (norm > 0.0) f.values.col(c) /= norm;
  }
  f.provider = "spectral";
  f.shape_tag = basis.mesh_tag;
  return f;
}

FeatureMatrix spectral_descriptor(const TruncatedBasis& basis, int n_scales) {
  const Eigen::VectorXd scales = descriptor_scales(basis.mu, n_scales);
  FeatureMatrix f;
  f.values = heat_kernel_rows(basis.phi, basis.mu, scales);
  for (int c = 0; c < f.values.cols(); ++c) {
    const double norm = f.values.col(c).norm();  // subset rows carry no mass
    if (norm > 0.0) f.values.col(c) /= norm;
  }
  f.provider = "spectral_truncated";
  f.shape_tag = basis.mesh_tag;
  return f;
}

FeatureMatrix select_rows(const FeatureMatrix& features, const std::vector<int>& rows) {
  FeatureMatrix out;
  out.values.resize(rows.size(), features.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= features.values.rows())
      fail(ErrorCode::MissingProvenance, "row index " + std::to_string(rows[i]) + " out of range");
    out.values.row(i) = features.values.row(rows[i]);
  }
  out.provider = features.provider;
  out.shape_tag = features.shape_tag;
  return out;
}

FeatureMatrix load_features(const std::string& path, int expected_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, n = 0, d = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || std::memcmp(magic, "NFRM", 4) != 0)
    fail(ErrorCode::ParseError, path + ": not an NFRM container");
  if (version != 1)
    fail(ErrorCode::ParseError, path + ": unsupported container version " + std::to_string(version));
  if (d == 0) fail(ErrorCode::ParseError, path + ": zero feature dimension");
  if (static_cast<int>(n) != expected_n)
    fail(ErrorCode::CountMismatch, path + ": container holds " + std::to_string(n) +
                                       " rows, expected " + std::to_string(expected_n));
  std::vector<float> payload(static_cast<std::size_t>(n) * d);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 4));
  if (!in) fail(ErrorCode::ParseError, path + ": truncated payload");

  FeatureMatrix f;
  f.values.resize(n, d);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c) {
      const float v = payload[static_cast<std::size_t>(r) * d + c];
      if (!std::isfinite(v))
        fail(ErrorCode::NonFiniteEntry, path + ": non-finite value at row " + std::to_string(r));
      f.values(r, c) = v;
    }
  f.provider = "file:" + path;
  return f;
}

void save_features(const FeatureMatrix& features, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  const std::uint32_t version = 1;
  const std::uint32_t n = static_cast<std::uint32_t>(features.values.rows());
  const std::uint32_t d = static_cast<std::uint32_t>(features.values.cols());
  out.write("NFRM", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c) {
      const float v = static_cast<float>(features.values(r, c));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace nfr

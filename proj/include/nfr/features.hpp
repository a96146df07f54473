#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "nfr/mesh.hpp"
#include "nfr/pointcloud.hpp"
#include "nfr/spectral.hpp"

namespace nfr {

struct FeatureMatrix {
  Eigen::MatrixXd values;  // n x d
  std::string provider;
  std::uint64_t shape_tag = 0;

  int n() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

FeatureMatrix coordinate_features(const Mesh& mesh);
FeatureMatrix coordinate_features(const PointCloud& cloud);

// Heat-kernel signature over log-spaced time scales; columns normalized to
// unit (mass-weighted) norm. Sign flips of the basis do not change it.
FeatureMatrix spectral_descriptor(const SpectralBasis& basis, int n_scales = 16);
FeatureMatrix spectral_descriptor(const TruncatedBasis& basis, int n_scales = 16);

FeatureMatrix select_rows(const FeatureMatrix& features, const std::vector<int>& rows);

// Binary matrix container: magic "NFRM", u32 version=1, u32 n, u32 d, then
// n*d little-endian f32 values in row-major order. Trailing bytes (such as
// appended eigenvalues in basis containers) are permitted.
FeatureMatrix load_features(const std::string& path, int expected_n);
void save_features(const FeatureMatrix& features, const std::string& path);

}  // namespace nfr

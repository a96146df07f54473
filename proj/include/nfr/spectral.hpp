#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "nfr/laplacian.hpp"
#include "nfr/mesh.hpp"
#include "nfr/pointcloud.hpp"

namespace nfr {

// Mass-orthonormal eigenpairs of the cotangent Laplacian, eigenvalues
// ascending. Column signs are fixed so the first nonzero entry of each
// eigenvector is positive.
struct SpectralBasis {
  Eigen::MatrixXd phi;   // N x k
  Eigen::VectorXd mu;    // k
  Eigen::VectorXd mass;  // N
  int k = 0;
  std::uint64_t mesh_tag = 0;
  bool near_degenerate = false;  // some eigenvalue gap < 1e-6 * mu.max()
};

enum class EigenMethod { Auto, Iterative, Dense };

SpectralBasis eigenbasis(const Mesh& mesh, int k, EigenMethod method = EigenMethod::Auto);

// Rows of a parent basis selected by cloud provenance; no recomputation.
struct TruncatedBasis {
  Eigen::MatrixXd phi;  // n_p x k
  Eigen::VectorXd mu;   // parent eigenvalues
  std::vector<int> selection;
  std::uint64_t mesh_tag = 0;

  int k() const { return static_cast<int>(phi.cols()); }
};

TruncatedBasis truncate_basis(const SpectralBasis& basis, const PointCloud& cloud);
TruncatedBasis truncate_basis(const SpectralBasis& basis, const std::vector<int>& selection);

// Binary container: the matrix format used for features, with the
// eigenvalues appended after the payload.
void save_basis(const SpectralBasis& basis, const std::string& path);

}  // namespace nfr

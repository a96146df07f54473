#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nfr/mesh.hpp"

namespace nfr {

// Cotangent stiffness matrix (positive semidefinite, zero row sums) and
// lumped mass weights. Cotangents are clamped to [1e-6, 1e6].
struct LaplacianOperator {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd mass;
};

LaplacianOperator cotan_laplacian(const Mesh& mesh);

}  // namespace nfr

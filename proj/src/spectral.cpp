#include "nfr/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

constexpr double kShift = -1e-8;
constexpr int kDenseCutoff = 500;

void fix_column_signs(Eigen::MatrixXd& phi) {
  for (int c = 0; c < phi.cols(); ++c) {
    const double scale = phi.col(c).cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    for (int r = 0; r < phi.rows(); ++r) {
      const double v = phi(r, c);
      if (std::abs(v) > 1e-10 * scale) {
        if (v < 0.0) phi.col(c) *= -1.0;
        break;
      }
    }
  }
}

SpectralBasis finalize(Eigen::MatrixXd phi, Eigen::VectorXd mu, const Mesh& mesh,
                       const Eigen::VectorXd& mass) {
  fix_column_signs(phi);
  SpectralBasis basis;
  basis.k = static_cast<int>(mu.size());
  basis.phi = std::move(phi);
  basis.mu = std::move(mu);
  basis.mass = mass;
  basis.mesh_tag = mesh.content_hash;
  const double mu_max = basis.mu.size() > 0 ? basis.mu[basis.mu.size() - 1] : 0.0;
  for (int i = 0; i + 1 < basis.mu.size(); ++i)
    if (basis.mu[i + 1] - basis.mu[i] < 1e-6 * mu_max) basis.near_degenerate = true;
  return basis;
}

SpectralBasis dense_eigenbasis(const Mesh& mesh, const LaplacianOperator& op, int k) {
  Eigen::MatrixXd L = Eigen::MatrixXd(op.matrix);
  Eigen::MatrixXd M = op.mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(L, M);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::ConvergenceFailure, "dense generalized eigensolver failed");
  return finalize(solver.eigenvectors().leftCols(k), solver.eigenvalues().head(k), mesh, op.mass);
}

// Shift-invert Lanczos on the pencil (L, M) with full reorthogonalization in
// the M-inner product. Eigenvalues of inv(L - shift*M)*M are 1/(mu - shift);
// the k largest Ritz values give the k smallest mu.
SpectralBasis lanczos_eigenbasis(const Mesh& mesh, const LaplacianOperator& op, int k) {
  const int n = mesh.vertex_count();
  Eigen::SparseMatrix<double> A = op.matrix;
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= kShift * op.mass[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(A);
  if (factor.info() != Eigen::Success)
    fail(ErrorCode::ConvergenceFailure, "shifted stiffness factorization failed");

  const Eigen::VectorXd& mass = op.mass;
  auto m_norm = [&](const Eigen::VectorXd& x) { return std::sqrt(x.dot(mass.cwiseProduct(x))); };

  const int m_max = std::min(n, std::max(10 * k + 100, 400));
  int m_target = std::min(n, std::max(2 * k + 20, 50));

  // deterministic pseudo-random start vector
  std::mt19937_64 rng(0x5eedba5eull);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = unit(rng);

  Eigen::MatrixXd Q(n, m_max);
  std::vector<double> alpha;  // T diagonal, one per step
  std::vector<double> beta;   // residual norm after each step; beta[i-1] links steps i-1, i
  Q.col(0) = start / m_norm(start);
  int m = 0;
  bool exhausted = false;  // Krylov space spent (invariant subspace found)

  auto extend_to = [&](int target) {
    while (m < target && !exhausted) {
      Eigen::VectorXd w = factor.solve(mass.cwiseProduct(Q.col(m)));
      const double a = w.dot(mass.cwiseProduct(Q.col(m)));
      w -= a * Q.col(m);
      if (m > 0) w -= beta[m - 1] * Q.col(m - 1);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= m; ++i) w -= (w.dot(mass.cwiseProduct(Q.col(i)))) * Q.col(i);
      const double b = m_norm(w);
      alpha.push_back(a);
      beta.push_back(b);
      ++m;
      if (b < 1e-12) {
        exhausted = true;
      } else if (m < m_max) {
        Q.col(m) = w / b;
      } else {
        exhausted = true;
      }
    }
  };

  for (;;) {
    extend_to(m_target);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) {
        T(i, i + 1) = beta[i];
        T(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
    if (small.info() != Eigen::Success)
      fail(ErrorCode::ConvergenceFailure, "tridiagonal eigensolver failed");

    // Ritz values descending in theta == ascending in mu.
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return small.eigenvalues()[a] > small.eigenvalues()[b];
    });

    // Converge a few pairs beyond k so late copies of near-degenerate
    // eigenvalues cannot be skipped, then keep the k smallest.
    const int guard = std::min(m, std::min(n - 1, k + 5));
    bool converged = false;
    if (m >= guard) {
      const double beta_last = exhausted && beta.back() < 1e-12 ? 0.0 : beta[m - 1];
      converged = true;
      for (int i = 0; i < guard; ++i) {
        const int idx = order[i];
        const double theta = small.eigenvalues()[idx];
        // relative bound in shift-invert space carries over to mu; the
        // guard pairs only need a coarse estimate
        const double tol = i < k ? 1e-9 : 1e-5;
        const double bound = std::abs(beta_last * small.eigenvectors()(m - 1, idx));
        if (bound > tol * std::abs(theta)) {
          converged = false;
          break;
        }
      }
    }

    if (converged || exhausted || m >= m_max) {
      Eigen::MatrixXd phi(n, k);
      Eigen::VectorXd mu(k);
      if (m >= k) {
        for (int i = 0; i < k; ++i) {
          const int idx = order[i];
          phi.col(i) = Q.leftCols(m) * small.eigenvectors().col(idx);
          mu[i] = kShift + 1.0 / small.eigenvalues()[idx];
        }
      }
      // accept only if the true pencil residuals are tight; the floor keeps
      // the near-null constant mode from tripping a pure relative test
      double l_scale = 0.0;
      for (int i = 0; i < n; ++i) l_scale = std::max(l_scale, std::abs(A.coeff(i, i)));
      bool verified = m >= k;
      for (int i = 0; verified && i < k; ++i) {
        const Eigen::VectorXd lphi = op.matrix * phi.col(i);
        const Eigen::VectorXd mphi = mass.cwiseProduct(phi.col(i));
        const double denom = lphi.norm() + std::abs(mu[i]) * mphi.norm() +
                             1e-6 * l_scale * phi.col(i).norm();
        if ((lphi - mu[i] * mphi).norm() > 1e-7 * denom) verified = false;
      }
      if (verified) {
        for (int i = 1; i < k; ++i)
          if (mu[i] < mu[i - 1]) std::swap(mu[i], mu[i - 1]);
        return finalize(std::move(phi), std::move(mu), mesh, mass);
      }
      if (exhausted || m >= m_max)
        fail(ErrorCode::ConvergenceFailure,
             "Lanczos did not converge " + std::to_string(k) + " eigenpairs within " +
                 std::to_string(m) + " iterations");
    }
    m_target = std::min({m_max, 2 * m_target});
    if (m_target <= m) m_target = m + 1;
  }
}

}  // namespace

SpectralBasis eigenbasis(const Mesh& mesh, int k, EigenMethod method) {
  const int n = mesh.vertex_count();
  if (k < 1) fail(ErrorCode::ParseError, "basis size must be positive");
  if (k >= n) fail(ErrorCode::KTooLarge, "basis size " + std::to_string(k) +
                                             " must be below the vertex count " + std::to_string(n));
  LaplacianOperator op = cotan_laplacian(mesh);
  if (method == EigenMethod::Dense || (method == EigenMethod::Auto && n <= kDenseCutoff))
    return dense_eigenbasis(mesh, op, k);
  return lanczos_eigenbasis(mesh, op, k);
}

TruncatedBasis truncate_basis(const SpectralBasis& basis, const std::vector<int>& selection) {
  TruncatedBasis tb;
  tb.phi.resize(selection.size(), basis.phi.cols());
  for (std::size_t i = 0; i < selection.size(); ++i) {
    const int row = selection[i];
    if (row < 0 || row >= basis.phi.rows())
      fail(ErrorCode::MissingProvenance, "selection index " + std::to_string(row) + " out of range");
    tb.phi.row(i) = basis.phi.row(row);
  }
  tb.mu = basis.mu;
  tb.selection = selection;
  tb.mesh_tag = basis.mesh_tag;
  return tb;
}

TruncatedBasis truncate_basis(const SpectralBasis& basis, const PointCloud& cloud) {
  if (!cloud.has_provenance())
    fail(ErrorCode::MissingProvenance, "point cloud carries no provenance indices");
  return truncate_basis(basis, cloud.provenance);
}

void save_basis(const SpectralBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  const std::uint32_t version = 1;
  const std::uint32_t n = static_cast<std::uint32_t>(basis.phi.rows());
  const std::uint32_t d = static_cast<std::uint32_t>(basis.phi.cols());
  out.write("NFRM", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c) {
      const float v = static_cast<float>(basis.phi(r, c));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  for (std::uint32_t c = 0; c < d; ++c) {
    const float v = static_cast<float>(basis.mu[c]);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace nfr

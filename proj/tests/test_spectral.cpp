#include <doctest.h>

#include <Eigen/Dense>

#include "nfr/errors.hpp"
#include "nfr/laplacian.hpp"
#include "nfr/orient.hpp"
#include "nfr/spectral.hpp"
#include "testutil.hpp"

using namespace nfr;

TEST_CASE("cotan Laplacian rows sum to zero and kill constants") {
  const Mesh square = nfrtest::unit_square();
  const LaplacianOperator op = cotan_laplacian(square);
  const Eigen::MatrixXd dense(op.matrix);
  CHECK(dense.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(square.vertex_count());
  CHECK((dense * ones).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("shared edge of an equilateral pair gets weight -1/sqrt(3)") {
  Eigen::MatrixX3d v(4, 3);
  const double h = std::sqrt(3.0) / 2.0;
  v << 0, 0, 0, 1, 0, 0, 0.5, h, 0, 0.5, -h, 0;
  Eigen::MatrixX3i f(2, 3);
  f << 0, 1, 2, 0, 3, 1;
  const Mesh mesh = make_mesh(v, f);
  const Eigen::MatrixXd dense(cotan_laplacian(mesh).matrix);
  CHECK(dense(0, 1) == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("cotan Laplacian is positive semidefinite") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const Eigen::MatrixXd dense(cotan_laplacian(mesh).matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  CHECK(eig.eigenvalues().minCoeff() > -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST_CASE("eigenbasis starts with the constant eigenfunction") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const SpectralBasis basis = eigenbasis(mesh, 12);
  CHECK(std::abs(basis.mu[0]) < 1e-8);
  const double spread = basis.phi.col(0).maxCoeff() - basis.phi.col(0).minCoeff();
  CHECK(spread < 1e-6 * std::abs(basis.phi.col(0).maxCoeff()));
}

TEST_CASE("iterative eigenvalues match the dense oracle") {
  const Mesh mesh = nfrtest::torus(15, 14, 1.0, 0.4, 0.15);  // 210 vertices
  const int k = 20;
  const SpectralBasis iterative = eigenbasis(mesh, k, EigenMethod::Iterative);
  const SpectralBasis dense = eigenbasis(mesh, k, EigenMethod::Dense);
  CHECK(std::abs(iterative.mu[0]) < 1e-8);
  for (int i = 0; i < k; ++i) {
    // the zero mode is only zero up to round-off on the spectrum scale
    const double scale = std::max(std::abs(dense.mu[i]), 1e-6 * dense.mu[k - 1]);
    CHECK(std::abs(iterative.mu[i] - dense.mu[i]) / scale < 1e-6);
  }
}

TEST_CASE("basis invariants hold: mass orthonormality and eigen residual") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(2);
  const int k = 15;
  const SpectralBasis basis = eigenbasis(mesh, k, EigenMethod::Iterative);
  const LaplacianOperator op = cotan_laplacian(mesh);

  const Eigen::MatrixXd gram =
      basis.phi.transpose() * basis.mass.asDiagonal() * basis.phi;
  CHECK((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-6);

  const double mu_max = basis.mu[k - 1];
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd lphi = op.matrix * basis.phi.col(i);
    const Eigen::VectorXd mphi = basis.mass.asDiagonal() * basis.phi.col(i);
    // the near-null constant mode needs a spectrum-scaled floor
    const double denom = lphi.norm() + basis.mu[i] * mphi.norm() + 1e-8 * mu_max * mphi.norm();
    CHECK((lphi - basis.mu[i] * mphi).norm() / denom < 1e-6);
    // Dirichlet energy matches the eigenvalue
    const double dirichlet = basis.phi.col(i).dot(lphi);
    const double mass_norm = basis.phi.col(i).dot(mphi);
    CHECK(dirichlet == doctest::Approx(basis.mu[i] * mass_norm).epsilon(1e-6));
  }
}

TEST_CASE("k too large is rejected") {
  const Mesh mesh = nfrtest::tetrahedron();
  CHECK_THROWS_AS(eigenbasis(mesh, 4), Error);
  try {
    eigenbasis(mesh, 4);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KTooLarge);
  }
}

TEST_CASE("rigid motion leaves the spectrum unchanged") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const Mesh moved = center_and_orient(mesh, nfrtest::rotation({0.3, 1.0, -0.2}, 1.1));
  const SpectralBasis a = eigenbasis(mesh, 10);
  const SpectralBasis b = eigenbasis(moved, 10);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(a.mu[i] - b.mu[i]) <= 1e-9 * std::max(1.0, std::abs(a.mu[i])));
}

TEST_CASE("uniform scaling divides eigenvalues by the square") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const double s = 2.5;
  const Mesh scaled = make_mesh(mesh.vertices * s, mesh.faces);
  const SpectralBasis a = eigenbasis(mesh, 8);
  const SpectralBasis b = eigenbasis(scaled, 8);
  for (int i = 1; i < 8; ++i)
    CHECK(b.mu[i] == doctest::Approx(a.mu[i] / (s * s)).epsilon(1e-6));
}

TEST_CASE("sign convention is reproducible across runs") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const SpectralBasis a = eigenbasis(mesh, 9);
  const SpectralBasis b = eigenbasis(mesh, 9);
  CHECK((a.phi - b.phi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("truncate_basis selects rows exactly") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const SpectralBasis basis = eigenbasis(mesh, 10);

  SUBCASE("identity selection reproduces the basis") {
    std::vector<int> all(mesh.vertex_count());
    std::iota(all.begin(), all.end(), 0);
    const TruncatedBasis tb = truncate_basis(basis, all);
    CHECK((tb.phi - basis.phi).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single row") {
    const TruncatedBasis tb = truncate_basis(basis, std::vector<int>{3});
    CHECK(tb.phi.rows() == 1);
    CHECK((tb.phi.row(0) - basis.phi.row(3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("random half of the rows, bit-identical") {
    const auto perm = nfrtest::random_permutation(mesh.vertex_count(), 7);
    std::vector<int> half(perm.begin(), perm.begin() + mesh.vertex_count() / 2);
    const TruncatedBasis tb = truncate_basis(basis, half);
    for (std::size_t i = 0; i < half.size(); ++i)
      CHECK((tb.phi.row(i) - basis.phi.row(half[i])).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("clouds without provenance are rejected") {
    const PointCloud bare = make_point_cloud(mesh.vertices);
    CHECK_THROWS_AS(truncate_basis(basis, bare), Error);
  }
}

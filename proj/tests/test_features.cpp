#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nfr/errors.hpp"
#include "nfr/features.hpp"
#include "nfr/orient.hpp"
#include "nfr/spectral.hpp"
#include "testutil.hpp"

using namespace nfr;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("coordinate features mirror the point arrays") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const FeatureMatrix f = coordinate_features(mesh);
  CHECK((f.values - mesh.vertices).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixX3d shifted = mesh.vertices;
  shifted.rowwise() += Eigen::RowVector3d(1.0, -2.0, 0.5);
  const FeatureMatrix g = coordinate_features(make_mesh(shifted, mesh.faces));
  CHECK((g.values - f.values).rowwise().norm().maxCoeff() ==
        doctest::Approx(std::sqrt(1.0 + 4.0 + 0.25)).epsilon(1e-12));
}

TEST_CASE("spectral descriptor is intrinsic") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(2);
  const int k = 14;
  const FeatureMatrix base = spectral_descriptor(eigenbasis(mesh, k));

  SUBCASE("rigid motion changes nothing") {
    const Mesh moved = center_and_orient(mesh, nfrtest::rotation({0.2, 0.5, 1.0}, 0.7));
    const FeatureMatrix other = spectral_descriptor(eigenbasis(moved, k));
    CHECK((other.values - base.values).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("a vertex permutation permutes the rows") {
    const auto perm = nfrtest::random_permutation(mesh.vertex_count(), 13);
    const Mesh permuted = nfrtest::permute_mesh(mesh, perm);
    const FeatureMatrix other = spectral_descriptor(eigenbasis(permuted, k));
    for (int i = 0; i < mesh.vertex_count(); ++i)
      CHECK((other.values.row(i) - base.values.row(perm[i])).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("column sign flips do not matter") {
    SpectralBasis basis = eigenbasis(mesh, k);
    const FeatureMatrix before = spectral_descriptor(basis);
    for (int c = 1; c < basis.phi.cols(); c += 2) basis.phi.col(c) *= -1.0;
    const FeatureMatrix after = spectral_descriptor(basis);
    CHECK((after.values - before.values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("constant-only basis gives identical descriptor rows") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const SpectralBasis basis = eigenbasis(mesh, 1);
  const FeatureMatrix f = spectral_descriptor(basis);
  for (int i = 1; i < f.n(); ++i)
    CHECK((f.values.row(i) - f.values.row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("truncated descriptor works on subset rows") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const SpectralBasis basis = eigenbasis(mesh, 10);
  const auto perm = nfrtest::random_permutation(mesh.vertex_count(), 5);
  std::vector<int> subset(perm.begin(), perm.begin() + mesh.vertex_count() / 3);
  const TruncatedBasis tb = truncate_basis(basis, subset);
  const FeatureMatrix f = spectral_descriptor(tb);
  CHECK(f.n() == static_cast<int>(subset.size()));
  CHECK(f.values.allFinite());
  // row-selecting the full descriptor reaches the same rows up to the
  // per-column normalization, which is a positive scale
  const FeatureMatrix full = spectral_descriptor(basis);
  const FeatureMatrix selected = select_rows(full, subset);
  for (int c = 0; c < f.dim(); ++c) {
    const double ratio = selected.values(0, c) / f.values(0, c);
    CHECK(ratio > 0.0);
    CHECK((selected.values.col(c) - ratio * f.values.col(c)).cwiseAbs().maxCoeff() <
          1e-9 * std::abs(ratio));
  }
}

TEST_CASE("feature container round trip is bit exact") {
  Eigen::MatrixXd values(7, 3);
  values.setRandom();
  // force exact f32 values so the round trip is lossless
  for (int i = 0; i < values.size(); ++i)
    values.data()[i] = static_cast<double>(static_cast<float>(values.data()[i]));
  FeatureMatrix f;
  f.values = values;
  const std::string path = temp_path("features.nfrm");
  save_features(f, path);
  const FeatureMatrix loaded = load_features(path, 7);
  CHECK((loaded.values - values).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("feature container validation") {
  FeatureMatrix f;
  f.values = Eigen::MatrixXd::Random(5, 2);
  const std::string path = temp_path("features_bad.nfrm");
  save_features(f, path);

  SUBCASE("row count mismatch") {
    CHECK_THROWS_AS(load_features(path, 6), Error);
    try {
      load_features(path, 6);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CountMismatch);
    }
  }

  SUBCASE("NaN payload") {
    std::fstream patch(path, std::ios::in | std::ios::out | std::ios::binary);
    patch.seekp(16);  // first payload value
    const float nan = std::numeric_limits<float>::quiet_NaN();
    patch.write(reinterpret_cast<const char*>(&nan), 4);
    patch.close();
    CHECK_THROWS_AS(load_features(path, 5), Error);
    try {
      load_features(path, 5);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteEntry);
    }
  }

  SUBCASE("bad magic") {
    std::ofstream bad(path, std::ios::binary);
    bad << "JUNKJUNKJUNKJUNK";
    bad.close();
    CHECK_THROWS_AS(load_features(path, 5), Error);
  }

  std::remove(path.c_str());
}

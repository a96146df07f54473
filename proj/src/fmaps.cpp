#include "nfr/fmaps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "nfr/errors.hpp"
#include "nfr/kdtree.hpp"
#include "nfr/parallel.hpp"

namespace nfr {

namespace {

constexpr double kRowSumTol = 1e-9;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) fail(ErrorCode::NonFiniteEntry, std::string(what) + " contains non-finite entries");
}

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              ErrorCode rank_error) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols())
    fail(rank_error, "matrix rank " + std::to_string(qr.rank()) + " below column count " +
                         std::to_string(a.cols()));
  return qr.solve(b);
}

}  // namespace

PointMap make_hard_pointmap(std::vector<int> assignment, int codomain_size) {
  for (int idx : assignment)
    if (idx < 0 || idx >= codomain_size)
      fail(ErrorCode::ParseError, "map entry " + std::to_string(idx) + " out of range");
  PointMap map;
  map.hard = std::move(assignment);
  map.codomain_size = codomain_size;
  return map;
}

PointMap make_soft_pointmap(Eigen::MatrixXd rows) {
  check_finite(rows, "soft map");
  for (int i = 0; i < rows.rows(); ++i) {
    if (rows.row(i).minCoeff() < -1e-12)
      fail(ErrorCode::ParseError, "soft map has a negative entry in row " + std::to_string(i));
    if (std::abs(rows.row(i).sum() - 1.0) > kRowSumTol)
      fail(ErrorCode::ParseError, "soft map row " + std::to_string(i) + " does not sum to 1");
  }
  PointMap map;
  map.soft_mode = true;
  map.codomain_size = static_cast<int>(rows.cols());
  map.soft = std::move(rows);
  return map;
}

PointMap identity_pointmap(int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return make_hard_pointmap(std::move(ids), n);
}

Eigen::MatrixXd apply_pointmap(const PointMap& map, const Eigen::MatrixXd& values) {
  if (map.codomain_size != values.rows())
    fail(ErrorCode::DimensionMismatch, "map codomain does not match the value matrix rows");
  if (map.soft_mode) return map.soft * values;
  Eigen::MatrixXd out(map.domain_size(), values.cols());
  for (int i = 0; i < out.rows(); ++i) out.row(i) = values.row(map.hard[i]);
  return out;
}

void save_pointmap(const PointMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  if (map.soft_mode) {
    out.precision(17);
    for (int i = 0; i < map.soft.rows(); ++i) {
      for (int j = 0; j < map.soft.cols(); ++j) out << map.soft(i, j) << (j + 1 < map.soft.cols() ? " " : "");
      out << '\n';
    }
  } else {
    for (int idx : map.hard) out << idx << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

PointMap load_pointmap(const std::string& path, int codomain_size) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<int> ids;
  long v;
  while (in >> v) ids.push_back(static_cast<int>(v));
  if (ids.empty()) fail(ErrorCode::ParseError, path + ": empty map file");
  return make_hard_pointmap(std::move(ids), codomain_size);
}

void save_matrix(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << m(i, j) << (j + 1 < m.cols() ? " " : "");
    out << '\n';
  }
}

FunctionalMap fmap_from_pointmap(const PointMap& map, const SpectralBasis& source,
                                 const SpectralBasis& target) {
  if (map.codomain_size != source.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map codomain does not match the source basis");
  if (map.domain_size() != target.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map domain does not match the target basis");
  const Eigen::MatrixXd mapped = apply_pointmap(map, source.phi);
  FunctionalMap fm;
  // mass-weighted pseudo-inverse: phi^T M since phi^T M phi = I
  fm.c = target.phi.transpose() * target.mass.asDiagonal() * mapped;
  fm.source_tag = source.mesh_tag;
  fm.target_tag = target.mesh_tag;
  return fm;
}

FunctionalMap fmap_from_pointmap(const PointMap& map, const SpectralBasis& source,
                                 const TruncatedBasis& target) {
  if (map.codomain_size != source.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map codomain does not match the source basis");
  if (map.domain_size() != target.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map domain does not match the truncated basis");
  const Eigen::MatrixXd mapped = apply_pointmap(map, source.phi);
  FunctionalMap fm;
  fm.c = least_squares(target.phi, mapped, ErrorCode::RankDeficient);
  fm.source_tag = source.mesh_tag;
  fm.target_tag = target.mesh_tag;
  return fm;
}

PointMap pointmap_from_features(const Eigen::MatrixXd& source_features,
                                const Eigen::MatrixXd& target_features,
                                std::optional<double> alpha) {
  if (source_features.cols() != target_features.cols())
    fail(ErrorCode::DimensionMismatch, "feature dimensions differ");
  check_finite(source_features, "source features");
  check_finite(target_features, "target features");
  const int n_t = static_cast<int>(target_features.rows());
  const int n_s = static_cast<int>(source_features.rows());

  if (!alpha) {
    std::vector<int> assignment(n_t, 0);
    if (source_features.cols() == 3) {
      KdTree3 tree(source_features);
      parallel_for(static_cast<std::size_t>(n_t), [&](std::size_t i) {
        assignment[i] = tree.nearest(target_features.row(static_cast<int>(i)).transpose());
      });
    } else {
      parallel_for(static_cast<std::size_t>(n_t), [&](std::size_t i) {
        int best = 0;
        double best_d2 = (source_features.row(0) - target_features.row(static_cast<int>(i))).squaredNorm();
        for (int j = 1; j < n_s; ++j) {
          const double d2 = (source_features.row(j) - target_features.row(static_cast<int>(i))).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = j;
          }
        }
        assignment[i] = best;
      });
    }
    return make_hard_pointmap(std::move(assignment), n_s);
  }

  if (*alpha <= 0.0) fail(ErrorCode::ParseError, "softmax temperature must be positive");
  Eigen::MatrixXd rows(n_t, n_s);
  parallel_for(static_cast<std::size_t>(n_t), [&](std::size_t i) {
    Eigen::VectorXd logits(n_s);
    for (int j = 0; j < n_s; ++j)
      logits[j] = -(*alpha) * (source_features.row(j) - target_features.row(static_cast<int>(i))).norm();
    const double m = logits.maxCoeff();
    Eigen::VectorXd w = (logits.array() - m).exp();
    rows.row(static_cast<int>(i)) = (w / w.sum()).transpose();
  });
  return make_soft_pointmap(std::move(rows));
}

FunctionalMap solve_regularized_fmap(const TruncatedBasis& target, const PointMap& to_source,
                                     const SpectralBasis& source, double lambda) {
  if (lambda < 0.0) fail(ErrorCode::ParseError, "lambda must be nonnegative");
  if (to_source.codomain_size != source.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map codomain does not match the source basis");
  if (to_source.domain_size() != target.phi.rows())
    fail(ErrorCode::DimensionMismatch, "map domain does not match the truncated basis");

  const Eigen::MatrixXd b = apply_pointmap(to_source, source.phi);  // n_p x k_s
  const int k_t = target.k();
  const int k_s = static_cast<int>(source.phi.cols());

  FunctionalMap fm;
  fm.source_tag = source.mesh_tag;
  fm.target_tag = target.mesh_tag;

  if (lambda == 0.0) {
    fm.c = least_squares(target.phi, b, ErrorCode::SingularSystem);
    return fm;
  }

  const Eigen::MatrixXd gram = target.phi.transpose() * target.phi;
  const Eigen::MatrixXd rhs = target.phi.transpose() * b;
  fm.c.resize(k_t, k_s);
  for (int j = 0; j < k_s; ++j) {
    Eigen::MatrixXd a = gram;
    for (int i = 0; i < k_t; ++i) {
      const double diff = target.mu[i] - source.mu[j];
      a(i, i) += lambda * diff * diff;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success)
      fail(ErrorCode::SingularSystem, "regularized system is singular for column " + std::to_string(j));
    fm.c.col(j) = ldlt.solve(rhs.col(j));
  }
  return fm;
}

double fmap_supervision_loss(const FunctionalMap& c_opt, const FunctionalMap& c_ref) {
  if (c_opt.c.rows() != c_ref.c.rows() || c_opt.c.cols() != c_ref.c.cols())
    fail(ErrorCode::DimensionMismatch, "functional map dimensions differ");
  return (c_ref.c - c_opt.c).squaredNorm();
}

StructuralEnergies structural_energies(const FunctionalMap& c12, const FunctionalMap& c21,
                                       const PointMap& pi12, const PointMap& pi21,
                                       const SpectralBasis& basis1, const SpectralBasis& basis2) {
  if (c12.c.cols() != c21.c.rows() || c21.c.cols() != c12.c.rows())
    fail(ErrorCode::DimensionMismatch, "functional map dimensions are not composable");
  const int k2 = static_cast<int>(c12.c.rows());
  const int k1 = static_cast<int>(c21.c.rows());

  StructuralEnergies e;
  e.bijectivity = (c12.c * c21.c - Eigen::MatrixXd::Identity(k2, k2)).squaredNorm();
  e.orthogonality = (c12.c * c12.c.transpose() - Eigen::MatrixXd::Identity(k2, k2)).norm() +
                    (c21.c * c21.c.transpose() - Eigen::MatrixXd::Identity(k1, k1)).norm();
  const FunctionalMap from_pi21 = fmap_from_pointmap(pi21, basis1, basis2);
  const FunctionalMap from_pi12 = fmap_from_pointmap(pi12, basis2, basis1);
  e.alignment = (c12.c - from_pi21.c).norm() + (c21.c - from_pi12.c).norm();
  return e;
}

double nce_alignment_loss(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g, double gamma) {
  if (f.rows() != g.rows() || f.cols() != g.cols())
    fail(ErrorCode::DimensionMismatch, "feature matrices differ in shape");
  if (gamma <= 0.0) fail(ErrorCode::ParseError, "temperature must be positive");
  const int n = static_cast<int>(f.rows());
  const Eigen::MatrixXd sims = f * g.transpose() / gamma;
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = sims.row(i).maxCoeff();
    const double lse = m + std::log((sims.row(i).array() - m).exp().sum());
    loss += lse - sims(i, i);
  }
  return loss;
}

Prop1Report check_prop1(const Mesh& source, const Mesh& target, const PointMap& target_to_source,
                        const std::vector<double>& subset_fractions, int k, std::uint64_t seed) {
  if (target_to_source.soft_mode)
    fail(ErrorCode::ParseError, "ground-truth map must be a hard point map");
  const SpectralBasis basis_s = eigenbasis(source, k);
  const SpectralBasis basis_t = eigenbasis(target, k);

  Prop1Report report;
  report.full_map = fmap_from_pointmap(target_to_source, basis_s, basis_t);

  const int m = target.vertex_count();
  std::mt19937_64 rng(seed);
  for (double fraction : subset_fractions) {
    const int n_p = std::max(1, std::min(m, static_cast<int>(std::lround(fraction * m))));
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> subset(perm.begin(), perm.begin() + n_p);
    std::sort(subset.begin(), subset.end());

    const TruncatedBasis phi_p = truncate_basis(basis_t, subset);
    Eigen::MatrixXd b(n_p, basis_s.phi.cols());
    for (int i = 0; i < n_p; ++i) b.row(i) = basis_s.phi.row(target_to_source.hard[subset[i]]);

    Prop1Entry entry;
    entry.subset_size = n_p;
    entry.residual_full_map = (phi_p.phi * report.full_map.c - b).squaredNorm();
    // rank-deficient subsets still admit a least-squares optimum
    Eigen::MatrixXd c_opt = phi_p.phi.colPivHouseholderQr().solve(b);
    entry.residual_subset_optimum = (phi_p.phi * c_opt - b).squaredNorm();
    entry.gap = entry.residual_full_map - entry.residual_subset_optimum;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace nfr

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "nfr/mesh.hpp"
#include "nfr/spectral.hpp"

namespace nfr {

// k_target x k_source matrix aligning two spectral bases.
struct FunctionalMap {
  Eigen::MatrixXd c;
  std::uint64_t source_tag = 0;
  std::uint64_t target_tag = 0;
};

// Point-wise correspondence. The domain is the map's own shape (one entry
// per point); values index the codomain shape. Soft maps are row-stochastic.
struct PointMap {
  std::vector<int> hard;
  Eigen::MatrixXd soft;
  bool soft_mode = false;
  int codomain_size = 0;

  int domain_size() const {
    return soft_mode ? static_cast<int>(soft.rows()) : static_cast<int>(hard.size());
  }
};

PointMap make_hard_pointmap(std::vector<int> assignment, int codomain_size);
PointMap make_soft_pointmap(Eigen::MatrixXd rows);
PointMap identity_pointmap(int n);

// Applies the map as a (soft) permutation: out = Pi * values.
Eigen::MatrixXd apply_pointmap(const PointMap& map, const Eigen::MatrixXd& values);

void save_pointmap(const PointMap& map, const std::string& path);
PointMap load_pointmap(const std::string& path, int codomain_size);
void save_matrix(const Eigen::MatrixXd& m, const std::string& path);

// C = pinv(Phi_target) * Pi * Phi_source. Full bases use the mass-weighted
// pseudo-inverse; truncated bases use plain least squares over the selected
// rows.
FunctionalMap fmap_from_pointmap(const PointMap& map, const SpectralBasis& source,
                                 const SpectralBasis& target);
FunctionalMap fmap_from_pointmap(const PointMap& map, const SpectralBasis& source,
                                 const TruncatedBasis& target);

// Map from each row of target_features to a row of source_features.
// alpha == nullopt gives the hard nearest-neighbor map (ties to the lowest
// index); otherwise rows are softmax(-alpha * distance).
PointMap pointmap_from_features(const Eigen::MatrixXd& source_features,
                                const Eigen::MatrixXd& target_features,
                                std::optional<double> alpha = std::nullopt);

// Least-squares alignment of the truncated target rows onto the mapped
// source basis with eigenvalue-commutativity regularization of weight
// lambda; solved one column at a time from the normal equations.
FunctionalMap solve_regularized_fmap(const TruncatedBasis& target, const PointMap& to_source,
                                     const SpectralBasis& source, double lambda);

double fmap_supervision_loss(const FunctionalMap& c_opt, const FunctionalMap& c_ref);

struct StructuralEnergies {
  double bijectivity = 0.0;
  double orthogonality = 0.0;
  double alignment = 0.0;
};

StructuralEnergies structural_energies(const FunctionalMap& c12, const FunctionalMap& c21,
                                       const PointMap& pi12, const PointMap& pi21,
                                       const SpectralBasis& basis1, const SpectralBasis& basis2);

// InfoNCE alignment of two feature sets with dot-product similarity.
double nce_alignment_loss(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g, double gamma);

struct Prop1Entry {
  int subset_size = 0;
  double residual_full_map = 0.0;
  double residual_subset_optimum = 0.0;
  double gap = 0.0;
};

struct Prop1Report {
  FunctionalMap full_map;
  std::vector<Prop1Entry> entries;
};

// Samples random vertex subsets of the target and compares the alignment
// residual of the full-shape functional map against each subset's own
// least-squares optimum.
Prop1Report check_prop1(const Mesh& source, const Mesh& target, const PointMap& target_to_source,
                        const std::vector<double>& subset_fractions, int k, std::uint64_t seed);

}  // namespace nfr

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "nfr/defgraph.hpp"
#include "nfr/features.hpp"
#include "nfr/fmaps.hpp"
#include "nfr/geodesics.hpp"
#include "nfr/mesh.hpp"
#include "nfr/pointcloud.hpp"

namespace nfr {

enum class Stage1Features { Coordinates, Spectral, External };

struct StageWeights {
  double corr = 1.0;
  double cd = 1.0;
  double arap = 1.0;
};

struct RegistrationConfig {
  StageWeights stage1{1.0, 0.1, 5.0};
  StageWeights stage2{1.0, 1.0, 1.0};
  int refresh_period = 100;
  double bijectivity_tau = 0.05;  // fraction of sqrt(total source area)
  int max_iterations = 1500;      // per stage
  double convergence_tol = 1e-5;  // relative energy decrease per refresh window
  bool partial = false;
  Stage1Features stage1_features = Stage1Features::Coordinates;
  double arap_beta = 10.0;
  int target_graph_nodes = 0;  // 0 -> floor(N/2)
  int spectral_k = 30;
  int descriptor_scales = 16;
  double initial_step_fraction = 0.01;  // of source bbox diagonal
  double max_step_fraction = 0.1;
  int max_backtracks = 30;
  std::uint64_t seed = 0;
};

struct CorrEnergy {
  double value = 0.0;
  Eigen::MatrixX3d grad;
};

// Mean squared distance over filtered correspondence pairs (source vertex,
// target point); empty pair sets give zero energy.
CorrEnergy corr_energy(const Eigen::MatrixX3d& vertices, const PointCloud& target,
                       const std::vector<std::pair<int, int>>& pairs);

struct ChamferEnergy {
  double value = 0.0;
  Eigen::MatrixX3d grad;
  std::vector<int> source_to_target;  // matches used (frozen within a step)
  std::vector<int> target_to_source;
};

// Mean-of-min squared distances; the partial variant keeps only the
// target-to-source term.
ChamferEnergy chamfer_energy(const Eigen::MatrixX3d& vertices, const PointCloud& target,
                             bool partial);

// Keeps (i, map_st[i]) when the round trip through both hard maps stays
// within tau * sqrt(total_area) geodesically.
std::vector<std::pair<int, int>> bijectivity_filter(const PointMap& map_st, const PointMap& map_ts,
                                                    const GeodesicMatrix& geo, double tau,
                                                    double total_area);

struct TotalEnergy {
  double total = 0.0;
  double corr = 0.0;
  double cd = 0.0;
  double arap = 0.0;
  Eigen::MatrixX3d grad_theta;
  Eigen::MatrixX3d grad_delta;
};

// Weighted energy with the vertex gradients pulled back to graph parameters.
TotalEnergy total_energy(const DeformationGraph& graph, const GraphParams& params,
                         const Eigen::MatrixX3d& rest_vertices, const PointCloud& target,
                         const std::vector<std::pair<int, int>>& pairs, const StageWeights& weights,
                         double beta, bool partial);

struct IterationRecord {
  int iteration = 0;
  int stage = 1;
  double e_total = 0.0;
  double e_corr = 0.0;
  double e_cd = 0.0;
  double e_arap = 0.0;
  int kept_pairs = 0;
};

struct RegistrationResult {
  Eigen::MatrixX3d deformed_vertices;
  PointMap map_st;  // per source vertex, matched target point
  PointMap map_ts;  // per target point, matched source vertex
  GraphParams params;
  std::vector<IterationRecord> history;
  bool graph_used_fallback = false;
};

struct RegistrationExtras {
  const FeatureMatrix* source_features = nullptr;
  const FeatureMatrix* target_features = nullptr;
  const Mesh* target_parent_mesh = nullptr;  // enables spectral features for partial targets
  const GeodesicMatrix* geodesics = nullptr;
  const DeformationGraph* graph = nullptr;
  std::ostream* log = nullptr;
};

RegistrationResult register_shapes(const Mesh& source, const PointCloud& target,
                                   const RegistrationConfig& config,
                                   const RegistrationExtras& extras = {});

}  // namespace nfr

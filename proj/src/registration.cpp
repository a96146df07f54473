#include "nfr/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "nfr/errors.hpp"
#include "nfr/kdtree.hpp"
#include "nfr/spectral.hpp"

namespace nfr {

namespace {

std::vector<int> nn_rows(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& refs) {
  PointMap map = pointmap_from_features(refs, queries);
  return map.hard;
}

// Pulls a per-vertex gradient back to node parameters through the skinning
// blend and the rotation jacobians.
void pull_back(const DeformationGraph& graph, const Eigen::MatrixX3d& rest,
               const std::vector<std::array<Eigen::Matrix3d, 3>>& jac,
               const Eigen::MatrixX3d& vertex_grad, Eigen::MatrixX3d& grad_theta,
               Eigen::MatrixX3d& grad_delta) {
  for (long v = 0; v < rest.rows(); ++v) {
    const Eigen::Vector3d q = vertex_grad.row(v);
    if (q.isZero(0.0)) continue;
    const Eigen::Vector3d p = rest.row(v);
    for (const auto& [node, weight] : graph.skin[v]) {
      grad_delta.row(node) += weight * q.transpose();
      const Eigen::Vector3d rel = p - graph.nodes.row(node).transpose();
      for (int m = 0; m < 3; ++m) grad_theta(node, m) += weight * q.dot(jac[node][m] * rel);
    }
  }
}

struct FrozenMatches {
  std::vector<int> source_to_target;
  std::vector<int> target_to_source;
  std::vector<std::pair<int, int>> pairs;  // correspondence term
};

// Energy at frozen chamfer matches; used by the line search so that accepted
// steps can only decrease the true energy (the true min is never above the
// frozen surrogate).
double frozen_energy(const DeformationGraph& graph, const GraphParams& params,
                     const Eigen::MatrixX3d& rest, const PointCloud& target,
                     const FrozenMatches& frozen, const StageWeights& weights, double beta,
                     bool partial) {
  const Eigen::MatrixX3d v = apply_graph(graph, params, rest);
  double corr = 0.0;
  if (!frozen.pairs.empty()) {
    for (auto [i, j] : frozen.pairs) corr += (v.row(i) - target.points.row(j)).squaredNorm();
    corr /= static_cast<double>(frozen.pairs.size());
  }
  double cd = 0.0;
  const long n = v.rows(), m = target.points.rows();
  if (!partial) {
    double fwd = 0.0;
    for (long i = 0; i < n; ++i)
      fwd += (v.row(i) - target.points.row(frozen.source_to_target[i])).squaredNorm();
    cd += fwd / static_cast<double>(n);
  }
  double bwd = 0.0;
  for (long j = 0; j < m; ++j)
    bwd += (v.row(frozen.target_to_source[j]) - target.points.row(j)).squaredNorm();
  cd += bwd / static_cast<double>(m);

  const double arap = arap_energy_value(graph, params, beta);
  return weights.corr * corr + weights.cd * cd + weights.arap * arap;
}

struct EnergyEval {
  TotalEnergy energy;
  FrozenMatches matches;
};

EnergyEval evaluate(const DeformationGraph& graph, const GraphParams& params,
                    const Eigen::MatrixX3d& rest, const PointCloud& target,
                    const std::vector<std::pair<int, int>>& pairs, const StageWeights& weights,
                    double beta, bool partial, bool with_gradient) {
  EnergyEval eval;
  const Eigen::MatrixX3d v = apply_graph(graph, params, rest);

  CorrEnergy corr = corr_energy(v, target, pairs);
  ChamferEnergy cd = chamfer_energy(v, target, partial);
  eval.matches.source_to_target = cd.source_to_target;
  eval.matches.target_to_source = cd.target_to_source;
  eval.matches.pairs = pairs;

  TotalEnergy& te = eval.energy;
  te.corr = corr.value;
  te.cd = cd.value;

  if (with_gradient) {
    std::vector<std::array<Eigen::Matrix3d, 3>> jac(graph.node_count());
    for (int node = 0; node < graph.node_count(); ++node)
      jac[node] = rodrigues_jacobian(params.theta.row(node));

    ArapEnergy arap = arap_energy(graph, params, beta);
    te.arap = arap.value;
    te.grad_theta = weights.arap * arap.grad_theta;
    te.grad_delta = weights.arap * arap.grad_delta;

    const Eigen::MatrixX3d vertex_grad = weights.corr * corr.grad + weights.cd * cd.grad;
    pull_back(graph, rest, jac, vertex_grad, te.grad_theta, te.grad_delta);
  } else {
    te.arap = arap_energy_value(graph, params, beta);
  }
  te.total = weights.corr * te.corr + weights.cd * te.cd + weights.arap * te.arap;
  if (!std::isfinite(te.total))
    fail(ErrorCode::NonFiniteEnergy, "total energy is not finite");
  return eval;
}

// Limited-memory quasi-Newton descent with a backtracking line search on
// the frozen-match surrogate. The surrogate dominates the true energy and
// touches it at the current iterate, so accepted steps never increase the
// energy between correspondence refreshes.
class Optimizer {
 public:
  Optimizer(int node_count, double scene_scale, const RegistrationConfig& config)
      : dim_(6 * node_count),
        nodes_(node_count),
        first_step_(config.initial_step_fraction * scene_scale),
        max_backtracks_(config.max_backtracks) {}

  // Returns true when a decreasing step was accepted.
  bool step(const DeformationGraph& graph, GraphParams& params, const Eigen::MatrixX3d& rest,
            const PointCloud& target, const std::vector<std::pair<int, int>>& pairs,
            const StageWeights& weights, double beta, bool partial, TotalEnergy& out_energy) {
    EnergyEval eval = evaluate(graph, params, rest, target, pairs, weights, beta, partial, true);
    out_energy = eval.energy;

    const Eigen::VectorXd x = flatten(params);
    const Eigen::VectorXd grad = flatten_grad(eval.energy);
    if (have_prev_) {
      const Eigen::VectorXd s = x - prev_x_;
      const Eigen::VectorXd y = grad - prev_grad_;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        history_.push_back({s, y, sy});
        if (history_.size() > 10) history_.erase(history_.begin());
      }
    }
    prev_x_ = x;
    prev_grad_ = grad;
    have_prev_ = true;

    Eigen::VectorXd dir = -two_loop(grad);
    double slope = grad.dot(dir);
    if (slope >= 0.0) {  // fall back to steepest descent
      dir = -grad;
      slope = grad.dot(dir);
      if (slope >= 0.0) return false;  // zero gradient
    }

    // cap the very first trial so an unscaled -grad cannot launch the search
    // into absurd parameter territory
    double t = 1.0;
    if (history_.empty()) {
      const double norm = dir.norm();
      if (norm > 0.0) t = std::min(1.0, first_step_ * std::sqrt(double(dim_)) / norm);
    }

    const double e0 =
        frozen_energy(graph, params, rest, target, eval.matches, weights, beta, partial);
    for (int bt = 0; bt <= max_backtracks_; ++bt) {
      GraphParams trial = unflatten(x + t * dir);
      const double e1 =
          frozen_energy(graph, trial, rest, target, eval.matches, weights, beta, partial);
      if (std::isfinite(e1) && e1 <= e0 + 1e-4 * t * slope) {
        wrap_angles(trial);
        params = std::move(trial);
        return true;
      }
      t *= 0.5;
    }
    return false;
  }

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double sy;
  };

  Eigen::VectorXd flatten(const GraphParams& p) const {
    Eigen::VectorXd x(dim_);
    x.head(3 * nodes_) = Eigen::Map<const Eigen::VectorXd>(p.theta.data(), 3 * nodes_);
    x.tail(3 * nodes_) = Eigen::Map<const Eigen::VectorXd>(p.delta.data(), 3 * nodes_);
    return x;
  }

  Eigen::VectorXd flatten_grad(const TotalEnergy& e) const {
    Eigen::VectorXd g(dim_);
    g.head(3 * nodes_) = Eigen::Map<const Eigen::VectorXd>(e.grad_theta.data(), 3 * nodes_);
    g.tail(3 * nodes_) = Eigen::Map<const Eigen::VectorXd>(e.grad_delta.data(), 3 * nodes_);
    return g;
  }

  GraphParams unflatten(const Eigen::VectorXd& x) const {
    GraphParams p = GraphParams::identity(nodes_);
    Eigen::Map<Eigen::VectorXd>(p.theta.data(), 3 * nodes_) = x.head(3 * nodes_);
    Eigen::Map<Eigen::VectorXd>(p.delta.data(), 3 * nodes_) = x.tail(3 * nodes_);
    return p;
  }

  Eigen::VectorXd two_loop(const Eigen::VectorXd& grad) const {
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(history_.size());
    for (int i = static_cast<int>(history_.size()) - 1; i >= 0; --i) {
      alpha[i] = history_[i].s.dot(q) / history_[i].sy;
      q -= alpha[i] * history_[i].y;
    }
    if (!history_.empty()) {
      const Pair& last = history_.back();
      q *= last.sy / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < history_.size(); ++i) {
      const double b = history_[i].y.dot(q) / history_[i].sy;
      q += (alpha[i] - b) * history_[i].s;
    }
    return q;
  }

  static void wrap_angles(GraphParams& params) {
    constexpr double two_pi = 6.283185307179586;
    for (int i = 0; i < params.theta.rows(); ++i) {
      const double angle = params.theta.row(i).norm();
      if (angle >= two_pi) params.theta.row(i) *= std::fmod(angle, two_pi) / angle;
    }
  }

  int dim_;
  int nodes_;
  double first_step_;
  int max_backtracks_;
  bool have_prev_ = false;
  Eigen::VectorXd prev_x_, prev_grad_;
  std::vector<Pair> history_;
};

}  // namespace

CorrEnergy corr_energy(const Eigen::MatrixX3d& vertices, const PointCloud& target,
                       const std::vector<std::pair<int, int>>& pairs) {
  CorrEnergy e;
  e.grad = Eigen::MatrixX3d::Zero(vertices.rows(), 3);
  if (pairs.empty()) return e;  // defined as zero for an empty pair set
  const double inv = 1.0 / static_cast<double>(pairs.size());
  for (auto [i, j] : pairs) {
    const Eigen::RowVector3d diff = vertices.row(i) - target.points.row(j);
    e.value += diff.squaredNorm();
    e.grad.row(i) += 2.0 * inv * diff;
  }
  e.value *= inv;
  return e;
}

ChamferEnergy chamfer_energy(const Eigen::MatrixX3d& vertices, const PointCloud& target,
                             bool partial) {
  const long n = vertices.rows(), m = target.points.rows();
  ChamferEnergy e;
  e.grad = Eigen::MatrixX3d::Zero(n, 3);
  e.target_to_source.resize(m);

  KdTree3 source_tree(vertices);
  for (long j = 0; j < m; ++j)
    e.target_to_source[j] = source_tree.nearest(target.points.row(j).transpose());

  double backward = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (long j = 0; j < m; ++j) {
    const Eigen::RowVector3d diff = vertices.row(e.target_to_source[j]) - target.points.row(j);
    backward += diff.squaredNorm();
    e.grad.row(e.target_to_source[j]) += 2.0 * inv_m * diff;
  }
  e.value += backward * inv_m;

  if (!partial) {
    KdTree3 target_tree(target.points);
    e.source_to_target.resize(n);
    for (long i = 0; i < n; ++i)
      e.source_to_target[i] = target_tree.nearest(vertices.row(i).transpose());
    double forward = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      const Eigen::RowVector3d diff = vertices.row(i) - target.points.row(e.source_to_target[i]);
      forward += diff.squaredNorm();
      e.grad.row(i) += 2.0 * inv_n * diff;
    }
    e.value += forward * inv_n;
  }
  return e;
}

std::vector<std::pair<int, int>> bijectivity_filter(const PointMap& map_st, const PointMap& map_ts,
                                                    const GeodesicMatrix& geo, double tau,
                                                    double total_area) {
  if (map_st.soft_mode || map_ts.soft_mode)
    fail(ErrorCode::ParseError, "bijectivity filtering expects hard maps");
  const int n = map_st.domain_size();
  if (map_ts.codomain_size != n || geo.dist.rows() != n)
    fail(ErrorCode::DimensionMismatch, "map sizes do not match the source shape");
  const double threshold = tau * std::sqrt(total_area);
  std::vector<std::pair<int, int>> kept;
  kept.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int j = map_st.hard[i];
    const int back = map_ts.hard[j];
    if (geo.dist(i, back) <= threshold) kept.emplace_back(i, j);
  }
  return kept;
}

TotalEnergy total_energy(const DeformationGraph& graph, const GraphParams& params,
                         const Eigen::MatrixX3d& rest_vertices, const PointCloud& target,
                         const std::vector<std::pair<int, int>>& pairs, const StageWeights& weights,
                         double beta, bool partial) {
  return evaluate(graph, params, rest_vertices, target, pairs, weights, beta, partial, true).energy;
}

RegistrationResult register_shapes(const Mesh& source, const PointCloud& target,
                                   const RegistrationConfig& config,
                                   const RegistrationExtras& extras) {
  const int n = source.vertex_count();
  const int m = target.point_count();

  DeformationGraph local_graph;
  const DeformationGraph* graph = extras.graph;
  if (!graph) {
    const int target_nodes =
        config.target_graph_nodes > 0 ? config.target_graph_nodes : std::max(4, n / 2);
    local_graph = build_graph(source, target_nodes);
    graph = &local_graph;
  }

  GeodesicMatrix local_geo;
  const GeodesicMatrix* geo = extras.geodesics;
  if (!geo) {
    local_geo = geodesic_matrix(source);
    geo = &local_geo;
  }

  // Stage-I feature maps are fixed for descriptor/file providers; the
  // coordinate provider recomputes from the deforming vertices each refresh.
  Eigen::MatrixXd stage1_source, stage1_target;
  if (config.stage1_features != Stage1Features::Coordinates) {
    if (extras.source_features) {
      stage1_source = extras.source_features->values;
    } else if (config.stage1_features == Stage1Features::Spectral) {
      const SpectralBasis basis = eigenbasis(source, std::min(config.spectral_k, n - 1));
      stage1_source = spectral_descriptor(basis, config.descriptor_scales).values;
    } else {
      fail(ErrorCode::ParseError, "external stage-1 features require a source feature matrix");
    }
    if (extras.target_features) {
      stage1_target = extras.target_features->values;
    } else if (config.stage1_features == Stage1Features::Spectral && target.has_provenance() &&
               extras.target_parent_mesh) {
      const Mesh& parent = *extras.target_parent_mesh;
      const SpectralBasis basis =
          eigenbasis(parent, std::min(config.spectral_k, parent.vertex_count() - 1));
      stage1_target = select_rows(spectral_descriptor(basis, config.descriptor_scales),
                                  target.provenance)
                          .values;
    } else {
      fail(ErrorCode::ParseError,
           "stage-1 features for the target are missing (supply a feature matrix or a parent mesh "
           "with provenance)");
    }
    if (static_cast<int>(stage1_source.rows()) != n)
      fail(ErrorCode::CountMismatch, "source feature rows do not match the mesh");
    if (static_cast<int>(stage1_target.rows()) != m)
      fail(ErrorCode::CountMismatch, "target feature rows do not match the cloud");
    if (stage1_source.cols() != stage1_target.cols())
      fail(ErrorCode::DimensionMismatch, "stage-1 feature dimensions differ");
  }

  const double total_area = source.total_area();
  const Eigen::MatrixX3d rest = source.vertices;
  GraphParams params = GraphParams::identity(graph->node_count());

  RegistrationResult result;
  result.graph_used_fallback = graph->used_fallback;

  int global_iter = 0;
  for (int stage = 1; stage <= 2; ++stage) {
    const StageWeights& weights = stage == 1 ? config.stage1 : config.stage2;
    Optimizer optimizer(graph->node_count(), source.bbox_diagonal(), config);

    std::vector<std::pair<int, int>> pairs;
    double window_energy = std::numeric_limits<double>::infinity();
    bool have_window = false;
    int stalls = 0;

    for (int k = 0; k < config.max_iterations; ++k) {
      if (k % config.refresh_period == 0) {
        const Eigen::MatrixX3d v = apply_graph(*graph, params, rest);
        PointMap map_st, map_ts;
        if (stage == 2 || config.stage1_features == Stage1Features::Coordinates) {
          map_st = make_hard_pointmap(nn_rows(v, target.points), m);
          map_ts = make_hard_pointmap(nn_rows(target.points, v), n);
        } else {
          map_st = make_hard_pointmap(nn_rows(stage1_source, stage1_target), m);
          map_ts = make_hard_pointmap(nn_rows(stage1_target, stage1_source), n);
        }
        pairs = bijectivity_filter(map_st, map_ts, *geo, config.bijectivity_tau, total_area);
        if (pairs.empty())
          fail(ErrorCode::NoCorrespondences,
               "bijectivity filter rejected every correspondence at iteration " +
                   std::to_string(global_iter));

        const double fresh =
            evaluate(*graph, params, rest, target, pairs, weights, config.arap_beta,
                     config.partial, false)
                .energy.total;
        if (have_window &&
            std::abs(window_energy - fresh) < config.convergence_tol *
                                                   std::max(std::abs(window_energy), 1e-30))
          break;
        window_energy = fresh;
        have_window = true;
        stalls = 0;
      }

      TotalEnergy energy;
      const bool accepted = optimizer.step(*graph, params, rest, target, pairs, weights,
                                           config.arap_beta, config.partial, energy);

      IterationRecord record;
      record.iteration = global_iter;
      record.stage = stage;
      record.e_total = energy.total;
      record.e_corr = energy.corr;
      record.e_cd = energy.cd;
      record.e_arap = energy.arap;
      record.kept_pairs = static_cast<int>(pairs.size());
      result.history.push_back(record);
      if (extras.log) {
        (*extras.log) << "iter=" << record.iteration << " stage=" << record.stage
                      << " e_total=" << record.e_total << " e_corr=" << record.e_corr
                      << " e_cd=" << record.e_cd << " e_arap=" << record.e_arap
                      << " pairs=" << record.kept_pairs << '\n';
      }

      ++global_iter;
      if (!accepted) {
        if (++stalls >= 25) {
          // nothing to gain before fresh correspondences; jump to the next refresh
          const int period = config.refresh_period;
          const int next_refresh = ((k / period) + 1) * period;
          if (next_refresh >= config.max_iterations) break;
          k = next_refresh - 1;
          stalls = 0;
        }
      } else {
        stalls = 0;
      }
    }
  }

  result.deformed_vertices = apply_graph(*graph, params, rest);
  result.map_st = make_hard_pointmap(nn_rows(result.deformed_vertices, target.points), m);
  result.map_ts = make_hard_pointmap(nn_rows(target.points, result.deformed_vertices), n);
  result.params = std::move(params);
  return result;
}

}  // namespace nfr

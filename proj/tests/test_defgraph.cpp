#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "nfr/defgraph.hpp"
#include "nfr/errors.hpp"
#include "testutil.hpp"

using namespace nfr;

namespace {

GraphParams random_params(int nodes, double magnitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-magnitude, magnitude);
  GraphParams p = GraphParams::identity(nodes);
  for (int i = 0; i < nodes; ++i)
    for (int c = 0; c < 3; ++c) {
      p.theta(i, c) = unit(rng);
      p.delta(i, c) = unit(rng);
    }
  return p;
}

// Node transforms realizing one global rigid motion about a fixed center.
GraphParams rigid_params(const DeformationGraph& graph, const Eigen::Vector3d& axis_angle,
                         const Eigen::Vector3d& center, const Eigen::Vector3d& translation) {
  const Eigen::Matrix3d r = rodrigues(axis_angle);
  GraphParams p = GraphParams::identity(graph.node_count());
  for (int h = 0; h < graph.node_count(); ++h) {
    p.theta.row(h) = axis_angle;
    const Eigen::Vector3d g = graph.nodes.row(h);
    p.delta.row(h) = (r * (g - center) + center + translation - g).transpose();
  }
  return p;
}

}  // namespace

TEST_CASE("build_graph with target_nodes == N binds every vertex to itself") {
  const Mesh mesh = nfrtest::icosphere(1);
  const DeformationGraph graph = build_graph(mesh, mesh.vertex_count());
  CHECK(graph.node_count() == mesh.vertex_count());
  CHECK_FALSE(graph.used_fallback);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    REQUIRE(graph.skin[v].size() == 1);
    CHECK(graph.nodes.row(graph.skin[v][0].first) == mesh.vertices.row(v));
    CHECK(graph.skin[v][0].second == 1.0);
  }
}

TEST_CASE("default decimation halves the node count and skins with four nodes") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(2);  // 162 vertices
  const int target = mesh.vertex_count() / 2;
  const DeformationGraph graph = build_graph(mesh, target);
  CHECK(std::abs(graph.node_count() - target) <= 2);
  CHECK_FALSE(graph.used_fallback);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    CHECK(graph.skin[v].size() == 4);
    double total = 0.0;
    for (const auto& [node, w] : graph.skin[v]) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  // node adjacency is symmetric
  for (int h = 0; h < graph.node_count(); ++h)
    for (int nb : graph.neighbors[h]) {
      const auto& back = graph.neighbors[nb];
      CHECK(std::find(back.begin(), back.end(), h) != back.end());
    }
}

TEST_CASE("tiny node requests fall back to farthest-point sampling") {
  const Mesh mesh = nfrtest::torus(10, 10);  // 100 vertices
  const DeformationGraph graph = build_graph(mesh, 2);
  CHECK(graph.used_fallback);
  CHECK(graph.node_count() == 2);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double total = 0.0;
    for (const auto& [node, w] : graph.skin[v]) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("rodrigues basics") {
  SUBCASE("quarter turn about z") {
    const Eigen::Matrix3d r = rodrigues({0, 0, M_PI / 2});
    const Eigen::Vector3d image = r * Eigen::Vector3d(1, 0, 0);
    CHECK((image - Eigen::Vector3d(0, 1, 0)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("zero angle is exactly the identity") {
    CHECK((rodrigues(Eigen::Vector3d::Zero()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("orthonormal with unit determinant, and inverse by negation") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
      const Eigen::Vector3d theta(unit(rng), unit(rng), unit(rng));
      const Eigen::Matrix3d r = rodrigues(theta);
      CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((rodrigues(-theta) * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("series branch meets the closed form at the 1e-8 switch") {
    const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.5, 0.81).normalized();
    const Eigen::Matrix3d below = rodrigues(axis * 0.9999999e-8);
    const Eigen::Matrix3d above = rodrigues(axis * 1.0000001e-8);
    CHECK((below - above).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("jacobian matches finite differences") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
      const Eigen::Vector3d theta(unit(rng), unit(rng), unit(rng));
      const auto jac = rodrigues_jacobian(theta);
      for (int m = 0; m < 3; ++m) {
        Eigen::Vector3d tp = theta, tm = theta;
        tp[m] += 1e-6;
        tm[m] -= 1e-6;
        const Eigen::Matrix3d fd = (rodrigues(tp) - rodrigues(tm)) / 2e-6;
        CHECK((jac[m] - fd).cwiseAbs().maxCoeff() < 1e-7);
      }
    }
  }
}

TEST_CASE("apply_graph") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const DeformationGraph graph = build_graph(mesh, mesh.vertex_count() / 2);

  SUBCASE("identity parameters reproduce the input") {
    const GraphParams id = GraphParams::identity(graph.node_count());
    const Eigen::MatrixX3d out = apply_graph(graph, id, mesh.vertices);
    CHECK((out - mesh.vertices).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("consistent rigid node transforms act as one rigid motion") {
    const Eigen::Vector3d axis_angle(0.2, 0.4, -0.3);
    const Eigen::Vector3d center(0.1, -0.2, 0.05);
    const Eigen::Vector3d translation(0.5, 0.25, -0.75);
    const GraphParams p = rigid_params(graph, axis_angle, center, translation);
    const Eigen::MatrixX3d out = apply_graph(graph, p, mesh.vertices);
    const Eigen::Matrix3d r = rodrigues(axis_angle);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      const Eigen::Vector3d expected =
          r * (mesh.vertices.row(v).transpose() - center) + center + translation;
      CHECK((out.row(v).transpose() - expected).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SUBCASE("a single-node graph translates everything") {
    const Mesh small = nfrtest::torus(6, 5);
    const DeformationGraph graph1 = build_graph(small, 1);
    GraphParams p = GraphParams::identity(1);
    p.delta.row(0) << 1.0, 2.0, 3.0;
    const Eigen::MatrixX3d out = apply_graph(graph1, p, small.vertices);
    CHECK((out - (small.vertices.rowwise() + Eigen::RowVector3d(1, 2, 3))).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("exactly linear in the translations") {
    const GraphParams a = random_params(graph.node_count(), 0.2, 21);
    GraphParams b = a;
    b.delta *= 2.0;
    const Eigen::MatrixX3d va = apply_graph(graph, a, mesh.vertices);
    const Eigen::MatrixX3d vb = apply_graph(graph, b, mesh.vertices);
    GraphParams zero_delta = a;
    zero_delta.delta.setZero();
    const Eigen::MatrixX3d v0 = apply_graph(graph, zero_delta, mesh.vertices);
    CHECK(((vb - v0) - 2.0 * (va - v0)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("arap energy") {
  const Mesh mesh = nfrtest::bumpy_ellipsoid(1);
  const DeformationGraph graph = build_graph(mesh, mesh.vertex_count() / 2);
  const double beta = 10.0;

  SUBCASE("identity parameters give exactly zero") {
    const GraphParams id = GraphParams::identity(graph.node_count());
    CHECK(arap_energy(graph, id, beta).value == 0.0);
  }

  SUBCASE("a global rigid motion costs nothing") {
    const GraphParams p = rigid_params(graph, {0.3, -0.1, 0.6}, {0.2, 0.0, -0.1}, {1.0, -2.0, 0.5});
    CHECK(arap_energy(graph, p, beta).value < 1e-10);
  }

  SUBCASE("uniform translation shifts leave the energy unchanged") {
    const GraphParams p = random_params(graph.node_count(), 0.3, 41);
    GraphParams shifted = p;
    shifted.delta.rowwise() += Eigen::RowVector3d(0.7, -0.3, 1.1);
    CHECK(arap_energy(graph, shifted, beta).value ==
          doctest::Approx(arap_energy(graph, p, beta).value).epsilon(1e-12));
  }

  SUBCASE("analytic gradient matches finite differences") {
    const GraphParams p = random_params(graph.node_count(), 0.3, 55);
    const ArapEnergy analytic = arap_energy(graph, p, beta);
    const int h = graph.node_count();

    auto energy_of = [&](const Eigen::VectorXd& x) {
      GraphParams q = GraphParams::identity(h);
      for (int i = 0; i < h; ++i)
        for (int c = 0; c < 3; ++c) {
          q.theta(i, c) = x[3 * i + c];
          q.delta(i, c) = x[3 * h + 3 * i + c];
        }
      return arap_energy_value(graph, q, beta);
    };
    Eigen::VectorXd x(6 * h);
    for (int i = 0; i < h; ++i)
      for (int c = 0; c < 3; ++c) {
        x[3 * i + c] = p.theta(i, c);
        x[3 * h + 3 * i + c] = p.delta(i, c);
      }
    const Eigen::VectorXd fd = nfrtest::finite_difference(energy_of, x);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    for (int i = 0; i < h; ++i)
      for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(analytic.grad_theta(i, c) - fd[3 * i + c]) / scale < 1e-4);
        CHECK(std::abs(analytic.grad_delta(i, c) - fd[3 * h + 3 * i + c]) / scale < 1e-4);
      }
  }
}

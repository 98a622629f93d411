#pragma once

// Generators and brute-force oracles shared by the unit and acceptance tests.
// Nothing here calls the projection or simplex solvers under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "maxel/rng.hpp"
#include "maxel/scores.hpp"

namespace maxel::testing {

inline Eigen::MatrixXd random_spd(Eigen::Index dim, RngStream& rng) {
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(dim);
  s.diagonal().array() += 0.2;
  return s;
}

inline Eigen::VectorXd random_vector(Eigen::Index dim, RngStream& rng, double scale = 1.0) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = scale * rng.normal();
  return v;
}

/// n rows with mean `mean` and correlated noise.
inline ScoreMatrix random_scores(Eigen::Index n, const Eigen::VectorXd& mean, RngStream& rng) {
  const Eigen::Index dim = mean.size();
  const Eigen::MatrixXd mix = Eigen::LLT<Eigen::MatrixXd>(random_spd(dim, rng)).matrixL();
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = (mean + mix * random_vector(dim, rng)).transpose();
  return ScoreMatrix(std::move(x));
}

/// Equality-constrained projection onto {m : m_j = level, j in face} by the
/// full KKT system with an explicit inverse metric. Returns the unscaled cost.
inline double kkt_face_cost(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& cov,
                            const std::vector<Eigen::Index>& face, double level, Eigen::VectorXd* point = nullptr) {
  const Eigen::Index dim = anchor.size();
  const auto r = static_cast<Eigen::Index>(face.size());
  const Eigen::MatrixXd g = cov.inverse();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + r, dim + r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + r);
  kkt.topLeftCorner(dim, dim) = 2.0 * g;
  rhs.head(dim) = 2.0 * g * anchor;
  for (Eigen::Index a = 0; a < r; ++a) {
    kkt(dim + a, face[a]) = 1.0;
    kkt(face[a], dim + a) = 1.0;
    rhs(dim + a) = level;
  }
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  const Eigen::VectorXd m = sol.head(dim);
  if (point) *point = m;
  return (m - anchor).dot(g * (m - anchor));
}

/// Hyperplane {v : a'v = 0} by the same KKT route.
inline double kkt_hyperplane_cost(const Eigen::VectorXd& z, const Eigen::MatrixXd& cov, const Eigen::VectorXd& a) {
  const Eigen::Index dim = z.size();
  const Eigen::MatrixXd g = cov.inverse();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + 1);
  kkt.topLeftCorner(dim, dim) = 2.0 * g;
  kkt.block(dim, 0, 1, dim) = a.transpose();
  kkt.block(0, dim, dim, 1) = a;
  rhs.head(dim) = 2.0 * g * z;
  const Eigen::VectorXd v = kkt.fullPivLu().solve(rhs).head(dim);
  return (v - z).dot(g * (v - z));
}

/// Local search over the max-level set: for each coordinate j, fix m_j = level
/// and minimize the Mahalanobis cost over {m_k <= level} by accelerated
/// projected gradient. Returns the smallest cost found (unscaled).
inline double local_search_level_cost(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& cov, double level,
                                      int iterations = 20000) {
  const Eigen::Index dim = anchor.size();
  const Eigen::MatrixXd g = cov.inverse();
  const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff();
  double best = std::numeric_limits<double>::infinity();
  auto project = [&](Eigen::VectorXd& m, Eigen::Index j) {
    for (Eigen::Index k = 0; k < dim; ++k) m(k) = std::min(m(k), level);
    m(j) = level;
  };
  for (Eigen::Index j = 0; j < dim; ++j) {
    Eigen::VectorXd m = anchor;
    project(m, j);
    Eigen::VectorXd y = m;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd next = y - (2.0 * g * (y - anchor)) / lipschitz;
      project(next, j);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - m);
      m = next;
      t = t_next;
    }
    best = std::min(best, (m - anchor).dot(g * (m - anchor)));
  }
  return best;
}

/// Brute-force grid over w = (t, 1 - t) for the two-policy simplex bound.
inline double grid_simplex_bound_2d(const Eigen::Vector2d& xbar, const Eigen::Matrix2d& cov, double n, double c,
                                    double step = 1e-6) {
  const double r = std::sqrt(c / n);
  double best = -std::numeric_limits<double>::infinity();
  const auto steps = static_cast<long>(std::llround(1.0 / step));
  for (long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    const Eigen::Vector2d w(t, 1.0 - t);
    best = std::max(best, w.dot(xbar) - r * std::sqrt(w.dot(cov * w)));
  }
  return best;
}

/// Rows mean + L e_i with e_i standard normal.
inline ScoreMatrix gaussian_scores(Eigen::Index n, const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol,
                                   RngStream& rng) {
  Eigen::MatrixXd x(n, mean.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd e(mean.size());
    for (Eigen::Index j = 0; j < e.size(); ++j) e(j) = rng.normal();
    x.row(i) = (mean + chol * e).transpose();
  }
  return ScoreMatrix(x);
}

/// Equicorrelated unit-variance factor.
inline Eigen::MatrixXd equicorrelated_chol(Eigen::Index dim, double rho) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(dim, dim, rho);
  cov.diagonal().setOnes();
  return Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
}

}  // namespace maxel::testing

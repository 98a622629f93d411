#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace maxel {

/// Raised when the sample covariance of the scores is not positive definite
/// (constant or collinear score columns).
class DegenerateCovariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// n x J matrix of per-observation, per-policy scores. Entries are finite,
/// n >= 2 and J >= 1; the shape is fixed at construction.
template <typename Scalar>
class BasicScoreMatrix {
 public:
  using Matrix = MatrixX<Scalar>;

  explicit BasicScoreMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 2) throw std::invalid_argument("ScoreMatrix: need at least two observations");
    if (values_.cols() < 1) throw std::invalid_argument("ScoreMatrix: need at least one policy");
    if (!values_.allFinite()) throw std::invalid_argument("ScoreMatrix: entries must be finite");
  }

  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index num_policies() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// Sample mean, 1/n covariance and its Cholesky factor.
template <typename Scalar>
class BasicScoreSummary {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  /// Column means and (1/n) covariance of the score rows.
  explicit BasicScoreSummary(const BasicScoreMatrix<Scalar>& scores) : n_(scores.n()) {
    const Matrix& x = scores.values();
    mean_ = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - mean_.transpose();
    cov_ = (centered.adjoint() * centered) / static_cast<Scalar>(n_);
    cov_ = Scalar(0.5) * (cov_ + cov_.transpose()).eval();
    factorize();
  }

  /// Summary built directly from moments; used for worked examples and by
  /// callers that already hold the sufficient statistics.
  static BasicScoreSummary from_moments(Vector mean, Matrix cov, Eigen::Index n) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
      throw std::invalid_argument("ScoreSummary: mean and covariance dimensions differ");
    }
    if (n < 2) throw std::invalid_argument("ScoreSummary: need n >= 2");
    return BasicScoreSummary(std::move(mean), std::move(cov), n);
  }

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  Matrix chol() const { return llt_.matrixL(); }

 private:
  BasicScoreSummary(Vector mean, Matrix cov, Eigen::Index n)
      : mean_(std::move(mean)), cov_(std::move(cov)), n_(n) {
    factorize();
  }

  void factorize() {
    if (!cov_.allFinite()) throw DegenerateCovariance("covariance has non-finite entries");
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) {
      throw DegenerateCovariance("covariance is not positive definite");
    }
    // Pivots that vanish relative to the diagonal mean the LLT only succeeded
    // through rounding (duplicated or constant columns).
    const Matrix& l = llt_.matrixLLT();
    for (Eigen::Index j = 0; j < cov_.rows(); ++j) {
      const Scalar pivot = l(j, j) * l(j, j);
      if (!(cov_(j, j) > Scalar(0)) || !(pivot > Scalar(1e-12) * cov_(j, j))) {
        throw DegenerateCovariance("covariance is singular at policy column " + std::to_string(j) +
                                   " (constant or collinear scores)");
      }
    }
  }

  Vector mean_;
  Matrix cov_;
  Eigen::Index n_;
  Eigen::LLT<Matrix> llt_;
};

template <typename Scalar>
BasicScoreSummary<Scalar> summarize(const BasicScoreMatrix<Scalar>& scores) {
  return BasicScoreSummary<Scalar>(scores);
}

/// z' cov^{-1} z through the cached Cholesky factor.
template <typename Derived>
typename Derived::Scalar mahalanobis_form(const Eigen::MatrixBase<Derived>& z,
                                          const BasicScoreSummary<typename Derived::Scalar>& summary) {
  if (z.size() != summary.dim()) throw std::invalid_argument("mahalanobis_form: dimension mismatch");
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> y = z;
  summary.llt().matrixL().solveInPlace(y);
  return y.squaredNorm();
}

using ScoreMatrix = BasicScoreMatrix<double>;
using ScoreSummary = BasicScoreSummary<double>;

}  // namespace maxel

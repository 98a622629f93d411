#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "maxel/distributions.hpp"
#include "maxel/levelset.hpp"
#include "maxel/scores.hpp"

namespace maxel {

/// Probability weights q = (1 + a)/n that move the score mean to a target
/// with the least chi-square cost sum_i (n q_i - 1)^2.
template <typename Scalar>
struct BasicWeightSolution {
  VectorX<Scalar> weights;
  Scalar cost{};
  /// All weights strictly positive, i.e. the positivity constraints are slack.
  bool interior = false;
};

enum class BoundMethod { chi2, ordinary_boot, corrected_boot, projected_joint, selected_wald, fang_santos };

constexpr std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::chi2: return "chi2";
    case BoundMethod::ordinary_boot: return "ordinary-boot";
    case BoundMethod::corrected_boot: return "corrected-boot";
    case BoundMethod::projected_joint: return "projected-joint";
    case BoundMethod::selected_wald: return "selected-wald";
    case BoundMethod::fang_santos: return "fang-santos";
  }
  return "unknown";
}

template <typename Scalar>
struct BasicConfidenceBound {
  Scalar lower{};
  Scalar level{};
  Scalar critical_value{};
  VectorX<Scalar> weights;  ///< point of the simplex Delta_J
  IndexList face;
  BoundMethod method = BoundMethod::chi2;
};

/// Optimum of max_{w in simplex} w'xbar - sqrt(c/n) sqrt(w' cov w).
template <typename Scalar>
struct BasicSimplexSolution {
  Scalar lower{};
  VectorX<Scalar> weights;
  IndexList support;
  Scalar gap{};
  int iterations = 0;
};

template <typename Scalar>
struct SimplexOptions {
  std::optional<VectorX<Scalar>> start;
  Scalar tolerance = Scalar(1e-9);
  int max_iterations = 200000;
};

template <typename Scalar>
struct BasicProfileResult {
  Scalar value{};
  IndexList face;
  VectorX<Scalar> point;
  BasicWeightSolution<Scalar> weights;
};

/// Min-norm reweighting with mean equal to `target`:
/// a_i = U_i' cov^{-1} (target - xbar), U_i the centered score rows.
template <typename Scalar, typename Derived>
BasicWeightSolution<Scalar> min_norm_weights(const BasicScoreMatrix<Scalar>& scores,
                                             const BasicScoreSummary<Scalar>& summary,
                                             const Eigen::MatrixBase<Derived>& target) {
  if (target.size() != scores.num_policies()) throw std::invalid_argument("min_norm_weights: dimension mismatch");
  const VectorX<Scalar> shift = target - summary.mean();
  const VectorX<Scalar> dual = summary.llt().solve(shift);
  const VectorX<Scalar> a = (scores.values() * dual).array() - summary.mean().dot(dual);
  const auto n = static_cast<Scalar>(scores.n());
  BasicWeightSolution<Scalar> out;
  out.weights = (a.array() + Scalar(1)) / n;
  out.cost = a.squaredNorm();
  out.interior = out.weights.minCoeff() > Scalar(0);
  return out;
}

template <typename Scalar, typename Derived>
BasicWeightSolution<Scalar> min_norm_weights(const BasicScoreMatrix<Scalar>& scores,
                                             const Eigen::MatrixBase<Derived>& target) {
  return min_norm_weights(scores, BasicScoreSummary<Scalar>(scores), target);
}

/// Euclidean profile statistic at tau0 with the weights that realize it.
template <typename Scalar>
BasicProfileResult<Scalar> profile_statistic(const BasicScoreMatrix<Scalar>& scores,
                                             const BasicScoreSummary<Scalar>& summary, Scalar tau0,
                                             ProjectionAlgorithm algorithm = ProjectionAlgorithm::active_set) {
  auto level = profile_stat_max(summary, tau0, algorithm);
  BasicProfileResult<Scalar> out;
  out.value = level.value;
  out.face = std::move(level.face);
  out.point = std::move(level.point);
  out.weights = min_norm_weights(scores, summary, out.point);
  return out;
}

template <typename Scalar>
BasicProfileResult<Scalar> profile_statistic(const BasicScoreMatrix<Scalar>& scores, Scalar tau0) {
  return profile_statistic(scores, BasicScoreSummary<Scalar>(scores), tau0);
}

namespace detail {

/// Maximizer over gamma in [0, gamma_max] of
///   gamma * b - r * sqrt(q0 + 2 gamma q1 + gamma^2 q2),
/// which is concave; the stationary point has a closed form.
template <typename Scalar>
Scalar simplex_line_search(Scalar b, Scalar r, Scalar q0, Scalar q1, Scalar q2, Scalar gamma_max) {
  auto phi = [&](Scalar g) { return g * b - r * std::sqrt(std::max(Scalar(0), q0 + Scalar(2) * g * q1 + g * g * q2)); };
  Scalar best = Scalar(0);
  Scalar best_val = phi(Scalar(0));
  auto consider = [&](Scalar g) {
    if (!(g >= Scalar(0) && g <= gamma_max)) return;
    const Scalar v = phi(g);
    if (v > best_val) {
      best_val = v;
      best = g;
    }
  };
  consider(gamma_max);
  if (q2 > Scalar(0)) {
    const Scalar denom = r * r * q2 - b * b;
    const Scalar disc = q0 * q2 - q1 * q1;
    if (denom > Scalar(0) && disc >= Scalar(0)) consider((-q1 + b * std::sqrt(disc / denom)) / q2);
  }
  return best;
}

}  // namespace detail

/// Simplex form of the lower endpoint of the acceptance ellipsoid
/// {m : n (m - xbar)' cov^{-1} (m - xbar) <= c}, solved by away-step
/// conditional gradient with exact line search. Stops when the linear
/// minorant gap is below tolerance * (1 + |L|). Whenever the support has at
/// most two vertices, the edge they span is solved exactly.
template <typename Scalar>
BasicSimplexSolution<Scalar> simplex_lower_bound(const BasicScoreSummary<Scalar>& summary, Scalar c,
                                                 const SimplexOptions<Scalar>& options = {}) {
  if (!(c > Scalar(0))) throw std::invalid_argument("simplex_lower_bound: critical value must be positive");
  const VectorX<Scalar>& xbar = summary.mean();
  const MatrixX<Scalar>& cov = summary.cov();
  const Eigen::Index dim = xbar.size();
  const Scalar r = std::sqrt(c / static_cast<Scalar>(summary.n()));

  VectorX<Scalar> w = VectorX<Scalar>::Zero(dim);
  if (options.start) {
    w = *options.start;
    if (w.size() != dim || (w.array() < Scalar(0)).any()) {
      throw std::invalid_argument("simplex_lower_bound: start must be a point of the simplex");
    }
    w /= w.sum();
  } else {
    Eigen::Index j0 = 0;
    (xbar.array() - r * cov.diagonal().array().sqrt()).maxCoeff(&j0);
    w(j0) = Scalar(1);
  }

  VectorX<Scalar> cw = cov * w;
  Scalar q = w.dot(cw);
  BasicSimplexSolution<Scalar> out;

  auto apply_step = [&](const VectorX<Scalar>& d, Scalar gamma_max) {
    const VectorX<Scalar> cd = cov * d;
    const Scalar gamma = detail::simplex_line_search(d.dot(xbar), r, q, d.dot(cw), d.dot(cd), gamma_max);
    w.noalias() += gamma * d;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (w(j) < Scalar(1e-15)) w(j) = Scalar(0);
    }
    w /= w.sum();
    cw.noalias() = cov * w;
    q = w.dot(cw);
    return gamma;
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Scalar sd = std::sqrt(q);
    const VectorX<Scalar> grad = xbar - (r / sd) * cw;
    const Scalar gw = grad.dot(w);
    Eigen::Index s = 0;
    const Scalar gmax = grad.maxCoeff(&s);
    const Scalar value = w.dot(xbar) - r * sd;
    out.gap = gmax - gw;
    if (out.gap <= options.tolerance * (Scalar(1) + std::abs(value))) break;

    Eigen::Index v = -1;
    int support = 0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (w(j) > Scalar(0)) {
        ++support;
        if (v < 0 || grad(j) < grad(v)) v = j;
      }
    }
    const Scalar away_gain = gw - grad(v);
    if (out.gap >= away_gain || w(v) >= Scalar(1)) {
      VectorX<Scalar> d = -w;
      d(s) += Scalar(1);
      apply_step(d, Scalar(1));
    } else {
      VectorX<Scalar> d = w;
      d(v) -= Scalar(1);
      const Scalar gamma_max = w(v) / (Scalar(1) - w(v));
      const Scalar gamma = apply_step(d, gamma_max);
      if (gamma >= gamma_max) {
        w(v) = Scalar(0);
        w /= w.sum();
        cw.noalias() = cov * w;
        q = w.dot(cw);
      }
    }

    // Exact solve on the edge spanned by a two-point support.
    IndexList supp;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (w(j) > Scalar(0)) supp.push_back(j);
    }
    if (supp.size() == 2) {
      VectorX<Scalar> base = VectorX<Scalar>::Zero(dim);
      base(supp[1]) = Scalar(1);
      VectorX<Scalar> d = VectorX<Scalar>::Zero(dim);
      d(supp[0]) = Scalar(1);
      d(supp[1]) = Scalar(-1);
      const VectorX<Scalar> cb = cov * base;
      const VectorX<Scalar> cd = cov * d;
      const Scalar gamma = detail::simplex_line_search(d.dot(xbar), r, base.dot(cb), d.dot(cb), d.dot(cd), Scalar(1));
      VectorX<Scalar> cand = base + gamma * d;
      const VectorX<Scalar> cc = cov * cand;
      const Scalar cand_val = cand.dot(xbar) - r * std::sqrt(cand.dot(cc));
      if (cand_val >= w.dot(xbar) - r * std::sqrt(q)) {
        w = std::move(cand);
        cw = cc;
        q = w.dot(cw);
      }
    }
  }

  out.iterations = it;
  out.weights = w;
  out.lower = w.dot(xbar) - r * std::sqrt(q);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (w(j) > Scalar(0)) out.support.push_back(j);
  }
  return out;
}

/// Lower endpoint by bisection on the left branch of the profile statistic:
/// the smallest tau <= max_j xbar_j with profile_stat_max(tau) = c.
template <typename Scalar>
Scalar invert_profile_bound(const BasicScoreSummary<Scalar>& summary, Scalar c) {
  if (!(c > Scalar(0))) throw std::invalid_argument("invert_profile_bound: critical value must be positive");
  const Scalar top = summary.mean().maxCoeff();
  const Scalar scale = std::sqrt(summary.cov().diagonal().maxCoeff() / static_cast<Scalar>(summary.n()));
  Scalar hi = top;
  Scalar step = std::max(scale * std::sqrt(c), std::numeric_limits<Scalar>::min());
  Scalar lo = top - step;
  while (profile_stat_max(summary, lo).value < c) {
    hi = lo;
    step *= Scalar(2);
    lo = top - step;
  }
  for (int it = 0; it < 200 && hi - lo > Scalar(1e-13) * (Scalar(1) + std::abs(top)); ++it) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (profile_stat_max(summary, mid).value < c) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return Scalar(0.5) * (lo + hi);
}

template <typename Scalar>
Scalar invert_profile_bound(const BasicScoreMatrix<Scalar>& scores, Scalar c) {
  return invert_profile_bound(BasicScoreSummary<Scalar>(scores), c);
}

/// sqrt(chi2_{J,1-alpha} / chi2_{1,1-alpha}): radius inflation of the
/// projected joint bound at a unique optimum.
inline double inflation_ratio(int num_policies, double alpha) {
  if (num_policies < 1) throw std::invalid_argument("inflation_ratio: need at least one policy");
  return std::sqrt(chi2_quantile(num_policies, 1.0 - alpha) / chi2_quantile(1, 1.0 - alpha));
}

using WeightSolution = BasicWeightSolution<double>;
using ConfidenceBound = BasicConfidenceBound<double>;
using SimplexSolution = BasicSimplexSolution<double>;
using ProfileResult = BasicProfileResult<double>;

}  // namespace maxel

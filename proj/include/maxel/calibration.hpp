#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "maxel/levelset.hpp"
#include "maxel/profile.hpp"
#include "maxel/rng.hpp"
#include "maxel/scores.hpp"

namespace maxel {

struct ActiveSetEstimate {
  ConeSpec indices;
  double kappa = 0.0;
  Eigen::VectorXd gaps;  ///< max_k xbar_k - xbar_j
};

/// Policies within kappa_n = max_j sqrt(cov_jj log n / n) of the best mean.
ActiveSetEstimate estimate_active_set(const ScoreSummary& summary);
/// Same rule with a caller-chosen threshold.
ActiveSetEstimate estimate_active_set(const ScoreSummary& summary, double kappa);

double default_threshold(const ScoreSummary& summary);

/// Smallest index attaining the maximum.
Eigen::Index argmax_index(const Eigen::VectorXd& v);

enum class Multiplier { gaussian, rademacher };

constexpr std::string_view to_string(Multiplier m) { return m == Multiplier::gaussian ? "gaussian" : "rademacher"; }

struct CalibrationResult {
  std::vector<double> draws;
  double critical_value = 0.0;
  double alpha = 0.05;
  BoundMethod method = BoundMethod::corrected_boot;
  ConeSpec cone;
  std::uint64_t seed = 0;
};

/// ceil((1 - alpha) B)-th smallest draw.
double order_statistic(std::vector<double> draws, double alpha);

/// Efron resamples of rows; T* = d^2(Z*, hyperplane e_jhat) under the
/// original-sample covariance and argmax. Draw b uses stream.child(b).
CalibrationResult ordinary_score_bootstrap(const ScoreMatrix& scores, int draws, const RngStream& stream,
                                           double alpha = 0.05);

/// J x B matrix whose columns are n^{-1/2} sum_i xi_i (X_i - xbar) for the
/// multiplier vectors drawn from stream.child(b).
Eigen::MatrixXd multiplier_sums(const ScoreMatrix& scores, int draws, Multiplier multiplier, const RngStream& stream);

/// T^xi = d^2(Z^xi, cone) under the sample covariance.
CalibrationResult corrected_multiplier_bootstrap(const ScoreMatrix& scores, const ConeSpec& cone, int draws,
                                                 Multiplier multiplier, const RngStream& stream,
                                                 double alpha = 0.05);

ConfidenceBound projected_joint_bound(const ScoreSummary& summary, double alpha);
ConfidenceBound selected_policy_wald(const ScoreSummary& summary, double alpha);

/// max_j xbar_j - q/sqrt(n), q the multiplier quantile of max_{j in Jhat} Z^xi_j.
/// `critical_value` holds q; the draws of the directional derivative are signed.
ConfidenceBound fang_santos_bound(const ScoreMatrix& scores, double alpha, int draws, Multiplier multiplier,
                                  const RngStream& stream);

enum class InferenceMethod { auto_select, chi2, ordinary, corrected, joint, wald, fang_santos };

std::string_view to_string(InferenceMethod m);
std::optional<InferenceMethod> parse_inference_method(std::string_view name);

struct InferenceOptions {
  double alpha = 0.05;
  InferenceMethod method = InferenceMethod::auto_select;
  int draws = 1000;
  Multiplier multiplier = Multiplier::gaussian;
  /// In auto mode, calibrate the smooth case by the ordinary bootstrap instead of chi2_1.
  bool bootstrap_when_smooth = false;
  std::optional<double> kappa;
};

struct InferenceResult {
  ConfidenceBound bound;
  ActiveSetEstimate active;
  std::optional<CalibrationResult> calibration;
};

InferenceResult infer(const ScoreMatrix& scores, const InferenceOptions& options, const RngStream& stream);

ConfidenceBound infer_lower_bound(const ScoreMatrix& scores, double alpha, InferenceMethod method, int draws,
                                  Multiplier multiplier, const RngStream& stream);

}  // namespace maxel

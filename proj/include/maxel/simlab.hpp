#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "maxel/calibration.hpp"
#include "maxel/policy.hpp"
#include "maxel/rng.hpp"
#include "maxel/scores.hpp"

namespace maxel {

struct GeneratedScores {
  ScoreMatrix scores;
  Eigen::VectorXd theta0;
};

/// theta0 for the unique-optimum design: 0.35 then 0.2 falling linearly to 0.
Eigen::VectorXd dimension_means(Eigen::Index num_policies);
/// Covariance of the Gaussian component G.
Eigen::MatrixXd dimension_gaussian_cov(Eigen::Index num_policies);
/// Exact covariance of a score row: 0.49 G + 0.04 I + 0.01 b b'.
Eigen::MatrixXd dimension_score_cov(Eigen::Index num_policies);

/// theta0 + 0.7 G + 0.2 E + 0.1 S b.
GeneratedScores gen_scores_dimension(Eigen::Index n, Eigen::Index num_policies, RngStream stream);
/// Same noise; the first k means equal 0.35.
GeneratedScores gen_scores_ties(Eigen::Index n, Eigen::Index num_policies, Eigen::Index k, RngStream stream);
/// Gaussian; first k coordinates mean 0.30 with correlation rho, the rest mean
/// 0.10, unit variance and independent.
GeneratedScores gen_scores_correlation(Eigen::Index n, Eigen::Index num_policies, Eigen::Index k, double rho,
                                       RngStream stream);

enum class Experiment { dimension, ties, correlation, semiparametric, timing };

std::string_view to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::dimension;
  Eigen::Index n = 500;
  Eigen::Index num_policies = 20;
  Eigen::Index k = 1;
  double rho = 0.0;
  int reps = 300;
  int boot_draws = 500;
  double alpha = 0.05;
  Multiplier multiplier = Multiplier::gaussian;
  std::uint64_t seed = 1;
  std::vector<InferenceMethod> methods{InferenceMethod::auto_select, InferenceMethod::joint, InferenceMethod::wald};
  // semiparametric only
  int folds = 2;
  Eigen::Index mc_draws = 2'000'000;
  double ridge = 1.0;

  void validate() const;
};

struct Truth {
  Eigen::VectorXd theta0;
  double tau0 = 0.0;
  double gap = 0.0;       ///< +inf without a suboptimal coordinate
  double tau0_se = 0.0;   ///< Monte Carlo error of tau0 (semiparametric)
};

Truth experiment_truth(const ExperimentConfig& config);

struct MethodSummary {
  InferenceMethod method = InferenceMethod::auto_select;
  double coverage = 0.0;
  double mean_shortfall = 0.0;
  double mean_critical_value = 0.0;
  double mean_active_size = 0.0;
  int reps = 0;
};

struct RepRecord {
  std::vector<double> lower;
  std::vector<double> critical_value;
  Eigen::Index active_size = 0;
};

struct MonteCarloResult {
  ExperimentConfig config;
  Truth truth;
  std::vector<MethodSummary> methods;
  std::vector<RepRecord> records;

  const MethodSummary& summary(InferenceMethod m) const;
};

/// Rep r draws data from (seed, {r, 0}), bootstrap multipliers from
/// (seed, {r, 1}) and cross-fit folds from (seed, {r, 2}).
MonteCarloResult run_experiment(const ExperimentConfig& config, int workers = 1, bool keep_records = false);

/// Scores of one repetition, as run_experiment sees them.
ScoreMatrix experiment_scores(const ExperimentConfig& config, int rep);

struct TimingReport {
  Eigen::Index n = 0;
  Eigen::Index num_policies = 0;
  int boot_draws = 0;
  double score_seconds = 0.0;  ///< one cross-fit plus the score-level bootstrap
  double refit_seconds = 0.0;  ///< cross-fit inside every resample
  double score_per_draw = 0.0;
  double refit_per_draw = 0.0;
  double ratio = 0.0;
};

/// Both arms use the same data, policy class, B and per-draw streams.
TimingReport timing_experiment(Eigen::Index n, Eigen::Index num_policies, int boot_draws, const RngStream& stream);

/// Seconds per multiplier-bootstrap draw on score-level data of size n x J.
double score_bootstrap_per_draw(Eigen::Index n, Eigen::Index num_policies, int boot_draws, const RngStream& stream,
                                Multiplier multiplier = Multiplier::gaussian);

}  // namespace maxel

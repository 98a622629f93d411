#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>

#include "maxel/rng.hpp"
#include "maxel/scores.hpp"

namespace maxel {

inline constexpr double kPropensityFloor = 0.1;
inline constexpr double kPropensityCeil = 0.9;
inline constexpr int kCovariates = 6;

struct PolicyDataset {
  Eigen::MatrixXd covariates;  ///< n x 6
  Eigen::VectorXi treatment;
  Eigen::VectorXd outcome;

  Eigen::Index size() const { return outcome.size(); }
  void validate() const;
  PolicyDataset rows(const std::vector<Eigen::Index>& idx) const;
};

/// pi_j(w) = 1[beta_j' w_{1:3} + b_j > 0]
struct PolicyClass {
  Eigen::MatrixXd weights;  ///< J x 3
  Eigen::VectorXd offsets;

  Eigen::Index size() const { return offsets.size(); }
  int action(Eigen::Index j, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
    return weights.row(j).dot(w.head(3)) + offsets(j) > 0.0 ? 1 : 0;
  }
};

// Structural functions of the synthetic observational design.
double true_propensity(const Eigen::Ref<const Eigen::RowVectorXd>& w);
double baseline_outcome(const Eigen::Ref<const Eigen::RowVectorXd>& w);
double treatment_effect(const Eigen::Ref<const Eigen::RowVectorXd>& w);

PolicyDataset gen_semiparametric_data(Eigen::Index n, RngStream stream);

/// Fitted propensity and arm-wise outcome regressions.
class NuisanceModel {
 public:
  virtual ~NuisanceModel() = default;
  /// P(A = 1 | w), inside [0.1, 0.9].
  virtual Eigen::VectorXd propensity(const Eigen::MatrixXd& w) const = 0;
  virtual Eigen::VectorXd outcome(int arm, const Eigen::MatrixXd& w) const = 0;
};

using NuisanceFactory = std::function<std::unique_ptr<NuisanceModel>(const PolicyDataset& train)>;

/// Intercept, raw, squares and pairwise products: 28 columns.
Eigen::MatrixXd quadratic_features(const Eigen::MatrixXd& w);

struct BaselineOptions {
  double ridge = 1.0;
  double tolerance = 1e-8;
  int max_iterations = 100;
};

/// Ridge logistic propensity (Newton) and per-arm ridge regressions on the
/// quadratic features. The intercept is not penalized.
std::unique_ptr<NuisanceModel> fit_baseline_nuisance(const PolicyDataset& train, const BaselineOptions& options = {});
NuisanceFactory baseline_factory(BaselineOptions options = {});

/// Nuisances that ignore the training data: each piece is either the true
/// function or a constant.
struct KnownNuisanceSpec {
  bool true_propensity = true;
  bool true_outcome = true;
  double propensity_constant = 0.5;
  double outcome_constant = 0.0;
};
NuisanceFactory known_factory(KnownNuisanceSpec spec);

/// AIPW scores; observation i is scored by nuisances fit without it. Fold
/// membership hashes the row contents with the stream key, so reordering rows
/// reorders scores.
ScoreMatrix cross_fit_scores(const PolicyDataset& data, const PolicyClass& policies, int folds,
                             const NuisanceFactory& factory, const RngStream& stream);

/// Fold index of every observation under cross_fit_scores.
Eigen::VectorXi fold_assignment(const PolicyDataset& data, int folds, const RngStream& stream);

/// Score formula for given nuisance predictions.
ScoreMatrix aipw_scores(const PolicyDataset& data, const PolicyClass& policies, const Eigen::VectorXd& propensity,
                        const Eigen::VectorXd& m0, const Eigen::VectorXd& m1);

struct PolicyValues {
  Eigen::VectorXd values;
  Eigen::VectorXd std_errors;
};

/// Monte Carlo integration sample kept in memory so many candidate policies
/// are valued on common draws.
class PolicyValueOracle {
 public:
  PolicyValueOracle(Eigen::Index draws, RngStream stream);

  Eigen::Index draws() const { return mu0_.size(); }
  double value(const Eigen::Vector3d& beta, double offset) const;
  PolicyValues values(const PolicyClass& policies) const;
  /// Fraction of draws where the two rules act differently.
  double disagreement(const Eigen::Vector3d& beta_a, double b_a, const Eigen::Vector3d& beta_b, double b_b) const;

 private:
  Eigen::MatrixXd w_;  ///< draws x 3
  Eigen::VectorXd mu0_;
  Eigen::VectorXd tau_;
};

PolicyValues true_policy_values(const PolicyClass& policies, Eigen::Index mc_draws, RngStream stream);

struct PolicyClassOptions {
  Eigen::Vector3d anchor_weights{0.9, 0.2, -0.55};
  double anchor_offset = 0.3;
  double perturbation = 0.1;
  double acceptance_band = 0.005;   ///< |V - V_anchor| for a perturbed rule
  double min_disagreement = 0.02;   ///< between any two near-tied rules
  double attenuation = 0.3;
  double suboptimal_margin = 0.05;
  double tie_tolerance = 0.01;
  Eigen::Index mc_draws = 2'000'000;
  int max_attempts = 20000;
};

/// Anchor rule, n_near_tied - 1 perturbations within tie_tolerance of the
/// best, and attenuated random rules at least suboptimal_margin below it.
PolicyClass make_policy_class(int num_policies, int n_near_tied, const RngStream& stream,
                              const PolicyClassOptions& options = {});
PolicyClass make_policy_class(int num_policies, int n_near_tied, const RngStream& stream,
                              const PolicyValueOracle& oracle, const PolicyClassOptions& options = {});

}  // namespace maxel

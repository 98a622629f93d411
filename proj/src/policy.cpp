#include "maxel/policy.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace maxel {

namespace {

double expit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clip_propensity(double p) { return std::clamp(p, kPropensityFloor, kPropensityCeil); }

Eigen::VectorXd penalty_mask(Eigen::Index p) {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(p);
  d(0) = 0.0;
  return d;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge) {
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal() += ridge * penalty_mask(x.cols());
  gram.diagonal().array() += 1e-10;
  return gram.ldlt().solve(x.transpose() * y);
}

class BaselineNuisance final : public NuisanceModel {
 public:
  BaselineNuisance(Eigen::VectorXd logit, Eigen::VectorXd arm0, Eigen::VectorXd arm1)
      : logit_(std::move(logit)), arm0_(std::move(arm0)), arm1_(std::move(arm1)) {}

  Eigen::VectorXd propensity(const Eigen::MatrixXd& w) const override {
    const Eigen::VectorXd eta = quadratic_features(w) * logit_;
    return eta.unaryExpr([](double v) { return clip_propensity(expit(v)); });
  }

  Eigen::VectorXd outcome(int arm, const Eigen::MatrixXd& w) const override {
    return quadratic_features(w) * (arm == 1 ? arm1_ : arm0_);
  }

 private:
  Eigen::VectorXd logit_, arm0_, arm1_;
};

class KnownNuisance final : public NuisanceModel {
 public:
  explicit KnownNuisance(KnownNuisanceSpec spec) : spec_(spec) {}

  Eigen::VectorXd propensity(const Eigen::MatrixXd& w) const override {
    Eigen::VectorXd e(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      e(i) = spec_.true_propensity ? true_propensity(w.row(i)) : clip_propensity(spec_.propensity_constant);
    }
    return e;
  }

  Eigen::VectorXd outcome(int arm, const Eigen::MatrixXd& w) const override {
    Eigen::VectorXd m(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      m(i) = spec_.true_outcome ? baseline_outcome(w.row(i)) + arm * treatment_effect(w.row(i))
                                : spec_.outcome_constant;
    }
    return m;
  }

 private:
  KnownNuisanceSpec spec_;
};

}  // namespace

void PolicyDataset::validate() const {
  const Eigen::Index n = outcome.size();
  if (covariates.rows() != n || treatment.size() != n) throw std::invalid_argument("PolicyDataset: size mismatch");
  if (covariates.cols() != kCovariates) throw std::invalid_argument("PolicyDataset: expected 6 covariates");
  if (!covariates.allFinite() || !outcome.allFinite()) throw std::invalid_argument("PolicyDataset: non-finite value");
  if ((treatment.array() != 0 && treatment.array() != 1).any()) {
    throw std::invalid_argument("PolicyDataset: treatment must be 0 or 1");
  }
}

PolicyDataset PolicyDataset::rows(const std::vector<Eigen::Index>& idx) const {
  PolicyDataset out;
  const auto m = static_cast<Eigen::Index>(idx.size());
  out.covariates.resize(m, covariates.cols());
  out.treatment.resize(m);
  out.outcome.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = idx[static_cast<std::size_t>(r)];
    out.covariates.row(r) = covariates.row(i);
    out.treatment(r) = treatment(i);
    out.outcome(r) = outcome(i);
  }
  return out;
}

double true_propensity(const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  const double eta = 0.6 * w(0) - 0.5 * w(1) + 0.3 * w(2) * w(3) - 0.2 * (w(4) * w(4) - 1.0) + 0.15 * std::sin(w(5));
  return clip_propensity(expit(eta));
}

double baseline_outcome(const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  return 0.5 * w(0) - 0.3 * w(1) + 0.2 * w(2) * w(2) - 0.15 * w(3) * w(4) + 0.2 * std::cos(w(5));
}

double treatment_effect(const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  return 0.6 * std::sin(w(0)) + 0.4 * (w(1) > 0.0 ? 1.0 : 0.0) - 0.3 * w(2) + 0.2 * w(0) * w(1);
}

PolicyDataset gen_semiparametric_data(Eigen::Index n, RngStream stream) {
  if (n < 1) throw std::invalid_argument("gen_semiparametric_data: n must be positive");
  PolicyDataset d;
  d.covariates.resize(n, kCovariates);
  d.treatment.resize(n);
  d.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < kCovariates; ++k) d.covariates(i, k) = stream.normal();
    const auto w = d.covariates.row(i);
    d.treatment(i) = stream.uniform() < true_propensity(w) ? 1 : 0;
    d.outcome(i) = baseline_outcome(w) + d.treatment(i) * treatment_effect(w) + stream.normal();
  }
  return d;
}

Eigen::MatrixXd quadratic_features(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows(), p = w.cols();
  Eigen::MatrixXd f(n, 1 + 2 * p + p * (p - 1) / 2);
  f.col(0).setOnes();
  f.middleCols(1, p) = w;
  f.middleCols(1 + p, p) = w.array().square().matrix();
  Eigen::Index c = 1 + 2 * p;
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) f.col(c++) = w.col(a).cwiseProduct(w.col(b));
  }
  return f;
}

std::unique_ptr<NuisanceModel> fit_baseline_nuisance(const PolicyDataset& train, const BaselineOptions& options) {
  train.validate();
  if (!(options.ridge >= 0.0)) throw std::invalid_argument("baseline nuisance: ridge must be >= 0");
  const Eigen::Index treated = train.treatment.sum();
  if (train.size() == 0 || treated == 0 || treated == train.size()) {
    throw std::runtime_error("baseline nuisance: both treatment arms must be present in the training fold");
  }
  const Eigen::MatrixXd f = quadratic_features(train.covariates);
  const Eigen::Index p = f.cols();
  const Eigen::VectorXd mask = penalty_mask(p);
  const Eigen::VectorXd a = train.treatment.cast<double>();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd prob = (f * beta).unaryExpr([](double v) { return expit(v); });
    const Eigen::VectorXd grad = f.transpose() * (prob - a) + options.ridge * mask.cwiseProduct(beta);
    const Eigen::VectorXd curv = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd hess = f.transpose() * curv.asDiagonal() * f;
    hess.diagonal() += options.ridge * mask;
    hess.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < options.tolerance) break;
  }

  std::vector<Eigen::Index> arm_rows[2];
  for (Eigen::Index i = 0; i < train.size(); ++i) arm_rows[train.treatment(i)].push_back(i);
  Eigen::VectorXd coef[2];
  for (int arm = 0; arm < 2; ++arm) {
    const auto sub = train.rows(arm_rows[arm]);
    coef[arm] = ridge_solve(quadratic_features(sub.covariates), sub.outcome, options.ridge);
  }
  return std::make_unique<BaselineNuisance>(std::move(beta), std::move(coef[0]), std::move(coef[1]));
}

NuisanceFactory baseline_factory(BaselineOptions options) {
  return [options](const PolicyDataset& train) { return fit_baseline_nuisance(train, options); };
}

NuisanceFactory known_factory(KnownNuisanceSpec spec) {
  return [spec](const PolicyDataset&) -> std::unique_ptr<NuisanceModel> { return std::make_unique<KnownNuisance>(spec); };
}

ScoreMatrix aipw_scores(const PolicyDataset& data, const PolicyClass& policies, const Eigen::VectorXd& propensity,
                        const Eigen::VectorXd& m0, const Eigen::VectorXd& m1) {
  const Eigen::Index n = data.size(), num = policies.size();
  Eigen::MatrixXd x(n, num);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto w = data.covariates.row(i);
    const double m_obs = data.treatment(i) == 1 ? m1(i) : m0(i);
    for (Eigen::Index j = 0; j < num; ++j) {
      const int act = policies.action(j, w);
      const double m_pi = act == 1 ? m1(i) : m0(i);
      const double e_pi = act == 1 ? propensity(i) : 1.0 - propensity(i);
      x(i, j) = m_pi + (data.treatment(i) == act ? (data.outcome(i) - m_obs) / e_pi : 0.0);
    }
  }
  return ScoreMatrix(std::move(x));
}

Eigen::VectorXi fold_assignment(const PolicyDataset& data, int folds, const RngStream& stream) {
  if (folds < 2) throw std::invalid_argument("cross-fitting needs at least two folds");
  Eigen::VectorXi out(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    std::vector<std::uint64_t> key = stream.path();
    for (int k = 0; k < kCovariates; ++k) key.push_back(std::bit_cast<std::uint64_t>(data.covariates(i, k)));
    key.push_back(std::bit_cast<std::uint64_t>(data.outcome(i)));
    key.push_back(static_cast<std::uint64_t>(data.treatment(i)));
    out(i) = static_cast<int>(RngStream(stream.master_seed(), std::move(key)).below(static_cast<std::uint64_t>(folds)));
  }
  return out;
}

ScoreMatrix cross_fit_scores(const PolicyDataset& data, const PolicyClass& policies, int folds,
                             const NuisanceFactory& factory, const RngStream& stream) {
  data.validate();
  if (policies.size() < 1) throw std::invalid_argument("cross_fit_scores: empty policy class");
  const Eigen::VectorXi fold = fold_assignment(data, folds, stream);
  const Eigen::Index n = data.size();
  Eigen::VectorXd e(n), m0(n), m1(n);
  for (int k = 0; k < folds; ++k) {
    std::vector<Eigen::Index> train_idx, eval_idx;
    for (Eigen::Index i = 0; i < n; ++i) (fold(i) == k ? eval_idx : train_idx).push_back(i);
    if (eval_idx.empty()) continue;
    const auto model = factory(data.rows(train_idx));
    const Eigen::MatrixXd w = data.rows(eval_idx).covariates;
    const Eigen::VectorXd ek = model->propensity(w), m0k = model->outcome(0, w), m1k = model->outcome(1, w);
    for (std::size_t r = 0; r < eval_idx.size(); ++r) {
      const auto i = eval_idx[r];
      const auto rr = static_cast<Eigen::Index>(r);
      e(i) = ek(rr);
      m0(i) = m0k(rr);
      m1(i) = m1k(rr);
    }
  }
  return aipw_scores(data, policies, e, m0, m1);
}

PolicyValueOracle::PolicyValueOracle(Eigen::Index draws, RngStream stream) {
  if (draws < 1) throw std::invalid_argument("policy value oracle: need at least one draw");
  w_.resize(3, draws);
  mu0_.resize(draws);
  tau_.resize(draws);
  Eigen::RowVectorXd w(kCovariates);
  for (Eigen::Index i = 0; i < draws; ++i) {
    for (int k = 0; k < kCovariates; ++k) w(k) = stream.normal();
    w_.col(i) = w.head(3).transpose();
    mu0_(i) = baseline_outcome(w);
    tau_(i) = treatment_effect(w);
  }
}

double PolicyValueOracle::value(const Eigen::Vector3d& beta, double offset) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w_.cols(); ++i) {
    if (beta.dot(w_.col(i)) + offset > 0.0) s += tau_(i);
  }
  return mu0_.mean() + s / static_cast<double>(w_.cols());
}

PolicyValues PolicyValueOracle::values(const PolicyClass& policies) const {
  const Eigen::Index num = policies.size();
  const auto n = static_cast<double>(w_.cols());
  PolicyValues out{Eigen::VectorXd(num), Eigen::VectorXd(num)};
  for (Eigen::Index j = 0; j < num; ++j) {
    const Eigen::Vector3d beta = policies.weights.row(j).transpose();
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index i = 0; i < w_.cols(); ++i) {
      const double y = mu0_(i) + (beta.dot(w_.col(i)) + policies.offsets(j) > 0.0 ? tau_(i) : 0.0);
      sum += y;
      sq += y * y;
    }
    const double mean = sum / n;
    out.values(j) = mean;
    out.std_errors(j) = std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1.0));
  }
  return out;
}

double PolicyValueOracle::disagreement(const Eigen::Vector3d& beta_a, double b_a, const Eigen::Vector3d& beta_b,
                                       double b_b) const {
  Eigen::Index diff = 0;
  for (Eigen::Index i = 0; i < w_.cols(); ++i) {
    diff += (beta_a.dot(w_.col(i)) + b_a > 0.0) != (beta_b.dot(w_.col(i)) + b_b > 0.0);
  }
  return static_cast<double>(diff) / static_cast<double>(w_.cols());
}

PolicyValues true_policy_values(const PolicyClass& policies, Eigen::Index mc_draws, RngStream stream) {
  return PolicyValueOracle(mc_draws, std::move(stream)).values(policies);
}

PolicyClass make_policy_class(int num_policies, int n_near_tied, const RngStream& stream,
                              const PolicyValueOracle& oracle, const PolicyClassOptions& opt) {
  if (num_policies < 1 || n_near_tied < 1 || n_near_tied > num_policies) {
    throw std::invalid_argument("make_policy_class: need 1 <= n_near_tied <= J");
  }
  PolicyClass pc;
  pc.weights.resize(num_policies, 3);
  pc.offsets.resize(num_policies);
  pc.weights.row(0) = opt.anchor_weights.transpose();
  pc.offsets(0) = opt.anchor_offset;
  const double anchor_value = oracle.value(opt.anchor_weights, opt.anchor_offset);

  int attempts = 0;
  auto give_up = [&] {
    if (++attempts > opt.max_attempts) throw std::runtime_error("make_policy_class: rejection sampling did not finish");
  };

  auto near_rng = stream.child(0);
  int filled = 1;
  double best = anchor_value;
  while (filled < n_near_tied) {
    give_up();
    Eigen::Vector3d beta;
    for (int k = 0; k < 3; ++k) beta(k) = opt.anchor_weights(k) + opt.perturbation * near_rng.normal();
    const double b = opt.anchor_offset + opt.perturbation * near_rng.normal();
    const double v = oracle.value(beta, b);
    if (std::abs(v - anchor_value) >= opt.acceptance_band) continue;
    bool distinct = true;
    for (int j = 0; j < filled && distinct; ++j) {
      distinct = oracle.disagreement(beta, b, pc.weights.row(j).transpose(), pc.offsets(j)) >= opt.min_disagreement;
    }
    if (!distinct) continue;
    pc.weights.row(filled) = beta.transpose();
    pc.offsets(filled) = b;
    best = std::max(best, v);
    ++filled;
  }

  auto far_rng = stream.child(1);
  while (filled < num_policies) {
    give_up();
    Eigen::Vector3d beta;
    for (int k = 0; k < 3; ++k) beta(k) = opt.attenuation * far_rng.normal();
    const double b = opt.attenuation * far_rng.normal();
    if (oracle.value(beta, b) > best - opt.suboptimal_margin) continue;
    pc.weights.row(filled) = beta.transpose();
    pc.offsets(filled) = b;
    ++filled;
  }

  const Eigen::VectorXd v = oracle.values(pc).values;
  const double top = v.maxCoeff();
  for (int j = 0; j < num_policies; ++j) {
    const bool ok = j < n_near_tied ? v(j) >= top - opt.tie_tolerance : v(j) <= top - opt.suboptimal_margin;
    if (!ok) throw std::runtime_error("make_policy_class: gap certificate failed");
  }
  return pc;
}

PolicyClass make_policy_class(int num_policies, int n_near_tied, const RngStream& stream,
                              const PolicyClassOptions& options) {
  const PolicyValueOracle oracle(options.mc_draws, stream.child(2));
  return make_policy_class(num_policies, n_near_tied, stream, oracle, options);
}

}  // namespace maxel

#include "maxel/simlab.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "maxel/distributions.hpp"

namespace maxel {

namespace {

constexpr std::uint64_t kSharedKey = ~std::uint64_t{0};

double ramp(Eigen::Index j, Eigen::Index num) { return num > 1 ? double(j) / double(num - 1) : 0.0; }

Eigen::VectorXd loadings(Eigen::Index num) {
  Eigen::VectorXd b(num);
  for (Eigen::Index j = 0; j < num; ++j) b(j) = 1.0 - 0.5 * ramp(j, num);
  return b;
}

ScoreMatrix dimension_noise(Eigen::Index n, Eigen::Index num, const Eigen::VectorXd& theta0, RngStream& rng) {
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(dimension_gaussian_cov(num)).matrixL();
  const Eigen::VectorXd b = loadings(num);
  Eigen::MatrixXd x(n, num);
  Eigen::VectorXd z(num);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < num; ++j) z(j) = rng.normal();
    Eigen::VectorXd row = theta0 + 0.7 * (chol * z);
    for (Eigen::Index j = 0; j < num; ++j) row(j) += 0.2 * sample_standardized_t5(rng);
    row += 0.1 * sample_centered_exponential(rng) * b;
    x.row(i) = row.transpose();
  }
  return ScoreMatrix(std::move(x));
}

Eigen::VectorXd tie_means(Eigen::Index num, Eigen::Index k) {
  Eigen::VectorXd t = dimension_means(num);
  t.head(k).setConstant(0.35);
  return t;
}

// State shared by all repetitions of one run.
struct RunContext {
  Truth truth;
  std::optional<PolicyClass> policies;
};

RunContext make_context(const ExperimentConfig& c) {
  RunContext ctx;
  if (c.experiment != Experiment::semiparametric) {
    ctx.truth = experiment_truth(c);
    return ctx;
  }
  const PolicyValueOracle oracle(c.mc_draws, derive_stream(c.seed, {kSharedKey, 1}));
  PolicyClassOptions opts;
  opts.mc_draws = c.mc_draws;
  ctx.policies = make_policy_class(static_cast<int>(c.num_policies), static_cast<int>(c.k),
                                   derive_stream(c.seed, {kSharedKey, 0}), oracle, opts);
  const auto v = oracle.values(*ctx.policies);
  ctx.truth.theta0 = v.values;
  Eigen::Index best = argmax_index(v.values);
  ctx.truth.tau0 = v.values(best);
  ctx.truth.tau0_se = v.std_errors(best);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < v.values.size(); ++j) {
    const double g = ctx.truth.tau0 - v.values(j);
    if (g > 0.0) gap = std::min(gap, g);
  }
  ctx.truth.gap = gap;
  return ctx;
}

ScoreMatrix rep_scores(const ExperimentConfig& c, const RunContext& ctx, int rep) {
  auto data_stream = derive_stream(c.seed, {static_cast<std::uint64_t>(rep), 0});
  switch (c.experiment) {
    case Experiment::dimension:
      return gen_scores_dimension(c.n, c.num_policies, data_stream).scores;
    case Experiment::ties:
      return gen_scores_ties(c.n, c.num_policies, c.k, data_stream).scores;
    case Experiment::correlation:
      return gen_scores_correlation(c.n, c.num_policies, c.k, c.rho, data_stream).scores;
    case Experiment::semiparametric: {
      const auto data = gen_semiparametric_data(c.n, data_stream);
      BaselineOptions bo;
      bo.ridge = c.ridge;
      return cross_fit_scores(data, *ctx.policies, c.folds, baseline_factory(bo),
                              derive_stream(c.seed, {static_cast<std::uint64_t>(rep), 2}));
    }
    case Experiment::timing:
      break;
  }
  throw std::invalid_argument("run_experiment: timing is not a Monte Carlo experiment");
}

RepRecord run_rep(const ExperimentConfig& c, const RunContext& ctx, int rep) {
  const ScoreMatrix scores = rep_scores(c, ctx, rep);
  const auto boot = derive_stream(c.seed, {static_cast<std::uint64_t>(rep), 1});
  RepRecord rec;
  for (auto m : c.methods) {
    InferenceOptions opts;
    opts.alpha = c.alpha;
    opts.method = m;
    opts.draws = c.boot_draws;
    opts.multiplier = c.multiplier;
    const auto res = infer(scores, opts, boot);
    rec.lower.push_back(res.bound.lower);
    rec.critical_value.push_back(res.bound.critical_value);
    rec.active_size = static_cast<Eigen::Index>(res.active.indices.size());
  }
  return rec;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Eigen::VectorXd dimension_means(Eigen::Index num) {
  if (num < 2) throw std::invalid_argument("score designs need J >= 2");
  Eigen::VectorXd t(num);
  t(0) = 0.35;
  for (Eigen::Index j = 1; j < num; ++j) t(j) = num > 2 ? 0.2 - 0.2 * double(j - 1) / double(num - 2) : 0.2;
  return t;
}

Eigen::MatrixXd dimension_gaussian_cov(Eigen::Index num) {
  Eigen::MatrixXd s(num, num);
  for (Eigen::Index j = 0; j < num; ++j) {
    for (Eigen::Index k = 0; k < num; ++k) {
      const double vj = 1.0 - 0.3 * ramp(j, num), vk = 1.0 - 0.3 * ramp(k, num);
      s(j, k) = (std::pow(0.5, double(std::abs(j - k))) + 0.15) * std::sqrt(vj * vk) / 1.15;
    }
  }
  return s;
}

Eigen::MatrixXd dimension_score_cov(Eigen::Index num) {
  const Eigen::VectorXd b = loadings(num);
  Eigen::MatrixXd s = 0.49 * dimension_gaussian_cov(num) + 0.01 * b * b.transpose();
  s.diagonal().array() += 0.04;
  return s;
}

GeneratedScores gen_scores_dimension(Eigen::Index n, Eigen::Index num, RngStream stream) {
  return gen_scores_ties(n, num, 1, std::move(stream));
}

GeneratedScores gen_scores_ties(Eigen::Index n, Eigen::Index num, Eigen::Index k, RngStream stream) {
  if (num < 2) throw std::invalid_argument("score designs need J >= 2");
  if (k < 1 || k > num) throw std::invalid_argument("tie multiplicity must satisfy 1 <= k <= J");
  Eigen::VectorXd theta0 = tie_means(num, k);
  auto scores = dimension_noise(n, num, theta0, stream);
  return {std::move(scores), std::move(theta0)};
}

GeneratedScores gen_scores_correlation(Eigen::Index n, Eigen::Index num, Eigen::Index k, double rho,
                                       RngStream stream) {
  if (num < 2) throw std::invalid_argument("score designs need J >= 2");
  if (k < 1 || k > num) throw std::invalid_argument("tie multiplicity must satisfy 1 <= k <= J");
  const double lo = k > 1 ? -1.0 / double(k - 1) : -1.0;
  if (!(rho > lo && rho < 1.0)) throw std::invalid_argument("correlation outside the positive definite range");
  Eigen::MatrixXd block = Eigen::MatrixXd::Constant(k, k, rho);
  block.diagonal().setOnes();
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(block).matrixL();
  Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(num, 0.10);
  theta0.head(k).setConstant(0.30);
  Eigen::MatrixXd x(n, num);
  Eigen::VectorXd z(num);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < num; ++j) z(j) = stream.normal();
    x.row(i) = theta0.transpose();
    x.row(i).head(k) += (chol * z.head(k)).transpose();
    x.row(i).tail(num - k) += z.tail(num - k).transpose();
  }
  return {ScoreMatrix(std::move(x)), std::move(theta0)};
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::dimension: return "dimension";
    case Experiment::ties: return "ties";
    case Experiment::correlation: return "correlation";
    case Experiment::semiparametric: return "semi";
    case Experiment::timing: return "timing";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (auto e : {Experiment::dimension, Experiment::ties, Experiment::correlation, Experiment::semiparametric,
                 Experiment::timing}) {
    if (to_string(e) == name) return e;
  }
  if (name == "semiparametric") return Experiment::semiparametric;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (num_policies < 2) throw std::invalid_argument("J must be at least 2");
  if (k < 1 || k > num_policies) throw std::invalid_argument("k must satisfy 1 <= k <= J");
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (boot_draws < 1) throw std::invalid_argument("boot draws must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (methods.empty()) throw std::invalid_argument("no methods requested");
  if (experiment == Experiment::correlation) {
    const double lo = k > 1 ? -1.0 / double(k - 1) : -1.0;
    if (!(rho > lo && rho < 1.0)) throw std::invalid_argument("rho outside the positive definite range");
  }
  if (experiment == Experiment::semiparametric) {
    if (folds < 2) throw std::invalid_argument("folds must be at least 2");
    if (mc_draws < 1000) throw std::invalid_argument("mc draws must be at least 1000");
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  }
  if (experiment == Experiment::timing) throw std::invalid_argument("timing runs through timing_experiment");
}

Truth experiment_truth(const ExperimentConfig& c) {
  if (c.experiment == Experiment::semiparametric) return make_context(c).truth;
  Truth t;
  switch (c.experiment) {
    case Experiment::dimension: t.theta0 = dimension_means(c.num_policies); break;
    case Experiment::ties: t.theta0 = tie_means(c.num_policies, c.k); break;
    case Experiment::correlation:
      t.theta0 = Eigen::VectorXd::Constant(c.num_policies, 0.10);
      t.theta0.head(c.k).setConstant(0.30);
      break;
    default: throw std::invalid_argument("experiment_truth: no truth for this experiment");
  }
  t.tau0 = t.theta0.maxCoeff();
  t.gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < t.theta0.size(); ++j) {
    if (t.theta0(j) < t.tau0) t.gap = std::min(t.gap, t.tau0 - t.theta0(j));
  }
  return t;
}

const MethodSummary& MonteCarloResult::summary(InferenceMethod m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw std::out_of_range("method not part of this experiment");
}

ScoreMatrix experiment_scores(const ExperimentConfig& config, int rep) {
  config.validate();
  return rep_scores(config, make_context(config), rep);
}

MonteCarloResult run_experiment(const ExperimentConfig& config, int workers, bool keep_records) {
  config.validate();
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  const RunContext ctx = make_context(config);
  std::vector<RepRecord> records(static_cast<std::size_t>(config.reps));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int r = next++; r < config.reps; r = next++) {
      try {
        records[static_cast<std::size_t>(r)] = run_rep(config, ctx, r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.reps;
      }
    }
  };
  const int threads = std::min(workers, config.reps);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloResult out;
  out.config = config;
  out.truth = ctx.truth;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodSummary s;
    s.method = config.methods[m];
    s.reps = config.reps;
    for (const auto& rec : records) {
      const double lower = rec.lower[m];
      s.coverage += lower <= ctx.truth.tau0 ? 1.0 : 0.0;
      s.mean_shortfall += ctx.truth.tau0 - lower;
      s.mean_critical_value += rec.critical_value[m];
      s.mean_active_size += static_cast<double>(rec.active_size);
    }
    s.coverage /= config.reps;
    s.mean_shortfall /= config.reps;
    s.mean_critical_value /= config.reps;
    s.mean_active_size /= config.reps;
    out.methods.push_back(s);
  }
  if (keep_records) out.records = std::move(records);
  return out;
}

TimingReport timing_experiment(Eigen::Index n, Eigen::Index num_policies, int boot_draws, const RngStream& stream) {
  if (n < 20 || num_policies < 2 || boot_draws < 1) throw std::invalid_argument("timing: invalid sizes");
  PolicyClassOptions popts;
  popts.mc_draws = 200'000;
  const PolicyValueOracle oracle(popts.mc_draws, stream.child(0));
  const int near = static_cast<int>(std::min<Eigen::Index>(5, num_policies));
  const auto pc = make_policy_class(static_cast<int>(num_policies), near, stream.child(1), oracle, popts);
  const auto data = gen_semiparametric_data(n, stream.child(2));
  const auto fold_stream = stream.child(3);
  const auto boot_stream = stream.child(4);
  const auto factory = baseline_factory();

  TimingReport rep;
  rep.n = n;
  rep.num_policies = num_policies;
  rep.boot_draws = boot_draws;

  auto t0 = std::chrono::steady_clock::now();
  const ScoreMatrix scores = cross_fit_scores(data, pc, 2, factory, fold_stream);
  const ScoreSummary summary(scores);
  const ConeSpec cone = estimate_active_set(summary).indices;
  const auto cal = corrected_multiplier_bootstrap(scores, cone, boot_draws, Multiplier::gaussian, boot_stream);
  rep.score_seconds = seconds_since(t0);

  // Plug-in bootstrap: every resample refits the nuisances before scoring.
  t0 = std::chrono::steady_clock::now();
  ConeProjector projector(summary.cov(), cone);
  std::vector<double> draws(static_cast<std::size_t>(boot_draws));
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (int b = 0; b < boot_draws; ++b) {
    auto rng = boot_stream.child(static_cast<std::uint64_t>(b));
    for (auto& i : idx) i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    const auto resampled = data.rows(idx);
    const ScoreMatrix s = cross_fit_scores(resampled, pc, 2, factory, fold_stream);
    const Eigen::VectorXd z = root_n * (s.values().colwise().mean().transpose() - summary.mean());
    draws[static_cast<std::size_t>(b)] = projector(z).first;
  }
  (void)order_statistic(draws, cal.alpha);
  rep.refit_seconds = seconds_since(t0);

  rep.score_per_draw = rep.score_seconds / boot_draws;
  rep.refit_per_draw = rep.refit_seconds / boot_draws;
  rep.ratio = rep.refit_seconds / rep.score_seconds;
  return rep;
}

double score_bootstrap_per_draw(Eigen::Index n, Eigen::Index num_policies, int boot_draws, const RngStream& stream,
                                Multiplier multiplier) {
  const auto gen = gen_scores_ties(n, num_policies, std::min<Eigen::Index>(2, num_policies), stream.child(0));
  const ConeSpec cone({0, 1}, num_policies);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cal = corrected_multiplier_bootstrap(gen.scores, cone, boot_draws, multiplier, stream.child(1));
  const double secs = seconds_since(t0);
  (void)cal;
  return secs / boot_draws;
}

}  // namespace maxel

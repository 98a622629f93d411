#include "maxel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maxel/distributions.hpp"

namespace maxel {

namespace {

constexpr Eigen::Index kMultiplierChunk = 256;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

void check_draws(int draws) {
  if (draws < 1) throw std::invalid_argument("bootstrap needs at least one draw");
}

ConfidenceBound bound_from_simplex(const ScoreSummary& summary, double c, double alpha, BoundMethod method) {
  const auto sol = simplex_lower_bound(summary, c);
  ConfidenceBound out;
  out.lower = sol.lower;
  out.level = 1.0 - alpha;
  out.critical_value = c;
  out.weights = sol.weights;
  out.face = sol.support;
  out.method = method;
  return out;
}

void fill_multipliers(Eigen::Ref<Eigen::VectorXd> col, Multiplier multiplier, RngStream rng) {
  const Eigen::Index n = col.size();
  if (multiplier == Multiplier::gaussian) {
    for (Eigen::Index i = 0; i < n; ++i) col(i) = rng.normal();
    return;
  }
  std::uint64_t bits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i % 64 == 0) bits = rng.next_u64();
    col(i) = (bits & 1u) ? 1.0 : -1.0;
    bits >>= 1;
  }
}

}  // namespace

double default_threshold(const ScoreSummary& summary) {
  const double n = static_cast<double>(summary.n());
  return std::sqrt(summary.cov().diagonal().maxCoeff() * std::log(n) / n);
}

Eigen::Index argmax_index(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v(j) > v(best)) best = j;
  }
  return best;
}

ActiveSetEstimate estimate_active_set(const ScoreSummary& summary, double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("active set threshold must be >= 0");
  const Eigen::VectorXd& mean = summary.mean();
  const double top = mean.maxCoeff();
  ActiveSetEstimate out;
  out.kappa = kappa;
  out.gaps = (top - mean.array()).matrix();
  IndexList idx;
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    if (out.gaps(j) <= kappa) idx.push_back(j);
  }
  out.indices = ConeSpec(std::move(idx), mean.size());
  return out;
}

ActiveSetEstimate estimate_active_set(const ScoreSummary& summary) {
  return estimate_active_set(summary, default_threshold(summary));
}

double order_statistic(std::vector<double> draws, double alpha) {
  check_alpha(alpha);
  if (draws.empty()) throw std::invalid_argument("order_statistic: no draws");
  const double b = static_cast<double>(draws.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  k = std::clamp<std::size_t>(k, 1, draws.size());
  auto nth = draws.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(draws.begin(), nth, draws.end());
  return *nth;
}

CalibrationResult ordinary_score_bootstrap(const ScoreMatrix& scores, int draws, const RngStream& stream,
                                           double alpha) {
  check_draws(draws);
  check_alpha(alpha);
  const ScoreSummary summary(scores);
  const Eigen::Index n = scores.n();
  const Eigen::Index jhat = argmax_index(summary.mean());
  // Only coordinate jhat enters the hyperplane distance.
  const Eigen::VectorXd col = scores.values().col(jhat);
  const double center = summary.mean()(jhat);
  const double var = summary.cov()(jhat, jhat);
  const double root_n = std::sqrt(static_cast<double>(n));

  CalibrationResult out;
  out.alpha = alpha;
  out.method = BoundMethod::ordinary_boot;
  out.cone = ConeSpec({jhat}, scores.num_policies());
  out.seed = stream.master_seed();
  out.draws.resize(static_cast<std::size_t>(draws));
  for (int b = 0; b < draws; ++b) {
    auto rng = stream.child(static_cast<std::uint64_t>(b));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += col(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    const double z = root_n * (sum / static_cast<double>(n) - center);
    out.draws[static_cast<std::size_t>(b)] = z * z / var;
  }
  out.critical_value = order_statistic(out.draws, alpha);
  return out;
}

Eigen::MatrixXd multiplier_sums(const ScoreMatrix& scores, int draws, Multiplier multiplier, const RngStream& stream) {
  check_draws(draws);
  const Eigen::Index n = scores.n();
  const Eigen::MatrixXd centered = scores.values().rowwise() - scores.values().colwise().mean();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd out(scores.num_policies(), draws);
  Eigen::MatrixXd xi(n, std::min<Eigen::Index>(kMultiplierChunk, draws));
  for (Eigen::Index start = 0; start < draws; start += kMultiplierChunk) {
    const Eigen::Index width = std::min<Eigen::Index>(kMultiplierChunk, draws - start);
    for (Eigen::Index k = 0; k < width; ++k) {
      fill_multipliers(xi.col(k), multiplier, stream.child(static_cast<std::uint64_t>(start + k)));
    }
    out.middleCols(start, width).noalias() = scale * centered.transpose() * xi.leftCols(width);
  }
  return out;
}

CalibrationResult corrected_multiplier_bootstrap(const ScoreMatrix& scores, const ConeSpec& cone, int draws,
                                                 Multiplier multiplier, const RngStream& stream, double alpha) {
  check_draws(draws);
  check_alpha(alpha);
  if (cone.ambient_dim() != scores.num_policies()) throw std::invalid_argument("bootstrap: cone dimension mismatch");
  const ScoreSummary summary(scores);
  const Eigen::MatrixXd z = multiplier_sums(scores, draws, multiplier, stream);
  ConeProjector projector(summary.cov(), cone);

  CalibrationResult out;
  out.alpha = alpha;
  out.method = BoundMethod::corrected_boot;
  out.cone = cone;
  out.seed = stream.master_seed();
  out.draws.resize(static_cast<std::size_t>(draws));
  for (int b = 0; b < draws; ++b) out.draws[static_cast<std::size_t>(b)] = projector(z.col(b)).first;
  out.critical_value = order_statistic(out.draws, alpha);
  return out;
}

ConfidenceBound projected_joint_bound(const ScoreSummary& summary, double alpha) {
  check_alpha(alpha);
  const int dim = static_cast<int>(summary.dim());
  return bound_from_simplex(summary, chi2_quantile(dim, 1.0 - alpha), alpha, BoundMethod::projected_joint);
}

ConfidenceBound selected_policy_wald(const ScoreSummary& summary, double alpha) {
  check_alpha(alpha);
  const Eigen::Index j = argmax_index(summary.mean());
  const double z = normal_quantile(1.0 - alpha);
  ConfidenceBound out;
  out.lower = summary.mean()(j) - z * std::sqrt(summary.cov()(j, j) / static_cast<double>(summary.n()));
  out.level = 1.0 - alpha;
  out.critical_value = z * z;
  out.weights = Eigen::VectorXd::Unit(summary.dim(), j);
  out.face = {j};
  out.method = BoundMethod::selected_wald;
  return out;
}

ConfidenceBound fang_santos_bound(const ScoreMatrix& scores, double alpha, int draws, Multiplier multiplier,
                                  const RngStream& stream) {
  check_draws(draws);
  check_alpha(alpha);
  const ScoreSummary summary(scores);
  const auto active = estimate_active_set(summary);
  const Eigen::MatrixXd z = multiplier_sums(scores, draws, multiplier, stream);
  std::vector<double> deriv(static_cast<std::size_t>(draws));
  for (int b = 0; b < draws; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto j : active.indices.active()) m = std::max(m, z(j, b));
    deriv[static_cast<std::size_t>(b)] = m;
  }
  const double q = order_statistic(std::move(deriv), alpha);
  const Eigen::Index j = argmax_index(summary.mean());
  ConfidenceBound out;
  out.lower = summary.mean()(j) - q / std::sqrt(static_cast<double>(summary.n()));
  out.level = 1.0 - alpha;
  out.critical_value = q;
  out.weights = Eigen::VectorXd::Unit(summary.dim(), j);
  out.face = active.indices.active();
  out.method = BoundMethod::fang_santos;
  return out;
}

std::string_view to_string(InferenceMethod m) {
  switch (m) {
    case InferenceMethod::auto_select: return "auto";
    case InferenceMethod::chi2: return "chi2";
    case InferenceMethod::ordinary: return "ordinary";
    case InferenceMethod::corrected: return "corrected";
    case InferenceMethod::joint: return "joint";
    case InferenceMethod::wald: return "wald";
    case InferenceMethod::fang_santos: return "fs";
  }
  return "unknown";
}

std::optional<InferenceMethod> parse_inference_method(std::string_view name) {
  for (auto m : {InferenceMethod::auto_select, InferenceMethod::chi2, InferenceMethod::ordinary,
                 InferenceMethod::corrected, InferenceMethod::joint, InferenceMethod::wald,
                 InferenceMethod::fang_santos}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

InferenceResult infer(const ScoreMatrix& scores, const InferenceOptions& options, const RngStream& stream) {
  check_alpha(options.alpha);
  const double alpha = options.alpha;
  const ScoreSummary summary(scores);
  InferenceResult out;
  out.active = options.kappa ? estimate_active_set(summary, *options.kappa) : estimate_active_set(summary);

  auto needs_draws = [&] {
    if (options.draws < 1) throw std::invalid_argument("bootstrap method requires draws >= 1");
  };

  switch (options.method) {
    case InferenceMethod::auto_select:
      if (out.active.indices.size() == 1) {
        if (options.bootstrap_when_smooth) {
          needs_draws();
          out.calibration = ordinary_score_bootstrap(scores, options.draws, stream, alpha);
          out.bound = bound_from_simplex(summary, out.calibration->critical_value, alpha, BoundMethod::ordinary_boot);
        } else {
          out.bound = bound_from_simplex(summary, chi2_quantile(1, 1.0 - alpha), alpha, BoundMethod::chi2);
        }
      } else {
        needs_draws();
        out.calibration =
            corrected_multiplier_bootstrap(scores, out.active.indices, options.draws, options.multiplier, stream, alpha);
        out.bound = bound_from_simplex(summary, out.calibration->critical_value, alpha, BoundMethod::corrected_boot);
      }
      break;
    case InferenceMethod::chi2:
      out.bound = bound_from_simplex(summary, chi2_quantile(1, 1.0 - alpha), alpha, BoundMethod::chi2);
      break;
    case InferenceMethod::ordinary:
      needs_draws();
      out.calibration = ordinary_score_bootstrap(scores, options.draws, stream, alpha);
      out.bound = bound_from_simplex(summary, out.calibration->critical_value, alpha, BoundMethod::ordinary_boot);
      break;
    case InferenceMethod::corrected:
      needs_draws();
      out.calibration =
          corrected_multiplier_bootstrap(scores, out.active.indices, options.draws, options.multiplier, stream, alpha);
      out.bound = bound_from_simplex(summary, out.calibration->critical_value, alpha, BoundMethod::corrected_boot);
      break;
    case InferenceMethod::joint:
      out.bound = projected_joint_bound(summary, alpha);
      break;
    case InferenceMethod::wald:
      out.bound = selected_policy_wald(summary, alpha);
      break;
    case InferenceMethod::fang_santos:
      needs_draws();
      out.bound = fang_santos_bound(scores, alpha, options.draws, options.multiplier, stream);
      break;
  }
  return out;
}

ConfidenceBound infer_lower_bound(const ScoreMatrix& scores, double alpha, InferenceMethod method, int draws,
                                  Multiplier multiplier, const RngStream& stream) {
  InferenceOptions opts;
  opts.alpha = alpha;
  opts.method = method;
  opts.draws = draws;
  opts.multiplier = multiplier;
  return infer(scores, opts, stream).bound;
}

}  // namespace maxel

#include "maxel/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace maxel {

Eigen::VectorXd sample_standard_normal(RngStream& stream, Eigen::Index dim) {
  if (dim < 1) throw std::invalid_argument("sample_standard_normal: dimension must be >= 1");
  Eigen::VectorXd out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) out(i) = stream.normal();
  return out;
}

double sample_standardized_t5(RngStream& stream) {
  const double z = stream.normal();
  double chi2 = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double g = stream.normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / 5.0) * std::sqrt(3.0 / 5.0);
}

double sample_centered_exponential(RngStream& stream) { return -std::log(stream.uniform_open()) - 1.0; }

namespace {

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by modified Lentz continued fraction.
double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_probability(double p, const char* who) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(std::string(who) + ": probability must lie in (0, 1)");
  }
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double chi2_cdf(int df, double q) {
  if (df < 1) throw std::invalid_argument("chi2_cdf: df must be >= 1");
  return regularized_gamma_p(0.5 * df, 0.5 * q);
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw std::invalid_argument("chi2_quantile: df must be >= 1");
  check_probability(p, "chi2_quantile");
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (chi2_cdf(df, hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(df, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  check_probability(p, "normal_quantile");
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace maxel

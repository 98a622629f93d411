#pragma once

#include <Eigen/Core>

#include "maxel/rng.hpp"

namespace maxel {

// Samplers

Eigen::VectorXd sample_standard_normal(RngStream& stream, Eigen::Index dim);

/// Student t with 5 degrees of freedom scaled by sqrt(3/5) (unit variance).
double sample_standardized_t5(RngStream& stream);

/// Exp(1) - 1: mean 0, variance 1, support [-1, inf).
double sample_centered_exponential(RngStream& stream);

// Special functions and quantiles

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(int df, double q);

/// Inverse of chi2_cdf by bracketing and bisection. Throws
/// std::invalid_argument unless df >= 1 and 0 < p < 1.
double chi2_quantile(int df, double p);

double normal_cdf(double x);

/// Standard normal inverse cdf by bisection on normal_cdf.
double normal_quantile(double p);

}  // namespace maxel

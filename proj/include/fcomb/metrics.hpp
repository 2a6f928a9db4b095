#pragma once

// Scalar evaluation metrics and robust linear fits.

#include <cstddef>
#include <cstdint>
#include <span>

#include "fcomb/core.hpp"

namespace fcomb::eval {

/// Root mean squared difference over pairs where both sides are present.
double rmse(std::span<const double> pred, std::span<const double> truth);

/// Mean of the floored log squared error. `degenerate` counts clamped epochs.
double mean_log_loss(std::span<const double> inference, std::span<const double> truth, LogBase base,
                     double floor = 1e-12, std::size_t* degenerate = nullptr);

double median(std::span<const double> values);

/// Standard error of the median: standard deviation of the medians of
/// `n_boot` resamples drawn with replacement. Deterministic in `seed`.
double bootstrap_median_se(std::span<const double> values, int n_boot = 1000, std::uint64_t seed = 0);

/// Linear interpolation between closest ranks, q in [0, 1].
double quantile(std::span<const double> values, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

struct HuberOptions {
  double delta = 1.345;
  double tolerance = 1e-8;
  int max_iterations = 100;
  int bootstrap_n = 1000;
  std::uint64_t seed = 0;
};

struct HuberFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// 16th/84th bootstrap percentiles of the slope; absent without bootstrap.
  double slope_lo = kAbsent;
  double slope_hi = kAbsent;
  int iterations = 0;
  bool converged = false;
};

/// Huber regression of y on x by IRLS with a MAD residual scale, starting
/// from least squares. Throws Eval on fewer than three points or constant x.
HuberFit huber_fit(std::span<const double> x, std::span<const double> y, const HuberOptions& opts = {});

}  // namespace fcomb::eval

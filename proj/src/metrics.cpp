#include "fcomb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fcomb/combiner.hpp"

namespace fcomb::eval {

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw eval_error("rmse: length mismatch");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (is_absent(pred[i]) || is_absent(truth[i])) continue;
    const double d = pred[i] - truth[i];
    ss += d * d;
    ++n;
  }
  if (n == 0) throw eval_error("rmse: no comparable pairs");
  return std::sqrt(ss / static_cast<double>(n));
}

double mean_log_loss(std::span<const double> inference, std::span<const double> truth, LogBase base,
                     double floor, std::size_t* degenerate) {
  if (inference.size() != truth.size()) throw eval_error("mean_log_loss: length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < inference.size(); ++i) {
    if (is_absent(inference[i]) || is_absent(truth[i])) continue;
    sum += combine::to_log_loss(combine::epoch_loss(inference[i], truth[i]), base, floor, degenerate);
    ++n;
  }
  if (n == 0) throw eval_error("mean_log_loss: no comparable epochs");
  return sum / static_cast<double>(n);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (is_present(x)) v.push_back(x);
  if (v.empty()) throw eval_error("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

double bootstrap_median_se(std::span<const double> values, int n_boot, std::uint64_t seed) {
  std::vector<double> v;
  for (double x : values)
    if (is_present(x)) v.push_back(x);
  if (v.empty()) throw eval_error("median standard error of an empty sample");
  if (n_boot < 2 || v.size() == 1) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> draw(v.size()), meds(static_cast<std::size_t>(n_boot));
  for (auto& m : meds) {
    for (auto& d : draw) d = v[pick(rng)];
    m = median(draw);
  }
  double mean = 0;
  for (double m : meds) mean += m;
  mean /= static_cast<double>(meds.size());
  double ss = 0;
  for (double m : meds) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / static_cast<double>(meds.size() - 1));
}

namespace {

struct Sums {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
};

LinearFit weighted_ls(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  Sums s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.sw += w[i];
    s.sx += w[i] * x[i];
    s.sy += w[i] * y[i];
  }
  const double mx = s.sx / s.sw, my = s.sy / s.sw;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    s.sxx += w[i] * dx * dx;
    s.sxy += w[i] * dx * (y[i] - my);
  }
  if (!(s.sxx > 0)) throw eval_error("degenerate x variance");
  LinearFit f;
  f.slope = s.sxy / s.sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw eval_error("fit: length mismatch");
  if (x.size() < 3) throw eval_error("fit needs at least three points");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw eval_error("fit: non-finite input");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw eval_error("degenerate x variance");
}

HuberFit irls(std::span<const double> x, std::span<const double> y, const HuberOptions& opts) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0), r(n), a(n);
  LinearFit f = weighted_ls(x, y, w);
  HuberFit out;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    out.iterations = it;
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - (f.intercept + f.slope * x[i]);
    const double m = median(r);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(r[i] - m);
    const double scale = median(a) / 0.6745;
    if (!(scale > 0)) {
      out.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = std::abs(r[i]) / scale;
      w[i] = u <= opts.delta ? 1.0 : opts.delta / u;
    }
    const LinearFit g = weighted_ls(x, y, w);
    const double change = std::abs(g.slope - f.slope) + std::abs(g.intercept - f.intercept);
    f = g;
    if (change <= opts.tolerance * (1.0 + std::abs(f.slope) + std::abs(f.intercept))) {
      out.converged = true;
      break;
    }
  }
  out.slope = f.slope;
  out.intercept = f.intercept;
  return out;
}

}  // namespace

LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const std::vector<double> w(x.size(), 1.0);
  return weighted_ls(x, y, w);
}

HuberFit huber_fit(std::span<const double> x, std::span<const double> y, const HuberOptions& opts) {
  check_inputs(x, y);
  HuberFit fit = irls(x, y, opts);
  if (opts.bootstrap_n <= 0) return fit;

  const std::size_t n = x.size();
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> bx(n), by(n), slopes;
  slopes.reserve(static_cast<std::size_t>(opts.bootstrap_n));
  for (int b = 0; b < opts.bootstrap_n; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick(rng);
      bx[i] = x[k];
      by[i] = y[k];
    }
    const auto [lo, hi] = std::minmax_element(bx.begin(), bx.end());
    if (*lo == *hi) continue;  // resample collapsed onto one x value
    slopes.push_back(irls(bx, by, opts).slope);
  }
  if (!slopes.empty()) {
    fit.slope_lo = quantile(slopes, 0.16);
    fit.slope_hi = quantile(slopes, 0.84);
  }
  return fit;
}

}  // namespace fcomb::eval

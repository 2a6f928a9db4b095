#include "fcomb/combiner.hpp"

#include <algorithm>
#include <cmath>

namespace fcomb::combine {

double epoch_loss(double inference, double truth) {
  const double d = inference - truth;
  return d * d;
}

double to_log_loss(double loss, LogBase base, double floor, std::size_t* clamped) {
  if (loss < floor) {
    if (clamped) ++*clamped;
    loss = floor;
  }
  return log_in_base(loss, base);
}

double regret_from_forecast_loss(double prev_network_log_loss, double forecast_log_loss) {
  return prev_network_log_loss - forecast_log_loss;
}

Moments population_moments(std::span<const double> values) {
  Moments m;
  double sum = 0.0;
  for (double v : values) {
    if (is_absent(v)) continue;
    sum += v;
    ++m.count;
  }
  if (m.count == 0) return m;
  m.mean = sum / static_cast<double>(m.count);
  double ss = 0.0;
  for (double v : values) {
    if (is_absent(v)) continue;
    const double d = v - m.mean;
    ss += d * d;
  }
  m.stddev = std::sqrt(ss / static_cast<double>(m.count));
  return m;
}

std::vector<double> normalize_regrets(std::span<const double> regrets, double epsilon) {
  const Moments m = population_moments(regrets);
  std::vector<double> out(regrets.size(), kAbsent);
  for (std::size_t j = 0; j < regrets.size(); ++j)
    if (is_present(regrets[j])) out[j] = regrets[j] / (m.stddev + epsilon);
  return out;
}

std::vector<double> zscores(std::span<const double> regrets, double epsilon) {
  const Moments m = population_moments(regrets);
  std::vector<double> out(regrets.size(), kAbsent);
  for (std::size_t j = 0; j < regrets.size(); ++j)
    if (is_present(regrets[j])) out[j] = (regrets[j] - m.mean) / (m.stddev + epsilon);
  return out;
}

double weight_fn(double x, double p, double c) { return p / (std::exp(-p * (x - c)) + 1.0); }

double log_weight_fn(double x, double p, double c) {
  // log p - log(1 + e^z) with z = -p (x - c), evaluated without overflow.
  const double z = -p * (x - c);
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return std::log(p) - softplus;
}

WeightVector weights_from_scores(std::span<const double> scores, double p, double c,
                                 WeightSource provenance) {
  WeightVector w;
  w.provenance = provenance;
  w.values.assign(scores.size(), kAbsent);
  w.log_values.assign(scores.size(), kAbsent);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (is_absent(scores[j])) continue;
    if (!std::isfinite(scores[j])) throw combine_error("non-finite weight input");
    w.values[j] = weight_fn(scores[j], p, c);
    w.log_values[j] = log_weight_fn(scores[j], p, c);
  }
  return w;
}

WeightVector weights_from_forecast(TargetKind kind, std::span<const double> forecasts,
                                   double prev_network_log_loss, const TopicConfig& cfg) {
  for (double f : forecasts)
    if (is_present(f) && !std::isfinite(f)) throw combine_error("non-finite forecast");
  switch (kind) {
    case TargetKind::Loss: {
      std::vector<double> regrets(forecasts.size(), kAbsent);
      for (std::size_t j = 0; j < forecasts.size(); ++j)
        if (is_present(forecasts[j]))
          regrets[j] = regret_from_forecast_loss(prev_network_log_loss, forecasts[j]);
      return weights_from_scores(normalize_regrets(regrets, cfg.epsilon), cfg.p, cfg.c,
                                 WeightSource::FromForecast);
    }
    case TargetKind::Regret:
      return weights_from_scores(normalize_regrets(forecasts, cfg.epsilon), cfg.p, cfg.c,
                                 WeightSource::FromForecast);
    case TargetKind::ZScore: {
      std::vector<double> shifted(forecasts.begin(), forecasts.end());
      for (double& z : shifted)
        if (is_present(z)) z += cfg.delta_z;
      return weights_from_scores(shifted, cfg.p, cfg.c, WeightSource::FromForecast);
    }
  }
  throw validation_error("unknown target kind");
}

namespace {

// Ratio of weighted sums evaluated relative to the largest log-weight, so
// the result is unchanged by any common scale and never divides 0 by 0.
double weighted_mean_log(std::span<const double> values, std::span<const double> log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (is_absent(values[j]) || is_absent(log_weights[j])) continue;
    max_lw = std::max(max_lw, log_weights[j]);
    any = true;
  }
  if (!any) throw combine_error("no contributing workers");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (is_absent(values[j]) || is_absent(log_weights[j])) continue;
    const double w = std::exp(log_weights[j] - max_lw);
    num += w * values[j];
    den += w;
  }
  return num / den;
}

}  // namespace

double forecast_implied_inference(std::span<const double> inferences, const WeightVector& weights) {
  if (inferences.size() != weights.size()) throw combine_error("inference/weight size mismatch");
  return weighted_mean_log(inferences, weights.log_values);
}

double update_ema_regret(double prev_ema, double regret, double alpha) {
  if (is_absent(prev_ema)) return regret;
  return alpha * regret + (1.0 - alpha) * prev_ema;
}

double network_inference(std::span<const double> raw, std::span<const double> implied,
                         std::span<const double> ema_regrets, const TopicConfig& cfg) {
  const std::size_t n = raw.size() + implied.size();
  if (ema_regrets.size() != n) throw combine_error("EMA regrets must cover every contributor");
  std::vector<double> values;
  values.reserve(n);
  values.insert(values.end(), raw.begin(), raw.end());
  values.insert(values.end(), implied.begin(), implied.end());

  // Regrets of contributors only; absent EMA history counts as zero.
  std::vector<double> regrets(n, kAbsent);
  for (std::size_t l = 0; l < n; ++l)
    if (is_present(values[l])) regrets[l] = is_present(ema_regrets[l]) ? ema_regrets[l] : 0.0;
  const std::vector<double> scores =
      cfg.normalize_ema_regrets ? normalize_regrets(regrets, cfg.epsilon) : regrets;
  const WeightVector w = weights_from_scores(scores, cfg.p, cfg.c, WeightSource::FromEma);
  return weighted_mean_log(values, w.log_values);
}

double naive_network_inference(std::span<const double> raw, std::span<const double> ema_regrets,
                               const TopicConfig& cfg) {
  return network_inference(raw, {}, ema_regrets, cfg);
}

EpochPanel roll_forward(const InferenceTable& table, const TopicConfig& cfg, std::size_t* clamped) {
  const std::size_t nw = table.workers.size();
  if (table.inference.rows() != table.n_epochs() || table.truth.size() != table.n_epochs() ||
      table.inference.cols() != nw)
    throw validation_error("inference table misaligned");

  EpochPanel panel(table.workers);
  std::vector<double> ema(nw, kAbsent);
  for (std::size_t i = 0; i < table.n_epochs(); ++i) {
    EpochRecord rec;
    rec.epoch = table.epochs[i];
    rec.truth = table.truth[i];
    rec.inference = table.inference.row(i);
    rec.loss.assign(nw, kAbsent);
    rec.log_loss.assign(nw, kAbsent);
    rec.regret.assign(nw, kAbsent);

    rec.network_inference = naive_network_inference(rec.inference, ema, cfg);
    if (is_present(rec.truth)) {
      rec.network_loss = epoch_loss(rec.network_inference, rec.truth);
      rec.network_log_loss = to_log_loss(rec.network_loss, cfg.log_base, cfg.loss_floor, clamped);
      for (std::size_t j = 0; j < nw; ++j) {
        if (is_absent(rec.inference[j])) continue;
        rec.loss[j] = epoch_loss(rec.inference[j], rec.truth);
        rec.log_loss[j] = to_log_loss(rec.loss[j], cfg.log_base, cfg.loss_floor, clamped);
        rec.regret[j] = rec.network_log_loss - rec.log_loss[j];
        ema[j] = update_ema_regret(ema[j], rec.regret[j], cfg.alpha);
      }
    }
    rec.ema_regret = ema;
    panel.append(std::move(rec));
  }
  return panel;
}

EpochPanel panel_from_regrets(const RegretTable& table, const TopicConfig& cfg) {
  const std::size_t nw = table.workers.size();
  if (table.regret.rows() != table.n_epochs() || table.regret.cols() != nw)
    throw validation_error("regret table misaligned");
  EpochPanel panel(table.workers);
  std::vector<double> ema(nw, kAbsent);
  for (std::size_t i = 0; i < table.n_epochs(); ++i) {
    EpochRecord rec;
    rec.epoch = table.epochs[i];
    rec.regret = table.regret.row(i);
    for (std::size_t j = 0; j < nw; ++j)
      if (is_present(rec.regret[j])) ema[j] = update_ema_regret(ema[j], rec.regret[j], cfg.alpha);
    rec.ema_regret = ema;
    panel.append(std::move(rec));
  }
  return panel;
}

}  // namespace fcomb::combine

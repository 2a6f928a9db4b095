#include "fcomb/trial.hpp"

#include "fcomb/combiner.hpp"
#include "fcomb/rng.hpp"

namespace fcomb::eval {

EpochPanel build_panel(const synth::ScenarioData& data, const TopicConfig& cfg) {
  if (const auto* t = std::get_if<InferenceTable>(&data.table)) return combine::roll_forward(*t, cfg);
  return combine::panel_from_regrets(std::get<RegretTable>(data.table), cfg);
}

features::BaselineResult build_trial_features(const synth::ScenarioData& data, const EpochPanel& panel,
                                              const TopicConfig& cfg, std::size_t test_begin) {
  const features::SpanPlan plan = features::SpanPlan::from_config(cfg);
  features::LagPolicy lags;
  lags.mode = cfg.use_lags ? features::LagMode::Auto : features::LagMode::None;
  lags.max_lag = cfg.max_lag;
  lags.confidence = cfg.lag_confidence;
  lags.fit_end = test_begin;
  const features::WorkerSideColumns* side = data.side ? &*data.side : nullptr;
  features::BaselineResult res = features::build_baseline_features(panel, plan, lags, cfg.epsilon, side);
  if (data.market) {
    const MarketSeries aligned = features::align_market(*data.market, panel.epoch_ids());
    features::attach_epoch_columns(res.matrix, features::build_market_features(aligned, plan));
  }
  res.matrix.check_availability();
  return res;
}

TrialResult evaluate_forecaster(const EpochPanel& panel, const features::BaselineResult& feats,
                                const TopicConfig& cfg, const TrialOptions& opts, std::uint64_t seed) {
  validate_config(cfg);
  const std::size_t T = panel.n_epochs();
  const auto n_test = static_cast<std::size_t>(cfg.n_test);
  const auto n_train = static_cast<std::size_t>(cfg.n_train);
  if (T < n_train + n_test)
    throw eval_error("panel has " + std::to_string(T) + " epochs; need n_train + n_test = " +
                     std::to_string(n_train + n_test));
  const std::size_t test_begin = T - n_test;
  const std::size_t W = panel.n_workers();
  const bool combine_inferences = panel.has_truth();

  TrialResult r;
  r.seed = seed;
  r.topic = cfg;
  r.options = opts;
  r.workers = panel.workers();
  r.lags = feats.lags;
  r.feature_names = feats.matrix.column_names();

  const Matrix targets = learn::build_targets(panel, cfg.target_kind, cfg.epsilon);
  std::optional<learn::Forecaster> f;
  if (opts.with_forecaster)
    f = learn::train_forecaster(panel, feats.matrix, cfg, opts.learner, test_begin, derive_seed(seed, "forecaster"));

  double implied_ema = kAbsent;
  const std::vector<double> no_history(W, kAbsent);
  for (std::size_t i = test_begin; i < T; ++i) {
    const EpochRecord& rec = panel.at(i);
    EpochResult e;
    e.epoch = rec.epoch;
    e.truth = rec.truth;
    e.inference = rec.inference;
    e.true_target = targets.row(i);
    e.naive = rec.network_inference;
    e.network = rec.network_inference;
    if (f) {
      e.forecast = learn::forecast_epoch(*f, feats.matrix, i);
      if (combine_inferences) {
        const EpochRecord& prev = panel.at(i - 1);
        const combine::WeightVector w =
            combine::weights_from_forecast(cfg.target_kind, e.forecast, prev.network_log_loss, cfg);
        e.weights = w.values;
        e.implied = combine::forecast_implied_inference(rec.inference, w);
        std::vector<double> ema = prev.ema_regret.empty() ? no_history : prev.ema_regret;
        ema.push_back(implied_ema);
        const double implied[] = {e.implied};
        e.network = combine::network_inference(rec.inference, implied, ema, cfg);
        if (is_present(rec.truth)) {
          const double ll = combine::to_log_loss(combine::epoch_loss(e.implied, rec.truth), cfg.log_base,
                                                 cfg.loss_floor);
          implied_ema = combine::update_ema_regret(implied_ema, rec.network_log_loss - ll, cfg.alpha);
        }
      }
    }
    r.epochs.push_back(std::move(e));
  }
  summarize(r);
  if (opts.diagnostics && f) r.diagnostics = context_awareness_report(r, opts.bootstrap_n, derive_seed(seed, "huber"));
  return r;
}

TrialResult run_trial(const synth::ScenarioData& data, const TopicConfig& cfg, const TrialOptions& opts,
                      std::uint64_t seed) {
  validate_config(cfg);
  const EpochPanel panel = build_panel(data, cfg);
  const std::size_t n_test = static_cast<std::size_t>(cfg.n_test);
  if (panel.n_epochs() <= n_test) throw eval_error("panel shorter than the test window");
  const features::BaselineResult feats = build_trial_features(data, panel, cfg, panel.n_epochs() - n_test);
  return evaluate_forecaster(panel, feats, cfg, opts, seed);
}

void summarize(TrialResult& r) {
  const std::size_t W = r.workers.size();
  const std::size_t n = r.epochs.size();
  r.worker_rmse.assign(W, kAbsent);
  r.implied_log_loss = r.naive_log_loss = r.network_log_loss = kAbsent;
  r.degenerate_epochs = 0;
  if (n == 0) return;

  const bool has_forecasts = !r.epochs.front().forecast.empty();
  if (has_forecasts) {
    for (std::size_t j = 0; j < W; ++j) {
      std::vector<double> p(n), t(n);
      bool any = false;
      for (std::size_t k = 0; k < n; ++k) {
        p[k] = r.epochs[k].forecast[j];
        t[k] = r.epochs[k].true_target[j];
        any = any || (is_present(p[k]) && is_present(t[k]));
      }
      if (any) r.worker_rmse[j] = rmse(p, t);
    }
  }

  std::vector<double> truth(n), naive(n), implied(n), network(n);
  bool any_truth = false;
  for (std::size_t k = 0; k < n; ++k) {
    truth[k] = r.epochs[k].truth;
    naive[k] = r.epochs[k].naive;
    implied[k] = r.epochs[k].implied;
    network[k] = r.epochs[k].network;
    any_truth = any_truth || is_present(truth[k]);
  }
  if (!any_truth) return;
  const LogBase base = r.topic.log_base;
  const double floor = r.topic.loss_floor;
  r.naive_log_loss = mean_log_loss(naive, truth, base, floor);
  r.network_log_loss = mean_log_loss(network, truth, base, floor);
  if (has_forecasts && is_present(implied.front()))
    r.implied_log_loss = mean_log_loss(implied, truth, base, floor, &r.degenerate_epochs);
}

std::vector<WorkerDiagnostics> context_awareness_report(const TrialResult& r, int bootstrap_n,
                                                        std::uint64_t seed) {
  std::vector<WorkerDiagnostics> out;
  for (std::size_t j = 0; j < r.workers.size(); ++j) {
    WorkerDiagnostics d;
    d.worker = r.workers[j].id;
    std::vector<double> x, y;
    for (const auto& e : r.epochs) {
      if (e.forecast.empty()) continue;
      if (is_present(e.true_target[j]) && is_present(e.forecast[j])) {
        x.push_back(e.true_target[j]);
        y.push_back(e.forecast[j]);
      }
    }
    if (!x.empty()) {
      d.median_true = median(x);
      d.median_pred = median(y);
    }
    try {
      HuberOptions ho;
      ho.bootstrap_n = bootstrap_n;
      ho.seed = derive_seed(seed, d.worker);
      d.fit = huber_fit(x, y, ho);
      d.positive = is_present(d.fit->slope_lo) ? d.fit->slope_lo > 0 : d.fit->slope > 0;
    } catch (const Error&) {
      // Too few points or constant truth: no slope to report.
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace fcomb::eval

#include "fcomb/forecaster.hpp"

#include <algorithm>
#include <set>

#include "fcomb/combiner.hpp"
#include "fcomb/rng.hpp"

namespace fcomb::learn {

using features::FeatureMatrix;

Matrix build_targets(const EpochPanel& panel, TargetKind kind, double epsilon) {
  const std::size_t T = panel.n_epochs();
  const std::size_t W = panel.n_workers();
  Matrix out(T, W);
  for (std::size_t i = 0; i < T; ++i) {
    const EpochRecord& rec = panel.at(i);
    switch (kind) {
      case TargetKind::Loss:
        for (std::size_t j = 0; j < W; ++j) out(i, j) = rec.log_loss[j];
        break;
      case TargetKind::Regret:
        for (std::size_t j = 0; j < W; ++j) out(i, j) = rec.regret[j];
        break;
      case TargetKind::ZScore: {
        const std::vector<double> z = combine::zscores(rec.regret, epsilon);
        for (std::size_t j = 0; j < W; ++j) out(i, j) = z[j];
        break;
      }
    }
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::erase_if(v, [](double x) { return is_absent(x); });
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

ModelBundle fit_bundle(const FeatureMatrix& X, std::span<const std::size_t> rows,
                       std::span<const double> y, std::vector<std::string> columns,
                       const LearnerConfig& lc, std::uint64_t seed) {
  ModelBundle b;
  b.columns = std::move(columns);
  b.medians.reserve(b.columns.size());
  for (const auto& name : b.columns) {
    const auto& col = X.column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (std::size_t r : rows) v.push_back(col.values[r]);
    b.medians.push_back(median_of(std::move(v)));
  }
  const DataMatrix D = b.design(X, rows);
  GbtHyperparams hp = lc.hp;
  if (lc.tune_trials > 0) hp = tune(D, y, lc.tune_trials, derive_seed(seed, "tune"), lc.min_train_rows / 2);
  b.model = fit_gbt(D, y, hp, seed, lc.min_train_rows);
  return b;
}

nlohmann::json bundle_json(const ModelBundle& b) {
  return {{"columns", b.columns}, {"medians", b.medians}, {"model", b.model.to_json()}};
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  ModelBundle b;
  b.columns = j.at("columns").get<std::vector<std::string>>();
  b.medians = j.at("medians").get<std::vector<double>>();
  b.model = GbtModel::from_json(j.at("model"));
  return b;
}

}  // namespace

DataMatrix ModelBundle::design(const FeatureMatrix& X, std::span<const std::size_t> rows) const {
  DataMatrix D(columns, rows.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& src = X.column(columns[c]).values;
    auto dst = D.column(c);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double v = src[rows[k]];
      dst[k] = is_present(v) ? v : medians[c];
    }
  }
  return D;
}

std::vector<double> ModelBundle::predict(const FeatureMatrix& X, std::span<const std::size_t> rows) const {
  return model.predict(design(X, rows));
}

const ModelBundle& Forecaster::model_for(const std::string& worker_id) const {
  auto it = per_worker.find(worker_id);
  return it != per_worker.end() ? it->second : global;
}

Forecaster train_forecaster(const EpochPanel& panel, const FeatureMatrix& X, const TopicConfig& cfg,
                            const LearnerConfig& lc, std::size_t test_begin, std::uint64_t seed) {
  const std::size_t T = panel.n_epochs();
  if (test_begin > T) throw learn_error("test window starts beyond the panel");
  const auto n_train = static_cast<std::size_t>(cfg.n_train);
  const std::size_t train_begin = test_begin >= n_train ? test_begin - n_train : 0;
  if (test_begin == train_begin) throw learn_error("empty training window");

  const Matrix targets = build_targets(panel, cfg.target_kind, cfg.epsilon);

  std::vector<std::size_t> rows;
  std::vector<double> y;
  std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<double>>> by_worker;
  for (std::size_t r : X.rows_in_epochs(train_begin, test_begin)) {
    const auto& k = X.keys()[r];
    const double t = targets(k.epoch_index, k.worker);
    if (is_absent(t)) continue;
    rows.push_back(r);
    y.push_back(t);
    by_worker[k.worker].first.push_back(r);
    by_worker[k.worker].second.push_back(t);
  }
  if (rows.size() < lc.min_train_rows)
    throw learn_error("global model has too few training rows (" + std::to_string(rows.size()) + ")");

  Forecaster f;
  f.structure = cfg.structure;
  f.target = cfg.target_kind;
  f.seed = seed;
  f.first_epoch = panel.at(train_begin).epoch;
  f.last_epoch = panel.at(test_begin - 1).epoch;

  const std::string id_col(features::kInfererIdColumn);
  std::vector<std::string> global_cols = features::prune_columns(X, rows, y, 0.0, lc.corr_cap);
  std::erase(global_cols, id_col);
  global_cols.insert(global_cols.begin(), id_col);
  f.global = fit_bundle(X, rows, y, std::move(global_cols), lc, derive_seed(seed, "global"));

  if (cfg.structure == Structure::PerInferer) {
    for (const auto& [worker, data] : by_worker) {
      const auto& [wrows, wy] = data;
      if (wrows.size() < lc.min_train_rows) continue;
      std::vector<std::string> cols = features::prune_columns(X, wrows, wy, 0.0, lc.corr_cap);
      std::erase(cols, id_col);
      if (cols.empty()) continue;
      const std::string& id = X.worker_ids()[worker];
      f.per_worker.emplace(id, fit_bundle(X, wrows, wy, std::move(cols), lc, derive_seed(seed, "worker:" + id)));
    }
  }
  return f;
}

std::vector<double> forecast_rows(const Forecaster& f, const FeatureMatrix& X,
                                  std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size(), kAbsent);
  std::map<const ModelBundle*, std::vector<std::size_t>> groups;  // bundle -> positions
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string& id = X.worker_ids()[X.keys()[rows[k]].worker];
    groups[&f.model_for(id)].push_back(k);
  }
  // Deterministic regardless of map ordering: each row's value depends only on its model.
  for (const auto& [bundle, positions] : groups) {
    std::vector<std::size_t> sub;
    sub.reserve(positions.size());
    for (std::size_t k : positions) sub.push_back(rows[k]);
    const std::vector<double> p = bundle->predict(X, sub);
    for (std::size_t m = 0; m < positions.size(); ++m) out[positions[m]] = p[m];
  }
  return out;
}

std::vector<double> forecast_epoch(const Forecaster& f, const FeatureMatrix& X, std::size_t epoch_index) {
  const std::vector<std::size_t> rows = X.rows_at_epoch(epoch_index);
  const std::vector<double> p = forecast_rows(f, X, rows);
  std::vector<double> out(X.worker_ids().size(), kAbsent);
  for (std::size_t k = 0; k < rows.size(); ++k) out[X.keys()[rows[k]].worker] = p[k];
  return out;
}

nlohmann::json Forecaster::to_json() const {
  nlohmann::json workers = nlohmann::json::object();
  for (const auto& [id, b] : per_worker) workers[id] = bundle_json(b);
  return {{"format", "fcomb-forecaster"},
          {"version", kForecasterFormatVersion},
          {"structure", std::string(to_string(structure))},
          {"target", std::string(to_string(target))},
          {"seed", seed},
          {"training_window", {first_epoch, last_epoch}},
          {"global", bundle_json(global)},
          {"per_worker", std::move(workers)}};
}

Forecaster Forecaster::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "fcomb-forecaster") throw learn_error("not a forecaster artifact");
  if (j.value("version", 0) != kForecasterFormatVersion)
    throw learn_error("unsupported forecaster format version");
  Forecaster f;
  f.structure = parse_structure(j.at("structure").get<std::string>());
  f.target = parse_target_kind(j.at("target").get<std::string>());
  f.seed = j.at("seed").get<std::uint64_t>();
  f.first_epoch = j.at("training_window").at(0).get<int>();
  f.last_epoch = j.at("training_window").at(1).get<int>();
  f.global = bundle_from_json(j.at("global"));
  for (const auto& [id, jb] : j.at("per_worker").items()) f.per_worker.emplace(id, bundle_from_json(jb));
  return f;
}

}  // namespace fcomb::learn

#include "fcomb/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "fcomb/metrics.hpp"
#include "fcomb/rng.hpp"

namespace fcomb::eval {

std::vector<features::SpanPlan> SweepGrid::default_span_sets() {
  const std::vector<std::vector<int>> sets{{3}, {7}, {14}, {3, 7}, {3, 14}, {7, 14}, {3, 30}, {14, 30}, {3, 14, 60}};
  std::vector<features::SpanPlan> out;
  for (const auto& s : sets) {
    features::SpanPlan p;
    p.uniform = s;
    out.push_back(p);
  }
  return out;
}

std::size_t SweepGrid::n_cells() const {
  return targets.size() * structures.size() * span_sets.size() * std::max<std::size_t>(1, n_trains.size());
}

void SweepGrid::validate() const {
  if (targets.empty() || structures.empty() || span_sets.empty()) throw validation_error("sweep grid is empty");
  for (const auto& s : span_sets) s.validate();
  for (int n : n_trains)
    if (n < 1) throw validation_error("sweep n_train must be positive");
}

std::string span_csv_label(const features::SpanPlan& plan) {
  std::string out;
  auto join = [&out](auto begin, auto end) {
    for (auto it = begin; it != end; ++it) {
      if (it != begin) out += '-';
      out += std::to_string(*it);
    }
  };
  if (plan.adaptive) {
    out = "adaptive:";
    join(plan.adaptive->begin(), plan.adaptive->end());
  } else {
    join(plan.uniform.begin(), plan.uniform.end());
  }
  return out;
}

features::SpanPlan parse_span_csv_label(const std::string& label) {
  std::string body = label;
  const bool adaptive = body.rfind("adaptive:", 0) == 0;
  if (adaptive) body = body.substr(9);
  std::vector<int> spans;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, '-')) {
    try {
      std::size_t used = 0;
      spans.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "bad span label '" + label + "'");
    }
  }
  features::SpanPlan p;
  if (adaptive) {
    if (spans.size() != 3) throw Error(ErrorCode::Parse, "adaptive span label needs three spans");
    p = features::SpanPlan::adaptive_plan(spans[0], spans[1], spans[2]);
  } else {
    p.uniform = spans;
  }
  p.validate();
  return p;
}

const SweepCell& SweepTable::cell(TargetKind t, Structure s, const features::SpanPlan& spans, int n_train) const {
  for (const auto& c : cells)
    if (c.target == t && c.structure == s && c.spans == spans && c.n_train == n_train) return c;
  throw eval_error("no such sweep cell");
}

const SweepCell& SweepTable::best(Structure s) const {
  const SweepCell* best = nullptr;
  for (const auto& c : cells)
    if (c.structure == s && (!best || c.median < best->median)) best = &c;
  if (!best) throw eval_error("no sweep cells for structure");
  return *best;
}

void SweepTable::write_csv(std::ostream& out) const {
  out << "target,structure,spans,n_train,trial,seed,mean_log_loss,naive_log_loss\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& c : cells) {
    for (std::size_t k = 0; k < c.log_loss.size(); ++k) {
      out << to_string(c.target) << ',' << to_string(c.structure) << ',' << span_csv_label(c.spans) << ','
          << c.n_train << ',' << k << ',' << seeds[k] << ',' << num(c.log_loss[k]) << ',' << num(naive[k])
          << '\n';
    }
  }
}

nlohmann::json SweepTable::summary_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cells) {
    cj.push_back({{"target", std::string(to_string(c.target))},
                  {"structure", std::string(to_string(c.structure))},
                  {"spans", span_csv_label(c.spans)},
                  {"n_train", c.n_train},
                  {"median_log_loss", c.median},
                  {"median_se", c.median_se}});
  }
  nlohmann::json j{{"n_repeats", n_repeats}, {"cells", std::move(cj)}};
  if (!naive.empty()) j["naive_median_log_loss"] = median(naive);
  return j;
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FORECAST_COMBINE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct RepeatResult {
  std::vector<double> cell_loss;  // cell order
  double naive = kAbsent;
};

}  // namespace

SweepTable run_sweep(const DataSource& source, const TopicConfig& base, const SweepGrid& grid,
                     const SweepOptions& opts) {
  grid.validate();
  validate_config(base);
  if (opts.n_repeats < 1) throw validation_error("sweep needs at least one repeat");

  const std::vector<int> n_trains = grid.n_trains.empty() ? std::vector<int>{base.n_train} : grid.n_trains;
  SweepTable table;
  table.n_repeats = opts.n_repeats;
  // Cell order: span set, n_train, target, structure.
  for (const auto& spans : grid.span_sets)
    for (int nt : n_trains)
      for (TargetKind t : grid.targets)
        for (Structure s : grid.structures) {
          SweepCell c;
          c.target = t;
          c.structure = s;
          c.spans = spans;
          c.n_train = nt;
          c.log_loss.assign(opts.n_repeats, kAbsent);
          table.cells.push_back(std::move(c));
        }
  table.naive.assign(opts.n_repeats, kAbsent);
  table.seeds.resize(opts.n_repeats);
  for (std::size_t k = 0; k < opts.n_repeats; ++k) table.seeds[k] = opts.base_seed + k;

  auto run_repeat = [&](std::size_t k) {
    const std::uint64_t seed = table.seeds[k];
    const synth::ScenarioData data = source(seed);
    const EpochPanel panel = build_panel(data, base);
    const std::size_t test_begin = panel.n_epochs() - static_cast<std::size_t>(base.n_test);
    std::size_t idx = 0;
    for (const auto& spans : grid.span_sets) {
      TopicConfig cfg = base;
      cfg.span_set = spans.uniform;
      cfg.adaptive_spans = spans.adaptive;
      const features::BaselineResult feats = build_trial_features(data, panel, cfg, test_begin);
      for (int nt : n_trains) {
        cfg.n_train = nt;
        for (TargetKind t : grid.targets) {
          for (Structure s : grid.structures) {
            cfg.target_kind = t;
            cfg.structure = s;
            const TrialResult r = evaluate_forecaster(panel, feats, cfg, opts.trial, seed);
            table.cells[idx++].log_loss[k] = r.implied_log_loss;
            table.naive[k] = r.naive_log_loss;
          }
        }
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_thread_count(opts.threads), opts.n_repeats));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < opts.n_repeats; k = next++) {
      try {
        run_repeat(k);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& c : table.cells) {
    c.median = median(c.log_loss);
    c.median_se = bootstrap_median_se(c.log_loss, 1000, derive_seed(opts.base_seed, "median_se"));
  }
  return table;
}

}  // namespace fcomb::eval

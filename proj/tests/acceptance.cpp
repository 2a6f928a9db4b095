// Acceptance suite: one PASS/FAIL line per criterion.
//
//   fcomb_acceptance            run every criterion
//   fcomb_acceptance 3 7        run the listed criteria
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fcomb/combiner.hpp"
#include "fcomb/config_io.hpp"
#include "fcomb/features.hpp"
#include "fcomb/gbt.hpp"
#include "fcomb/metrics.hpp"
#include "fcomb/sweep.hpp"
#include "fcomb/synth.hpp"
#include "fcomb/trial.hpp"

#ifndef FCOMB_CLI_PATH
#define FCOMB_CLI_PATH "fcomb"
#endif

using namespace fcomb;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// 1. Formula suite
// ---------------------------------------------------------------------------

Outcome formulas() {
  Outcome o;
  const TopicConfig cfg;
  o.require(combine::weight_fn(cfg.c, cfg.p, cfg.c) == cfg.p / 2, "weight_fn(c) == p/2 exactly");

  bool monotone = true;
  double prev = combine::weight_fn(-5.0, cfg.p, cfg.c);
  for (int k = 1; k < 10000; ++k) {
    const double w = combine::weight_fn(-5.0 + 10.0 * k / 9999.0, cfg.p, cfg.c);
    monotone = monotone && w > prev;
    prev = w;
  }
  o.require(monotone, "strictly increasing on a 1e4-point grid");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  double worst_implied = 0, worst_network = 0, worst_shift = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 12);
    std::vector<double> inf(n), fc(n), ema(n + 2), imp(2);
    for (std::size_t j = 0; j < n; ++j) {
      inf[j] = 1000 + 25 * n01(rng);
      fc[j] = n01(rng);
    }
    for (auto& v : ema) v = 0.4 * n01(rng);
    for (auto& v : imp) v = 1000 + 25 * n01(rng);

    // Eq. 3 against a direct sum.
    const auto w = combine::weights_from_forecast(TargetKind::ZScore, fc, 0.0, cfg);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double wj = cfg.p / (std::exp(-cfg.p * (fc[j] + cfg.delta_z - cfg.c)) + 1.0);
      num += wj * inf[j];
      den += wj;
    }
    const double got = combine::forecast_implied_inference(inf, w);
    worst_implied = std::max(worst_implied, std::abs(got - num / den) / std::abs(num / den));

    // Network combination against a direct sum over normalized EMA regrets.
    double sum = 0, sq = 0;
    for (double v : ema) sum += v;
    const double m = sum / static_cast<double>(ema.size());
    for (double v : ema) sq += (v - m) * (v - m);
    const double sd = std::sqrt(sq / static_cast<double>(ema.size()));
    std::vector<double> all = inf;
    all.insert(all.end(), imp.begin(), imp.end());
    num = den = 0;
    for (std::size_t l = 0; l < all.size(); ++l) {
      const double x = ema[l] / (sd + cfg.epsilon);
      const double wl = cfg.p / (std::exp(-cfg.p * (x - cfg.c)) + 1.0);
      num += wl * all[l];
      den += wl;
    }
    const double net = combine::network_inference(inf, imp, ema, cfg);
    worst_network = std::max(worst_network, std::abs(net - num / den) / std::abs(num / den));

    std::vector<double> shifted = fc;
    for (auto& v : shifted) v += 7.0;
    const auto za = combine::zscores(fc, cfg.epsilon), zb = combine::zscores(shifted, cfg.epsilon);
    for (std::size_t j = 0; j < n; ++j) worst_shift = std::max(worst_shift, std::abs(za[j] - zb[j]));
  }
  o.require(worst_implied <= 1e-12, fmt("implied vs sum oracle rel err %.2e <= 1e-12", worst_implied));
  o.require(worst_network <= 1e-12, fmt("network vs sum oracle rel err %.2e <= 1e-12", worst_network));
  o.require(worst_shift <= 1e-12, fmt("z-score shift invariance %.2e <= 1e-12", worst_shift));
  return o;
}

// ---------------------------------------------------------------------------
// 2. Naive == network without forecasters
// ---------------------------------------------------------------------------

Outcome naive_equals_network() {
  Outcome o;
  const TopicConfig cfg;
  const auto data = synth::generate_scenario(synth::ScenarioConfig{}, 1000, 2);
  const auto& table = std::get<InferenceTable>(data.table);
  const EpochPanel panel = combine::roll_forward(table, cfg);
  std::size_t mismatches = 0;
  std::vector<double> ema(panel.n_workers(), kAbsent);
  for (std::size_t i = 0; i < panel.n_epochs(); ++i) {
    const auto& rec = panel.at(i);
    const double naive = combine::naive_network_inference(rec.inference, ema, cfg);
    const double network = combine::network_inference(rec.inference, {}, ema, cfg);
    if (!bit_equal(naive, network) || !bit_equal(naive, rec.network_inference)) ++mismatches;
    ema = rec.ema_regret;
  }
  o.require(panel.n_epochs() == 1000, fmt("%zu epochs", panel.n_epochs()));
  o.require(mismatches == 0, fmt("%zu bit mismatches", mismatches));

  // Same property end to end through a naive-only trial.
  TopicConfig small = cfg;
  small.n_train = 900;
  eval::TrialOptions opts;
  opts.with_forecaster = false;
  const auto r = eval::run_trial(data, small, opts, 2);
  std::size_t trial_mismatch = 0;
  for (const auto& e : r.epochs) trial_mismatch += !bit_equal(e.naive, e.network);
  o.require(trial_mismatch == 0, fmt("trial test window %zu mismatches", trial_mismatch));
  return o;
}

// ---------------------------------------------------------------------------
// 3. Sinusoidal benchmark
// ---------------------------------------------------------------------------

constexpr int kBenchSeeds = 20;

eval::TrialResult regret_trial(synth::ScenarioKind kind, std::uint64_t seed, Structure structure, bool lags) {
  const cli::RunConfig rc = cli::default_run_config(kind);
  TopicConfig cfg = rc.topic;
  cfg.structure = structure;
  cfg.use_lags = lags;
  const auto data = synth::generate_scenario(rc.scenario, static_cast<std::size_t>(cfg.n_train + cfg.n_test), seed);
  eval::TrialOptions opts;
  opts.learner = rc.learner;
  return eval::run_trial(data, cfg, opts, seed);
}

Outcome sinusoidal() {
  Outcome o;
  std::vector<double> per0, per1;
  int per_better = 0;
  for (int s = 0; s < kBenchSeeds; ++s) {
    const auto per = regret_trial(synth::ScenarioKind::Sine, static_cast<std::uint64_t>(s), Structure::PerInferer, true);
    const auto glob = regret_trial(synth::ScenarioKind::Sine, static_cast<std::uint64_t>(s), Structure::Global, true);
    per0.push_back(per.worker_rmse[0]);
    per1.push_back(per.worker_rmse[1]);
    const double p = 0.5 * (per.worker_rmse[0] + per.worker_rmse[1]);
    const double g = 0.5 * (glob.worker_rmse[0] + glob.worker_rmse[1]);
    per_better += p <= g;
  }
  const double m0 = mean(per0), m1 = mean(per1);
  o.require(m0 >= 0.55 && m0 <= 0.80, fmt("per-inferer RMSE allo0 %.4f in [0.55, 0.80]", m0));
  o.require(m1 >= 0.55 && m1 <= 0.80, fmt("allo1 %.4f in [0.55, 0.80]", m1));
  o.require(per_better >= 14, fmt("per-inferer <= global in %d/%d seeds (need >= 14)", per_better, kBenchSeeds));
  return o;
}

// ---------------------------------------------------------------------------
// 4. Autocorrelation ablation
// ---------------------------------------------------------------------------

Outcome lag_ablation() {
  Outcome o;
  std::vector<double> with, without;
  int wins = 0;
  for (int s = 0; s < kBenchSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const double a = regret_trial(synth::ScenarioKind::Periodic, seed, Structure::PerInferer, true).worker_rmse[0];
    const double b = regret_trial(synth::ScenarioKind::Periodic, seed, Structure::PerInferer, false).worker_rmse[0];
    with.push_back(a);
    without.push_back(b);
    wins += a < b;
  }
  const double mw = mean(with), mo = mean(without);
  o.require(wins >= 18, fmt("with lags better in %d/%d seeds (need >= 18)", wins, kBenchSeeds));
  o.require(mw >= 0.28 && mw <= 0.42, fmt("with-lag RMSE %.4f in [0.28, 0.42]", mw));
  o.require(mo >= 0.42 && mo <= 0.55, fmt("without-lag RMSE %.4f in [0.42, 0.55]", mo));
  return o;
}

// ---------------------------------------------------------------------------
// 5. Contextual single trials
// ---------------------------------------------------------------------------

Outcome contextual_trials() {
  Outcome o;
  const cli::RunConfig rc = cli::default_run_config(synth::ScenarioKind::Contextual);
  eval::TrialOptions opts;
  opts.learner = rc.learner;
  int wins = 0;
  std::vector<double> gaps;
  for (int s = 0; s < kBenchSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto data =
        synth::generate_scenario(rc.scenario, static_cast<std::size_t>(rc.topic.n_train + rc.topic.n_test), seed);
    const auto r = eval::run_trial(data, rc.topic, opts, seed);
    const double gap = r.naive_log_loss - r.implied_log_loss;
    gaps.push_back(gap);
    wins += gap >= 0.25;
  }
  std::sort(gaps.begin(), gaps.end());
  o.require(wins >= 18, fmt("naive - implied >= 0.25 in %d/%d seeds (need >= 18)", wins, kBenchSeeds));
  o.detail += fmt(" (gap min %.3f median %.3f max %.3f)", gaps.front(), eval::median(gaps), gaps.back());
  return o;
}

// ---------------------------------------------------------------------------
// 6. Sweep ordering
// ---------------------------------------------------------------------------

Outcome sweep_ordering() {
  Outcome o;
  cli::RunConfig rc = cli::default_run_config(synth::ScenarioKind::Contextual);
  TopicConfig cfg = rc.topic;
  cfg.n_test = rc.sweep.n_test;
  const std::size_t n = static_cast<std::size_t>(cfg.n_train + cfg.n_test);
  const synth::ScenarioConfig sc = rc.scenario;
  eval::SweepOptions so;
  so.trial.learner = rc.learner;
  so.n_repeats = 30;
  so.base_seed = 0;
  const eval::SweepTable t =
      eval::run_sweep([&](std::uint64_t seed) { return synth::generate_scenario(sc, n, seed); }, cfg, rc.sweep.grid, so);
  {
    std::ofstream csv("acceptance_sweep.csv");
    t.write_csv(csv);
  }

  auto pooled = [&](TargetKind k, Structure s) {
    std::vector<double> v;
    for (const auto& c : t.cells)
      if (c.target == k && c.structure == s) v.insert(v.end(), c.log_loss.begin(), c.log_loss.end());
    return eval::median(v);
  };
  const double z = pooled(TargetKind::ZScore, Structure::PerInferer);
  const double r = pooled(TargetKind::Regret, Structure::PerInferer);
  const double l = pooled(TargetKind::Loss, Structure::PerInferer);
  o.require(z < r && r < l, fmt("per-inferer medians ZSCORE %.4f < REGRET %.4f < LOSS %.4f", z, r, l));

  features::SpanPlan s3;
  s3.uniform = {3};
  const double z3 = t.cell(TargetKind::ZScore, Structure::PerInferer, s3, cfg.n_train).median;
  const auto& best = t.best(Structure::PerInferer);
  o.require(z3 - best.median <= 0.05, fmt("ZSCORE [3] %.4f within 0.05 of best %s %s %.4f", z3,
                                          std::string(to_string(best.target)).c_str(),
                                          eval::span_csv_label(best.spans).c_str(), best.median));

  std::string beats;
  bool only_loss = true;
  for (TargetKind k : {TargetKind::Loss, TargetKind::Regret, TargetKind::ZScore}) {
    const double g = pooled(k, Structure::Global), p = pooled(k, Structure::PerInferer);
    const bool global_wins = g < p;
    only_loss = only_loss && (global_wins == (k == TargetKind::Loss));
    beats += fmt("%s global %.4f vs per %.4f, ", std::string(to_string(k)).c_str(), g, p);
  }
  beats.resize(beats.size() - 2);
  o.require(only_loss, "global beats per-inferer only for LOSS (" + beats + ")");
  o.detail += fmt(" (naive median %.4f)", eval::median(t.naive));
  return o;
}

// ---------------------------------------------------------------------------
// 7. Statistical generators
// ---------------------------------------------------------------------------

Outcome generators() {
  Outcome o;
  const synth::GbmSpec spec;
  const auto segs = synth::sample_regime_segments(10000, spec, 7);
  std::map<synth::Regime, double> freq;
  for (const auto& s : segs) freq[s.label] += 1e-4;
  const double fd = freq[synth::Regime::Down], fn = freq[synth::Regime::None], fu = freq[synth::Regime::Up];
  o.require(std::abs(fd - 0.2) <= 0.05 && std::abs(fn - 0.6) <= 0.05 && std::abs(fu - 0.2) <= 0.05,
            fmt("regime frequencies %.3f/%.3f/%.3f vs 0.2/0.6/0.2 +-0.05", fd, fn, fu));

  const auto path = synth::gen_gbm_truth(100000, spec, 7);
  std::vector<double> none;
  for (std::size_t t = 1; t < path.price.size(); ++t)
    if (path.regime.label[t] == synth::Regime::None) none.push_back(path.log_return[t]);
  const double m = mean(none);
  double ss = 0;
  for (double v : none) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(none.size() - 1));
  o.require(std::abs(sd - 0.01) <= 0.002, fmt("NONE-regime return std %.5f within 0.01 +-20%%", sd));

  const cli::RunConfig rc = cli::default_run_config(synth::ScenarioKind::Sine);
  const RegretTable t = synth::gen_sinusoidal(1100, rc.scenario.sines, rc.scenario.n_random, 7);
  std::string peaks;
  bool ok = true;
  for (std::size_t j = 0; j < rc.scenario.sines.size(); ++j) {
    const int period = rc.scenario.sines[j].period;
    const auto r = features::acf(t.regret.column(j), period + period / 2);
    std::size_t best = 2;
    for (std::size_t k = 2; k < r.size(); ++k)
      if (r[k] > r[best]) best = k;
    ok = ok && std::abs(static_cast<int>(best) - period) <= 1;
    peaks += fmt("%s%zu (period %d)", j ? ", " : "", best, period);
  }
  o.require(ok, "sinusoidal ACF peaks at " + peaks);
  return o;
}

// ---------------------------------------------------------------------------
// 8. Stump oracle
// ---------------------------------------------------------------------------

struct Stump {
  std::size_t feature = 0;
  double threshold = 0;
  double left = 0, right = 0;
  double sse = INFINITY;
};

// Every feature, every cut between consecutive distinct values.
Stump exhaustive_stump(const learn::DataMatrix& X, const std::vector<double>& y) {
  Stump best;
  const std::size_t n = X.n_rows();
  for (std::size_t f = 0; f < X.n_cols(); ++f) {
    std::vector<double> values(X.column(f).begin(), X.column(f).end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double thr = 0.5 * (values[k] + values[k + 1]);
      double sl = 0, sr = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t r = 0; r < n; ++r)
        if (X(r, f) <= thr) {
          sl += y[r];
          ++nl;
        } else {
          sr += y[r];
          ++nr;
        }
      const double ml = sl / static_cast<double>(nl), mr = sr / static_cast<double>(nr);
      double sse = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = y[r] - (X(r, f) <= thr ? ml : mr);
        sse += d * d;
      }
      if (sse < best.sse) best = {f, thr, ml, mr, sse};
    }
  }
  return best;
}

Outcome stump_oracle() {
  Outcome o;
  const double step = 0.01;  // grid spacing; 150 grid points per feature
  int matched = 0;
  const int n_datasets = 25;
  double worst_leaf = 0, worst_thr = 0;
  for (int d = 0; d < n_datasets; ++d) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(1000 + d));
    std::uniform_int_distribution<int> grid(0, 149);
    std::normal_distribution<double> n01;
    learn::DataMatrix X({"a", "b", "c"}, 200);
    std::vector<double> y(200);
    const std::size_t informative = static_cast<std::size_t>(d % 3);
    for (std::size_t r = 0; r < 200; ++r) {
      for (std::size_t f = 0; f < 3; ++f) X(r, f) = step * grid(rng);
      y[r] = (X(r, informative) > 0.6 ? 2.0 : -1.0) + 0.5 * X(r, (informative + 1) % 3) + 0.3 * n01(rng);
    }
    learn::GbtHyperparams hp;
    hp.max_depth = 1;
    hp.n_trees = 1;
    hp.learning_rate = 1.0;
    hp.min_samples_leaf = 1;
    hp.row_subsample = 1.0;
    hp.feature_subsample = 1.0;
    const learn::GbtModel m = learn::fit_gbt(X, y, hp, 3, 1);
    const Stump s = exhaustive_stump(X, y);
    const auto& nodes = m.trees().at(0).nodes;
    if (nodes.size() != 3) continue;
    const double left = m.base_score() + nodes[static_cast<std::size_t>(nodes[0].left)].value;
    const double right = m.base_score() + nodes[static_cast<std::size_t>(nodes[0].right)].value;
    const double dl = std::max(std::abs(left - s.left), std::abs(right - s.right));
    const double dt = std::abs(nodes[0].threshold - s.threshold);
    worst_leaf = std::max(worst_leaf, dl);
    worst_thr = std::max(worst_thr, dt);
    matched += static_cast<std::size_t>(nodes[0].feature) == s.feature && dt <= step && dl <= 1e-10;
  }
  o.require(matched == n_datasets, fmt("%d/%d datasets match the exhaustive stump (threshold diff %.3g <= %.2f, "
                                       "leaf diff %.2e <= 1e-10)",
                                       matched, n_datasets, worst_thr, step, worst_leaf));
  return o;
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("fcomb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  bool ran = true;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + FCOMB_CLI_PATH + "\" bench contextual --seed 7 --out \"" +
                            (root / run).string() + "\" > /dev/null";
    ran = ran && std::system(cmd.c_str()) == 0;
  }
  o.require(ran, "bench contextual --seed 7 ran twice");
  bool same = ran;
  std::size_t files = 0;
  if (ran)
    for (const auto& e : fs::directory_iterator(root / "a")) {
      ++files;
      same = same && slurp(e.path()) == slurp(root / "b" / e.path().filename());
    }
  fs::remove_all(root);
  o.require(same && files >= 4, fmt("%zu output files byte-identical", files));

  const cli::RunConfig rc = cli::default_run_config(synth::ScenarioKind::Contextual);
  TopicConfig cfg = rc.topic;
  cfg.n_train = 400;
  cfg.n_test = 60;
  eval::SweepGrid grid;
  grid.span_sets = {features::SpanPlan{}, features::SpanPlan::adaptive_plan(3, 7, 14)};
  eval::SweepOptions so;
  so.trial.learner = rc.learner;
  so.trial.learner.hp.n_trees = 60;
  so.n_repeats = 3;
  so.base_seed = 100;
  const eval::DataSource src = [&](std::uint64_t seed) { return synth::generate_scenario(rc.scenario, 460, seed); };
  const unsigned max_threads = std::max(4u, std::thread::hardware_concurrency());
  std::ostringstream a, b;
  so.threads = 1;
  eval::run_sweep(src, cfg, grid, so).write_csv(a);
  so.threads = max_threads;
  eval::run_sweep(src, cfg, grid, so).write_csv(b);
  o.require(a.str() == b.str(), fmt("sweep CSV identical with 1 and %u threads", max_threads));
  return o;
}

// ---------------------------------------------------------------------------
// 10. Huber fit
// ---------------------------------------------------------------------------

Outcome huber() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;

  // Recovery: 10% of points replaced by +100 at the high-leverage end.
  {
    const std::size_t n = 200;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 10.0 * static_cast<double>(i) / static_cast<double>(n - 1);
      y[i] = x[i] + 0.5 * n01(rng);
    }
    for (std::size_t i = n - n / 10; i < n; ++i) y[i] = 100.0;
    eval::HuberOptions ho;
    ho.bootstrap_n = 0;
    const double hs = eval::huber_fit(x, y, ho).slope;
    const double os = eval::ols_fit(x, y).slope;
    o.require(std::abs(hs - 1.0) <= 0.1, fmt("Huber slope %.4f within 1 +- 0.1", hs));
    o.require(std::abs(os - 1.0) > 0.5, fmt("OLS slope %.4f deviates by > 0.5", os));
  }

  // Coverage: outliers at random positions, 1-sigma bootstrap band.
  int covered = 0;
  const int repeats = 100;
  for (int rep = 0; rep < repeats; ++rep) {
    const std::size_t n = 100;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 10.0 * u01(rng);
      y[i] = x[i] + n01(rng);
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < n / 10; ++k) y[idx[k]] += 100.0;
    eval::HuberOptions ho;
    ho.bootstrap_n = 1000;
    ho.seed = static_cast<std::uint64_t>(rep);
    const auto f = eval::huber_fit(x, y, ho);
    covered += f.slope_lo <= 1.0 && 1.0 <= f.slope_hi;
  }
  o.require(covered >= 60, fmt("1-sigma bootstrap band covers the true slope in %d/%d repeats (need >= 60)", covered,
                               repeats));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "formula suite", 1.0, formulas},
      {2, "naive equals network without forecasters", 5.0, naive_equals_network},
      {3, "sinusoidal benchmark", 600.0, sinusoidal},
      {4, "autocorrelation lag ablation", 600.0, lag_ablation},
      {5, "contextual single trials", 900.0, contextual_trials},
      {6, "sweep ordering", 4 * 3600.0, sweep_ordering},
      {7, "statistical generators", 30.0, generators},
      {8, "stump oracle", 5.0, stump_oracle},
      {9, "determinism", 1200.0, determinism},
      {10, "Huber fit", 30.0, huber},
  };
  std::vector<int> wanted;
  for (int a = 1; a < argc; ++a) wanted.push_back(std::atoi(argv[a]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    o.require(secs < c.budget_s, fmt("%.2fs < %.0fs", secs, c.budget_s));
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

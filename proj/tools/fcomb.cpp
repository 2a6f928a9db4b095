// fcomb: benchmark, sweep, replay and report driver.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fcomb/config_io.hpp"
#include "fcomb/replay.hpp"
#include "fcomb/report.hpp"
#include "fcomb/sweep.hpp"
#include "fcomb/synth.hpp"
#include "fcomb/trial.hpp"

namespace fs = std::filesystem;
using namespace fcomb;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::string out = "out";
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Base seed (overrides topic.seed)");
  cmd->add_option("--repeats", c.repeats, "Number of repeated trials");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

cli::RunConfig resolve_config(const Common& c, cli::RunConfig base) {
  cli::RunConfig cfg = c.config.empty() ? base : cli::load_run_config(c.config, base);
  if (c.seed) cfg.topic.seed = *c.seed;
  cli::validate(cfg);
  return cfg;
}

eval::TrialOptions trial_options(const cli::RunConfig& cfg) {
  eval::TrialOptions o;
  o.learner = cfg.learner;
  o.diagnostics = cfg.diagnostics;
  o.bootstrap_n = cfg.bootstrap_n;
  return o;
}

void run_trials(const cli::RunConfig& cfg, const std::function<synth::ScenarioData(std::uint64_t)>& source,
                std::size_t repeats, const fs::path& out) {
  const cli::Provenance prov{cli::config_hash(cfg), cfg.topic.seed};
  const nlohmann::json cfg_json = cli::to_json(cfg);
  std::vector<eval::TrialResult> runs;
  for (std::size_t k = 0; k < repeats; ++k) {
    const std::uint64_t seed = cfg.topic.seed + k;
    runs.push_back(eval::run_trial(source(seed), cfg.topic, trial_options(cfg), seed));
  }
  fs::create_directories(out);
  cli::write_trial_csvs(runs.front(), out, prov);
  cli::write_json(cli::trial_summary(runs.front(), prov, cfg_json), out / "summary.json");
  if (repeats > 1) cli::write_repeats_csv(runs, out / "repeats.csv", prov);
  cli::save_run_config(cfg, out / "config.json");

  const auto& r = runs.front();
  std::printf("config %s seed %llu\n", prov.config_hash.c_str(), static_cast<unsigned long long>(prov.seed));
  if (is_present(r.implied_log_loss))
    std::printf("mean log loss: implied %.4f naive %.4f network %.4f\n", r.implied_log_loss, r.naive_log_loss,
                r.network_log_loss);
  for (std::size_t j = 0; j < r.workers.size(); ++j)
    if (is_present(r.worker_rmse[j])) std::printf("  %-8s forecast rmse %.4f\n", r.workers[j].id.c_str(), r.worker_rmse[j]);
  std::printf("wrote %s\n", out.string().c_str());
}

void run_sweep_cmd(cli::RunConfig cfg, const eval::DataSource& source, std::size_t repeats, unsigned threads,
                   const fs::path& out) {
  cfg.topic.n_test = cfg.sweep.n_test;
  cfg.sweep.repeats = repeats;
  cli::validate(cfg);
  const cli::Provenance prov{cli::config_hash(cfg), cfg.topic.seed};
  eval::SweepOptions so;
  so.trial = trial_options(cfg);
  so.trial.diagnostics = false;
  so.n_repeats = repeats;
  so.base_seed = cfg.topic.seed;
  so.threads = threads;
  const eval::SweepTable t = eval::run_sweep(source, cfg.topic, cfg.sweep.grid, so);
  fs::create_directories(out);
  cli::write_sweep(t, out, prov, cli::to_json(cfg));
  cli::save_run_config(cfg, out / "config.json");
  std::printf("config %s seed %llu: %zu cells x %zu repeats\n", prov.config_hash.c_str(),
              static_cast<unsigned long long>(prov.seed), t.cells.size(), repeats);
  for (const auto& c : t.cells)
    std::printf("  %-6s %-11s %-12s n_train=%d median %.4f\n", std::string(to_string(c.target)).c_str(),
                std::string(to_string(c.structure)).c_str(), eval::span_csv_label(c.spans).c_str(), c.n_train,
                c.median);
  std::printf("wrote %s\n", out.string().c_str());
}

std::size_t data_length(const cli::RunConfig& cfg, int n_test) {
  int n_train = cfg.topic.n_train;
  for (int n : cfg.sweep.grid.n_trains) n_train = std::max(n_train, n);
  return static_cast<std::size_t>(n_train + n_test);
}

int exit_code(ErrorCode c) { return c == ErrorCode::Validation || c == ErrorCode::Parse ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast-combination benchmarks, sweeps and replays"};
  app.require_subcommand(1);

  Common bench_opts, sweep_opts, replay_opts, export_opts;
  std::string bench_kind, export_kind, sweep_kind = "contextual";

  auto* bench = app.add_subcommand("bench", "Run one benchmark trial (or --repeats trials)");
  bench->add_option("scenario", bench_kind, "sine | periodic | contextual")
      ->required()
      ->check(CLI::IsMember({"sine", "periodic", "contextual"}));
  add_common(bench, bench_opts);

  auto* sweep = app.add_subcommand("sweep", "Repeat trials over targets x structures x span sets");
  sweep->add_option("--scenario", sweep_kind, "Synthetic scenario")
      ->check(CLI::IsMember({"sine", "periodic", "contextual"}))
      ->capture_default_str();
  sweep->add_option("--threads", sweep_opts.threads, "Worker threads (default FORECAST_COMBINE_THREADS or all cores)");
  add_common(sweep, sweep_opts);

  cli::ReplayPaths paths;
  std::string market, rewards;
  bool replay_sweep = false;
  auto* replay = app.add_subcommand("replay", "Run a trial or sweep on recorded CSV data");
  replay->add_option("--inferences", paths.inferences, "epoch,worker_id,inference")->required()->check(CLI::ExistingFile);
  replay->add_option("--truth", paths.truth, "epoch,truth")->required()->check(CLI::ExistingFile);
  replay->add_option("--market", market, "epoch,open,high,low,close,volume")->check(CLI::ExistingFile);
  replay->add_option("--rewards", rewards, "epoch,worker_id,reward,score")->check(CLI::ExistingFile);
  replay->add_flag("--sweep", replay_sweep, "Run the configured sweep instead of one trial");
  replay->add_option("--threads", replay_opts.threads, "Worker threads for --sweep");
  add_common(replay, replay_opts);

  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Render trial or sweep outputs as SVG");
  report->add_option("--input", report_in, "Directory written by bench, sweep or replay")->required();
  report->add_option("--out", report_out, "Directory for SVG files (default: the input directory)");

  auto* exp = app.add_subcommand("export", "Write a synthetic panel in the replay CSV schema");
  exp->add_option("scenario", export_kind, "contextual")->required()->check(CLI::IsMember({"contextual"}));
  add_common(exp, export_opts);

  std::string show_config;
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  show->add_option("--config", show_config, "JSON run configuration")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[USAGE]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*bench) {
      const auto kind = synth::parse_scenario_kind(bench_kind);
      cli::RunConfig cfg = resolve_config(bench_opts, cli::default_run_config(kind));
      cfg.scenario.kind = kind;
      const std::size_t n = data_length(cfg, cfg.topic.n_test);
      run_trials(cfg, [&](std::uint64_t s) { return synth::generate_scenario(cfg.scenario, n, s); },
                 bench_opts.repeats.value_or(1), bench_opts.out);
    } else if (*sweep) {
      const auto kind = synth::parse_scenario_kind(sweep_kind);
      cli::RunConfig cfg = resolve_config(sweep_opts, cli::default_run_config(kind));
      cfg.scenario.kind = kind;
      const std::size_t n = data_length(cfg, cfg.sweep.n_test);
      const synth::ScenarioConfig sc = cfg.scenario;
      run_sweep_cmd(cfg, [sc, n](std::uint64_t s) { return synth::generate_scenario(sc, n, s); },
                    sweep_opts.repeats.value_or(cfg.sweep.repeats), sweep_opts.threads, sweep_opts.out);
    } else if (*replay) {
      if (!market.empty()) paths.market = market;
      if (!rewards.empty()) paths.rewards = rewards;
      cli::RunConfig cfg = resolve_config(replay_opts, cli::default_run_config(synth::ScenarioKind::Replay));
      cfg.scenario.kind = synth::ScenarioKind::Replay;
      const synth::ScenarioData data = cli::load_replay(paths);
      auto source = [&data](std::uint64_t) { return data; };
      if (replay_sweep)
        run_sweep_cmd(cfg, source, replay_opts.repeats.value_or(cfg.sweep.repeats), replay_opts.threads,
                      replay_opts.out);
      else
        run_trials(cfg, source, replay_opts.repeats.value_or(1), replay_opts.out);
    } else if (*report) {
      const fs::path out = report_out.empty() ? fs::path(report_in) : fs::path(report_out);
      for (const auto& p : cli::render_report(report_in, out)) std::printf("wrote %s\n", p.string().c_str());
    } else if (*exp) {
      cli::RunConfig cfg = resolve_config(export_opts, cli::default_run_config(synth::ScenarioKind::Contextual));
      cfg.scenario.kind = synth::ScenarioKind::Contextual;
      const auto data = synth::generate_scenario(cfg.scenario, data_length(cfg, cfg.topic.n_test), cfg.topic.seed);
      const cli::Provenance prov{cli::config_hash(cfg), cfg.topic.seed};
      cli::export_replay(data, export_opts.out, prov.comment().substr(2));
      std::printf("wrote %s\n", export_opts.out.c_str());
    } else if (*show) {
      cli::RunConfig cfg = show_config.empty() ? cli::RunConfig{} : cli::load_run_config(show_config, cli::RunConfig{});
      std::cout << cli::to_json(cfg).dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[RUNTIME]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

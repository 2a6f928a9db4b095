#pragma once

// Output files: trial and sweep CSV/JSON exports tagged with the config hash
// and seed, and SVG renderings of them.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fcomb/sweep.hpp"
#include "fcomb/trial.hpp"

namespace fcomb::cli {

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  /// "# config_hash=<hex> seed=<n>"
  std::string comment() const;
  static Provenance parse_comment(const std::string& line);
  bool operator==(const Provenance&) const = default;
};

/// epochs.csv (epoch,truth,naive,implied,network) and workers.csv
/// (epoch,worker_id,inference,true_target,forecast,weight).
void write_trial_csvs(const eval::TrialResult& r, const std::filesystem::path& dir, const Provenance& prov);

nlohmann::json trial_summary(const eval::TrialResult& r, const Provenance& prov, const nlohmann::json& config);

/// One line per repeat: trial,seed,implied_log_loss,naive_log_loss,network_log_loss
void write_repeats_csv(const std::vector<eval::TrialResult>& runs, const std::filesystem::path& path,
                       const Provenance& prov);

void write_sweep(const eval::SweepTable& t, const std::filesystem::path& dir, const Provenance& prov,
                 const nlohmann::json& config);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);

/// Line plot of truth, naive and implied inference over the test window.
std::string render_line_svg(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                            const std::vector<std::string>& labels, const std::string& title);

struct ViolinGroup {
  std::string label;
  std::vector<double> values;
};

std::string render_violin_svg(const std::vector<ViolinGroup>& groups, const std::string& title);

/// Renders every recognized output in `input` to SVG files in `out`.
/// Refuses inputs whose CSV provenance disagrees with the JSON summary.
std::vector<std::filesystem::path> render_report(const std::filesystem::path& input, const std::filesystem::path& out);

}  // namespace fcomb::cli

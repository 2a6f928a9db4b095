#pragma once

// CSV ingestion of recorded topic data and export of synthetic panels in the
// same schema.
//
//   inferences: epoch,worker_id,inference
//   truth:      epoch,truth
//   market:     epoch,open,high,low,close,volume
//   rewards:    epoch,worker_id,reward,score
//
// Lines starting with '#' are comments. A trailing `timestamp` column is
// accepted and ignored.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fcomb/core.hpp"
#include "fcomb/synth.hpp"

namespace fcomb::cli {

struct ReplayPaths {
  std::filesystem::path inferences;
  std::filesystem::path truth;
  std::optional<std::filesystem::path> market;
  std::optional<std::filesystem::path> rewards;
};

/// Stream variants take a source name used in error messages.
InferenceTable parse_replay(std::istream& inferences, std::istream& truth, const std::string& inf_name = "inferences",
                            const std::string& truth_name = "truth");
MarketSeries parse_market(std::istream& in, const std::string& name = "market");
features::WorkerSideColumns parse_rewards(std::istream& in, const InferenceTable& table,
                                          const std::string& name = "rewards");

synth::ScenarioData load_replay(const ReplayPaths& paths);

/// Writes inferences.csv and truth.csv (and market.csv when present) into
/// `dir`, each preceded by `header_comment` when non-empty. Values use
/// round-trip precision.
void export_replay(const synth::ScenarioData& data, const std::filesystem::path& dir,
                   const std::string& header_comment = "");

}  // namespace fcomb::cli

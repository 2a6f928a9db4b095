#pragma once

// Squared-error gradient-boosted regression trees with exact greedy splits
// (features presorted once, each tree level grown in one pass per feature),
// plus a randomized hyperparameter search scored on a time-ordered holdout.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace fcomb::learn {

/// Column-major dense design matrix with named columns. No absent values.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::vector<std::string> names, std::size_t rows);

  std::size_t n_rows() const { return rows_; }
  std::size_t n_cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::span<const double> column(std::size_t c) const {
    return {data_.data() + c * rows_, rows_};
  }
  std::span<double> column(std::size_t c) { return {data_.data() + c * rows_, rows_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }

  DataMatrix slice_rows(std::size_t begin, std::size_t end) const;

 private:
  std::vector<std::string> names_;
  std::size_t rows_ = 0;
  std::vector<double> data_;
};

struct GbtHyperparams {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.05;
  int min_samples_leaf = 5;
  double row_subsample = 0.8;
  double feature_subsample = 0.8;

  void validate() const;
  bool operator==(const GbtHyperparams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf contribution, shrinkage already applied
};

struct Tree {
  std::vector<TreeNode> nodes;

  double evaluate(const DataMatrix& X, std::size_t row) const;
};

class GbtModel {
 public:
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const GbtHyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }

  /// Requires X's columns to equal the training schema exactly.
  std::vector<double> predict(const DataMatrix& X) const;

  nlohmann::json to_json() const;
  static GbtModel from_json(const nlohmann::json& j);

 private:
  friend GbtModel fit_gbt(const DataMatrix&, std::span<const double>, const GbtHyperparams&,
                          std::uint64_t, std::size_t);

  std::vector<std::string> feature_names_;
  double base_score_ = 0.0;
  std::vector<Tree> trees_;
  GbtHyperparams hp_;
  std::uint64_t seed_ = 0;
};

inline constexpr std::size_t kDefaultMinTrainRows = 50;

/// Deterministic in (X, y, hp, seed). Throws Learn on fewer than `min_rows`
/// rows or absent/non-finite inputs.
GbtModel fit_gbt(const DataMatrix& X, std::span<const double> y, const GbtHyperparams& hp,
                 std::uint64_t seed, std::size_t min_rows = kDefaultMinTrainRows);

inline std::vector<double> predict(const GbtModel& model, const DataMatrix& X) {
  return model.predict(X);
}

/// One draw from the search space: n_trees [50,500], depth [2,8],
/// learning rate log-uniform [0.01,0.3], leaf [2,20], subsamples [0.5,1].
GbtHyperparams sample_hyperparams(std::mt19937_64& rng);

struct TuneTrial {
  GbtHyperparams hp;
  double holdout_mse = 0.0;
};

struct TuneResult {
  GbtHyperparams best;
  double best_mse = 0.0;
  std::vector<TuneTrial> trials;
};

/// Randomized search; each trial fits on the leading 80% of rows and is
/// scored by squared error on the trailing 20% (time order preserved).
TuneResult tune_search(const DataMatrix& X, std::span<const double> y, int budget,
                       std::uint64_t seed, std::size_t min_rows = kDefaultMinTrainRows);

GbtHyperparams tune(const DataMatrix& X, std::span<const double> y, int budget, std::uint64_t seed,
                    std::size_t min_rows = kDefaultMinTrainRows);

void to_json(nlohmann::json& j, const GbtHyperparams& hp);
void from_json(const nlohmann::json& j, GbtHyperparams& hp);

}  // namespace fcomb::learn

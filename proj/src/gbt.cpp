#include "fcomb/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fcomb/core.hpp"
#include "fcomb/rng.hpp"

namespace fcomb::learn {

DataMatrix::DataMatrix(std::vector<std::string> names, std::size_t rows)
    : names_(std::move(names)), rows_(rows), data_(names_.size() * rows, 0.0) {}

DataMatrix DataMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw learn_error("row slice out of range");
  DataMatrix out(names_, end - begin);
  for (std::size_t c = 0; c < n_cols(); ++c) {
    auto src = column(c);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
              src.begin() + static_cast<std::ptrdiff_t>(end), out.column(c).begin());
  }
  return out;
}

void GbtHyperparams::validate() const {
  if (n_trees < 1 || max_depth < 1 || min_samples_leaf < 1)
    throw validation_error("tree counts must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw validation_error("learning rate out of range");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0) ||
      !(feature_subsample > 0.0 && feature_subsample <= 1.0))
    throw validation_error("subsample rate out of range");
}

double Tree::evaluate(const DataMatrix& X, std::size_t row) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(n)];
    n = X(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

std::vector<double> GbtModel::predict(const DataMatrix& X) const {
  if (X.names() != feature_names_)
    throw learn_error("prediction columns do not match the training schema");
  std::vector<double> out(X.n_rows(), base_score_);
  for (const Tree& t : trees_)
    for (std::size_t r = 0; r < X.n_rows(); ++r) out[r] += t.evaluate(X, r);
  return out;
}

namespace {

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Node {
  int tree_node = 0;
  std::size_t count = 0;
  double sum = 0.0;
};

// Per-node scan state: running left-side totals while walking one feature
// in sorted order, plus the node totals and the best split seen so far.
struct Slot {
  double sum = 0.0;
  double last = 0.0;
  double total_sum = 0.0;
  double best = 0.0;
  double threshold = 0.0;
  std::uint32_t count = 0;
  std::uint32_t total = 0;
  int feature = -1;
};

// Cut strictly between two adjacent distinct values; falls back to the lower
// one when the midpoint rounds onto either end.
double cut_between(double a, double c) {
  const double thr = 0.5 * (a + c);
  return thr >= a && thr < c ? thr : a;
}

}  // namespace

GbtModel fit_gbt(const DataMatrix& X, std::span<const double> y, const GbtHyperparams& hp,
                 std::uint64_t seed, std::size_t min_rows) {
  hp.validate();
  const std::size_t n = X.n_rows();
  const std::size_t F = X.n_cols();
  if (y.size() != n) throw learn_error("target length does not match rows");
  if (n < std::max<std::size_t>(min_rows, 2))
    throw learn_error("too few training rows (" + std::to_string(n) + ")");
  if (n > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw learn_error("too many training rows");
  for (std::size_t c = 0; c < F; ++c)
    for (double v : X.column(c))
      if (!std::isfinite(v)) throw learn_error("absent or non-finite feature value in '" + X.names()[c] + "'");
  for (double v : y)
    if (!std::isfinite(v)) throw learn_error("non-finite target value");

  GbtModel model;
  model.feature_names_ = X.names();
  model.hp_ = hp;
  model.seed_ = seed;
  model.base_score_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  // Rows of each feature in ascending value order (ties by row index), with
  // the values copied alongside so the split scan reads them sequentially.
  std::vector<std::vector<std::uint32_t>> order(F, std::vector<std::uint32_t>(n));
  std::vector<std::vector<double>> sorted(F, std::vector<double>(n));
  for (std::size_t f = 0; f < F; ++f) {
    auto col = X.column(f);
    std::iota(order[f].begin(), order[f].end(), 0u);
    std::stable_sort(order[f].begin(), order[f].end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    for (std::size_t k = 0; k < n; ++k) sorted[f][k] = col[order[f][k]];
  }

  double total_ss = 0.0;
  for (double v : y) total_ss += (v - model.base_score_) * (v - model.base_score_);
  const double gain_floor = 1e-12 * total_ss;

  const auto min_leaf = static_cast<std::size_t>(hp.min_samples_leaf);
  const std::size_t n_sample =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(hp.row_subsample * static_cast<double>(n))), 1, n);
  const std::size_t n_feat =
      F == 0 ? 0
             : std::clamp<std::size_t>(
                   static_cast<std::size_t>(std::llround(hp.feature_subsample * static_cast<double>(F))), 1, F);

  std::mt19937_64 rng(seed);
  std::vector<double> pred(n, model.base_score_);
  std::vector<double> residual(n);
  std::vector<std::uint32_t> row_pool(n);
  std::vector<std::int32_t> node_of(n);  // index into the current level, -1 when settled
  struct RowState {
    double residual;
    std::int32_t node;
  };
  std::vector<RowState> state(n);
  std::vector<std::size_t> feat_pool(F);
  std::vector<Slot> slots;
  std::vector<Split> best;
  std::vector<double> inv(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) inv[k] = 1.0 / static_cast<double>(k);

  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) residual[r] = y[r] - pred[r];

    std::iota(row_pool.begin(), row_pool.end(), 0u);
    if (n_sample < n) {
      for (std::size_t k = 0; k < n_sample; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(row_pool[k], row_pool[pick(rng)]);
      }
    }
    std::iota(feat_pool.begin(), feat_pool.end(), std::size_t{0});
    if (n_feat < F) {
      for (std::size_t k = 0; k < n_feat; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, F - 1);
        std::swap(feat_pool[k], feat_pool[pick(rng)]);
      }
    }
    std::vector<std::size_t> feats(feat_pool.begin(), feat_pool.begin() + static_cast<std::ptrdiff_t>(n_feat));
    std::sort(feats.begin(), feats.end());

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Node> level(1);
    std::fill(node_of.begin(), node_of.end(), -1);
    for (std::size_t k = 0; k < n_sample; ++k) node_of[row_pool[k]] = 0;
    for (std::size_t r = 0; r < n; ++r)
      if (node_of[r] == 0) {
        level[0].sum += residual[r];
        ++level[0].count;
      }

    std::vector<Node> leaves;
    for (int depth = 0; depth < hp.max_depth && !level.empty() && !feats.empty(); ++depth) {
      // Slot per node plus one sink for rows that are out of this tree or
      // already settled; the sink's best score is +inf so it never splits.
      const std::size_t sink = level.size();
      slots.assign(level.size() + 1, Slot{});
      for (std::size_t k = 0; k < level.size(); ++k) {
        slots[k].total_sum = level[k].sum;
        slots[k].total = static_cast<std::uint32_t>(level[k].count);
        // Parent term is constant per node; it is subtracted afterwards.
        slots[k].best = level[k].sum * level[k].sum * inv[level[k].count];
      }
      slots[sink].total = static_cast<std::uint32_t>(n);
      slots[sink].best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < n; ++r)
        state[r] = {residual[r], node_of[r] < 0 ? static_cast<std::int32_t>(sink) : node_of[r]};
      const auto leaf_min = static_cast<std::uint32_t>(min_leaf);
      for (std::size_t f : feats) {
        const std::uint32_t* ord = order[f].data();
        const double* val = sorted[f].data();
        for (Slot& sl : slots) {
          sl.sum = 0.0;
          sl.count = 0;
          sl.last = std::numeric_limits<double>::quiet_NaN();
        }
        for (std::size_t q = 0; q < n; ++q) {
          const RowState& rs_ = state[ord[q]];
          Slot& sl = slots[static_cast<std::size_t>(rs_.node)];
          const double v = val[q];
          const std::uint32_t right = sl.total - sl.count;
          const double rsum = sl.total_sum - sl.sum;
          const double score = sl.sum * sl.sum * inv[sl.count] + rsum * rsum * inv[right];
          const bool better = (v != sl.last) & (sl.count >= leaf_min) & (right >= leaf_min) & (score > sl.best);
          if (better) [[unlikely]] {
            sl.best = score;
            sl.feature = static_cast<int>(f);
            sl.threshold = cut_between(sl.last, v);
          }
          sl.sum += rs_.residual;
          ++sl.count;
          sl.last = v;
        }
      }
      best.resize(level.size());
      for (std::size_t k = 0; k < level.size(); ++k)
        best[k] = {slots[k].best - level[k].sum * level[k].sum * inv[level[k].count], slots[k].feature,
                   slots[k].threshold};

      // Split or settle each node, then route its rows.
      std::vector<Node> next;
      std::vector<std::int32_t> first_child(level.size(), -1);
      for (std::size_t k = 0; k < level.size(); ++k) {
        const Split& sp = best[k];
        if (sp.feature < 0 || !(sp.gain > gain_floor)) {
          leaves.push_back(level[k]);
          continue;
        }
        const int left_id = static_cast<int>(tree.nodes.size());
        TreeNode& tn = tree.nodes[static_cast<std::size_t>(level[k].tree_node)];
        tn.feature = sp.feature;
        tn.threshold = sp.threshold;
        tn.left = left_id;
        tn.right = left_id + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        first_child[k] = static_cast<std::int32_t>(next.size());
        next.push_back(Node{left_id, 0, 0.0});
        next.push_back(Node{left_id + 1, 0, 0.0});
      }
      for (std::size_t r = 0; r < n; ++r) {
        const std::int32_t k = node_of[r];
        if (k < 0) continue;
        const std::int32_t c = first_child[static_cast<std::size_t>(k)];
        if (c < 0) {
          node_of[r] = -1;
          continue;
        }
        const Split& sp = best[static_cast<std::size_t>(k)];
        const std::int32_t child = c + (X(r, static_cast<std::size_t>(sp.feature)) <= sp.threshold ? 0 : 1);
        Node& nd = next[static_cast<std::size_t>(child)];
        nd.sum += residual[r];
        ++nd.count;
        node_of[r] = child;
      }
      level = std::move(next);
    }
    for (const Node& node : level) leaves.push_back(node);

    for (const Node& leaf : leaves) {
      TreeNode& tn = tree.nodes[static_cast<std::size_t>(leaf.tree_node)];
      tn.value = leaf.count == 0 ? 0.0 : hp.learning_rate * leaf.sum / static_cast<double>(leaf.count);
    }
    for (std::size_t r = 0; r < n; ++r) pred[r] += tree.evaluate(X, r);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}


GbtHyperparams sample_hyperparams(std::mt19937_64& rng) {
  GbtHyperparams hp;
  hp.n_trees = std::uniform_int_distribution<int>(50, 500)(rng);
  hp.max_depth = std::uniform_int_distribution<int>(2, 8)(rng);
  hp.learning_rate =
      std::exp(std::uniform_real_distribution<double>(std::log(0.01), std::log(0.3))(rng));
  hp.min_samples_leaf = std::uniform_int_distribution<int>(2, 20)(rng);
  hp.row_subsample = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  hp.feature_subsample = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  return hp;
}

TuneResult tune_search(const DataMatrix& X, std::span<const double> y, int budget,
                       std::uint64_t seed, std::size_t min_rows) {
  if (budget < 1) throw learn_error("tuning budget must be at least 1");
  const std::size_t n = X.n_rows();
  if (y.size() != n) throw learn_error("target length does not match rows");
  if (n < 2 * std::max<std::size_t>(min_rows, 1))
    throw learn_error("too few rows to tune (" + std::to_string(n) + ")");
  const std::size_t n_hold = std::max<std::size_t>(1, n / 5);
  const std::size_t n_fit = n - n_hold;
  const DataMatrix fit_X = X.slice_rows(0, n_fit);
  const DataMatrix hold_X = X.slice_rows(n_fit, n);

  std::mt19937_64 rng(seed);
  TuneResult result;
  result.best_mse = std::numeric_limits<double>::infinity();
  for (int t = 0; t < budget; ++t) {
    const GbtHyperparams hp = sample_hyperparams(rng);
    const GbtModel m = fit_gbt(fit_X, y.subspan(0, n_fit), hp,
                               derive_seed(seed, static_cast<std::uint64_t>(t)), min_rows);
    const std::vector<double> p = m.predict(hold_X);
    double mse = 0.0;
    for (std::size_t r = 0; r < n_hold; ++r) mse += (p[r] - y[n_fit + r]) * (p[r] - y[n_fit + r]);
    mse /= static_cast<double>(n_hold);
    result.trials.push_back({hp, mse});
    if (mse < result.best_mse) {
      result.best_mse = mse;
      result.best = hp;
    }
  }
  return result;
}

GbtHyperparams tune(const DataMatrix& X, std::span<const double> y, int budget, std::uint64_t seed,
                    std::size_t min_rows) {
  return tune_search(X, y, budget, seed, min_rows).best;
}

void to_json(nlohmann::json& j, const GbtHyperparams& hp) {
  j = nlohmann::json{{"n_trees", hp.n_trees},
                     {"max_depth", hp.max_depth},
                     {"learning_rate", hp.learning_rate},
                     {"min_samples_leaf", hp.min_samples_leaf},
                     {"row_subsample", hp.row_subsample},
                     {"feature_subsample", hp.feature_subsample}};
}

void from_json(const nlohmann::json& j, GbtHyperparams& hp) {
  hp.n_trees = j.value("n_trees", hp.n_trees);
  hp.max_depth = j.value("max_depth", hp.max_depth);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.min_samples_leaf = j.value("min_samples_leaf", hp.min_samples_leaf);
  hp.row_subsample = j.value("row_subsample", hp.row_subsample);
  hp.feature_subsample = j.value("feature_subsample", hp.feature_subsample);
}

nlohmann::json GbtModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"features", feature_names_},
          {"base_score", base_score_},
          {"hyperparams", hp_},
          {"seed", seed_},
          {"trees", std::move(trees)}};
}

GbtModel GbtModel::from_json(const nlohmann::json& j) {
  GbtModel m;
  m.feature_names_ = j.at("features").get<std::vector<std::string>>();
  m.base_score_ = j.at("base_score").get<double>();
  m.hp_ = j.at("hyperparams").get<GbtHyperparams>();
  m.seed_ = j.at("seed").get<std::uint64_t>();
  for (const auto& jt : j.at("trees")) {
    Tree t;
    for (const auto& jn : jt)
      t.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(),
                         jn.at(3).get<int>(), jn.at(4).get<double>()});
    m.trees_.push_back(std::move(t));
  }
  return m;
}

}  // namespace fcomb::learn

#include "badacost/weak_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "badacost/error.hpp"
#include "badacost/rng.hpp"

namespace badacost {

CostTree::CostTree(std::vector<TreeNode> nodes, int depth_limit)
    : nodes_(std::move(nodes)), depth_limit_(depth_limit) {
  if (depth_limit_ < 1) throw Error(ErrorKind::invalid_argument, "tree depth limit must be >= 1");
  if (nodes_.empty()) throw Error(ErrorKind::invalid_argument, "tree has no nodes");
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> parents(n, 0);
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) {
      if (node.label < 1) throw Error(ErrorKind::invalid_argument, "leaf label must be >= 1");
      continue;
    }
    if (!std::isfinite(node.threshold)) {
      throw Error(ErrorKind::invalid_argument, "split threshold must be finite");
    }
    for (int child : {node.left, node.right}) {
      if (child <= 0 || child >= n) {
        throw Error(ErrorKind::invalid_argument, "tree child index out of range");
      }
      ++parents[child];
    }
  }
  for (int i = 1; i < n; ++i) {
    if (parents[i] != 1) throw Error(ErrorKind::invalid_argument, "tree node reachable twice or never");
  }
  if (depth() > depth_limit_) {
    throw Error(ErrorKind::invalid_argument, "tree deeper than its depth limit");
  }
}

CostTree CostTree::leaf(Label label, int depth_limit) {
  TreeNode node;
  node.label = label;
  return CostTree({node}, depth_limit);
}

Label CostTree::predict(std::span<const double> x) const {
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[i].label;
}

int CostTree::depth() const {
  // Iterative walk; each child has exactly one parent so this terminates.
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (d > depth_limit_) break;
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

std::size_t CostTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int CostTree::max_feature() const {
  int m = -1;
  for (const TreeNode& n : nodes_) m = std::max(m, n.feature);
  return m;
}

double WeakFitStats::total_error() const {
  double e = 0.0;
  for (double v : error.data()) e += v;
  return e;
}

double WeakFitStats::total_success() const {
  return std::accumulate(success.begin(), success.end(), 0.0);
}

namespace {

/// Cost of labelling a node k: sum_j w_j a(j, k). Returns the best label and cost.
std::pair<Label, double> best_label(std::span<const double> class_weights, const Matrix& a) {
  const std::size_t k = a.rows();
  Label best = 1;
  double best_cost = 0.0;
  for (std::size_t col = 0; col < k; ++col) {
    double cost = 0.0;
    for (std::size_t j = 0; j < k; ++j) cost += class_weights[j] * a(j, col);
    if (col == 0 || cost < best_cost) {
      best = static_cast<Label>(col + 1);
      best_cost = cost;
    }
  }
  return {best, best_cost};
}

void check_weights(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n) {
    throw Error(ErrorKind::dimension_mismatch, "weight vector length differs from sample count");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::invalid_argument, "weights must be finite and nonnegative");
    }
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::span<const double> weights, const Matrix& a,
              const TreeParams& params, std::vector<std::size_t> features, double min_weight)
      : data_(data),
        weights_(weights),
        a_(a),
        params_(params),
        features_(std::move(features)),
        min_weight_(min_weight),
        k_(static_cast<std::size_t>(data.k())) {}

  CostTree build() {
    // One sorted sample list per candidate feature; partitions keep them sorted.
    std::vector<std::vector<std::uint32_t>> sorted(features_.size());
    for (std::size_t f = 0; f < features_.size(); ++f) {
      const std::size_t d = features_[f];
      auto& order = sorted[f];
      order.resize(data_.size());
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
        const double vx = data_.feature(x, d);
        const double vy = data_.feature(y, d);
        return vx < vy || (vx == vy && x < y);
      });
    }
    std::vector<std::uint32_t> members(data_.size());
    std::iota(members.begin(), members.end(), 0u);
    grow(members, sorted, 0);
    return CostTree(std::move(nodes_), params_.depth_limit);
  }

 private:
  struct Split {
    std::size_t feature_slot = 0;
    double threshold = 0.0;
    double cost = 0.0;
    bool found = false;
  };

  std::vector<double> class_weights(const std::vector<std::uint32_t>& members) const {
    std::vector<double> w(k_, 0.0);
    for (std::uint32_t n : members) w[data_.label(n) - 1] += weights_[n];
    return w;
  }

  Split find_split(const std::vector<std::vector<std::uint32_t>>& sorted,
                   const std::vector<double>& totals) const {
    Split best;
    std::vector<double> left(k_);
    std::vector<double> right(k_);
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      const std::size_t d = features_[f];
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::uint32_t n = order[i];
        left[data_.label(n) - 1] += weights_[n];
        const double here = data_.feature(n, d);
        const double next = data_.feature(order[i + 1], d);
        if (!(here < next)) continue;
        for (std::size_t j = 0; j < k_; ++j) right[j] = totals[j] - left[j];
        const double cost = best_label(left, a_).second + best_label(right, a_).second;
        if (!best.found || cost < best.cost) {
          double mid = here / 2.0 + next / 2.0;
          if (!(mid < next)) mid = here;
          best = {f, mid, cost, true};
        }
      }
    }
    return best;
  }

  int grow(const std::vector<std::uint32_t>& members,
           const std::vector<std::vector<std::uint32_t>>& sorted, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const std::vector<double> totals = class_weights(members);
    const auto [label, cost] = best_label(totals, a_);
    nodes_[index].label = label;

    const double node_weight = std::accumulate(totals.begin(), totals.end(), 0.0);
    if (depth >= params_.depth_limit || node_weight < min_weight_ || members.size() < 2) {
      return index;
    }
    const Split split = find_split(sorted, totals);
    if (!split.found || !(cost - split.cost > params_.split_gain_epsilon)) return index;

    const std::size_t d = features_[split.feature_slot];
    auto goes_left = [&](std::uint32_t n) { return data_.feature(n, d) <= split.threshold; };

    std::vector<std::uint32_t> left_members;
    std::vector<std::uint32_t> right_members;
    for (std::uint32_t n : members) (goes_left(n) ? left_members : right_members).push_back(n);

    std::vector<std::vector<std::uint32_t>> left_sorted(sorted.size());
    std::vector<std::vector<std::uint32_t>> right_sorted(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      left_sorted[f].reserve(left_members.size());
      right_sorted[f].reserve(right_members.size());
      for (std::uint32_t n : sorted[f]) (goes_left(n) ? left_sorted[f] : right_sorted[f]).push_back(n);
    }

    nodes_[index].feature = static_cast<int>(d);
    nodes_[index].threshold = split.threshold;
    const int left = grow(left_members, left_sorted, depth + 1);
    const int right = grow(right_members, right_sorted, depth + 1);
    nodes_[index].left = left;
    nodes_[index].right = right;
    nodes_[index].label = 1;
    return index;
  }

  const Dataset& data_;
  std::span<const double> weights_;
  const Matrix& a_;
  const TreeParams& params_;
  std::vector<std::size_t> features_;
  double min_weight_;
  std::size_t k_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::size_t> sample_features(std::size_t n_features, const TreeParams& params) {
  std::vector<std::size_t> all(n_features);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (params.feature_fraction >= 1.0) return all;
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(params.feature_fraction * n_features)));
  Rng rng(params.seed);
  rng.shuffle(all);
  all.resize(std::min(keep, n_features));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

Label leaf_label(std::span<const double> class_weights, const Matrix& a_beta) {
  if (class_weights.size() != a_beta.rows() || a_beta.rows() != a_beta.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "leaf weights and modified cost disagree on K");
  }
  double total = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::invalid_argument, "leaf weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::invalid_argument, "leaf has no weight");
  return best_label(class_weights, a_beta).first;
}

CostTree fit_cost_tree(const Dataset& data, std::span<const double> weights,
                       const Matrix& a_beta, const TreeParams& params) {
  if (data.size() == 0) throw Error(ErrorKind::empty_input, "cannot fit a tree on no data");
  check_weights(weights, data.size());
  if (a_beta.rows() != static_cast<std::size_t>(data.k()) || a_beta.cols() != a_beta.rows()) {
    throw Error(ErrorKind::dimension_mismatch, "modified cost matrix size differs from K");
  }
  if (params.depth_limit < 1) throw Error(ErrorKind::invalid_argument, "depth limit must be >= 1");
  if (!(params.feature_fraction > 0.0) || params.feature_fraction > 1.0) {
    throw Error(ErrorKind::invalid_argument, "feature fraction must be in (0, 1]");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::invalid_argument, "all weights are zero");

  TreeBuilder builder(data, weights, a_beta, params, sample_features(data.n_features(), params),
                      params.min_node_weight * total);
  return builder.build();
}

WeakFitStats evaluate_stats(const CostTree& tree, const Dataset& data,
                            std::span<const double> weights) {
  check_weights(weights, data.size());
  const auto k = static_cast<std::size_t>(data.k());
  WeakFitStats stats{std::vector<double>(k, 0.0), Matrix(k, k, 0.0)};
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Label truth = data.label(n);
    const Label predicted = tree.predict(data.row(n));
    if (predicted < 1 || predicted > data.k()) {
      throw Error(ErrorKind::invalid_argument, "tree predicts a label outside 1..K");
    }
    if (predicted == truth) {
      stats.success[truth - 1] += weights[n];
    } else {
      stats.error(truth - 1, predicted - 1) += weights[n];
    }
  }
  return stats;
}

double weighted_modified_cost(const CostTree& tree, const Dataset& data,
                              std::span<const double> weights, const Matrix& a_beta) {
  check_weights(weights, data.size());
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    total += weights[n] * a_beta(data.label(n) - 1, tree.predict(data.row(n)) - 1);
  }
  return total;
}

}  // namespace badacost

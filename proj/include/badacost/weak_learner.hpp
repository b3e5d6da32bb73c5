#pragma once

// Cost-sensitive decision trees: the weak learners of the boosting loop.
// A tree is grown greedily to minimize sum_n w(n) * A(l_n, G(x_n)), where A
// is the modified cost matrix exp(beta * (K/(K-1)) * C*).

#include <cstdint>
#include <span>
#include <vector>

#include "badacost/cost_model.hpp"
#include "badacost/dataset.hpp"
#include "badacost/matrix.hpp"

namespace badacost {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  Label label = 1;  // leaves only

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Binary tree stored as a node array with the root at index 0.
class CostTree {
 public:
  /// Validates node links, acyclicity and depth. Throws Error on bad input.
  CostTree(std::vector<TreeNode> nodes, int depth_limit);

  static CostTree leaf(Label label, int depth_limit);

  Label predict(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth_limit() const { return depth_limit_; }
  /// Longest root-to-leaf path (0 for a single leaf).
  int depth() const;
  std::size_t leaf_count() const;
  /// Largest feature index any split reads, or -1 for a single leaf.
  int max_feature() const;

  bool operator==(const CostTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  int depth_limit_;
};

struct TreeParams {
  int depth_limit = 4;
  /// Fraction of features offered to each tree, in (0, 1].
  double feature_fraction = 1.0;
  /// Key for the feature-sampling stream; unused when feature_fraction == 1.
  std::uint64_t seed = 0;
  /// Nodes lighter than this fraction of the total weight are not split.
  double min_node_weight = 1e-6;
  /// A split must lower the objective by more than this.
  double split_gain_epsilon = 1e-12;
};

/// Weighted successes S_j and errors E_{j,k} of a classifier.
struct WeakFitStats {
  std::vector<double> success;  // index j-1 holds S_j
  Matrix error;                 // (j-1, k-1) holds E_{j,k}; zero diagonal

  int k() const { return static_cast<int>(success.size()); }
  double total_error() const;
  double total_success() const;
};

/// argmin_k sum_j class_weights[j] * a_beta(j, k); lowest label on ties.
Label leaf_label(std::span<const double> class_weights, const Matrix& a_beta);

CostTree fit_cost_tree(const Dataset& data, std::span<const double> weights,
                       const Matrix& a_beta, const TreeParams& params);

WeakFitStats evaluate_stats(const CostTree& tree, const Dataset& data,
                            std::span<const double> weights);

/// sum_n w(n) * a_beta(l_n, tree(x_n)): the quantity the tree minimizes.
double weighted_modified_cost(const CostTree& tree, const Dataset& data,
                              std::span<const double> weights, const Matrix& a_beta);

}  // namespace badacost

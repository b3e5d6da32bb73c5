#pragma once

// Evaluation: average misclassification cost, confusion matrices, stratified
// folds, cross-validation, and the confusion-derived cost matrix for
// imbalanced problems.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "badacost/booster.hpp"
#include "badacost/cost_model.hpp"
#include "badacost/dataset.hpp"

namespace badacost {

/// Counts of (truth, prediction) pairs.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k);

  int k() const { return k_; }
  std::uint64_t operator()(Label truth, Label predicted) const {
    return counts_[(truth - 1) * k_ + (predicted - 1)];
  }
  void add(Label truth, Label predicted, std::uint64_t count = 1);
  std::uint64_t row_total(Label truth) const;
  std::uint64_t total() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_;
  std::vector<std::uint64_t> counts_;
};

/// (1/N) sum_n C(truth_n, prediction_n).
double average_cost(std::span<const Label> predictions, std::span<const Label> truths,
                    const CostMatrix& c);

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truths,
                          int k);

/// lambda * F*, where F* is F with rows normalized to proportions and the
/// diagonal zeroed. With no lambda the matrix is scaled so its largest entry
/// is 1. A row whose class was never misclassified gets a uniform
/// 1/((n_i + 1)(K - 1)) error rate so every row keeps a positive cost.
/// Throws ErrorKind::perfect_baseline when F has no errors at all.
CostMatrix imbalance_cost_matrix(const ConfusionMatrix& f, std::optional<double> lambda = {});

/// Fold index (0-based) per sample. Classes are shuffled with the seed and
/// dealt round-robin, continuing the deal across classes.
std::vector<int> stratified_folds(const Dataset& data, int folds, std::uint64_t seed);

/// Stratified holdout: returns (train indices, holdout indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& data, double holdout_fraction, std::uint64_t seed);

/// Derives a cost matrix from the data itself: train a SAMME-equivalent
/// (scaled 0|1) model on 80% of `data`, tally its confusion on the other 20%,
/// and feed that to imbalance_cost_matrix in auto-lambda mode.
CostMatrix derive_imbalance_cost(const Dataset& data, const TrainParams& params);

struct ImbalanceAuto {};
using CostSource = std::variant<CostMatrix, ImbalanceAuto>;

struct FoldReport {
  int fold = 0;
  double average_cost = 0.0;
  ConfusionMatrix confusion{2};
  std::optional<CostMatrix> train_cost;
  std::size_t members = 0;
};

struct CvReport {
  std::vector<FoldReport> folds;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation across folds
};

/// Stratified k-fold cross-validation. Test folds are scored with
/// `eval_cost` when given, otherwise with the matrix each fold trained on.
CvReport cross_validate(const Dataset& data, const CostSource& cost, int folds,
                        const TrainParams& params,
                        const std::optional<CostMatrix>& eval_cost = std::nullopt);

/// Mean and sample standard deviation of the per-fold costs.
std::pair<double, double> mean_and_std(std::span<const double> values);

}  // namespace badacost

#include "badacost/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "badacost/error.hpp"
#include "badacost/rng.hpp"

namespace badacost {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;
constexpr std::uint64_t kHoldoutStream = 0x686f6c64ULL;

void check_pairs(std::span<const Label> predictions, std::span<const Label> truths, int k) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::dimension_mismatch, "predictions and truths differ in length");
  }
  for (std::size_t n = 0; n < truths.size(); ++n) {
    if (truths[n] < 1 || truths[n] > k || predictions[n] < 1 || predictions[n] > k) {
      std::ostringstream msg;
      msg << "label out of range 1.." << k << " at position " << n + 1;
      throw Error(ErrorKind::invalid_argument, msg.str());
    }
  }
}

std::vector<std::vector<std::size_t>> shuffled_classes(const Dataset& data, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(data.k());
  for (std::size_t n = 0; n < data.size(); ++n) by_class[data.label(n) - 1].push_back(n);
  for (auto& members : by_class) rng.shuffle(members);
  return by_class;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "confusion matrix needs K >= 2");
}

void ConfusionMatrix::add(Label truth, Label predicted, std::uint64_t count) {
  if (truth < 1 || truth > k_ || predicted < 1 || predicted > k_) {
    throw Error(ErrorKind::invalid_argument, "confusion label out of range");
  }
  counts_[(truth - 1) * k_ + (predicted - 1)] += count;
}

std::uint64_t ConfusionMatrix::row_total(Label truth) const {
  std::uint64_t s = 0;
  for (Label j = 1; j <= k_; ++j) s += (*this)(truth, j);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double average_cost(std::span<const Label> predictions, std::span<const Label> truths,
                    const CostMatrix& c) {
  check_pairs(predictions, truths, c.k());
  if (truths.empty()) throw Error(ErrorKind::empty_input, "no predictions to score");
  double total = 0.0;
  for (std::size_t n = 0; n < truths.size(); ++n) total += c(truths[n], predictions[n]);
  return total / static_cast<double>(truths.size());
}

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truths,
                          int k) {
  check_pairs(predictions, truths, k);
  ConfusionMatrix f(k);
  for (std::size_t n = 0; n < truths.size(); ++n) f.add(truths[n], predictions[n]);
  return f;
}

CostMatrix imbalance_cost_matrix(const ConfusionMatrix& f, std::optional<double> lambda) {
  const int k = f.k();
  if (lambda && !(*lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be > 0");
  Matrix rates(k, k, 0.0);
  std::vector<bool> perfect(k, false);
  bool any_error = false;
  for (Label i = 1; i <= k; ++i) {
    const std::uint64_t row = f.row_total(i);
    if (row == 0) {
      std::ostringstream msg;
      msg << "class " << i << " has no samples in the confusion matrix";
      throw Error(ErrorKind::invalid_argument, msg.str());
    }
    perfect[i - 1] = f(i, i) == row;
    for (Label j = 1; j <= k; ++j) {
      if (i == j) continue;
      rates(i - 1, j - 1) = static_cast<double>(f(i, j)) / static_cast<double>(row);
    }
    any_error = any_error || !perfect[i - 1];
  }
  if (!any_error) {
    throw Error(ErrorKind::perfect_baseline,
                "baseline classifier made no errors; use a 0|1 cost matrix instead");
  }
  for (Label i = 1; i <= k; ++i) {
    if (!perfect[i - 1]) continue;
    const double fill = 1.0 / ((static_cast<double>(f.row_total(i)) + 1.0) * (k - 1));
    for (Label j = 1; j <= k; ++j) {
      if (i != j) rates(i - 1, j - 1) = fill;
    }
  }
  double max_rate = 0.0;
  for (double v : rates.data()) max_rate = std::max(max_rate, v);
  for (std::size_t i = 0; i < rates.rows(); ++i) {
    for (std::size_t j = 0; j < rates.cols(); ++j) {
      rates(i, j) = lambda ? *lambda * rates(i, j) : rates(i, j) / max_rate;
    }
  }
  return CostMatrix(std::move(rates));
}

std::vector<int> stratified_folds(const Dataset& data, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::invalid_argument, "need at least 2 folds");
  const auto counts = data.class_counts();
  std::ostringstream small;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0 && counts[c] < static_cast<std::size_t>(folds)) {
      small << (small.tellp() > 0 ? ", " : "") << "class " << c + 1 << " (" << counts[c] << ")";
    }
  }
  if (small.tellp() > 0) {
    throw Error(ErrorKind::class_too_small,
                "classes with fewer samples than folds (" + std::to_string(folds) +
                    "): " + small.str());
  }
  Rng rng(derive_seed(seed, kFoldStream));
  std::vector<int> assignment(data.size(), 0);
  std::size_t deal = 0;
  for (const auto& members : shuffled_classes(data, rng)) {
    for (std::size_t n : members) assignment[n] = static_cast<int>(deal++ % folds);
  }
  return assignment;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& data, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "holdout fraction must be in (0, 1)");
  }
  Rng rng(derive_seed(seed, kHoldoutStream));
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
  for (const auto& members : shuffled_classes(data, rng)) {
    if (members.empty()) continue;
    auto take = static_cast<std::size_t>(std::lround(holdout_fraction * members.size()));
    if (members.size() >= 2) take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    else take = 0;
    holdout.insert(holdout.end(), members.begin(), members.begin() + take);
    train.insert(train.end(), members.begin() + take, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(holdout.begin(), holdout.end());
  return {train, holdout};
}

CostMatrix derive_imbalance_cost(const Dataset& data, const TrainParams& params) {
  const auto [train_idx, holdout_idx] = stratified_holdout(data, 0.2, params.seed);
  const Dataset train_part = data.subset(train_idx);
  const Dataset holdout = data.subset(holdout_idx);
  const int k = data.k();
  const CostMatrix samme = make_01_cost(k, 1.0 / (k * (k - 1.0)));
  const TrainResult baseline = train(train_part, samme, params);
  std::vector<Label> predictions(holdout.size());
  for (std::size_t n = 0; n < holdout.size(); ++n) {
    predictions[n] = baseline.ensemble.predict(holdout.row(n));
  }
  return imbalance_cost_matrix(confusion(predictions, holdout.labels(), k));
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

CvReport cross_validate(const Dataset& data, const CostSource& cost, int folds,
                        const TrainParams& params, const std::optional<CostMatrix>& eval_cost) {
  if (const auto* fixed = std::get_if<CostMatrix>(&cost); fixed && fixed->k() != data.k()) {
    throw Error(ErrorKind::dimension_mismatch, "cost matrix size differs from label count");
  }
  if (eval_cost && eval_cost->k() != data.k()) {
    throw Error(ErrorKind::dimension_mismatch, "evaluation cost size differs from label count");
  }
  const std::vector<int> assignment = stratified_folds(data, folds, params.seed);
  CvReport report;
  std::vector<double> costs;
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t n = 0; n < data.size(); ++n) {
      (assignment[n] == fold ? test_idx : train_idx).push_back(n);
    }
    const Dataset train_part = data.subset(train_idx);
    const Dataset test_part = data.subset(test_idx);
    const CostMatrix fold_cost = std::holds_alternative<CostMatrix>(cost)
                                     ? std::get<CostMatrix>(cost)
                                     : derive_imbalance_cost(train_part, params);
    const TrainResult trained = train(train_part, fold_cost, params);

    std::vector<Label> predictions(test_part.size());
    for (std::size_t n = 0; n < test_part.size(); ++n) {
      predictions[n] = trained.ensemble.predict(test_part.row(n));
    }
    FoldReport fr;
    fr.fold = fold + 1;
    fr.average_cost =
        average_cost(predictions, test_part.labels(), eval_cost ? *eval_cost : fold_cost);
    fr.confusion = confusion(predictions, test_part.labels(), data.k());
    fr.train_cost = fold_cost;
    fr.members = trained.ensemble.size();
    costs.push_back(fr.average_cost);
    report.folds.push_back(std::move(fr));
  }
  std::tie(report.mean, report.std_dev) = mean_and_std(costs);
  return report;
}

}  // namespace badacost

#pragma once

// Cost-matrix algebra, margin-vector label codes, cost-sensitive margins and
// losses, and the two minimum-cost decision rules.
//
// Labels are 1-based everywhere in the public interface.

#include <span>
#include <vector>

#include "badacost/matrix.hpp"

namespace badacost {

using Label = int;

/// Exponents passed to exp() are clamped to this magnitude.
inline constexpr double kExpClamp = 700.0;

/// exp(x) with |x| clamped to kExpClamp; sets *saturated when clamping.
double clamped_exp(double x, bool* saturated = nullptr);

/// K x K misclassification costs, entry (i, j) = cost of predicting j when
/// the truth is i. Zero diagonal, nonnegative entries, and every row carries
/// some positive off-diagonal cost.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  int k() const { return static_cast<int>(entries_.rows()); }
  double operator()(Label truth, Label predicted) const {
    return entries_(truth - 1, predicted - 1);
  }
  const Matrix& entries() const { return entries_; }

  double row_sum(Label truth) const;
  /// Largest off-diagonal entry.
  double max_entry() const;
  CostMatrix scaled(double factor) const;

  bool operator==(const CostMatrix&) const = default;

 private:
  Matrix entries_;
};

/// C* : C with each diagonal entry replaced by the negated row sum. Rows are
/// margin vectors (they sum to zero); diagonal entries act as rewards.
///
/// Exponents used by the solver, the loss and the weight update all carry
/// the K/(K-1) factor that appears when a row of C* is dotted with a label
/// code. `margin_scale()` returns that factor.
class ExtendedCostMatrix {
 public:
  int k() const { return static_cast<int>(c_star_.rows()); }
  double operator()(Label i, Label j) const { return c_star_(i - 1, j - 1); }
  const Matrix& values() const { return c_star_; }
  std::span<const double> row(Label i) const { return c_star_.row(i - 1); }

  double margin_scale() const { return static_cast<double>(k()) / (k() - 1); }

  /// A^beta with A(j, k) = exp((K/(K-1)) C*(j, k)): the modified cost matrix
  /// the weak learner minimizes.
  Matrix modified_cost(double beta) const;

 private:
  friend ExtendedCostMatrix extend_cost_matrix(const CostMatrix& c);
  Matrix c_star_;
};

/// Margin-vector codes: y_l has 1 at coordinate l and -1/(K-1) elsewhere.
class LabelCodeSet {
 public:
  explicit LabelCodeSet(int k);

  int k() const { return k_; }
  std::vector<double> code(Label l) const;
  /// Adds `weight * y_l` to `f` in place.
  void accumulate(Label l, double weight, std::span<double> f) const;

 private:
  int k_;
};

ExtendedCostMatrix extend_cost_matrix(const CostMatrix& c);

/// (K/(K-1)) * C*(true, predicted): the cost-sensitive margin of a discrete
/// classifier that outputs `predicted`.
double cost_margin(const ExtendedCostMatrix& c_star, Label true_label, Label predicted_label);

struct LossValue {
  double value = 0.0;
  bool saturated = false;
};

/// exp(C*(true, -) . f) for a margin vector f.
LossValue cmel(const ExtendedCostMatrix& c_star, Label true_label,
               std::span<const double> margin_vector);

/// argmin_k C*(k, -) . f, lowest label on ties.
Label min_cost_label(std::span<const double> f, const ExtendedCostMatrix& c_star);

/// Minimum expected cost decision argmin_j sum_i P(i) C(i, j), lowest label on ties.
Label min_cost_decision(std::span<const double> posterior, const CostMatrix& c);

/// Softmax of the margin scores.
std::vector<double> posterior_from_scores(std::span<const double> f);

CostMatrix make_01_cost(int k, double scale = 1.0);

/// Background is label 1. C(1, j) = 1 for positives, C(j, 1) = fn_weight,
/// 0|1 costs among the positive classes.
CostMatrix make_detection_cost(int k_positive, double fn_weight);

/// Background (label 1) plus `k_positive` circularly arranged view classes.
/// False positives cost fp_weight, false negatives fn_weight, and confusing
/// views i and j costs view_weight * (1 - |(2|i-j| - Kp) / Kp|).
CostMatrix make_circular_view_cost(int k_positive, double fp_weight, double fn_weight,
                                   double view_weight);

}  // namespace badacost

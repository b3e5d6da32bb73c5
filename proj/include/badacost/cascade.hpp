#pragma once

// Detection scores and early-exit (cascade) evaluation of a trained ensemble.

#include <span>
#include <string_view>
#include <vector>

#include "badacost/booster.hpp"
#include "badacost/dataset.hpp"

namespace badacost {

/// c_background - min_{k != background} c_k for a vector of predicted costs c.
double score_from_costs(std::span<const double> costs, Label background = 1);

/// score_from_costs applied to c = C* f. Positive iff some
/// positive class is cheaper than the background.
double detection_score(std::span<const double> margin, const ExtendedCostMatrix& c_star,
                       Label background = 1);
double detection_score(const Ensemble& e, std::span<const double> x, Label background = 1);

/// Detection score of every partial sum f_m = sum_{t <= m} beta_t y_t(x).
std::vector<double> score_trace(const Ensemble& e, std::span<const double> x,
                                Label background = 1);

enum class ThresholdMode { per_stage, single };

const char* to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

struct CascadeThresholds {
  ThresholdMode mode = ThresholdMode::per_stage;
  Label background = 1;
  /// One value per member (per_stage) or exactly one value (single).
  std::vector<double> values;

  double at(std::size_t member) const {
    return mode == ThresholdMode::single ? values.front() : values[member];
  }
  bool operator==(const CascadeThresholds&) const = default;
};

/// Throws unless `t` is usable with an ensemble of `members` members.
void validate_thresholds(const CascadeThresholds& t, std::size_t members);

/// Thresholds from the score traces of retained positives.
///
/// per_stage: theta_m = min over traces of s_m.
/// single: the lowest point of the trace with the lowest final score,
/// lowered further if another trace dips below it.
CascadeThresholds thresholds_from_traces(const std::vector<std::vector<double>>& traces,
                                         ThresholdMode mode, Label background = 1);

struct Calibration {
  CascadeThresholds thresholds;
  std::size_t retained = 0;
  /// Samples labelled background or whose final score is not positive.
  std::size_t excluded = 0;
};

/// Sets rejection thresholds from the score traces of the positives so that
/// none of the retained positives is ever cut short.
Calibration calibrate(const Ensemble& e, const Dataset& positives, ThresholdMode mode,
                      Label background = 1);

struct PrunedPrediction {
  Label label = 1;
  std::size_t members_evaluated = 0;
  double score = 0.0;  // score of the last evaluated partial sum
};

/// Evaluates members in order and returns the background label as soon as the
/// partial score drops below the threshold for that stage.
PrunedPrediction predict_pruned(const Ensemble& e, const CascadeThresholds& t,
                                std::span<const double> x);

}  // namespace badacost

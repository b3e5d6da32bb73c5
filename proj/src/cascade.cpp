#include "badacost/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "badacost/error.hpp"

namespace badacost {

double score_from_costs(std::span<const double> costs, Label background) {
  const auto k = static_cast<Label>(costs.size());
  if (background < 1 || background > k) {
    throw Error(ErrorKind::invalid_argument, "background label outside 1..K");
  }
  double best_positive = std::numeric_limits<double>::infinity();
  for (Label l = 1; l <= k; ++l) {
    if (l != background) best_positive = std::min(best_positive, costs[l - 1]);
  }
  return costs[background - 1] - best_positive;
}

double detection_score(std::span<const double> margin, const ExtendedCostMatrix& c_star,
                       Label background) {
  const int k = c_star.k();
  if (margin.size() != static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::dimension_mismatch, "margin vector length differs from K");
  }
  std::vector<double> costs(k, 0.0);
  for (Label row = 1; row <= k; ++row) {
    const auto r = c_star.row(row);
    for (int j = 0; j < k; ++j) costs[row - 1] += r[j] * margin[j];
  }
  return score_from_costs(costs, background);
}

double detection_score(const Ensemble& e, std::span<const double> x, Label background) {
  return detection_score(e.margin_vector(x), e.c_star(), background);
}

std::vector<double> score_trace(const Ensemble& e, std::span<const double> x, Label background) {
  e.check_dimension(x);
  std::vector<double> f(e.k(), 0.0);
  std::vector<double> trace;
  trace.reserve(e.size());
  for (const Member& m : e.members()) {
    e.codes().accumulate(m.tree.predict(x), m.beta, f);
    trace.push_back(detection_score(f, e.c_star(), background));
  }
  return trace;
}

const char* to_string(ThresholdMode mode) {
  return mode == ThresholdMode::single ? "single" : "per_stage";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "single") return ThresholdMode::single;
  if (text == "per_stage" || text == "per-stage") return ThresholdMode::per_stage;
  throw Error(ErrorKind::invalid_argument, "unknown threshold mode '" + std::string(text) + "'");
}

void validate_thresholds(const CascadeThresholds& t, std::size_t members) {
  const std::size_t expected = t.mode == ThresholdMode::single ? 1 : members;
  if (t.values.size() != expected) {
    std::ostringstream msg;
    msg << to_string(t.mode) << " thresholds have " << t.values.size() << " values, expected "
        << expected;
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
  for (double v : t.values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "thresholds must be finite");
  }
  if (t.background < 1) throw Error(ErrorKind::invalid_argument, "background label must be >= 1");
}

CascadeThresholds thresholds_from_traces(const std::vector<std::vector<double>>& traces,
                                         ThresholdMode mode, Label background) {
  if (traces.empty()) throw Error(ErrorKind::empty_input, "no positive traces to calibrate on");
  const std::size_t members = traces.front().size();
  if (members == 0) throw Error(ErrorKind::empty_input, "score traces are empty");
  CascadeThresholds out;
  out.mode = mode;
  out.background = background;
  std::vector<double> stage_min(members, std::numeric_limits<double>::infinity());
  double lowest_final = std::numeric_limits<double>::infinity();
  double lpse_min = 0.0;
  double global_min = std::numeric_limits<double>::infinity();
  for (const auto& trace : traces) {
    if (trace.size() != members) {
      throw Error(ErrorKind::dimension_mismatch, "score traces differ in length");
    }
    for (std::size_t m = 0; m < members; ++m) stage_min[m] = std::min(stage_min[m], trace[m]);
    const double trace_min = *std::min_element(trace.begin(), trace.end());
    global_min = std::min(global_min, trace_min);
    if (trace.back() < lowest_final) {
      lowest_final = trace.back();
      lpse_min = trace_min;
    }
  }
  if (mode == ThresholdMode::per_stage) {
    out.values = std::move(stage_min);
  } else {
    // The LPSE trace minimum alone can sit above another positive's dip.
    out.values = {std::min(lpse_min, global_min)};
  }
  return out;
}

Calibration calibrate(const Ensemble& e, const Dataset& positives, ThresholdMode mode,
                      Label background) {
  if (e.size() == 0) throw Error(ErrorKind::empty_input, "cannot calibrate an empty ensemble");
  if (background < 1 || background > e.k()) {
    throw Error(ErrorKind::invalid_argument, "background label outside 1..K");
  }
  Calibration out;
  std::vector<std::vector<double>> traces;
  for (std::size_t n = 0; n < positives.size(); ++n) {
    if (positives.label(n) == background) {
      ++out.excluded;
      continue;
    }
    std::vector<double> trace = score_trace(e, positives.row(n), background);
    if (!(trace.back() > 0.0)) {
      ++out.excluded;
      continue;
    }
    traces.push_back(std::move(trace));
  }
  if (traces.empty()) {
    throw Error(ErrorKind::empty_input, "no positive sample with a positive final score");
  }
  out.retained = traces.size();
  out.thresholds = thresholds_from_traces(traces, mode, background);
  return out;
}

PrunedPrediction predict_pruned(const Ensemble& e, const CascadeThresholds& t,
                                std::span<const double> x) {
  validate_thresholds(t, e.size());
  e.check_dimension(x);
  PrunedPrediction out;
  std::vector<double> f(e.k(), 0.0);
  for (std::size_t m = 0; m < e.size(); ++m) {
    const Member& member = e.members()[m];
    e.codes().accumulate(member.tree.predict(x), member.beta, f);
    out.members_evaluated = m + 1;
    out.score = detection_score(f, e.c_star(), t.background);
    if (out.score < t.at(m)) {
      out.label = t.background;
      return out;
    }
  }
  out.label = min_cost_label(f, e.c_star());
  return out;
}

}  // namespace badacost

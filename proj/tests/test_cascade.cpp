#include <cmath>
#include <limits>
#include <vector>

#include "badacost/cascade.hpp"
#include "badacost/error.hpp"
#include "badacost/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace badacost;

namespace {

struct Detector {
  Dataset train_set;
  Ensemble ensemble;
};

Detector make_detector(int rounds = 30) {
  auto data = synthetic::detection(400, 150, 2, 71);
  TrainParams p;
  p.rounds = rounds;
  p.depth = 2;
  auto result = train(data, make_detection_cost(2, 1.5), p);
  return {std::move(data), std::move(result.ensemble)};
}

Dataset positives_of(const Dataset& d) {
  std::vector<std::size_t> idx;
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (d.label(n) != 1) idx.push_back(n);
  }
  return d.subset(idx);
}

}  // namespace

TEST_CASE("detection scores") {
  CHECK(score_from_costs(std::vector<double>{0.5, -1.0, 2.0}) == 1.5);
  CHECK(score_from_costs(std::vector<double>{0.5, -1.0, 2.0}, 3) == 3.0);
  CHECK_THROWS_AS(score_from_costs(std::vector<double>{0.0, 0.0}, 3), Error);

  const auto cs = extend_cost_matrix(make_detection_cost(3, 1.5));
  CHECK(detection_score(std::vector<double>(4, 0.0), cs) == 0.0);

  SUBCASE("positive iff the prediction is not background") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> f(4);
      double mean = 0.0;
      for (auto& v : f) {
        v = 4.0 * rng.uniform() - 2.0;
        mean += v / 4.0;
      }
      for (auto& v : f) v -= mean;
      const double score = detection_score(f, cs);
      CHECK((score > 0.0) == (min_cost_label(f, cs) != 1));
      // Brute force over the predicted-cost vector.
      const auto c = make_detection_cost(3, 1.5);
      double bg = oracle::dot(oracle::c_star_row(c, 1), f);
      double best = std::numeric_limits<double>::infinity();
      for (Label k = 2; k <= 4; ++k) best = std::min(best, oracle::dot(oracle::c_star_row(c, k), f));
      CHECK(score == doctest::Approx(bg - best).epsilon(1e-12));
    }
  }
}

TEST_CASE("thresholds from traces") {
  const auto single = thresholds_from_traces({{-1.0, 0.5, 2.0}}, ThresholdMode::single);
  CHECK(single.values == std::vector<double>{-1.0});
  CHECK(single.at(2) == -1.0);

  const auto stages =
      thresholds_from_traces({{0.0, 1.0, 2.0}, {-1.0, 1.0, 3.0}}, ThresholdMode::per_stage);
  CHECK(stages.values == std::vector<double>{-1.0, 1.0, 2.0});

  // Lowest final score belongs to the first trace (min -0.5), but the second
  // dips lower; the threshold follows the deeper dip.
  const auto lpse = thresholds_from_traces({{-0.5, 0.2, 1.0}, {-2.0, 1.0, 3.0}}, ThresholdMode::single);
  CHECK(lpse.values == std::vector<double>{-2.0});
  const auto plain = thresholds_from_traces({{-0.5, 0.2, 1.0}, {0.3, 1.0, 3.0}}, ThresholdMode::single);
  CHECK(plain.values == std::vector<double>{-0.5});

  CHECK_THROWS_AS(thresholds_from_traces({}, ThresholdMode::single), Error);
  CHECK_THROWS_AS(thresholds_from_traces({{1.0}, {1.0, 2.0}}, ThresholdMode::single), Error);

  CHECK(parse_threshold_mode("per-stage") == ThresholdMode::per_stage);
  CHECK(parse_threshold_mode("single") == ThresholdMode::single);
  CHECK_THROWS_AS(parse_threshold_mode("both"), Error);
}

TEST_CASE("score traces") {
  const auto det = make_detector(12);
  const auto& e = det.ensemble;
  for (std::size_t n = 0; n < det.train_set.size(); n += 37) {
    const auto x = det.train_set.row(n);
    const auto trace = score_trace(e, x);
    REQUIRE(trace.size() == e.size());
    CHECK(trace.back() == doctest::Approx(detection_score(e, x)).epsilon(1e-12));
  }
}

TEST_CASE("calibration and pruned prediction") {
  const auto det = make_detector();
  const auto& e = det.ensemble;
  const auto positives = positives_of(det.train_set);

  for (auto mode : {ThresholdMode::per_stage, ThresholdMode::single}) {
    CAPTURE(to_string(mode));
    const auto cal = calibrate(e, positives, mode);
    CHECK(cal.retained + cal.excluded == positives.size());
    CHECK(cal.retained > positives.size() / 2);
    CHECK_NOTHROW(validate_thresholds(cal.thresholds, e.size()));

    // Soundness: no retained positive changes its label.
    for (std::size_t n = 0; n < positives.size(); ++n) {
      const auto x = positives.row(n);
      if (!(detection_score(e, x) > 0.0)) continue;
      const auto pruned = predict_pruned(e, cal.thresholds, x);
      CHECK(pruned.label == e.predict(x));
      CHECK(pruned.members_evaluated == e.size());
    }

    // Conservativeness and savings on fresh data.
    const auto test = synthetic::detection(600, 60, 2, 72);
    std::size_t evaluated = 0;
    for (std::size_t n = 0; n < test.size(); ++n) {
      const auto x = test.row(n);
      const auto pruned = predict_pruned(e, cal.thresholds, x);
      const Label full = e.predict(x);
      CHECK((pruned.label == full || pruned.label == 1));
      CHECK(pruned.members_evaluated <= e.size());
      evaluated += pruned.members_evaluated;
    }
    CHECK(evaluated < test.size() * e.size());
  }

  SUBCASE("background samples are excluded") {
    const auto cal = calibrate(e, det.train_set, ThresholdMode::per_stage);
    CHECK(cal.excluded >= 400);
  }
  SUBCASE("no usable positives") {
    const auto negatives = synthetic::detection(50, 0, 2, 5);
    CHECK_THROWS_AS(calibrate(e, negatives, ThresholdMode::single), Error);
  }
}

TEST_CASE("predict_pruned edge cases") {
  const auto det = make_detector(10);
  const auto& e = det.ensemble;
  const auto x = det.train_set.row(0);

  CascadeThresholds never{ThresholdMode::single, 1, {-std::numeric_limits<double>::max()}};
  const auto all = predict_pruned(e, never, x);
  CHECK(all.label == e.predict(x));
  CHECK(all.members_evaluated == e.size());

  const auto trace = score_trace(e, x);
  CascadeThresholds first(ThresholdMode::per_stage, 1, std::vector<double>(e.size(), -1e300));
  first.values[0] = trace[0] + 1.0;
  const auto early = predict_pruned(e, first, x);
  CHECK(early.label == 1);
  CHECK(early.members_evaluated == 1);

  CascadeThresholds wrong{ThresholdMode::per_stage, 1, {0.0, 0.0}};
  CHECK_THROWS_AS(predict_pruned(e, wrong, x), Error);
  CascadeThresholds nan{ThresholdMode::single, 1, {NAN}};
  CHECK_THROWS_AS(predict_pruned(e, nan, x), Error);
}

TEST_CASE("raising a threshold never evaluates more members") {
  const auto det = make_detector(20);
  const auto& e = det.ensemble;
  const auto cal = calibrate(e, positives_of(det.train_set), ThresholdMode::per_stage);
  Rng rng(3);
  const auto test = synthetic::detection(200, 20, 2, 9);
  for (int trial = 0; trial < 30; ++trial) {
    auto raised = cal.thresholds;
    const auto m = static_cast<std::size_t>(rng.below(e.size()));
    raised.values[m] += 2.0 * rng.uniform();
    for (std::size_t n = 0; n < test.size(); ++n) {
      const auto a = predict_pruned(e, cal.thresholds, test.row(n));
      const auto b = predict_pruned(e, raised, test.row(n));
      CHECK(b.members_evaluated <= a.members_evaluated);
    }
  }
}

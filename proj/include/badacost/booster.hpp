#pragma once

// Stage-wise boosting with cost-sensitive exponential loss: weight
// management, step-size (beta) root solving, ensemble prediction, and the
// closed-form special cases used as oracles (SAMME, cost-sensitive
// AdaBoost, PIBoost).
//
// Scale convention: every exponent carries the K/(K-1) factor, i.e.
// A(j, k) = exp((K/(K-1)) C*(j, k)). beta_m is therefore the exact minimizer
// of the empirical loss under the weight update the training loop applies.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "badacost/cost_model.hpp"
#include "badacost/dataset.hpp"
#include "badacost/weak_learner.hpp"

namespace badacost {

enum class BetaStatus {
  ok,
  no_errors,  // weighted error carries no cost: beta is unbounded
  too_weak,   // no positive root: the learner is no better than chance under C
};

const char* to_string(BetaStatus status);

struct BetaResult {
  BetaStatus status = BetaStatus::ok;
  double beta = 0.0;  // meaningful only when status == ok
  int iterations = 0;

  bool ok() const { return status == BetaStatus::ok; }
};

/// Positive root of
///   sum_{j, k != j} E_jk C(j,k) A(j,k)^beta = sum_j S_j (sum_h C(j,h)) A(j,j)^beta.
BetaResult solve_beta(const WeakFitStats& stats, const CostMatrix& c);

struct BetaEquationSides {
  double errors = 0.0;     // left side
  double successes = 0.0;  // right side
};

/// Both sides of the equation solve_beta solves, evaluated at `beta`.
BetaEquationSides beta_equation_sides(const WeakFitStats& stats, const CostMatrix& c,
                                      double beta);

/// ((K-1)^2 / K) (ln((1-E)/E) + ln(K-1)); requires 0 < E < (K-1)/K.
double samme_beta(double total_error, int k);

/// Positive root of 2 c1 b cosh(beta c1) + 2 c2 d cosh(beta c2)
///   = t1 c1 exp(-beta c1) + t2 c2 exp(-beta c2).
BetaResult cs_adaboost_beta(double c1, double c2, double b, double d, double t1, double t2);

struct PolynomialTerm {
  int degree = 0;
  double coefficient = 0.0;
};

struct PiBoostBeta {
  BetaStatus status = BetaStatus::ok;
  double beta = 0.0;
  double root = 0.0;  // R with beta = s(K-s)(K-1) ln R
  /// Nonzero terms of x^shift * P(x), sorted by decreasing degree. The shift
  /// makes every degree nonnegative when K - 2s < 0.
  std::vector<PolynomialTerm> polynomial;
};

/// Evaluates the shifted polynomial returned in PiBoostBeta::polynomial.
double evaluate_polynomial(std::span<const PolynomialTerm> terms, double x);

/// beta for a group of s labels against the rest, via the positive root of
/// P(x) = E1 (K-s) x^{2(K-s)} + E2 s x^K - s (A2-E2) x^{K-2s} - (K-s)(A1-E1).
PiBoostBeta piboost_beta(int s, int k, double e1, double e2, double a1, double a2);

struct Member {
  double beta = 0.0;
  CostTree tree;
};

/// Additive model f(x) = sum_m beta_m y_{tree_m(x)}.
class Ensemble {
 public:
  Ensemble(CostMatrix cost, std::size_t n_features, double shrinkage,
           std::vector<std::string> feature_names = {});

  int k() const { return cost_.k(); }
  std::size_t n_features() const { return n_features_; }
  double shrinkage() const { return shrinkage_; }
  const CostMatrix& cost() const { return cost_; }
  const ExtendedCostMatrix& c_star() const { return c_star_; }
  const LabelCodeSet& codes() const { return codes_; }
  const std::vector<Member>& members() const { return members_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t size() const { return members_.size(); }

  /// Appends a member; beta must be positive and the tree must fit K and D.
  void add(double beta, CostTree tree);

  std::vector<double> margin_vector(std::span<const double> x) const;
  Label predict(std::span<const double> x) const;

  void check_dimension(std::span<const double> x) const;

 private:
  CostMatrix cost_;
  ExtendedCostMatrix c_star_;
  LabelCodeSet codes_;
  std::size_t n_features_;
  double shrinkage_;
  std::vector<std::string> feature_names_;
  std::vector<Member> members_;
};

struct TrainParams {
  int rounds = 100;
  int depth = 4;
  double shrinkage = 1.0;
  double feature_fraction = 1.0;
  std::uint64_t seed = 0;
  /// Keep training after a round with no weighted error cost, using beta_cap.
  bool continue_on_no_errors = false;
  /// Bound on beta * max C for rounds whose solver reports no_errors.
  double beta_cap = 50.0;
};

struct RoundRecord {
  int round = 0;  // 1-based
  double beta = 0.0;
  double objective = 0.0;   // tree-fitting objective sum_n w(n) C*(l_n, G(x_n)) / max C
  double cmel = 0.0;        // mean exp(C*(l_n, -) . f_m(x_n)) after the round
  double train_cost = 0.0;  // average cost of the ensemble on the training data
};

enum class StopReason { completed, no_errors, too_weak };

const char* to_string(StopReason reason);

struct TrainReport {
  std::vector<RoundRecord> rounds;
  StopReason stop = StopReason::completed;
  bool loss_saturated = false;
};

struct TrainResult {
  Ensemble ensemble;
  TrainReport report;
};

/// Invoked after each round with the 1-based round number, the ensemble so
/// far and the normalized weights that round produced.
using RoundObserver =
    std::function<void(int round, const Ensemble& ensemble, std::span<const double> weights)>;

TrainResult train(const Dataset& data, const CostMatrix& c, const TrainParams& params,
                  const RoundObserver& observer = {});

/// Matrix the trees are fitted against: C* / max C. Up to an additive constant
/// this is the slope of A^beta at beta = 0, so the fitted tree is the steepest
/// loss-descent direction and never depends on the overall scale of C.
Matrix tree_fitting_cost(const ExtendedCostMatrix& c_star, const CostMatrix& c);

/// CSV with header round,beta,objective,cmel,train_cost.
std::string report_csv(const TrainReport& report);

}  // namespace badacost

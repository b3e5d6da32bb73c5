#include "badacost/booster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "badacost/error.hpp"
#include "badacost/format.hpp"
#include "badacost/rng.hpp"

namespace badacost {

const char* to_string(BetaStatus status) {
  switch (status) {
    case BetaStatus::ok: return "ok";
    case BetaStatus::no_errors: return "no_errors";
    case BetaStatus::too_weak: return "too_weak";
  }
  return "unknown";
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::completed: return "completed";
    case StopReason::no_errors: return "no_errors";
    case StopReason::too_weak: return "too_weak";
  }
  return "unknown";
}

namespace {

constexpr int kMaxSolverIterations = 200;
constexpr std::uint64_t kTreeStream = 0x7472656573ULL;

/// sum_i exp(log_coef_i + rate_i * beta), kept in log space.
struct ExpSum {
  std::vector<double> log_coef;
  std::vector<double> rate;

  bool empty() const { return rate.empty(); }

  void add(double coef, double r) {
    if (coef > 0.0) {
      log_coef.push_back(std::log(coef));
      rate.push_back(r);
    }
  }

  /// Returns log of the sum and its derivative with respect to beta.
  std::pair<double, double> log_value(double beta) const {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rate.size(); ++i) top = std::max(top, log_coef[i] + rate[i] * beta);
    double total = 0.0;
    double slope = 0.0;
    for (std::size_t i = 0; i < rate.size(); ++i) {
      const double t = std::exp(log_coef[i] + rate[i] * beta - top);
      total += t;
      slope += t * rate[i];
    }
    return {top + std::log(total), slope / total};
  }
};

void check_stats(const WeakFitStats& stats, const CostMatrix& c) {
  if (stats.k() != c.k() || stats.error.rows() != static_cast<std::size_t>(c.k()) ||
      stats.error.cols() != static_cast<std::size_t>(c.k())) {
    throw Error(ErrorKind::dimension_mismatch, "fit statistics and cost matrix disagree on K");
  }
  for (double v : stats.success) {
    if (!(v >= 0.0)) throw Error(ErrorKind::invalid_argument, "success masses must be >= 0");
  }
  for (double v : stats.error.data()) {
    if (!(v >= 0.0)) throw Error(ErrorKind::invalid_argument, "error masses must be >= 0");
  }
}

}  // namespace

BetaEquationSides beta_equation_sides(const WeakFitStats& stats, const CostMatrix& c,
                                      double beta) {
  check_stats(stats, c);
  const double scale = static_cast<double>(c.k()) / (c.k() - 1);
  BetaEquationSides sides;
  for (Label j = 1; j <= c.k(); ++j) {
    const double row = c.row_sum(j);
    sides.successes += stats.success[j - 1] * row * std::exp(-beta * scale * row);
    for (Label k = 1; k <= c.k(); ++k) {
      if (k == j) continue;
      sides.errors += stats.error(j - 1, k - 1) * c(j, k) * std::exp(beta * scale * c(j, k));
    }
  }
  return sides;
}

BetaResult solve_beta(const WeakFitStats& stats, const CostMatrix& c) {
  check_stats(stats, c);
  const double scale = static_cast<double>(c.k()) / (c.k() - 1);
  // g(beta) = log(error side) - log(success side) is strictly increasing, so
  // its zero is the unique positive root when g(0) < 0.
  ExpSum errors;
  ExpSum successes;
  for (Label j = 1; j <= c.k(); ++j) {
    const double row = c.row_sum(j);
    successes.add(stats.success[j - 1] * row, -scale * row);
    for (Label k = 1; k <= c.k(); ++k) {
      if (k != j) errors.add(stats.error(j - 1, k - 1) * c(j, k), scale * c(j, k));
    }
  }
  BetaResult result;
  if (errors.empty()) {
    result.status = BetaStatus::no_errors;
    return result;
  }
  if (successes.empty()) {
    result.status = BetaStatus::too_weak;
    return result;
  }
  auto g = [&](double beta) {
    const auto [le, de] = errors.log_value(beta);
    const auto [ls, ds] = successes.log_value(beta);
    return std::pair{le - ls, de - ds};
  };
  if (g(0.0).first >= 0.0) {
    result.status = BetaStatus::too_weak;
    return result;
  }

  double lo = 0.0;
  double hi = 1.0;
  while (g(hi).first < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorKind::invalid_argument, "beta bracket did not close");
  }

  // Newton steps, falling back to bisection whenever a step leaves the bracket.
  double beta = 0.5 * (lo + hi);
  int it = 0;
  for (; it < kMaxSolverIterations; ++it) {
    const auto [value, slope] = g(beta);
    if (std::abs(value) <= 1e-14) break;
    if (value < 0.0) {
      lo = beta;
    } else {
      hi = beta;
    }
    double next = beta - value / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == beta || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      beta = next;
      break;
    }
    beta = next;
  }
  result.beta = beta;
  result.iterations = it + 1;
  return result;
}

double samme_beta(double total_error, int k) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "SAMME step needs K >= 2");
  const double chance = static_cast<double>(k - 1) / k;
  if (!(total_error > 0.0) || !(total_error <= chance)) {
    throw Error(ErrorKind::invalid_argument, "total error must lie in (0, (K-1)/K]");
  }
  if (total_error == chance) return 0.0;
  const double km1 = k - 1;
  return km1 * km1 / k * (std::log((1.0 - total_error) / total_error) + std::log(km1));
}

BetaResult cs_adaboost_beta(double c1, double c2, double b, double d, double t1, double t2) {
  for (double v : {c1, c2, b, d, t1, t2}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::invalid_argument, "cost-sensitive AdaBoost inputs must be >= 0");
    }
  }
  if (!(b < t1 || (b == 0.0 && t1 == 0.0)) || !(d < t2 || (d == 0.0 && t2 == 0.0))) {
    throw Error(ErrorKind::invalid_argument, "error masses must be below class masses");
  }
  BetaResult result;
  if (c1 * b + c2 * d == 0.0) {
    result.status = BetaStatus::no_errors;
    return result;
  }
  auto residual = [&](double beta) {
    return 2.0 * c1 * b * std::cosh(beta * c1) + 2.0 * c2 * d * std::cosh(beta * c2) -
           t1 * c1 * std::exp(-beta * c1) - t2 * c2 * std::exp(-beta * c2);
  };
  if (residual(0.0) >= 0.0) {
    result.status = BetaStatus::too_weak;
    return result;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  int it = 0;
  for (; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  result.beta = 0.5 * (lo + hi);
  result.iterations = it;
  return result;
}

double evaluate_polynomial(std::span<const PolynomialTerm> terms, double x) {
  double total = 0.0;
  for (const auto& t : terms) total += t.coefficient * std::pow(x, t.degree);
  return total;
}

PiBoostBeta piboost_beta(int s, int k, double e1, double e2, double a1, double a2) {
  if (k < 2 || s < 1 || s >= k) throw Error(ErrorKind::invalid_argument, "need 1 <= s < K");
  if (!(e1 >= 0.0 && e1 <= a1) || !(e2 >= 0.0 && e2 <= a2)) {
    throw Error(ErrorKind::invalid_argument, "need 0 <= E1 <= A1 and 0 <= E2 <= A2");
  }
  if (std::abs(a1 + a2 - 1.0) > 1e-9) throw Error(ErrorKind::invalid_argument, "need A1 + A2 = 1");

  const int shift = std::max(0, 2 * s - k);
  std::vector<PolynomialTerm> raw = {
      {2 * (k - s) + shift, e1 * (k - s)},
      {k + shift, e2 * s},
      {k - 2 * s + shift, -s * (a2 - e2)},
      {shift, -(k - s) * (a1 - e1)},
  };
  std::sort(raw.begin(), raw.end(),
            [](const PolynomialTerm& x, const PolynomialTerm& y) { return x.degree > y.degree; });
  PiBoostBeta out;
  for (const auto& t : raw) {
    if (!out.polynomial.empty() && out.polynomial.back().degree == t.degree) {
      out.polynomial.back().coefficient += t.coefficient;
    } else {
      out.polynomial.push_back(t);
    }
  }
  std::erase_if(out.polynomial, [](const PolynomialTerm& t) { return t.coefficient == 0.0; });

  if (e1 == 0.0 && e2 == 0.0) {
    out.status = BetaStatus::no_errors;
    return out;
  }
  auto p = [&](double x) { return evaluate_polynomial(out.polynomial, x); };
  if (p(1.0) >= 0.0) {
    out.status = BetaStatus::too_weak;
    return out;
  }
  double lo = 1.0;
  double hi = 2.0;
  while (p(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (p(mid) < 0.0 ? lo : hi) = mid;
  }
  out.root = std::abs(p(lo)) <= std::abs(p(hi)) ? lo : hi;
  out.beta = static_cast<double>(s) * (k - s) * (k - 1) * std::log(out.root);
  return out;
}

Ensemble::Ensemble(CostMatrix cost, std::size_t n_features, double shrinkage,
                   std::vector<std::string> feature_names)
    : cost_(std::move(cost)),
      c_star_(extend_cost_matrix(cost_)),
      codes_(cost_.k()),
      n_features_(n_features),
      shrinkage_(shrinkage),
      feature_names_(std::move(feature_names)) {
  if (n_features_ == 0) throw Error(ErrorKind::invalid_argument, "ensemble needs >= 1 feature");
  if (!(shrinkage_ > 0.0) || shrinkage_ > 1.0) {
    throw Error(ErrorKind::invalid_argument, "shrinkage must be in (0, 1]");
  }
  if (!feature_names_.empty() && feature_names_.size() != n_features_) {
    throw Error(ErrorKind::dimension_mismatch, "feature name count differs from feature count");
  }
}

void Ensemble::add(double beta, CostTree tree) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::invalid_argument, "member beta must be positive and finite");
  }
  if (tree.max_feature() >= static_cast<int>(n_features_)) {
    throw Error(ErrorKind::dimension_mismatch, "tree reads a feature beyond the ensemble's inputs");
  }
  for (const TreeNode& node : tree.nodes()) {
    if (node.is_leaf() && node.label > k()) {
      throw Error(ErrorKind::invalid_argument, "tree leaf label exceeds K");
    }
  }
  members_.push_back({beta, std::move(tree)});
}

void Ensemble::check_dimension(std::span<const double> x) const {
  if (x.size() != n_features_) {
    std::ostringstream msg;
    msg << "feature vector has " << x.size() << " values, model expects " << n_features_;
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
}

std::vector<double> Ensemble::margin_vector(std::span<const double> x) const {
  check_dimension(x);
  std::vector<double> f(k(), 0.0);
  for (const Member& m : members_) codes_.accumulate(m.tree.predict(x), m.beta, f);
  return f;
}

Label Ensemble::predict(std::span<const double> x) const {
  return min_cost_label(margin_vector(x), c_star_);
}

Matrix tree_fitting_cost(const ExtendedCostMatrix& c_star, const CostMatrix& c) {
  const int k = c.k();
  Matrix m(k, k);
  for (Label i = 1; i <= k; ++i) {
    for (Label j = 1; j <= k; ++j) m(i - 1, j - 1) = c_star(i, j) / c.max_entry();
  }
  return m;
}

TrainResult train(const Dataset& data, const CostMatrix& c, const TrainParams& params,
                  const RoundObserver& observer) {
  if (data.size() == 0) throw Error(ErrorKind::empty_input, "training data is empty");
  if (c.k() != data.k()) {
    std::ostringstream msg;
    msg << "cost matrix is " << c.k() << "x" << c.k() << " but the data has K = " << data.k();
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
  if (params.rounds < 1) throw Error(ErrorKind::invalid_argument, "rounds must be >= 1");
  if (params.depth < 1) throw Error(ErrorKind::invalid_argument, "depth must be >= 1");
  if (!(params.beta_cap > 0.0)) throw Error(ErrorKind::invalid_argument, "beta cap must be > 0");

  TrainResult out{Ensemble(c, data.n_features(), params.shrinkage, data.feature_names()), {}};
  Ensemble& ensemble = out.ensemble;
  const ExtendedCostMatrix& c_star = ensemble.c_star();
  const Matrix fit_cost = tree_fitting_cost(c_star, c);
  const std::size_t n = data.size();
  const auto k = static_cast<std::size_t>(c.k());

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<double> margins(n * k, 0.0);  // f_m(x_n), row per sample
  std::vector<Label> predicted(n);
  std::vector<double> factor(n);

  for (int round = 1; round <= params.rounds; ++round) {
    TreeParams tree_params;
    tree_params.depth_limit = params.depth;
    tree_params.feature_fraction = params.feature_fraction;
    tree_params.seed = derive_seed(params.seed, kTreeStream, static_cast<std::uint64_t>(round));
    CostTree tree = fit_cost_tree(data, weights, fit_cost, tree_params);

    for (std::size_t i = 0; i < n; ++i) predicted[i] = tree.predict(data.row(i));
    const WeakFitStats stats = evaluate_stats(tree, data, weights);
    const double objective = weighted_modified_cost(tree, data, weights, fit_cost);

    const BetaResult solved = solve_beta(stats, c);
    if (solved.status == BetaStatus::too_weak) {
      out.report.stop = StopReason::too_weak;
      break;
    }
    double beta = solved.ok() ? solved.beta : params.beta_cap / c.max_entry();
    beta *= params.shrinkage;

    // w(n) <- w(n) exp(beta C*(l_n, -) . y_G(x_n)), shifted by the largest
    // factor before exponentiating; the shift cancels on renormalization.
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      factor[i] = beta * cost_margin(c_star, data.label(i), predicted[i]);
      top = std::max(top, factor[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] *= clamped_exp(factor[i] - top);
      total += weights[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw Error(ErrorKind::invalid_argument, "sample weights underflowed during training");
    }
    for (double& w : weights) w /= total;

    RoundRecord record;
    record.round = round;
    record.beta = beta;
    record.objective = objective;
    double loss = 0.0;
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> f(margins.data() + i * k, k);
      ensemble.codes().accumulate(predicted[i], beta, f);
      const auto row = c_star.row(data.label(i));
      double z = 0.0;
      for (std::size_t j = 0; j < k; ++j) z += row[j] * f[j];
      loss += clamped_exp(z, &out.report.loss_saturated);
      cost += c(data.label(i), min_cost_label(f, c_star));
    }
    record.cmel = loss / static_cast<double>(n);
    record.train_cost = cost / static_cast<double>(n);

    ensemble.add(beta, std::move(tree));
    out.report.rounds.push_back(record);
    if (observer) observer(round, ensemble, weights);

    if (solved.status == BetaStatus::no_errors && !params.continue_on_no_errors) {
      out.report.stop = StopReason::no_errors;
      break;
    }
  }
  return out;
}

std::string report_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "round,beta,objective,cmel,train_cost\n";
  for (const RoundRecord& r : report.rounds) {
    out << r.round << ',' << format_double(r.beta) << ',' << format_double(r.objective) << ','
        << format_double(r.cmel) << ',' << format_double(r.train_cost) << '\n';
  }
  return out.str();
}

}  // namespace badacost

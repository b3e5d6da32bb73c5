#pragma once

// Reference computations used only by tests. Each one takes a different
// route from the library code it checks (per-sample loops, explicit code
// vectors, grid scans) so the two can disagree when either is wrong.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "badacost/booster.hpp"
#include "badacost/cost_model.hpp"
#include "badacost/dataset.hpp"
#include "badacost/weak_learner.hpp"

namespace oracle {

using badacost::Label;

inline std::vector<double> code(int k, Label l) {
  std::vector<double> y(k);
  for (int i = 0; i < k; ++i) y[i] = (i + 1 == l) ? 1.0 : -1.0 / (k - 1.0);
  return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Row `l` of C* built straight from C.
inline std::vector<double> c_star_row(const badacost::CostMatrix& c, Label l) {
  std::vector<double> row(c.k());
  double sum = 0.0;
  for (Label j = 1; j <= c.k(); ++j) {
    row[j - 1] = c(l, j);
    sum += c(l, j);
  }
  row[l - 1] = -sum;
  return row;
}

/// f(x) = sum_m beta_m y_{G_m(x)} with explicitly materialized code vectors.
inline std::vector<double> margin(const badacost::Ensemble& e, std::span<const double> x) {
  std::vector<double> f(e.k(), 0.0);
  for (const auto& m : e.members()) {
    const auto y = code(e.k(), m.tree.predict(x));
    for (int i = 0; i < e.k(); ++i) f[i] += m.beta * y[i];
  }
  return f;
}

inline Label argmin_cost(const badacost::CostMatrix& c, const std::vector<double>& f) {
  Label best = 1;
  double best_v = std::numeric_limits<double>::infinity();
  for (Label k = 1; k <= c.k(); ++k) {
    const double v = dot(c_star_row(c, k), f);
    if (v < best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

/// Normalized exp(C*(l_n, -) . f(x_n)) recomputed from the ensemble.
inline std::vector<double> weights_from_scratch(const badacost::Ensemble& e,
                                                const badacost::Dataset& d) {
  std::vector<double> z(d.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < d.size(); ++n) {
    z[n] = dot(c_star_row(e.cost(), d.label(n)), margin(e, d.row(n)));
    top = std::max(top, z[n]);
  }
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

/// Per-sample recount of S_j and E_{j,k}.
inline badacost::WeakFitStats recount(const std::vector<Label>& truth,
                                      const std::vector<Label>& predicted,
                                      const std::vector<double>& w, int k) {
  badacost::WeakFitStats s{std::vector<double>(k, 0.0), badacost::Matrix(k, k, 0.0)};
  for (Label j = 1; j <= k; ++j) {
    for (Label g = 1; g <= k; ++g) {
      double mass = 0.0;
      for (std::size_t n = 0; n < truth.size(); ++n) {
        if (truth[n] == j && predicted[n] == g) mass += w[n];
      }
      if (j == g) s.success[j - 1] = mass; else s.error(j - 1, g - 1) = mass;
    }
  }
  return s;
}

/// Grid scan for sign changes of f on [lo, hi].
inline int sign_changes(const std::function<double(double)>& f, double lo, double hi, int steps) {
  int changes = 0;
  double prev = f(lo);
  for (int i = 1; i <= steps; ++i) {
    const double v = f(lo + (hi - lo) * i / steps);
    if ((prev < 0.0 && v >= 0.0) || (prev > 0.0 && v <= 0.0)) ++changes;
    if (v != 0.0) prev = v;
  }
  return changes;
}

/// Dense grid to find a bracket, then plain bisection.
inline double grid_bisect(const std::function<double(double)>& f, double lo, double hi, int steps) {
  double a = lo;
  double fa = f(a);
  for (int i = 1; i <= steps; ++i) {
    double b = lo + (hi - lo) * i / steps;
    const double fb = f(b);
    if ((fa < 0.0) != (fb < 0.0)) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if ((f(m) < 0.0) == (fa < 0.0)) a = m; else b = m;
      }
      return 0.5 * (a + b);
    }
    a = b;
    fa = fb;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Loss of the scaled-0|1 problem written as SAMME writes it: exp(-y_l . f / K).
inline double mel(int k, Label l, const std::vector<double>& f) {
  return std::exp(-dot(code(k, l), f) / k);
}

}  // namespace oracle

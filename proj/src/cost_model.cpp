#include "badacost/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "badacost/error.hpp"

namespace badacost {

namespace {

void check_label(Label l, int k, const char* what) {
  if (l < 1 || l > k) {
    std::ostringstream msg;
    msg << what << " label " << l << " outside 1.." << k;
    throw Error(ErrorKind::invalid_argument, msg.str());
  }
}

void check_size(std::size_t n, int k, const char* what) {
  if (n != static_cast<std::size_t>(k)) {
    std::ostringstream msg;
    msg << what << " has length " << n << ", expected " << k;
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
}

}  // namespace

double clamped_exp(double x, bool* saturated) {
  if (x > kExpClamp || x < -kExpClamp) {
    if (saturated != nullptr) *saturated = true;
    x = std::clamp(x, -kExpClamp, kExpClamp);
  }
  return std::exp(x);
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  const std::size_t k = entries_.rows();
  if (k < 2 || entries_.cols() != k) {
    std::ostringstream msg;
    msg << "cost matrix must be square with K >= 2, got " << entries_.rows() << "x"
        << entries_.cols();
    throw Error(ErrorKind::invalid_cost_matrix, msg.str());
  }
  for (std::size_t i = 0; i < k; ++i) {
    double off_diagonal = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream msg;
        msg << "cost entry (" << i + 1 << "," << j + 1 << ") = " << v
            << " must be finite and nonnegative";
        throw Error(ErrorKind::invalid_cost_matrix, msg.str());
      }
      if (i == j) {
        if (v != 0.0) {
          std::ostringstream msg;
          msg << "cost diagonal entry (" << i + 1 << "," << i + 1 << ") must be 0";
          throw Error(ErrorKind::invalid_cost_matrix, msg.str());
        }
      } else {
        off_diagonal += v;
      }
    }
    if (!(off_diagonal > 0.0)) {
      std::ostringstream msg;
      msg << "cost row " << i + 1 << " has no positive off-diagonal cost";
      throw Error(ErrorKind::invalid_cost_matrix, msg.str());
    }
  }
}

double CostMatrix::row_sum(Label truth) const {
  double s = 0.0;
  for (double v : entries_.row(truth - 1)) s += v;
  return s;
}

double CostMatrix::max_entry() const {
  double m = 0.0;
  for (double v : entries_.data()) m = std::max(m, v);
  return m;
}

CostMatrix CostMatrix::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorKind::invalid_argument, "cost scale factor must be positive");
  }
  Matrix m = entries_;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= factor;
  }
  return CostMatrix(std::move(m));
}

ExtendedCostMatrix extend_cost_matrix(const CostMatrix& c) {
  ExtendedCostMatrix out;
  out.c_star_ = c.entries();
  const int k = c.k();
  for (int j = 1; j <= k; ++j) {
    out.c_star_(j - 1, j - 1) = -c.row_sum(j);
  }
  return out;
}

Matrix ExtendedCostMatrix::modified_cost(double beta) const {
  const std::size_t k = c_star_.rows();
  Matrix a(k, k);
  const double scale = beta * margin_scale();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a(i, j) = clamped_exp(scale * c_star_(i, j));
  }
  return a;
}

LabelCodeSet::LabelCodeSet(int k) : k_(k) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "label codes need K >= 2");
}

std::vector<double> LabelCodeSet::code(Label l) const {
  check_label(l, k_, "code");
  std::vector<double> y(k_, -1.0 / (k_ - 1));
  y[l - 1] = 1.0;
  return y;
}

void LabelCodeSet::accumulate(Label l, double weight, std::span<double> f) const {
  check_label(l, k_, "code");
  check_size(f.size(), k_, "margin vector");
  const double off = -weight / (k_ - 1);
  for (int i = 0; i < k_; ++i) f[i] += (i == l - 1) ? weight : off;
}

double cost_margin(const ExtendedCostMatrix& c_star, Label true_label, Label predicted_label) {
  check_label(true_label, c_star.k(), "true");
  check_label(predicted_label, c_star.k(), "predicted");
  return c_star.margin_scale() * c_star(true_label, predicted_label);
}

LossValue cmel(const ExtendedCostMatrix& c_star, Label true_label,
               std::span<const double> margin_vector) {
  check_label(true_label, c_star.k(), "true");
  check_size(margin_vector.size(), c_star.k(), "margin vector");
  double sum = 0.0;
  double magnitude = 0.0;
  for (double v : margin_vector) {
    sum += v;
    magnitude += std::abs(v);
  }
  if (std::abs(sum) > 1e-9 * std::max(1.0, magnitude)) {
    throw Error(ErrorKind::invalid_argument, "margin vector does not sum to zero");
  }
  const auto row = c_star.row(true_label);
  double z = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) z += row[i] * margin_vector[i];
  LossValue out;
  out.value = clamped_exp(z, &out.saturated);
  return out;
}

Label min_cost_label(std::span<const double> f, const ExtendedCostMatrix& c_star) {
  check_size(f.size(), c_star.k(), "margin vector");
  Label best = 1;
  double best_cost = 0.0;
  for (Label k = 1; k <= c_star.k(); ++k) {
    const auto row = c_star.row(k);
    double cost = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) cost += row[i] * f[i];
    if (k == 1 || cost < best_cost) {
      best = k;
      best_cost = cost;
    }
  }
  return best;
}

Label min_cost_decision(std::span<const double> posterior, const CostMatrix& c) {
  check_size(posterior.size(), c.k(), "posterior");
  double total = 0.0;
  for (double p : posterior) {
    if (!(p >= 0.0)) throw Error(ErrorKind::invalid_argument, "posterior entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_argument, "posterior must sum to 1");
  }
  Label best = 1;
  double best_risk = 0.0;
  for (Label j = 1; j <= c.k(); ++j) {
    double risk = 0.0;
    for (Label i = 1; i <= c.k(); ++i) risk += posterior[i - 1] * c(i, j);
    if (j == 1 || risk < best_risk) {
      best = j;
      best_risk = risk;
    }
  }
  return best;
}

std::vector<double> posterior_from_scores(std::span<const double> f) {
  if (f.empty()) return {};
  const double top = *std::max_element(f.begin(), f.end());
  std::vector<double> p(f.size());
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    p[i] = std::exp(f[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

CostMatrix make_01_cost(int k, double scale) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "0|1 cost needs K >= 2");
  if (!(scale > 0.0)) throw Error(ErrorKind::invalid_argument, "0|1 cost scale must be > 0");
  Matrix m(k, k, scale);
  for (int i = 0; i < k; ++i) m(i, i) = 0.0;
  return CostMatrix(std::move(m));
}

CostMatrix make_detection_cost(int k_positive, double fn_weight) {
  if (k_positive < 1) throw Error(ErrorKind::invalid_argument, "need at least one positive class");
  if (!(fn_weight > 0.0)) throw Error(ErrorKind::invalid_argument, "FN weight must be > 0");
  const int k = k_positive + 1;
  Matrix m(k, k, 1.0);
  for (int i = 0; i < k; ++i) m(i, i) = 0.0;
  for (int j = 1; j < k; ++j) m(j, 0) = fn_weight;
  return CostMatrix(std::move(m));
}

CostMatrix make_circular_view_cost(int k_positive, double fp_weight, double fn_weight,
                                   double view_weight) {
  if (k_positive < 4 || k_positive % 2 != 0) {
    throw Error(ErrorKind::invalid_argument, "circular view cost needs an even K_p >= 4");
  }
  if (!(fp_weight > 0.0) || !(fn_weight > 0.0) || !(view_weight > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "circular view cost weights must be > 0");
  }
  const int k = k_positive + 1;
  const double kp = k_positive;
  Matrix m(k, k, 0.0);
  for (int j = 1; j < k; ++j) {
    m(0, j) = fp_weight;
    m(j, 0) = fn_weight;
  }
  for (int i = 1; i < k; ++i) {
    for (int j = 1; j < k; ++j) {
      if (i == j) continue;
      const double gap = std::abs(i - j);
      m(i, j) = view_weight * (1.0 - std::abs((2.0 * gap - kp) / kp));
    }
  }
  return CostMatrix(std::move(m));
}

}  // namespace badacost

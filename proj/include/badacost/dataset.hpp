#pragma once

#include <span>
#include <string>
#include <vector>

#include "badacost/cost_model.hpp"
#include "badacost/matrix.hpp"

namespace badacost {

/// N feature vectors with labels in 1..K. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  /// Validates shape, finiteness and label range. Empty feature names are
  /// replaced by x1..xD.
  Dataset(Matrix features, std::vector<Label> labels, int k,
          std::vector<std::string> feature_names = {}, std::string label_name = "label");

  std::size_t size() const { return labels_.size(); }
  std::size_t n_features() const { return features_.cols(); }
  int k() const { return k_; }

  std::span<const double> row(std::size_t n) const { return features_.row(n); }
  double feature(std::size_t n, std::size_t d) const { return features_(n, d); }
  Label label(std::size_t n) const { return labels_[n]; }

  const Matrix& features() const { return features_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& label_name() const { return label_name_; }

  /// Rows selected by `indices`, same K and column names.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Number of samples per label; index 0 holds label 1.
  std::vector<std::size_t> class_counts() const;

  bool operator==(const Dataset&) const = default;

 private:
  Matrix features_;
  std::vector<Label> labels_;
  int k_ = 0;
  std::vector<std::string> feature_names_;
  std::string label_name_;
};

}  // namespace badacost

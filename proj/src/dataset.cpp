#include "badacost/dataset.hpp"

#include <cmath>
#include <sstream>

#include "badacost/error.hpp"

namespace badacost {

Dataset::Dataset(Matrix features, std::vector<Label> labels, int k,
                 std::vector<std::string> feature_names, std::string label_name)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      k_(k),
      feature_names_(std::move(feature_names)),
      label_name_(std::move(label_name)) {
  if (labels_.empty()) throw Error(ErrorKind::empty_input, "dataset has no samples");
  if (features_.cols() == 0) throw Error(ErrorKind::empty_input, "dataset has no features");
  if (features_.rows() != labels_.size()) {
    throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in count");
  }
  if (k_ < 2) throw Error(ErrorKind::invalid_argument, "dataset needs K >= 2");
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] < 1 || labels_[n] > k_) {
      std::ostringstream msg;
      msg << "sample " << n + 1 << " has label " << labels_[n] << " outside 1.." << k_;
      throw Error(ErrorKind::invalid_argument, msg.str());
    }
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite feature value");
  }
  if (feature_names_.empty()) {
    for (std::size_t d = 0; d < features_.cols(); ++d) {
      feature_names_.push_back("x" + std::to_string(d + 1));
    }
  } else if (feature_names_.size() != features_.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "feature name count differs from column count");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Matrix m(indices.size(), n_features());
  std::vector<Label> l(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), m.row(r).begin());
    l[r] = labels_[indices[r]];
  }
  return Dataset(std::move(m), std::move(l), k_, feature_names_, label_name_);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(k_, 0);
  for (Label l : labels_) ++counts[l - 1];
  return counts;
}

}  // namespace badacost

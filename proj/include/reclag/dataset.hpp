#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "reclag/core.hpp"

namespace reclag {

/// A set of feature vectors, one per row, with optional class labels and
/// classifier logits aligned by row.
struct Dataset {
  Matrix features;
  std::optional<std::vector<std::uint32_t>> labels;
  std::optional<Matrix> logits;

  Eigen::Index size() const noexcept { return features.rows(); }
  Eigen::Index dim() const noexcept { return features.cols(); }
  bool empty() const noexcept { return features.rows() == 0; }

  Vector sample(Eigen::Index i) const { return features.row(i).transpose(); }

  /// Throws on misaligned labels/logits or non-finite entries.
  void validate() const;

  friend bool operator==(const Dataset& a, const Dataset& b);
};

}  // namespace reclag

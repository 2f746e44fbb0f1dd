#include "reclag/dataset.hpp"

#include <string>

namespace reclag {

void Dataset::validate() const {
  if (labels) detail::require_dim(static_cast<Eigen::Index>(labels->size()), size(), "labels");
  if (logits) detail::require_dim(logits->rows(), size(), "logit rows");
  detail::require(features.allFinite(), "features contain non-finite values");
  if (logits) detail::require(logits->allFinite(), "logits contain non-finite values");
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.features.rows() != b.features.rows() || a.features.cols() != b.features.cols()) return false;
  if (a.features != b.features) return false;
  if (a.labels != b.labels) return false;
  if (a.logits.has_value() != b.logits.has_value()) return false;
  if (a.logits) {
    if (a.logits->rows() != b.logits->rows() || a.logits->cols() != b.logits->cols()) return false;
    if (*a.logits != *b.logits) return false;
  }
  return true;
}

}  // namespace reclag

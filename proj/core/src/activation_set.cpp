#include "infoflow/activation_set.hpp"

#include <stdexcept>

namespace infoflow {

void ActivationSet::validate() const {
  if (!values.allFinite()) {
    throw std::invalid_argument("activation set has non-finite entries");
  }
  if (labels && labels->size() != values.rows()) {
    throw std::invalid_argument("activation set label length mismatch");
  }
}

}  // namespace infoflow

#pragma once

#include <Eigen/Dense>
#include <optional>

namespace infoflow {

/// A batch of layer outputs: one row per sample. `values` holds S_l (before
/// this layer's noise) or T_l depending on how it was produced; `noisy` says
/// whether upstream noise was active.
struct ActivationSet {
  Eigen::MatrixXd values;  // n x d
  std::optional<Eigen::VectorXd> labels;  // class index or scalar target
  int layer_index = 0;
  int epoch = 0;
  bool noisy = false;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }

  /// Throws std::invalid_argument on non-finite values or label length
  /// mismatch.
  void validate() const;
};

}  // namespace infoflow

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "infoflow/activation_set.hpp"

namespace infoflow {

enum class Activation { kTanh, kRelu, kLeakyRelu, kSigmoid, kLinear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One affine-plus-nonlinearity layer with additive output noise:
/// S = act(W t + b), T = S + N(0, beta^2 I).
struct Layer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim
  Activation activation = Activation::kTanh;
  double leaky_slope = 0.1;
  double beta = 0.0;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

struct NoisyNet {
  std::vector<Layer> layers;

  Eigen::Index input_dim() const {
    return layers.empty() ? 0 : layers.front().in_dim();
  }
  Eigen::Index output_dim() const {
    return layers.empty() ? 0 : layers.back().out_dim();
  }
  int depth() const { return static_cast<int>(layers.size()); }
  bool deterministic() const;

  /// Throws std::invalid_argument on incompatible adjacent dimensions or
  /// non-finite parameters.
  void validate() const;
};

/// Fully connected net with uniform fan-in initialization
/// U(-1/sqrt(in), 1/sqrt(in)) for weights and biases. Hidden layers use
/// `hidden`, the last layer uses `output`; every layer gets noise `beta`.
NoisyNet make_mlp(const std::vector<int>& dims, Activation hidden,
                  Activation output, double beta, std::uint64_t seed);

/// Elementwise activation applied in place.
void apply_activation(Activation a, double leaky_slope, Eigen::MatrixXd& m);

/// Elementwise derivative given pre-activation values.
Eigen::MatrixXd activation_derivative(Activation a, double leaky_slope,
                                      const Eigen::MatrixXd& pre);

struct ForwardMode {
  bool noisy = false;
  std::uint64_t seed = 0;
  static ForwardMode deterministic() { return {false, 0}; }
  static ForwardMode with_noise(std::uint64_t seed) { return {true, seed}; }
};

/// Per-layer (S_l, T_l) pairs for a single input.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre_noise;   // S_l, l = 1..L
  std::vector<Eigen::VectorXd> post_noise;  // T_l, l = 1..L
};

ForwardTrace forward(const NoisyNet& net, const Eigen::VectorXd& x,
                     const ForwardMode& mode);

/// Parseval secondary update: W - alpha (W W^T - I) W.
Eigen::MatrixXd orthonormal_step(const Eigen::MatrixXd& w, double alpha);

/// Labeled inputs; labels are class indices (stored as doubles) or scalar
/// regression targets.
struct LabeledDataset {
  Eigen::MatrixXd inputs;  // m x d0
  Eigen::VectorXd labels;  // m
  bool class_labels = true;
  std::string name;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  int num_classes() const;
  void validate() const;
};

/// Propagate every dataset row to layer `layer` (1-based) and return the
/// pre-noise values S_layer. `mode` controls noise in layers 1..layer-1.
ActivationSet collect_activations(const NoisyNet& net,
                                  const LabeledDataset& data, int layer,
                                  const ForwardMode& mode);

/// n_x independent draws of S_layer given a fixed input x (fresh noise in
/// layers 1..layer-1 per draw). Requires layer >= 2: for the first layer the
/// conditional law is the pure noise Gaussian and needs no sampling.
ActivationSet conditional_activations(const NoisyNet& net,
                                      const Eigen::VectorXd& x, int layer,
                                      Eigen::Index n_x, std::uint64_t seed);

enum class LossKind { kMeanSquared, kCrossEntropy };

struct TrainConfig {
  LossKind loss = LossKind::kMeanSquared;
  double learning_rate = 1e-3;
  /// Per-epoch geometric step-size factor; 1.0 keeps the rate constant.
  double lr_decay = 1.0;
  int epochs = 1;
  int batch_size = 0;  // 0 = full batch
  double ortho_alpha = 0.0;
  bool noise_during_training = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-layer noise draws for one batch; reusing the same draws makes the
/// loss a fixed differentiable function (finite-difference checks).
struct FrozenNoise {
  std::vector<Eigen::MatrixXd> z;  // per layer, rows x d_l
};

FrozenNoise draw_noise(const NoisyNet& net, Eigen::Index rows,
                       std::uint64_t seed);

/// Mean loss over the batch. MSE has no 1/2 factor; cross-entropy is softmax
/// negative log-likelihood in nats. `noise` may be null for a noiseless pass.
double batch_loss(const NoisyNet& net, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& labels, LossKind loss,
                  const FrozenNoise* noise);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

/// Backpropagated gradients of batch_loss; additive noise passes gradients
/// through unchanged. Returns the loss value as well.
Gradients batch_gradients(const NoisyNet& net, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& labels, LossKind loss,
                          const FrozenNoise* noise, double* loss_out);

struct TrainResult {
  std::vector<double> train_loss;             // one entry per epoch
  std::vector<double> test_loss;              // empty without a test set
  std::vector<std::pair<int, NoisyNet>> checkpoints;  // (epoch, snapshot)
};

/// Plain (S)GD with backprop. Fresh noise per forward pass when configured;
/// Parseval update after each step when ortho_alpha > 0; snapshots taken at
/// the requested epochs (0 = initial parameters, e = after e epochs).
/// Throws NumericalError when the loss stops being finite.
TrainResult train(NoisyNet& net, const LabeledDataset& data,
                  const TrainConfig& cfg,
                  const std::vector<int>& checkpoint_epochs = {},
                  const LabeledDataset* test = nullptr);

/// Fraction of rows whose argmax logit (class datasets) or rounded output
/// matches the label; deterministic forward.
double classification_accuracy(const NoisyNet& net, const LabeledDataset& data);

}  // namespace infoflow

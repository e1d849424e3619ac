#include "infoflow/noisy_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "infoflow/errors.hpp"
#include "infoflow/rng.hpp"

namespace infoflow {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  throw std::invalid_argument("unknown activation: " + name);
}

bool NoisyNet::deterministic() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const Layer& l) { return l.beta == 0.0; });
}

void NoisyNet::validate() const {
  if (layers.empty()) throw std::invalid_argument("net has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.weights.rows() != layer.bias.size()) {
      throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                  ": bias size mismatch");
    }
    if (l > 0 && layers[l - 1].out_dim() != layer.in_dim()) {
      throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                  ": input dim does not match previous layer");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                  ": non-finite parameters");
    }
    if (layer.beta < 0.0 || !std::isfinite(layer.beta)) {
      throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                  ": beta must be >= 0");
    }
  }
}

NoisyNet make_mlp(const std::vector<int>& dims, Activation hidden,
                  Activation output, double beta, std::uint64_t seed) {
  if (dims.size() < 2) {
    throw std::invalid_argument("make_mlp: need input and output dims");
  }
  NoisyNet net;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    Layer layer;
    const int in = dims[l - 1];
    const int out = dims[l];
    if (in < 1 || out < 1) {
      throw std::invalid_argument("make_mlp: dims must be positive");
    }
    layer.weights.resize(out, in);
    layer.bias.resize(out);
    layer.activation = l + 1 == dims.size() ? output : hidden;
    layer.beta = beta;
    // Weight bound sqrt(3/fan_in) gives per-entry variance 1/fan_in, which
    // keeps signal magnitudes roughly constant through deep narrow stacks.
    // Bias offsets stay small so tanh units start unsaturated.
    const double w_scale = std::sqrt(3.0 / static_cast<double>(in));
    const double b_scale = 0.1 / std::sqrt(static_cast<double>(in));
    auto stream = rng::substream(
        seed, {rng::tag::kWeightInit, static_cast<std::uint64_t>(l)});
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) {
        layer.weights(r, c) = (2.0 * stream.uniform() - 1.0) * w_scale;
      }
    }
    for (int r = 0; r < out; ++r) {
      layer.bias[r] = (2.0 * stream.uniform() - 1.0) * b_scale;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void apply_activation(Activation a, double leaky_slope, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::kTanh:
      m = m.array().tanh().matrix();
      break;
    case Activation::kRelu:
      m = m.array().max(0.0).matrix();
      break;
    case Activation::kLeakyRelu:
      m = m.array().max(m.array() * leaky_slope).matrix();
      break;
    case Activation::kSigmoid:
      m = (1.0 / (1.0 + (-m.array()).exp())).matrix();
      break;
    case Activation::kLinear:
      break;
  }
}

Eigen::MatrixXd activation_derivative(Activation a, double leaky_slope,
                                      const Eigen::MatrixXd& pre) {
  switch (a) {
    case Activation::kTanh: {
      Eigen::ArrayXXd t = pre.array().tanh();
      return (1.0 - t * t).matrix();
    }
    case Activation::kRelu:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::kLeakyRelu:
      return (pre.array() > 0.0)
          .select(Eigen::ArrayXXd::Constant(pre.rows(), pre.cols(), 1.0),
                  Eigen::ArrayXXd::Constant(pre.rows(), pre.cols(),
                                            leaky_slope))
          .matrix();
    case Activation::kSigmoid: {
      Eigen::ArrayXXd s = 1.0 / (1.0 + (-pre.array()).exp());
      return (s * (1.0 - s)).matrix();
    }
    case Activation::kLinear:
      return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

namespace {

/// Per-row noise for one layer, streamed from per-row substreams so results
/// do not depend on batching.
Eigen::MatrixXd layer_noise(std::vector<rng::Stream>& row_streams,
                            Eigen::Index rows, Eigen::Index cols,
                            double beta) {
  Eigen::MatrixXd z(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      z(r, c) = row_streams[static_cast<std::size_t>(r)].normal() * beta;
    }
  }
  return z;
}

std::vector<rng::Stream> make_row_streams(std::uint64_t seed,
                                          std::uint64_t purpose,
                                          Eigen::Index rows) {
  std::vector<rng::Stream> streams;
  streams.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    streams.push_back(
        rng::substream(seed, {purpose, static_cast<std::uint64_t>(r)}));
  }
  return streams;
}

/// Propagate a batch to the pre-noise values of `layer` (1-based).
/// Noise is applied to layers 1..layer-1 only.
Eigen::MatrixXd propagate_to_layer(const NoisyNet& net,
                                   const Eigen::MatrixXd& x, int layer,
                                   const ForwardMode& mode,
                                   std::uint64_t stream_purpose) {
  std::vector<rng::Stream> streams;
  if (mode.noisy) {
    streams = make_row_streams(mode.seed, stream_purpose, x.rows());
  }
  Eigen::MatrixXd t = x;
  for (int l = 1; l <= layer; ++l) {
    const Layer& lay = net.layers[static_cast<std::size_t>(l - 1)];
    Eigen::MatrixXd pre = t * lay.weights.transpose();
    pre.rowwise() += lay.bias.transpose();
    apply_activation(lay.activation, lay.leaky_slope, pre);
    if (l == layer) return pre;  // S_layer, no noise on the target layer
    t = std::move(pre);
    if (mode.noisy && lay.beta > 0.0) {
      t += layer_noise(streams, t.rows(), t.cols(), lay.beta);
    }
  }
  return t;
}

}  // namespace

ForwardTrace forward(const NoisyNet& net, const Eigen::VectorXd& x,
                     const ForwardMode& mode) {
  net.validate();
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  ForwardTrace trace;
  std::vector<rng::Stream> streams;
  if (mode.noisy) {
    streams = make_row_streams(mode.seed, rng::tag::kForwardNoise, 1);
  }
  Eigen::VectorXd t = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& lay = net.layers[l];
    Eigen::MatrixXd pre = (lay.weights * t + lay.bias).transpose();
    apply_activation(lay.activation, lay.leaky_slope, pre);
    Eigen::VectorXd s = pre.transpose();
    Eigen::VectorXd noisy = s;
    if (mode.noisy && lay.beta > 0.0) {
      for (Eigen::Index k = 0; k < noisy.size(); ++k) {
        noisy[k] += streams[0].normal() * lay.beta;
      }
    }
    trace.pre_noise.push_back(std::move(s));
    trace.post_noise.push_back(noisy);
    t = std::move(noisy);
  }
  return trace;
}

Eigen::MatrixXd orthonormal_step(const Eigen::MatrixXd& w, double alpha) {
  if (alpha < 0.0) {
    throw std::invalid_argument("orthonormal_step: alpha must be >= 0");
  }
  const Eigen::MatrixXd gram = w * w.transpose();
  return w - alpha * (gram - Eigen::MatrixXd::Identity(w.rows(), w.rows())) * w;
}

int LabeledDataset::num_classes() const {
  if (!class_labels) return 0;
  int max_label = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    max_label = std::max(max_label, static_cast<int>(labels[i]));
  }
  return max_label + 1;
}

void LabeledDataset::validate() const {
  if (inputs.rows() < 1) throw std::invalid_argument("dataset is empty");
  if (labels.size() != inputs.rows()) {
    throw std::invalid_argument("dataset labels length mismatch");
  }
  if (!inputs.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite values");
  }
}

ActivationSet collect_activations(const NoisyNet& net,
                                  const LabeledDataset& data, int layer,
                                  const ForwardMode& mode) {
  net.validate();
  data.validate();
  if (layer < 1 || layer > net.depth()) {
    throw std::invalid_argument("collect_activations: layer out of range");
  }
  if (data.dim() != net.input_dim()) {
    throw std::invalid_argument("collect_activations: input dim mismatch");
  }
  ActivationSet acts;
  acts.values = propagate_to_layer(net, data.inputs, layer, mode,
                                   rng::tag::kForwardNoise);
  acts.labels = data.labels;
  acts.layer_index = layer;
  acts.noisy = mode.noisy;
  return acts;
}

ActivationSet conditional_activations(const NoisyNet& net,
                                      const Eigen::VectorXd& x, int layer,
                                      Eigen::Index n_x, std::uint64_t seed) {
  net.validate();
  if (layer < 2 || layer > net.depth()) {
    throw std::invalid_argument(
        "conditional_activations requires layer >= 2; the first layer's "
        "conditional law has the closed form entropy "
        "(d/2) log(2 pi e beta^2) and needs no sampling");
  }
  if (n_x < 1) throw std::invalid_argument("n_x must be >= 1");
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("conditional_activations: input dim mismatch");
  }
  Eigen::MatrixXd replicated = x.transpose().replicate(n_x, 1);
  ActivationSet acts;
  acts.values = propagate_to_layer(net, replicated, layer,
                                   ForwardMode::with_noise(seed),
                                   rng::tag::kForwardNoise);
  acts.layer_index = layer;
  acts.noisy = true;
  return acts;
}

void TrainConfig::validate() const {
  // Zero is allowed: a no-op trainer is handy for checkpoint plumbing tests.
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be nonnegative");
  }
  if (!(lr_decay > 0.0) || lr_decay > 1.0) {
    throw std::invalid_argument("lr_decay must lie in (0, 1]");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be >= 0");
  if (ortho_alpha < 0.0) {
    throw std::invalid_argument("ortho_alpha must be >= 0");
  }
}

FrozenNoise draw_noise(const NoisyNet& net, Eigen::Index rows,
                       std::uint64_t seed) {
  FrozenNoise noise;
  auto streams = make_row_streams(seed, rng::tag::kTrainNoise, rows);
  for (const Layer& lay : net.layers) {
    noise.z.push_back(layer_noise(streams, rows, lay.out_dim(), lay.beta));
  }
  return noise;
}

namespace {

struct BatchTrace {
  std::vector<Eigen::MatrixXd> pre;   // affine outputs before nonlinearity
  std::vector<Eigen::MatrixXd> post;  // T_l (with noise if provided)
};

BatchTrace batch_forward(const NoisyNet& net, const Eigen::MatrixXd& x,
                         const FrozenNoise* noise) {
  BatchTrace trace;
  Eigen::MatrixXd t = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& lay = net.layers[l];
    Eigen::MatrixXd pre = t * lay.weights.transpose();
    pre.rowwise() += lay.bias.transpose();
    Eigen::MatrixXd s = pre;
    apply_activation(lay.activation, lay.leaky_slope, s);
    if (noise != nullptr && lay.beta > 0.0) {
      s += noise->z[l];
    }
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(s);
    t = std::move(s);
  }
  return trace;
}

/// Loss and its gradient w.r.t. the network output, averaged over rows.
double output_loss(const Eigen::MatrixXd& out, const Eigen::VectorXd& labels,
                   LossKind loss, Eigen::MatrixXd* grad) {
  const Eigen::Index rows = out.rows();
  const double inv_rows = 1.0 / static_cast<double>(rows);
  if (loss == LossKind::kMeanSquared) {
    // Scalar targets against every output unit (toy heads are scalar).
    Eigen::MatrixXd diff = out;
    for (Eigen::Index r = 0; r < rows; ++r) {
      diff.row(r).array() -= labels[r];
    }
    if (grad != nullptr) *grad = 2.0 * inv_rows * diff;
    return diff.array().square().sum() * inv_rows;
  }
  // Softmax cross-entropy in nats.
  double total = 0.0;
  Eigen::MatrixXd probs(out.rows(), out.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double m = out.row(r).maxCoeff();
    Eigen::ArrayXd e = (out.row(r).array() - m).exp();
    const double z = e.sum();
    probs.row(r) = (e / z).matrix();
    const int y = static_cast<int>(labels[r]);
    if (y < 0 || y >= out.cols()) {
      throw std::invalid_argument("cross-entropy label out of range");
    }
    total -= std::log(probs(r, y));
  }
  if (grad != nullptr) {
    *grad = probs;
    for (Eigen::Index r = 0; r < rows; ++r) {
      (*grad)(r, static_cast<int>(labels[r])) -= 1.0;
    }
    *grad *= inv_rows;
  }
  return total * inv_rows;
}

}  // namespace

double batch_loss(const NoisyNet& net, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& labels, LossKind loss,
                  const FrozenNoise* noise) {
  BatchTrace trace = batch_forward(net, x, noise);
  return output_loss(trace.post.back(), labels, loss, nullptr);
}

Gradients batch_gradients(const NoisyNet& net, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& labels, LossKind loss,
                          const FrozenNoise* noise, double* loss_out) {
  BatchTrace trace = batch_forward(net, x, noise);
  const int depth = net.depth();
  Gradients grads;
  grads.weights.resize(depth);
  grads.bias.resize(depth);

  Eigen::MatrixXd grad_t;  // dL/dT_l
  const double loss_value =
      output_loss(trace.post.back(), labels, loss, &grad_t);
  if (loss_out != nullptr) *loss_out = loss_value;

  for (int l = depth - 1; l >= 0; --l) {
    const Layer& lay = net.layers[static_cast<std::size_t>(l)];
    // Additive noise: dT/dS = I, so grad_t is also dL/dS_l.
    Eigen::MatrixXd grad_pre =
        grad_t.cwiseProduct(activation_derivative(lay.activation,
                                                  lay.leaky_slope,
                                                  trace.pre[l]));
    const Eigen::MatrixXd& input =
        l == 0 ? x : trace.post[static_cast<std::size_t>(l - 1)];
    grads.weights[l] = grad_pre.transpose() * input;
    grads.bias[l] = grad_pre.colwise().sum().transpose();
    if (l > 0) grad_t = grad_pre * lay.weights;
  }
  return grads;
}

TrainResult train(NoisyNet& net, const LabeledDataset& data,
                  const TrainConfig& cfg,
                  const std::vector<int>& checkpoint_epochs,
                  const LabeledDataset* test) {
  net.validate();
  data.validate();
  cfg.validate();
  if (cfg.loss == LossKind::kCrossEntropy &&
      net.output_dim() < data.num_classes()) {
    throw std::invalid_argument(
        "output layer narrower than the number of classes");
  }

  const Eigen::Index m = data.size();
  const Eigen::Index batch =
      cfg.batch_size == 0 ? m : std::min<Eigen::Index>(cfg.batch_size, m);
  const std::set<int> snap_epochs(checkpoint_epochs.begin(),
                                  checkpoint_epochs.end());

  TrainResult result;
  auto maybe_snapshot = [&](int epoch) {
    if (snap_epochs.count(epoch) != 0) {
      result.checkpoints.emplace_back(epoch, net);
    }
  };
  maybe_snapshot(0);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);

  double step_size = cfg.learning_rate;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (batch < m) {
      // Fisher-Yates with the epoch's own stream.
      auto stream = rng::substream(cfg.seed, {rng::tag::kShuffle,
                                              static_cast<std::uint64_t>(epoch)});
      for (Eigen::Index i = m - 1; i > 0; --i) {
        const Eigen::Index j = static_cast<Eigen::Index>(
            stream.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(j)]);
      }
    }

    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    int step = 0;
    for (Eigen::Index b0 = 0; b0 < m; b0 += batch, ++step) {
      const Eigen::Index rows = std::min(batch, m - b0);
      Eigen::MatrixXd x(rows, data.dim());
      Eigen::VectorXd y(rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        x.row(r) = data.inputs.row(order[static_cast<std::size_t>(b0 + r)]);
        y[r] = data.labels[order[static_cast<std::size_t>(b0 + r)]];
      }

      FrozenNoise noise;
      const bool use_noise = cfg.noise_during_training && !net.deterministic();
      if (use_noise) {
        noise = draw_noise(
            net, rows,
            rng::derive_key(cfg.seed,
                            {rng::tag::kTrainNoise,
                             static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(step)}));
      }

      double loss_value = 0.0;
      Gradients grads = batch_gradients(net, x, y, cfg.loss,
                                        use_noise ? &noise : nullptr,
                                        &loss_value);
      if (!std::isfinite(loss_value)) {
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
      }
      epoch_loss += loss_value * static_cast<double>(rows);
      seen += rows;

      for (int l = 0; l < net.depth(); ++l) {
        net.layers[static_cast<std::size_t>(l)].weights -=
            step_size * grads.weights[l];
        net.layers[static_cast<std::size_t>(l)].bias -=
            step_size * grads.bias[l];
      }
      if (cfg.ortho_alpha > 0.0) {
        for (auto& lay : net.layers) {
          lay.weights = orthonormal_step(lay.weights, cfg.ortho_alpha);
        }
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(seen));

    if (test != nullptr) {
      FrozenNoise noise;
      const bool use_noise = cfg.noise_during_training && !net.deterministic();
      if (use_noise) {
        noise = draw_noise(
            net, test->size(),
            rng::derive_key(cfg.seed, {rng::tag::kTestNoise,
                                       static_cast<std::uint64_t>(epoch)}));
      }
      result.test_loss.push_back(batch_loss(net, test->inputs, test->labels,
                                            cfg.loss,
                                            use_noise ? &noise : nullptr));
    }
    maybe_snapshot(epoch);
    step_size *= cfg.lr_decay;
  }
  return result;
}

double classification_accuracy(const NoisyNet& net,
                               const LabeledDataset& data) {
  BatchTrace trace = batch_forward(net, data.inputs, nullptr);
  const Eigen::MatrixXd& out = trace.post.back();
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (out.cols() > 1) {
      Eigen::Index arg = 0;
      out.row(r).maxCoeff(&arg);
      if (arg == static_cast<Eigen::Index>(data.labels[r])) ++correct;
    } else {
      // Scalar head: nearest of the distinct label values.
      const double v = out(r, 0);
      if (std::abs(v - data.labels[r]) <= 0.5) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(out.rows());
}

}  // namespace infoflow

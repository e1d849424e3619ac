#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "infoflow/datasets.hpp"
#include "infoflow/errors.hpp"
#include "infoflow/noisy_net.hpp"
#include "infoflow/rng.hpp"

using namespace infoflow;

namespace {

NoisyNet identity_net(int d, double beta) {
  NoisyNet net;
  Layer l;
  l.weights = Eigen::MatrixXd::Identity(d, d);
  l.bias = Eigen::VectorXd::Zero(d);
  l.activation = Activation::kLinear;
  l.beta = beta;
  net.layers.push_back(std::move(l));
  return net;
}

double frob_gram_error(const Eigen::MatrixXd& w) {
  return (w * w.transpose() -
          Eigen::MatrixXd::Identity(w.rows(), w.rows()))
      .norm();
}

}  // namespace

TEST_CASE("deterministic forward through an identity layer") {
  const auto net = identity_net(3, 0.1);
  Eigen::VectorXd x(3);
  x << 0.2, -0.7, 1.5;
  const auto trace = forward(net, x, ForwardMode::deterministic());
  CHECK(trace.pre_noise[0] == x);
  CHECK(trace.post_noise[0] == x);
}

TEST_CASE("zero-noise nets match deterministic mode exactly") {
  const auto net = make_mlp({4, 5, 3}, Activation::kTanh, Activation::kLinear,
                            0.0, 42);
  Eigen::VectorXd x(4);
  x << 0.1, 0.2, -0.3, 0.9;
  const auto det = forward(net, x, ForwardMode::deterministic());
  const auto noisy = forward(net, x, ForwardMode::with_noise(7));
  for (int l = 0; l < net.depth(); ++l) {
    CHECK(det.post_noise[l] == noisy.post_noise[l]);
  }
}

TEST_CASE("leaky relu toy forward by hand") {
  // Declared initialization w1=-0.3, b1=1.8, w2=-1.0, b2=0.2, slope 1/10.
  const auto net = toy_leaky_relu_net(0.0);
  Eigen::VectorXd x(1);
  x << 5.0;
  const auto trace = forward(net, x, ForwardMode::deterministic());
  // a1 = -0.3*5 + 1.8 = 0.3 -> R(0.3) = 0.3
  CHECK(trace.pre_noise[0][0] == doctest::Approx(0.3).epsilon(1e-12));
  // a2 = -1.0*0.3 + 0.2 = -0.1 -> R(-0.1) = -0.01
  CHECK(trace.pre_noise[1][0] == doctest::Approx(-0.01).epsilon(1e-12));

  x << 8.0;
  const auto t2 = forward(net, x, ForwardMode::deterministic());
  // a1 = -0.6 -> R = -0.06; a2 = 0.06 + 0.2 = 0.26 -> R = 0.26
  CHECK(t2.pre_noise[0][0] == doctest::Approx(-0.06).epsilon(1e-12));
  CHECK(t2.pre_noise[1][0] == doctest::Approx(0.26).epsilon(1e-12));
}

TEST_CASE("dimension mismatch is rejected") {
  const auto net = identity_net(3, 0.0);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(2),
                          ForwardMode::deterministic()),
                  std::invalid_argument);
}

TEST_CASE("one full-batch gradient step by hand") {
  // Scalar linear model, one sample (x=1, y=0), squared loss without the 1/2
  // factor: after one step at lr=0.1 the weight moves 1 -> 0.8.
  NoisyNet net = identity_net(1, 0.0);
  net.layers[0].weights(0, 0) = 1.0;
  LabeledDataset data;
  data.inputs = Eigen::MatrixXd::Constant(1, 1, 1.0);
  data.labels = Eigen::VectorXd::Zero(1);
  data.class_labels = false;
  TrainConfig cfg;
  cfg.loss = LossKind::kMeanSquared;
  cfg.learning_rate = 0.1;
  cfg.epochs = 1;
  train(net, data, cfg);
  CHECK(net.layers[0].weights(0, 0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(net.layers[0].bias[0] == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  auto net = make_mlp({2, 3, 1}, Activation::kTanh, Activation::kLinear, 0.05,
                      3);
  const auto before = net;
  LabeledDataset data;
  data.inputs = Eigen::MatrixXd::Random(6, 2);
  data.labels = Eigen::VectorXd::Zero(6);
  data.class_labels = false;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  cfg.seed = 5;
  train(net, data, cfg);
  for (int l = 0; l < net.depth(); ++l) {
    CHECK(net.layers[l].weights == before.layers[l].weights);
    CHECK(net.layers[l].bias == before.layers[l].bias);
  }
}

TEST_CASE("orthonormal step fixes orthonormal rows") {
  Eigen::MatrixXd w(2, 3);
  w << 1, 0, 0, 0, 1, 0;
  const Eigen::MatrixXd stepped = orthonormal_step(w, 0.1);
  CHECK((stepped - w).norm() == doctest::Approx(0.0));
}

TEST_CASE("orthonormal step on 2I by hand") {
  const Eigen::MatrixXd w = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd stepped = orthonormal_step(w, 0.1);
  CHECK((stepped - 1.4 * Eigen::MatrixXd::Identity(2, 2)).norm() ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("small orthonormal steps contract towards orthonormality") {
  infoflow::rng::Stream stream(17);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd w(3, 5);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 5; ++c) w(r, c) = stream.normal() * 0.4;
    }
    // Pull towards a near-orthonormal configuration first.
    w += Eigen::MatrixXd::Identity(3, 5);
    const double before = frob_gram_error(w);
    if (before > 1.0) continue;
    const double after = frob_gram_error(orthonormal_step(w, 1e-3));
    CHECK(after < before);
  }
}

TEST_CASE("collect activations on the identity net returns the inputs") {
  const auto net = identity_net(2, 0.3);
  LabeledDataset data;
  data.inputs = Eigen::MatrixXd::Random(10, 2);
  data.labels = Eigen::VectorXd::Zero(10);
  const auto acts =
      collect_activations(net, data, 1, ForwardMode::deterministic());
  CHECK(acts.values == data.inputs);
  CHECK(acts.layer_index == 1);
}

TEST_CASE("collect activations determinism contract") {
  const auto net = make_mlp({3, 4, 4, 2}, Activation::kTanh,
                            Activation::kLinear, 0.2, 9);
  LabeledDataset data;
  data.inputs = Eigen::MatrixXd::Random(8, 3);
  data.labels = Eigen::VectorXd::Zero(8);

  const auto det1 = collect_activations(net, data, 3,
                                        ForwardMode::deterministic());
  const auto det2 = collect_activations(net, data, 3,
                                        ForwardMode::deterministic());
  CHECK(det1.values == det2.values);

  const auto noisy1 =
      collect_activations(net, data, 3, ForwardMode::with_noise(123));
  const auto noisy2 =
      collect_activations(net, data, 3, ForwardMode::with_noise(123));
  const auto noisy3 =
      collect_activations(net, data, 3, ForwardMode::with_noise(124));
  CHECK(noisy1.values == noisy2.values);
  CHECK(noisy1.values != noisy3.values);
}

TEST_CASE("conditional activations degenerate without upstream noise") {
  auto net = make_mlp({2, 3, 2}, Activation::kTanh, Activation::kLinear, 0.0,
                      21);
  net.layers[1].beta = 0.1;  // target layer noisy, upstream deterministic
  Eigen::VectorXd x(2);
  x << 0.3, -0.4;
  const auto acts = conditional_activations(net, x, 2, 16, 5);
  for (Eigen::Index r = 1; r < acts.size(); ++r) {
    CHECK(acts.values.row(r) == acts.values.row(0));
  }
}

TEST_CASE("conditional activations sample the upstream noise") {
  const auto net = make_mlp({2, 6, 3}, Activation::kTanh, Activation::kLinear,
                            0.05, 33);
  Eigen::VectorXd x(2);
  x << 0.5, 0.1;
  const auto small = conditional_activations(net, x, 2, 1, 2);
  CHECK(small.values.rows() == 1);
  CHECK(small.values.cols() == 3);

  // The sample mean settles and the spread stays positive.
  const auto big = conditional_activations(net, x, 2, 20000, 2);
  const auto ref = conditional_activations(net, x, 2, 20000, 3);
  const Eigen::RowVectorXd mean_a = big.values.colwise().mean();
  const Eigen::RowVectorXd mean_b = ref.values.colwise().mean();
  CHECK((mean_a - mean_b).norm() < 0.01);
  const double var =
      (big.values.rowwise() - mean_a).squaredNorm() / big.values.rows();
  CHECK(var > 0.0);
}

TEST_CASE("first-layer conditional sampling is redirected to the closed form") {
  const auto net = make_mlp({2, 3, 2}, Activation::kTanh, Activation::kLinear,
                            0.1, 4);
  CHECK_THROWS_WITH_AS(
      conditional_activations(net, Eigen::VectorXd::Zero(2), 1, 10, 1),
      doctest::Contains("closed"),
      std::invalid_argument);
}

TEST_CASE("backprop matches central finite differences under frozen noise") {
  const auto net = make_mlp({3, 5, 4, 2}, Activation::kTanh,
                            Activation::kTanh, 0.1, 2718);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(8, 3);
  Eigen::VectorXd y(8);
  y << 0, 1, 0, 1, 1, 0, 1, 0;
  const FrozenNoise noise = draw_noise(net, 8, 555);

  for (LossKind loss : {LossKind::kMeanSquared, LossKind::kCrossEntropy}) {
    double base = 0.0;
    const Gradients grads = batch_gradients(net, x, y, loss, &noise, &base);
    const double h = 1e-6;
    double worst = 0.0;
    for (int l = 0; l < net.depth(); ++l) {
      NoisyNet probe = net;
      for (Eigen::Index r = 0; r < probe.layers[l].weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < probe.layers[l].weights.cols(); ++c) {
          probe.layers[l].weights(r, c) += h;
          const double up = batch_loss(probe, x, y, loss, &noise);
          probe.layers[l].weights(r, c) -= 2 * h;
          const double down = batch_loss(probe, x, y, loss, &noise);
          probe.layers[l].weights(r, c) += h;
          const double fd = (up - down) / (2 * h);
          const double an = grads.weights[l](r, c);
          worst = std::max(worst, std::abs(fd - an) /
                                      std::max(1e-8, std::abs(an)));
        }
      }
      for (Eigen::Index r = 0; r < probe.layers[l].bias.size(); ++r) {
        probe.layers[l].bias[r] += h;
        const double up = batch_loss(probe, x, y, loss, &noise);
        probe.layers[l].bias[r] -= 2 * h;
        const double down = batch_loss(probe, x, y, loss, &noise);
        probe.layers[l].bias[r] += h;
        const double fd = (up - down) / (2 * h);
        const double an = grads.bias[l][r];
        worst = std::max(worst, std::abs(fd - an) /
                                    std::max(1e-8, std::abs(an)));
      }
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("noise covariance is isotropic at the configured scale") {
  const auto net = identity_net(3, 0.2);
  Eigen::VectorXd x(3);
  x << 0.3, -0.1, 0.8;
  const int reps = 10000;
  Eigen::MatrixXd deltas(reps, 3);
  for (int r = 0; r < reps; ++r) {
    const auto trace = forward(net, x, ForwardMode::with_noise(r));
    deltas.row(r) = (trace.post_noise[0] - trace.pre_noise[0]).transpose();
  }
  const Eigen::RowVectorXd mean = deltas.colwise().mean();
  const Eigen::MatrixXd centered = deltas.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (reps - 1.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expected = i == j ? 0.04 : 0.0;
      CHECK(std::abs(cov(i, j) - expected) < 0.05 * 0.04);
    }
  }
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto data = spiral_dataset(40, 0.05, 1.5, 11);
  TrainConfig cfg;
  cfg.loss = LossKind::kCrossEntropy;
  cfg.learning_rate = 0.05;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.seed = 77;

  auto net1 = spiral_net(5, Activation::kTanh, 0.01);
  auto net2 = spiral_net(5, Activation::kTanh, 0.01);
  const auto r1 = train(net1, data, cfg);
  const auto r2 = train(net2, data, cfg);
  CHECK(r1.train_loss == r2.train_loss);
  for (int l = 0; l < net1.depth(); ++l) {
    CHECK(net1.layers[l].weights == net2.layers[l].weights);
  }
}

TEST_CASE("beta zero training equals the plain deterministic trainer") {
  const auto data = spiral_dataset(30, 0.05, 1.5, 13);
  TrainConfig with_flag;
  with_flag.loss = LossKind::kCrossEntropy;
  with_flag.learning_rate = 0.1;
  with_flag.epochs = 25;
  with_flag.seed = 3;
  TrainConfig without_flag = with_flag;
  without_flag.noise_during_training = false;

  auto a = spiral_net(9, Activation::kTanh, 0.0);
  auto b = spiral_net(9, Activation::kTanh, 0.0);
  const auto ra = train(a, data, with_flag);
  const auto rb = train(b, data, without_flag);
  CHECK(ra.train_loss == rb.train_loss);
  for (int l = 0; l < a.depth(); ++l) {
    CHECK(a.layers[l].weights == b.layers[l].weights);
  }
}

TEST_CASE("divergent training aborts with a diagnostic") {
  auto net = identity_net(1, 0.0);
  LabeledDataset data;
  data.inputs = Eigen::MatrixXd::Constant(1, 1, 10.0);
  data.labels = Eigen::VectorXd::Zero(1);
  data.class_labels = false;
  TrainConfig cfg;
  cfg.learning_rate = 1e6;
  cfg.epochs = 10000;
  CHECK_THROWS_AS(train(net, data, cfg), NumericalError);
}

TEST_CASE("leaky relu toy training loss strictly decreases early on") {
  auto net = toy_leaky_relu_net(0.0);
  const auto data = leaky_relu_toy_dataset();
  TrainConfig cfg;
  cfg.loss = LossKind::kMeanSquared;
  cfg.learning_rate = 0.001;
  cfg.epochs = 100;
  const auto result = train(net, data, cfg);
  for (std::size_t e = 1; e < result.train_loss.size(); ++e) {
    CHECK(result.train_loss[e] < result.train_loss[e - 1]);
  }
}

TEST_CASE("spiral generator geometry and determinism") {
  const auto tiny = spiral_dataset(1, 0.0, 2.0, 1);
  CHECK(tiny.size() == 2);
  // Single sample per arm sits at the curve origin for both arms.
  CHECK(tiny.inputs.row(0).norm() == doctest::Approx(0.0));
  CHECK(tiny.inputs.row(1).norm() == doctest::Approx(0.0));

  const auto a = spiral_dataset(100, 0.05, 2.0, 7);
  const auto b = spiral_dataset(100, 0.05, 2.0, 7);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);

  // Noise-free points obey the arm geometry: radius grows linearly in theta.
  const auto clean = spiral_dataset(50, 0.0, 2.0, 3);
  for (int i = 1; i < 50; ++i) {
    const double r_prev = clean.inputs.row(2 * (i - 1)).norm();
    const double r_cur = clean.inputs.row(2 * i).norm();
    CHECK(r_cur > r_prev - 1e-12);
  }
}

TEST_CASE("spiral net trains to high accuracy") {
  const auto data = spiral_dataset(500, 0.05, 0.75, 15, 2.0);
  auto net = spiral_net(7, Activation::kTanh, 0.0);
  TrainConfig cfg;
  cfg.loss = LossKind::kCrossEntropy;
  cfg.learning_rate = 0.3;
  cfg.lr_decay = 0.9996;
  cfg.epochs = 8000;
  cfg.batch_size = 16;
  cfg.seed = 4;
  train(net, data, cfg);
  CHECK(classification_accuracy(net, data) >= 0.95);
}

TEST_CASE("builder shapes match their descriptions") {
  const auto szt = szt_net(1);
  std::vector<Eigen::Index> dims{szt.input_dim()};
  for (const auto& l : szt.layers) dims.push_back(l.out_dim());
  CHECK(dims == std::vector<Eigen::Index>{12, 10, 7, 5, 4, 3, 2});
  CHECK(szt.layers.back().activation == Activation::kLinear);

  const auto toy = toy_leaky_relu_net();
  CHECK(toy.layers[0].activation == Activation::kLeakyRelu);
  CHECK(toy.layers[0].leaky_slope == doctest::Approx(0.1));
  CHECK(toy.depth() == 2);

  const auto tanh1 = toy_tanh_net();
  CHECK(tanh1.depth() == 1);
  CHECK(tanh1.layers[0].activation == Activation::kTanh);
}

TEST_CASE("dataset files round trip bit-exactly") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "infoflow_ds_test";
  fs::create_directories(dir);
  const auto path = (dir / "spiral.ds").string();

  const auto data = spiral_dataset(25, 0.02, 2.0, 99);
  save_dataset(path, data);
  const auto loaded = load_dataset(path);
  CHECK(loaded.inputs == data.inputs);
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.class_labels == data.class_labels);

  LabeledDataset scalar = leaky_relu_toy_dataset();
  const auto path2 = (dir / "toy.ds").string();
  save_dataset(path2, scalar);
  const auto loaded2 = load_dataset(path2);
  CHECK(loaded2.inputs == scalar.inputs);
  CHECK(loaded2.labels == scalar.labels);
  CHECK(loaded2.class_labels == false);
  fs::remove_all(dir);
}

TEST_CASE("truncated dataset files fail with an offset") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "infoflow_ds_trunc";
  fs::create_directories(dir);
  const auto path = (dir / "cut.ds").string();
  const auto data = spiral_dataset(10, 0.02, 2.0, 5);
  save_dataset(path, data);
  const auto full_size = fs::file_size(path);
  fs::resize_file(path, full_size - 13);
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  try {
    load_dataset(path);
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() <= full_size);
  }
  fs::remove_all(dir);
}

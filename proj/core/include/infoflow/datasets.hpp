#pragma once

#include <cstdint>
#include <string>

#include "infoflow/noisy_net.hpp"

namespace infoflow {

/// Two interleaved Archimedean spiral arms in the plane, labels 0/1. Points
/// sit on r = max_radius * theta / theta_max for theta evenly spaced in
/// [0, turns * 2 pi]; the second arm is the first rotated by pi. Gaussian
/// jitter of scale noise_std is added to both coordinates.
LabeledDataset spiral_dataset(int n_per_class, double noise_std, double turns,
                              std::uint64_t seed, double max_radius = 1.0);

/// Synthetic stand-in for a 12-dimensional binary source: n_clusters fixed
/// unit-sphere centroids with alternating labels, samples jittered around
/// them. Parameters are explicit; nothing about this source is canonical.
LabeledDataset clustered_binary_dataset(int m, int dim = 12,
                                        int n_clusters = 16,
                                        double jitter = 0.1,
                                        std::uint64_t seed = 1);

/// m evenly spaced scalar inputs on [lo, hi] with scalar step targets
/// (y = -1 below the midpoint, +1 above); the single-unit tanh toy trains
/// against these.
LabeledDataset scalar_step_dataset(int m, double lo = -2.0, double hi = 2.0);

/// Inputs {1..8}; first four labeled 0, last four labeled 1/4 (scalar MSE
/// targets).
LabeledDataset leaky_relu_toy_dataset();

/// The 12-10-7-5-4-3-2 fully connected stack; hidden layers use `act`, the
/// 2-logit output layer is linear, every layer carries noise `beta`.
NoisyNet szt_net(std::uint64_t seed, Activation act = Activation::kTanh,
                 double beta = 0.005);

/// Depth-6 stack of width-3 hidden layers for the planar spiral task
/// (2-3-3-3-3-3-2), hidden `act`, linear 2-logit head.
NoisyNet spiral_net(std::uint64_t seed, Activation act = Activation::kTanh,
                    double beta = 0.005);

/// Single tanh unit y = tanh(w x + b) + Z. Initialization is a declared
/// default (w = 0.5, b = 0), not a reference value.
NoisyNet toy_tanh_net(double beta = 0.05);

/// Two chained scalar leaky-ReLU units (slope 1/10). Initialization is a
/// declared default chosen so that training clusters the upper input group
/// first: w1 = -0.3, b1 = 1.8, w2 = -1.0, b2 = 0.2.
NoisyNet toy_leaky_relu_net(double beta = 0.05);

/// Dataset container file: one JSON header line
/// {"m":..,"d0":..,"labels":"class"|"scalar"} followed by m*d0 little-endian
/// f64 inputs row-major, then m labels (i32 for class, f64 for scalar).
void save_dataset(const std::string& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::string& path);

}  // namespace infoflow

#include "infoflow/datasets.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "infoflow/errors.hpp"
#include "infoflow/rng.hpp"

namespace infoflow {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
}

LabeledDataset spiral_dataset(int n_per_class, double noise_std, double turns,
                              std::uint64_t seed, double max_radius) {
  if (n_per_class < 1) {
    throw std::invalid_argument("spiral_dataset: n_per_class must be >= 1");
  }
  if (!(turns > 0.0) || !(max_radius > 0.0) || noise_std < 0.0) {
    throw std::invalid_argument("spiral_dataset: bad geometry parameters");
  }
  const int m = 2 * n_per_class;
  LabeledDataset data;
  data.inputs.resize(m, 2);
  data.labels.resize(m);
  data.class_labels = true;
  data.name = "spiral";

  const double theta_max = turns * 2.0 * kPi;
  auto stream = rng::substream(seed, {rng::tag::kDataset});
  for (int i = 0; i < n_per_class; ++i) {
    const double frac =
        n_per_class == 1 ? 0.0
                         : static_cast<double>(i) /
                               static_cast<double>(n_per_class - 1);
    const double theta = frac * theta_max;
    const double r = max_radius * frac;
    for (int arm = 0; arm < 2; ++arm) {
      const double rot = theta + (arm == 1 ? kPi : 0.0);
      const int row = 2 * i + arm;
      data.inputs(row, 0) = r * std::cos(rot) + noise_std * stream.normal();
      data.inputs(row, 1) = r * std::sin(rot) + noise_std * stream.normal();
      data.labels[row] = arm;
    }
  }
  return data;
}

LabeledDataset clustered_binary_dataset(int m, int dim, int n_clusters,
                                        double jitter, std::uint64_t seed) {
  if (m < 1 || dim < 1 || n_clusters < 1) {
    throw std::invalid_argument("clustered_binary_dataset: bad sizes");
  }
  auto centroid_stream = rng::substream(seed, {rng::tag::kDataset, 0});
  Eigen::MatrixXd centroids(n_clusters, dim);
  for (int c = 0; c < n_clusters; ++c) {
    double norm_sq = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double v = centroid_stream.normal();
      centroids(c, k) = v;
      norm_sq += v * v;
    }
    centroids.row(c) /= std::sqrt(std::max(norm_sq, 1e-12));
  }

  LabeledDataset data;
  data.inputs.resize(m, dim);
  data.labels.resize(m);
  data.class_labels = true;
  data.name = "clustered_binary";
  auto sample_stream = rng::substream(seed, {rng::tag::kDataset, 1});
  for (int r = 0; r < m; ++r) {
    const int c = static_cast<int>(sample_stream.next_u64() %
                                   static_cast<std::uint64_t>(n_clusters));
    for (int k = 0; k < dim; ++k) {
      data.inputs(r, k) = centroids(c, k) + jitter * sample_stream.normal();
    }
    data.labels[r] = c % 2;
  }
  return data;
}

LabeledDataset scalar_step_dataset(int m, double lo, double hi) {
  if (m < 1 || !(hi > lo)) {
    throw std::invalid_argument("scalar_step_dataset: bad parameters");
  }
  LabeledDataset data;
  data.inputs.resize(m, 1);
  data.labels.resize(m);
  data.class_labels = false;
  data.name = "scalar_step";
  const double mid = 0.5 * (lo + hi);
  for (int i = 0; i < m; ++i) {
    const double x =
        m == 1 ? lo
               : lo + (hi - lo) * static_cast<double>(i) /
                          static_cast<double>(m - 1);
    data.inputs(i, 0) = x;
    data.labels[i] = x > mid ? 1.0 : -1.0;
  }
  return data;
}

LabeledDataset leaky_relu_toy_dataset() {
  LabeledDataset data;
  data.inputs.resize(8, 1);
  data.labels.resize(8);
  data.class_labels = false;
  data.name = "leaky_relu_toy";
  for (int i = 0; i < 8; ++i) {
    data.inputs(i, 0) = static_cast<double>(i + 1);
    data.labels[i] = i < 4 ? 0.0 : 0.25;
  }
  return data;
}

NoisyNet szt_net(std::uint64_t seed, Activation act, double beta) {
  return make_mlp({12, 10, 7, 5, 4, 3, 2}, act, Activation::kLinear, beta,
                  seed);
}

NoisyNet spiral_net(std::uint64_t seed, Activation act, double beta) {
  return make_mlp({2, 3, 3, 3, 3, 3, 2}, act, Activation::kLinear, beta, seed);
}

namespace {

NoisyNet scalar_chain(const std::vector<double>& w, const std::vector<double>& b,
                      Activation act, double leaky_slope, double beta) {
  NoisyNet net;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Layer lay;
    lay.weights = Eigen::MatrixXd::Constant(1, 1, w[l]);
    lay.bias = Eigen::VectorXd::Constant(1, b[l]);
    lay.activation = act;
    lay.leaky_slope = leaky_slope;
    lay.beta = beta;
    net.layers.push_back(std::move(lay));
  }
  return net;
}

}  // namespace

NoisyNet toy_tanh_net(double beta) {
  return scalar_chain({0.5}, {0.0}, Activation::kTanh, 0.1, beta);
}

NoisyNet toy_leaky_relu_net(double beta) {
  return scalar_chain({-0.3, -1.0}, {1.8, 0.2}, Activation::kLeakyRelu, 0.1,
                      beta);
}

void save_dataset(const std::string& path, const LabeledDataset& data) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  nlohmann::json header;
  header["m"] = data.inputs.rows();
  header["d0"] = data.inputs.cols();
  header["labels"] = data.class_labels ? "class" : "scalar";
  out << header.dump() << '\n';

  std::vector<double> row(static_cast<std::size_t>(data.inputs.cols()));
  for (Eigen::Index r = 0; r < data.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = data.inputs(r, c);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (data.class_labels) {
    for (Eigen::Index r = 0; r < data.labels.size(); ++r) {
      const std::int32_t v = static_cast<std::int32_t>(data.labels[r]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  } else {
    for (Eigen::Index r = 0; r < data.labels.size(); ++r) {
      const double v = data.labels[r];
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ParseError(path, 0, "missing header line");
  }
  const std::size_t payload_start = header_line.size() + 1;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, e.byte, std::string("bad header: ") + e.what());
  }
  if (!header.contains("m") || !header.contains("d0") ||
      !header.contains("labels")) {
    throw ParseError(path, 0, "header must declare m, d0 and labels");
  }
  const std::int64_t m = header["m"].get<std::int64_t>();
  const std::int64_t d0 = header["d0"].get<std::int64_t>();
  const std::string label_kind = header["labels"].get<std::string>();
  if (m < 1 || d0 < 1) throw ParseError(path, 0, "header sizes must be >= 1");
  if (label_kind != "class" && label_kind != "scalar") {
    throw ParseError(path, 0, "labels must be 'class' or 'scalar'");
  }

  LabeledDataset data;
  data.inputs.resize(m, d0);
  data.labels.resize(m);
  data.class_labels = label_kind == "class";
  std::vector<double> row(static_cast<std::size_t>(d0));
  std::size_t offset = payload_start;
  for (std::int64_t r = 0; r < m; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) {
      throw ParseError(path, offset + static_cast<std::size_t>(in.gcount()),
                       "truncated input payload");
    }
    offset += row.size() * sizeof(double);
    for (std::int64_t c = 0; c < d0; ++c) {
      data.inputs(r, c) = row[static_cast<std::size_t>(c)];
    }
  }
  for (std::int64_t r = 0; r < m; ++r) {
    if (data.class_labels) {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) {
        throw ParseError(path, offset + static_cast<std::size_t>(in.gcount()),
                         "truncated labels");
      }
      offset += sizeof(v);
      data.labels[r] = v;
    } else {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) {
        throw ParseError(path, offset + static_cast<std::size_t>(in.gcount()),
                         "truncated labels");
      }
      offset += sizeof(v);
      data.labels[r] = v;
    }
  }
  data.validate();
  return data;
}

}  // namespace infoflow

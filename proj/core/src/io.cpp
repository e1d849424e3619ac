#include "infoflow/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "infoflow/errors.hpp"

namespace infoflow {

namespace {

// On-disk floats are little-endian; this toolkit targets little-endian hosts.
static_assert(std::endian::native == std::endian::little,
              "big-endian hosts would need byte swapping in io.cpp");

void write_f64_rowmajor(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = m(r, c);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

void read_f64_rowmajor(std::ifstream& in, const std::string& path,
                       std::size_t& offset, Eigen::MatrixXd& m) {
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) {
      throw ParseError(path, offset + static_cast<std::size_t>(in.gcount()),
                       "truncated f64 payload");
    }
    offset += row.size() * sizeof(double);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)];
    }
  }
}

nlohmann::json parse_header_line(std::ifstream& in, const std::string& path,
                                 std::size_t& offset) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path, 0, "missing header line");
  }
  offset = line.size() + 1;
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, e.byte, std::string("bad header: ") + e.what());
  }
}

void require_keys(const nlohmann::json& header, const std::string& path,
                  std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!header.contains(k)) {
      throw ParseError(path, 0, std::string("header missing key '") + k + "'");
    }
  }
}

}  // namespace

void write_activation_dump(const std::string& path,
                           const ActivationSet& acts) {
  acts.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  nlohmann::json header;
  header["n"] = acts.values.rows();
  header["d"] = acts.values.cols();
  header["dtype"] = "f64le";
  header["layer"] = acts.layer_index;
  header["epoch"] = acts.epoch;
  header["has_labels"] = acts.labels.has_value();
  header["noisy"] = acts.noisy;
  out << header.dump() << '\n';
  write_f64_rowmajor(out, acts.values);
  if (acts.labels) {
    for (Eigen::Index r = 0; r < acts.labels->size(); ++r) {
      const std::int32_t v = static_cast<std::int32_t>((*acts.labels)[r]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

ActivationSet read_activation_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::size_t offset = 0;
  const nlohmann::json header = parse_header_line(in, path, offset);
  require_keys(header, path,
               {"n", "d", "dtype", "layer", "epoch", "has_labels", "noisy"});
  if (header["dtype"].get<std::string>() != "f64le") {
    throw ParseError(path, 0,
                     "unsupported dtype '" +
                         header["dtype"].get<std::string>() + "'");
  }
  const std::int64_t n = header["n"].get<std::int64_t>();
  const std::int64_t d = header["d"].get<std::int64_t>();
  if (n < 1 || d < 1) throw ParseError(path, 0, "header sizes must be >= 1");

  ActivationSet acts;
  acts.values.resize(n, d);
  acts.layer_index = header["layer"].get<int>();
  acts.epoch = header["epoch"].get<int>();
  acts.noisy = header["noisy"].get<bool>();
  read_f64_rowmajor(in, path, offset, acts.values);
  if (header["has_labels"].get<bool>()) {
    Eigen::VectorXd labels(n);
    for (std::int64_t r = 0; r < n; ++r) {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) {
        throw ParseError(path, offset + static_cast<std::size_t>(in.gcount()),
                         "truncated labels");
      }
      offset += sizeof(v);
      labels[r] = v;
    }
    acts.labels = std::move(labels);
  }
  // Trailing bytes mean the header undercounts the payload.
  char extra = 0;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw ParseError(path, offset, "payload longer than declared by header");
  }
  acts.validate();
  return acts;
}

void save_checkpoint(const std::string& path, const NoisyNet& net, int epoch) {
  net.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  nlohmann::json header;
  std::vector<std::int64_t> dims{net.input_dim()};
  std::vector<std::string> acts;
  std::vector<double> slopes;
  std::vector<double> betas;
  for (const Layer& l : net.layers) {
    dims.push_back(l.out_dim());
    acts.push_back(activation_name(l.activation));
    slopes.push_back(l.leaky_slope);
    betas.push_back(l.beta);
  }
  header["dims"] = dims;
  header["activations"] = acts;
  header["leaky_slopes"] = slopes;
  header["betas"] = betas;
  header["epoch"] = epoch;
  header["dtype"] = "f64le";
  out << header.dump() << '\n';
  for (const Layer& l : net.layers) {
    write_f64_rowmajor(out, l.weights);
    write_f64_rowmajor(out, l.bias.transpose());
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::size_t offset = 0;
  const nlohmann::json header = parse_header_line(in, path, offset);
  require_keys(header, path,
               {"dims", "activations", "leaky_slopes", "betas", "epoch",
                "dtype"});
  if (header["dtype"].get<std::string>() != "f64le") {
    throw ParseError(path, 0, "unsupported dtype");
  }
  const auto dims = header["dims"].get<std::vector<std::int64_t>>();
  const auto acts = header["activations"].get<std::vector<std::string>>();
  const auto slopes = header["leaky_slopes"].get<std::vector<double>>();
  const auto betas = header["betas"].get<std::vector<double>>();
  if (dims.size() < 2 || acts.size() != dims.size() - 1 ||
      slopes.size() != acts.size() || betas.size() != acts.size()) {
    throw ParseError(path, 0, "inconsistent layer metadata");
  }

  Checkpoint ck;
  ck.epoch = header["epoch"].get<int>();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.weights.resize(dims[l + 1], dims[l]);
    layer.activation = activation_from_name(acts[l]);
    layer.leaky_slope = slopes[l];
    layer.beta = betas[l];
    read_f64_rowmajor(in, path, offset, layer.weights);
    Eigen::MatrixXd bias_row(1, dims[l + 1]);
    read_f64_rowmajor(in, path, offset, bias_row);
    layer.bias = bias_row.transpose();
    ck.net.layers.push_back(std::move(layer));
  }
  char extra = 0;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw ParseError(path, offset, "payload longer than declared by header");
  }
  ck.net.validate();
  return ck;
}

ResultRow::ResultRow()
    : i_sp(std::numeric_limits<double>::quiet_NaN()),
      h_uncond(std::numeric_limits<double>::quiet_NaN()),
      h_cond_mean(std::numeric_limits<double>::quiet_NaN()),
      lb(std::numeric_limits<double>::quiet_NaN()),
      ub(std::numeric_limits<double>::quiet_NaN()),
      mc_se(std::numeric_limits<double>::quiet_NaN()),
      binned_entropy(std::numeric_limits<double>::quiet_NaN()),
      train_loss(std::numeric_limits<double>::quiet_NaN()),
      test_loss(std::numeric_limits<double>::quiet_NaN()) {}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

void write_results_csv(const std::string& path, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a,
                                         const ResultRow& b) {
    return a.epoch != b.epoch ? a.epoch < b.epoch : a.layer < b.layer;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "epoch,layer,i_sp,h_uncond,h_cond_mean,lb,ub,mc_se,binned_entropy,"
         "train_loss,test_loss\n";
  for (const ResultRow& r : rows) {
    out << r.epoch << ',' << r.layer << ',' << format_double(r.i_sp) << ','
        << format_double(r.h_uncond) << ',' << format_double(r.h_cond_mean)
        << ',' << format_double(r.lb) << ',' << format_double(r.ub) << ','
        << format_double(r.mc_se) << ',' << format_double(r.binned_entropy)
        << ',' << format_double(r.train_loss) << ','
        << format_double(r.test_loss) << '\n';
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

}  // namespace infoflow

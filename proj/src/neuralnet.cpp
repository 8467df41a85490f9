#include "causalembed/neuralnet.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "causalembed/errors.hpp"
#include "causalembed/serialize.hpp"

namespace causalembed::nn {

namespace {

inline double apply_output(OutputActivation act, double z) {
  if (act == OutputActivation::ramp) {
    return z <= 0.0 ? 0.0 : (z >= 1.0 ? 1.0 : z);
  }
  return z;
}

inline double output_derivative(OutputActivation act, double z) {
  if (act == OutputActivation::ramp) {
    return (z > 0.0 && z < 1.0) ? 1.0 : 0.0;
  }
  return 1.0;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::string activation_name(OutputActivation a) {
  return a == OutputActivation::ramp ? "ramp" : "identity";
}

OutputActivation activation_from_name(const std::string& name) {
  if (name == "ramp") return OutputActivation::ramp;
  if (name == "identity") return OutputActivation::identity;
  throw DataFormatError("unknown activation '" + name + "'");
}

FeatureMap::FeatureMap(const FeatureMapSpec& spec, PhiloxRng& rng) {
  if (spec.input_dim == 0 || spec.feature_dim == 0) {
    throw InvalidArgument("feature map dimensions must be positive");
  }
  layer_dims_.push_back(spec.input_dim);
  for (std::size_t h : spec.hidden_dims) {
    if (h == 0) throw InvalidArgument("hidden width must be positive");
    layer_dims_.push_back(h);
  }
  layer_dims_.push_back(spec.feature_dim);
  output_activation_ = spec.output_activation;

  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    const std::size_t fan_in = layer_dims_[l];
    const std::size_t fan_out = layer_dims_[l + 1];
    const double bound =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    linalg::Matrix w(fan_out, fan_in);
    for (std::size_t i = 0; i < fan_out; ++i) {
      for (std::size_t j = 0; j < fan_in; ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    weights_.push_back(std::move(w));
    biases_.emplace_back(fan_out, 0.0);
  }
}

FeatureMap FeatureMap::constant(std::size_t input_dim,
                                std::size_t feature_dim, double value) {
  FeatureMap map;
  map.layer_dims_ = {input_dim, feature_dim};
  map.weights_.emplace_back(feature_dim, input_dim, 0.0);
  map.biases_.emplace_back(feature_dim, value);
  map.output_activation_ = OutputActivation::identity;
  return map;
}

void FeatureMap::check_input(std::span<const double> input) const {
  if (input.size() != layer_dims_.front()) {
    throw DimensionMismatch("feature map expects input dim " +
                            std::to_string(layer_dims_.front()) + ", got " +
                            std::to_string(input.size()));
  }
}

void FeatureMap::forward(std::span<const double> input, Workspace& ws) const {
  check_input(input);
  const std::size_t layers = weights_.size();
  ws.pre.resize(layers);
  ws.post.resize(layers);
  std::span<const double> current = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const linalg::Matrix& w = weights_[l];
    const linalg::Vector& b = biases_[l];
    linalg::Vector& z = ws.pre[l];
    if (z.size() != w.rows()) z = linalg::Vector(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      z[i] = linalg::dot(w.row_view(i), current) + b[i];
    }
    linalg::Vector& a = ws.post[l];
    if (a.size() != w.rows()) a = linalg::Vector(w.rows());
    if (l + 1 < layers) {
      for (std::size_t i = 0; i < w.rows(); ++i) {
        a[i] = z[i] > 0.0 ? z[i] : 0.0;
      }
    } else {
      for (std::size_t i = 0; i < w.rows(); ++i) {
        a[i] = apply_output(output_activation_, z[i]);
      }
    }
    current = a.view();
  }
}

linalg::Vector FeatureMap::forward(std::span<const double> input) const {
  Workspace ws;
  forward(input, ws);
  return ws.post.back();
}

void FeatureMap::Gradients::zero() {
  for (auto& w : weights) w.fill(0.0);
  for (auto& b : biases) b.fill(0.0);
  input.fill(0.0);
}

FeatureMap::Gradients FeatureMap::make_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.emplace_back(weights_[l].rows(), weights_[l].cols(), 0.0);
    g.biases.emplace_back(biases_[l].size(), 0.0);
  }
  g.input = linalg::Vector(layer_dims_.front(), 0.0);
  return g;
}

void FeatureMap::backward(std::span<const double> input,
                          std::span<const double> cotangent,
                          const Workspace& ws, Gradients& grads) const {
  check_input(input);
  if (cotangent.size() != feature_dim()) {
    throw DimensionMismatch("cotangent dim " +
                            std::to_string(cotangent.size()) +
                            " vs feature dim " +
                            std::to_string(feature_dim()));
  }
  const std::size_t layers = weights_.size();
  linalg::Vector delta(cotangent);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] *= output_derivative(output_activation_, ws.pre[layers - 1][i]);
  }
  for (std::size_t li = layers; li > 0; --li) {
    const std::size_t l = li - 1;
    const linalg::Matrix& w = weights_[l];
    std::span<const double> below =
        l == 0 ? input : ws.post[l - 1].view();
    linalg::Matrix& gw = grads.weights[l];
    linalg::Vector& gb = grads.biases[l];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double di = delta[i];
      if (di != 0.0) {
        double* grow = gw.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) {
          grow[j] += di * below[j];
        }
      }
      gb[i] += di;
    }
    // delta for the layer below: W^T delta, masked by the ReLU derivative.
    linalg::Vector next(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double di = delta[i];
      if (di == 0.0) continue;
      const double* row = w.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) {
        next[j] += di * row[j];
      }
    }
    if (l == 0) {
      for (std::size_t j = 0; j < next.size(); ++j) {
        grads.input[j] += next[j];
      }
    } else {
      for (std::size_t j = 0; j < next.size(); ++j) {
        if (!(ws.pre[l - 1][j] > 0.0)) next[j] = 0.0;
      }
      delta = std::move(next);
    }
  }
}

std::size_t FeatureMap::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    count += weights_[l].rows() * weights_[l].cols() + biases_[l].size();
  }
  return count;
}

void FeatureMap::copy_parameters(std::span<double> out) const {
  if (out.size() != parameter_count()) {
    throw DimensionMismatch("copy_parameters: bad buffer size");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const linalg::Matrix& w = weights_[l];
    for (std::size_t i = 0; i < w.rows() * w.cols(); ++i) {
      out[k++] = w.data()[i];
    }
    for (std::size_t i = 0; i < biases_[l].size(); ++i) {
      out[k++] = biases_[l][i];
    }
  }
}

void FeatureMap::set_parameters(std::span<const double> in) {
  if (in.size() != parameter_count()) {
    throw DimensionMismatch("set_parameters: bad buffer size");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    linalg::Matrix& w = weights_[l];
    for (std::size_t i = 0; i < w.rows() * w.cols(); ++i) {
      w.data()[i] = in[k++];
    }
    for (std::size_t i = 0; i < biases_[l].size(); ++i) {
      biases_[l][i] = in[k++];
    }
  }
}

void FeatureMap::flatten_gradients(const Gradients& grads,
                                   std::span<double> out) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const linalg::Matrix& w = grads.weights[l];
    for (std::size_t i = 0; i < w.rows() * w.cols(); ++i) {
      out[k++] = w.data()[i];
    }
    for (std::size_t i = 0; i < grads.biases[l].size(); ++i) {
      out[k++] = grads.biases[l][i];
    }
  }
  if (k != out.size()) {
    throw DimensionMismatch("flatten_gradients: bad buffer size");
  }
}

void FeatureMap::save(std::ostream& out) const {
  out << "causalembed-feature-map v1\n";
  out << "dims";
  for (std::size_t d : layer_dims_) out << ' ' << d;
  out << '\n';
  out << "hidden relu\n";
  out << "output " << activation_name(output_activation_) << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const linalg::Matrix& w = weights_[l];
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        out << format_double(w(i, j));
      }
      out << '\n';
    }
    out << "bias " << l << ' ' << biases_[l].size() << '\n';
    for (std::size_t i = 0; i < biases_[l].size(); ++i) {
      if (i) out << ' ';
      out << format_double(biases_[l][i]);
    }
    out << '\n';
  }
  out << "end feature-map\n";
}

FeatureMap FeatureMap::load(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  if (reader.expect_line("header") != "causalembed-feature-map v1") {
    throw DataFormatError(source + ": not a feature-map file");
  }
  FeatureMap map;
  auto dims = split_ws(reader.expect_line("dims"));
  if (dims.size() < 3 || dims[0] != "dims") {
    throw DataFormatError(source + ": expected dims line");
  }
  for (std::size_t i = 1; i < dims.size(); ++i) {
    map.layer_dims_.push_back(std::stoul(dims[i]));
  }
  if (reader.expect_line("hidden") != "hidden relu") {
    throw DataFormatError(source + ": expected 'hidden relu'");
  }
  auto out_line = split_ws(reader.expect_line("output"));
  if (out_line.size() != 2 || out_line[0] != "output") {
    throw DataFormatError(source + ": expected output line");
  }
  map.output_activation_ = activation_from_name(out_line[1]);

  const std::size_t layers = map.layer_dims_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    auto header = split_ws(reader.expect_line("weight header"));
    if (header.size() != 4 || header[0] != "weight") {
      throw DataFormatError(source + ": expected weight header for layer " +
                            std::to_string(l));
    }
    const std::size_t rows = std::stoul(header[2]);
    const std::size_t cols = std::stoul(header[3]);
    if (rows != map.layer_dims_[l + 1] || cols != map.layer_dims_[l]) {
      throw DataFormatError(source + ": weight shape mismatch at layer " +
                            std::to_string(l));
    }
    linalg::Matrix w(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      auto values = split_ws(reader.expect_line("weight row"));
      if (values.size() != cols) {
        throw DataFormatError(source + ": weight row has " +
                              std::to_string(values.size()) + " values, want " +
                              std::to_string(cols));
      }
      for (std::size_t j = 0; j < cols; ++j) {
        w(i, j) = parse_double(values[j], source);
      }
    }
    map.weights_.push_back(std::move(w));

    auto bias_header = split_ws(reader.expect_line("bias header"));
    if (bias_header.size() != 3 || bias_header[0] != "bias") {
      throw DataFormatError(source + ": expected bias header for layer " +
                            std::to_string(l));
    }
    auto values = split_ws(reader.expect_line("bias values"));
    if (values.size() != rows) {
      throw DataFormatError(source + ": bias has " +
                            std::to_string(values.size()) + " values, want " +
                            std::to_string(rows));
    }
    linalg::Vector b(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      b[i] = parse_double(values[i], source);
    }
    map.biases_.push_back(std::move(b));
  }
  if (reader.expect_line("trailer") != "end feature-map") {
    throw DataFormatError(source + ": missing feature-map trailer");
  }
  return map;
}

std::string FeatureMap::serialized() const {
  std::ostringstream out;
  save(out);
  return out.str();
}

std::string FeatureMap::fingerprint() const { return fnv1a_hex(serialized()); }

AdamOptimizer::AdamOptimizer(std::size_t parameter_count,
                             const AdamConfig& config)
    : config_(config),
      first_moment_(parameter_count, 0.0),
      second_moment_(parameter_count, 0.0) {}

void AdamOptimizer::step(std::span<double> params,
                         std::span<const double> grads) {
  if (params.size() != first_moment_.size() ||
      grads.size() != first_moment_.size()) {
    throw DimensionMismatch("adam step: parameter/gradient size mismatch");
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 =
      1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 =
      1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment_[i] = b1 * first_moment_[i] + (1.0 - b1) * g;
    second_moment_[i] = b2 * second_moment_[i] + (1.0 - b2) * g * g;
    const double m_hat = first_moment_[i] / correction1;
    const double v_hat = second_moment_[i] / correction2;
    params[i] -= config_.step_size * m_hat /
                 (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace causalembed::nn

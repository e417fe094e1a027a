#include "illc/mlp.hpp"

#include <cmath>
#include "illc/io.hpp"
#include "json.hpp"

namespace illc {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double activation_apply(Activation kind, double x) {
  switch (kind) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

double activation_inverse(Activation kind, double y) {
  switch (kind) {
    case Activation::relu: return y > 0.0 ? y : 0.0;
    case Activation::sigmoid:
      if (!(y > 0.0 && y < 1.0))
        throw DomainError("sigmoid inverse needs y in (0,1), got " + format_double(y));
      return std::log(y / (1.0 - y));
    case Activation::tanh:
      if (!(y > -1.0 && y < 1.0))
        throw DomainError("tanh inverse needs y in (-1,1), got " + format_double(y));
      return std::atanh(y);
    case Activation::identity: return y;
  }
  return y;
}

double activation_derivative(Activation kind, double h, double o) {
  switch (kind) {
    case Activation::relu: return h > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return o * (1.0 - o);
    case Activation::tanh: return 1.0 - o * o;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::vector<Matrix> weights,
         std::vector<std::vector<double>> biases, Activation hidden, Activation output)
    : layer_sizes_(std::move(layer_sizes)),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      hidden_(hidden),
      output_(output) {
  if (layer_sizes_.size() < 3)
    throw ValidationError("an MLP needs at least one hidden layer");
  for (auto s : layer_sizes_)
    if (s == 0) throw ValidationError("layer sizes must be positive");
  const std::size_t transitions = layer_sizes_.size() - 1;
  if (weights_.size() != transitions || biases_.size() != transitions)
    throw DimensionError("expected " + std::to_string(transitions) +
                         " weight matrices and bias vectors");
  for (std::size_t l = 0; l < transitions; ++l) {
    if (weights_[l].rows() != layer_sizes_[l + 1] || weights_[l].cols() != layer_sizes_[l])
      throw DimensionError("weights[" + std::to_string(l) + "] has shape " +
                           std::to_string(weights_[l].rows()) + "x" +
                           std::to_string(weights_[l].cols()) + ", expected " +
                           std::to_string(layer_sizes_[l + 1]) + "x" +
                           std::to_string(layer_sizes_[l]));
    if (biases_[l].size() != layer_sizes_[l + 1])
      throw DimensionError("biases[" + std::to_string(l) + "] has wrong length");
  }
  if (hidden_ == Activation::identity)
    throw ConfigError("hidden activation must be relu, sigmoid or tanh");
  if (output_ != Activation::sigmoid && output_ != Activation::identity)
    throw ConfigError("output activation must be sigmoid or identity");
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += weights_[l].rows() * weights_[l].cols() + biases_[l].size();
  return n;
}

Matrix layer_preactivation(const Matrix& in, const Matrix& weights,
                           std::span<const double> bias) {
  if (in.cols() != weights.cols())
    throw DimensionError("input has " + std::to_string(in.cols()) +
                         " columns, layer expects " + std::to_string(weights.cols()));
  Matrix out(in.rows(), weights.rows());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto x = in.row(r);
    auto h = out.row(r);
    for (std::size_t j = 0; j < weights.rows(); ++j) h[j] = dot(x, weights.row(j)) + bias[j];
  }
  return out;
}

Matrix apply_activation(Activation kind, const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  auto src = pre.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = activation_apply(kind, src[k]);
  return out;
}

ActivationStack forward_collect(const Mlp& model, const Matrix& inputs,
                                ForwardCounter* counter) {
  if (inputs.cols() != model.input_dim())
    throw DimensionError("input has " + std::to_string(inputs.cols()) +
                         " features, model expects " + std::to_string(model.input_dim()));
  if (!inputs.all_finite()) throw ValidationError("input contains non-finite values");
  ActivationStack stack;
  const std::size_t transitions = model.depth() + 1;
  stack.pre.reserve(transitions);
  stack.post.reserve(transitions + 1);
  stack.post.push_back(inputs);
  for (std::size_t l = 0; l < transitions; ++l) {
    stack.pre.push_back(layer_preactivation(stack.post.back(), model.weights(l), model.bias(l)));
    stack.post.push_back(apply_activation(model.activation_after(l), stack.pre.back()));
  }
  if (counter) counter->add(transitions);
  return stack;
}

Matrix predict(const Mlp& model, const Matrix& inputs, ForwardCounter* counter) {
  return std::move(forward_collect(model, inputs, counter).post.back());
}

std::string to_json(const Mlp& model) {
  std::string s = "{\n  \"layer_sizes\": [";
  const auto& sizes = model.layer_sizes();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(sizes[i]);
  }
  s += "],\n  \"activation\": \"";
  s += to_string(model.hidden_activation());
  s += "\",\n  \"output_activation\": \"";
  s += to_string(model.output_activation());
  s += "\",\n  \"weights\": [";
  for (std::size_t l = 0; l < model.all_weights().size(); ++l) {
    const Matrix& w = model.weights(l);
    s += l ? ",\n    [" : "\n    [";
    for (std::size_t r = 0; r < w.rows(); ++r) {
      s += r ? ",\n      [" : "\n      [";
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (c) s += ", ";
        s += format_double(w(r, c));
      }
      s += "]";
    }
    s += "\n    ]";
  }
  s += "\n  ],\n  \"biases\": [";
  for (std::size_t l = 0; l < model.all_biases().size(); ++l) {
    const auto& b = model.bias(l);
    s += l ? ",\n    [" : "\n    [";
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i) s += ", ";
      s += format_double(b[i]);
    }
    s += "]";
  }
  s += "\n  ]\n}\n";
  return s;
}

Mlp mlp_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  try {
    auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    auto hidden = parse_activation(j.at("activation").get<std::string>());
    auto output = parse_activation(j.at("output_activation").get<std::string>());
    std::vector<Matrix> weights;
    for (const auto& w : j.at("weights"))
      weights.push_back(Matrix::from_rows(w.get<std::vector<std::vector<double>>>()));
    auto biases = j.at("biases").get<std::vector<std::vector<double>>>();
    return Mlp(std::move(sizes), std::move(weights), std::move(biases), hidden, output);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

void save_mlp(const Mlp& model, const std::filesystem::path& path) {
  write_text_file(path, to_json(model));
}

Mlp load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_text_file(path)); }

std::string model_hash(const Mlp& model) { return fnv1a_hex(to_json(model)); }

}  // namespace illc

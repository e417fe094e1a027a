#include "illc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/rng.hpp"

namespace illc {

std::string_view to_string(Init init) {
  switch (init) {
    case Init::he: return "he";
    case Init::xavier: return "xavier";
    case Init::gaussian: return "gaussian";
  }
  return "?";
}

Init parse_init(std::string_view name) {
  if (name == "he") return Init::he;
  if (name == "xavier") return Init::xavier;
  if (name == "gaussian") return Init::gaussian;
  throw ConfigError("unknown init '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
  if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a positive finite number");
  if (activation == Activation::identity)
    throw ConfigError("hidden activation must be relu, sigmoid or tanh");
}

Mlp init_mlp(const TrainConfig& config, std::size_t input_dim, std::size_t output_dim) {
  config.validate();
  if (input_dim < 1 || output_dim < 1) throw ConfigError("input/output dims must be >= 1");
  std::vector<std::size_t> sizes{input_dim};
  for (std::size_t l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.hidden_width);
  sizes.push_back(output_dim);

  SplitMix64 rng(config.seed);
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double fan_in = static_cast<double>(sizes[l]);
    const double fan_out = static_cast<double>(sizes[l + 1]);
    double stddev = 1.0;
    switch (config.init) {
      case Init::he: stddev = std::sqrt(2.0 / fan_in); break;
      case Init::xavier: stddev = std::sqrt(2.0 / (fan_in + fan_out)); break;
      case Init::gaussian: stddev = 1.0; break;
    }
    Matrix w(sizes[l + 1], sizes[l]);
    for (double& v : w.data()) v = stddev * rng.normal();
    weights.push_back(std::move(w));
    biases.emplace_back(sizes[l + 1], 0.0);
  }
  return Mlp(std::move(sizes), std::move(weights), std::move(biases), config.activation,
             Activation::sigmoid);
}

Matrix targets_from_labels(std::span<const int> labels) {
  Matrix t(labels.size(), 1);
  for (std::size_t r = 0; r < labels.size(); ++r) t(r, 0) = labels[r] ? 1.0 : 0.0;
  return t;
}

double bce_loss(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
    throw DimensionError("outputs and targets differ in shape");
  constexpr double kClamp = 1e-15;
  double total = 0.0;
  for (std::size_t r = 0; r < outputs.rows(); ++r)
    for (std::size_t c = 0; c < outputs.cols(); ++c) {
      const double o = std::clamp(outputs(r, c), kClamp, 1.0 - kClamp);
      const double y = targets(r, c);
      total -= y * std::log(o) + (1.0 - y) * std::log(1.0 - o);
    }
  return total / static_cast<double>(outputs.rows());
}

Gradients backward(const Mlp& model, const ActivationStack& stack, const Matrix& targets) {
  const std::size_t transitions = model.depth() + 1;
  if (stack.pre.size() != transitions || stack.post.size() != transitions + 1)
    throw DimensionError("activation stack does not match model depth");
  if (model.output_activation() != Activation::sigmoid)
    throw ConfigError("binary cross-entropy training needs a sigmoid output");
  const Matrix& out = stack.post.back();
  if (targets.rows() != out.rows() || targets.cols() != out.cols())
    throw DimensionError("targets shape does not match network output");

  const std::size_t batch = out.rows();
  const double scale = 1.0 / static_cast<double>(batch);

  Gradients g;
  g.weights.resize(transitions);
  g.biases.resize(transitions);

  Matrix delta(out.rows(), out.cols());
  for (std::size_t k = 0; k < delta.data().size(); ++k)
    delta.data()[k] = out.data()[k] - targets.data()[k];

  for (std::size_t l = transitions; l-- > 0;) {
    const Matrix& input = stack.post[l];
    Matrix gw(model.weights(l).rows(), model.weights(l).cols());
    std::vector<double> gb(gw.rows(), 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      auto x = input.row(r);
      for (std::size_t j = 0; j < gw.rows(); ++j) {
        const double d = delta(r, j);
        gb[j] += d;
        if (d == 0.0) continue;
        auto row = gw.row(j);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] += d * x[i];
      }
    }
    for (double& v : gw.data()) v *= scale;
    for (double& v : gb) v *= scale;
    g.weights[l] = std::move(gw);
    g.biases[l] = std::move(gb);

    if (l == 0) break;
    // Successor errors aggregated back through the weights, then gated by
    // the derivative of the hidden activation.
    const Matrix& w = model.weights(l);
    Matrix prev(batch, w.cols());
    const Activation act = model.activation_after(l - 1);
    for (std::size_t r = 0; r < batch; ++r) {
      auto acc = prev.row(r);
      for (std::size_t j = 0; j < w.rows(); ++j) {
        const double d = delta(r, j);
        if (d == 0.0) continue;
        auto wrow = w.row(j);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d * wrow[i];
      }
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] *= activation_derivative(act, stack.pre[l - 1](r, i), stack.post[l](r, i));
    }
    delta = std::move(prev);
  }
  return g;
}

double accuracy(const Mlp& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const Matrix out = predict(model, data.features);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r)
    if ((out(r, 0) >= 0.5 ? 1 : 0) == data.labels[r]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw ValidationError("cannot train on an empty dataset");
  Mlp model = init_mlp(config, data.feature_count(), 1);
  const Matrix all_targets = targets_from_labels(data.labels);

  std::vector<Matrix> weights = model.all_weights();
  std::vector<std::vector<double>> biases = model.all_biases();

  SplitMix64 rng(config.seed ^ 0xD1B54A32D192ED03ull);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, {}};
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> rows(order.begin() + start, order.begin() + stop);
      const Matrix x = data.features.select_rows(rows);
      const Matrix y = all_targets.select_rows(rows);
      const Mlp current(model.layer_sizes(), weights, biases, model.hidden_activation(),
                        model.output_activation());
      const Gradients g = backward(current, forward_collect(current, x), y);
      for (std::size_t l = 0; l < weights.size(); ++l) {
        auto w = weights[l].data();
        auto gw = g.weights[l].data();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= config.learning_rate * gw[k];
        for (std::size_t j = 0; j < biases[l].size(); ++j)
          biases[l][j] -= config.learning_rate * g.biases[l][j];
      }
    }
    model = Mlp(model.layer_sizes(), weights, biases, model.hidden_activation(),
                model.output_activation());
    bool params_finite = true;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      params_finite = params_finite && weights[l].all_finite();
      for (double b : biases[l]) params_finite = params_finite && std::isfinite(b);
    }
    if (!params_finite) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    const Matrix out = predict(model, data.features);
    if (!out.all_finite())
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    const double loss = bce_loss(out, all_targets);
    if (!std::isfinite(loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < data.size(); ++r)
      if ((out(r, 0) >= 0.5 ? 1 : 0) == data.labels[r]) ++correct;
    result.log.push_back(
        {epoch, loss, static_cast<double>(correct) / static_cast<double>(data.size())});
  }
  result.model = std::move(model);
  return result;
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
  std::string s = "epoch,loss,accuracy\n";
  for (const auto& e : log)
    s += std::to_string(e.epoch) + "," + format_double(e.loss) + "," + format_double(e.accuracy) +
         "\n";
  return s;
}

}  // namespace illc

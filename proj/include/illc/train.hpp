#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "illc/data.hpp"
#include "illc/mlp.hpp"

namespace illc {

enum class Init { he, xavier, gaussian };
enum class Loss { bce };

std::string_view to_string(Init init);
Init parse_init(std::string_view name);

struct TrainConfig {
  std::size_t hidden_layers = 5;
  std::size_t hidden_width = 100;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  Init init = Init::he;
  Loss loss = Loss::bce;
  Activation activation = Activation::relu;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Random weights (He: N(0, 2/fan_in); Xavier: N(0, 2/(fan_in+fan_out));
// gaussian: N(0, 1)), zero biases, sigmoid output.
Mlp init_mlp(const TrainConfig& config, std::size_t input_dim, std::size_t output_dim);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Targets as an N x outputs matrix of 0/1 values.
Matrix targets_from_labels(std::span<const int> labels);

// Mean binary cross-entropy over rows, summed over output units.
double bce_loss(const Matrix& outputs, const Matrix& targets);

// Backpropagation of the batch-mean binary cross-entropy. The output error
// is o - y (sigmoid + BCE); hidden errors are the weighted sum of
// successor errors times phi'(h).
Gradients backward(const Mlp& model, const ActivationStack& stack, const Matrix& targets);

double accuracy(const Mlp& model, const Dataset& data);

struct EpochLog {
  std::size_t epoch;
  double loss;
  double accuracy;
};

struct TrainResult {
  Mlp model;
  std::vector<EpochLog> log;
};

// Plain mini-batch SGD. Throws NumericError naming the epoch if the loss
// stops being finite.
TrainResult train(const Dataset& data, const TrainConfig& config);

std::string log_to_csv(const std::vector<EpochLog>& log);

}  // namespace illc

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "illc/matrix.hpp"

namespace illc {

enum class Activation { relu, sigmoid, tanh, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

double activation_apply(Activation kind, double x);

// Inverse used to map base scores back to pre-activation space. ReLU gets
// the piecewise inverse x -> (x > 0 ? x : 0). Throws DomainError for
// sigmoid/tanh arguments outside the open range of the function.
double activation_inverse(Activation kind, double y);

// Derivative expressed through the pre-activation `h` and the output
// `o = phi(h)`, whichever is cheaper for the given kind.
double activation_derivative(Activation kind, double h, double o);

// Counts full layer evaluations over a batch. Shared between threads.
class ForwardCounter {
 public:
  void add(std::uint64_t n) { count_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t value() const { return count_.load(std::memory_order_relaxed); }
  void reset() { count_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

// Fully connected feed-forward network. weights[l] maps layer l to layer
// l+1 and has shape layer_sizes[l+1] x layer_sizes[l]: entry (j, i) is the
// weight into neuron j of layer l+1 from neuron i of layer l. Immutable
// once constructed.
class Mlp {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, std::vector<Matrix> weights,
      std::vector<std::vector<double>> biases, Activation hidden = Activation::relu,
      Activation output = Activation::sigmoid);

  // Number of hidden layers.
  std::size_t depth() const { return layer_sizes_.size() - 2; }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t output_dim() const { return layer_sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }

  const Matrix& weights(std::size_t l) const { return weights_.at(l); }
  const std::vector<double>& bias(std::size_t l) const { return biases_.at(l); }
  const std::vector<Matrix>& all_weights() const { return weights_; }
  const std::vector<std::vector<double>>& all_biases() const { return biases_; }

  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  // Activation applied after transition l (hidden for l < depth()).
  Activation activation_after(std::size_t l) const {
    return l + 1 < weights_.size() ? hidden_ : output_;
  }

  // Weights into neuron j of layer l+1.
  std::span<const double> incoming(std::size_t l, std::size_t j) const {
    return weights_.at(l).row(j);
  }
  // Weights out of neuron i of layer l.
  std::vector<double> outgoing(std::size_t l, std::size_t i) const {
    return weights_.at(l).column(i);
  }

  std::size_t parameter_count() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<Matrix> weights_;
  std::vector<std::vector<double>> biases_;
  Activation hidden_;
  Activation output_;
};

// Activations of one forward sweep. pre[l] holds the N x |V_{l+1}|
// pre-activations, post[l] the N x |V_l| outputs with post[0] the input.
struct ActivationStack {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

// in * W^T + b, summing each dot product left to right before adding bias.
Matrix layer_preactivation(const Matrix& in, const Matrix& weights,
                           std::span<const double> bias);
Matrix apply_activation(Activation kind, const Matrix& pre);

ActivationStack forward_collect(const Mlp& model, const Matrix& inputs,
                                ForwardCounter* counter = nullptr);
Matrix predict(const Mlp& model, const Matrix& inputs, ForwardCounter* counter = nullptr);

// JSON model format. Numbers are written with 17 significant digits so a
// save/load cycle reproduces every finite double exactly.
std::string to_json(const Mlp& model);
Mlp mlp_from_json(std::string_view text);
void save_mlp(const Mlp& model, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

// FNV-1a 64 of the canonical JSON text, as 16 lowercase hex digits.
std::string model_hash(const Mlp& model);

}  // namespace illc

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "illc/compress.hpp"
#include "illc/mlp.hpp"

namespace illc {

enum class Polarity { attack, support };

struct Argument {
  std::string id;  // unique, e.g. "L2_N7"
  std::size_t layer = 0;
  std::string name;
  // Base score in activation-output space, phi(bias).
  double base_score = 0.0;
  // The same base strength in pre-activation space (the bias). Kept
  // explicitly because the ReLU inverse is not injective on negatives.
  double base_preactivation = 0.0;

  friend bool operator==(const Argument&, const Argument&) = default;
};

struct Edge {
  std::size_t from = 0;  // argument indices
  std::size_t to = 0;
  double weight = 0.0;
  Polarity polarity = Polarity::support;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Layered QBAF. Arguments are stored layer by layer; `layer_activation[l]`
// is the influence function of layer l (identity for inputs).
struct Qbaf {
  std::vector<std::size_t> layer_sizes;
  std::vector<Activation> layer_activation;
  std::vector<Argument> arguments;
  std::vector<Edge> edges;

  std::size_t first_of_layer(std::size_t layer) const;
  std::size_t attack_count() const;
  std::size_t support_count() const;

  friend bool operator==(const Qbaf&, const Qbaf&) = default;
};

// One argument per neuron. `input`, when given, becomes the base score of
// the input arguments (otherwise 0). Zero-weight edges are dropped.
Qbaf to_qbaf(const Mlp& model, std::optional<std::span<const double>> input = std::nullopt);
// Cluster-neuron arguments named after the neurons they absorbed.
Qbaf to_qbaf(const ClusteredMlp& model, std::optional<std::span<const double>> input = std::nullopt);

// Forward aggregation (weighted sum of predecessor strengths plus the
// pre-activation base) followed by the layer's influence function.
// Returns the final strength of every argument.
std::vector<double> qbaf_forward(const Qbaf& qbaf, std::span<const double> input_values);

enum class QbafFormat { dot, json };
QbafFormat parse_qbaf_format(std::string_view name);

std::string export_qbaf(const Qbaf& qbaf, QbafFormat format);
Qbaf qbaf_from_json(std::string_view text);

}  // namespace illc

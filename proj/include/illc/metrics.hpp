#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "illc/compress.hpp"
#include "illc/mlp.hpp"

namespace illc {

// Both the per-sample mean (reported by default) and the raw sum over the
// dataset.
struct IoUnfaithfulness {
  double mean = 0.0;
  double raw = 0.0;
};

IoUnfaithfulness io_unfaithfulness_global(const Mlp& original, const Mlp& compressed,
                                          const Matrix& delta);

// Kernel-weighted squared output gap around `anchor`.
double io_unfaithfulness_local(const Mlp& original, const Mlp& compressed, const Matrix& delta,
                               std::span<const double> anchor, double sigma);

struct StructuralUnfaithfulness {
  double total = 0.0;
  std::vector<double> per_layer;   // hidden layers 1..d
  std::vector<double> cumulative;  // prefix sums of per_layer
};

struct KernelAnchor {
  std::vector<double> x;
  double sigma = 0.0;
};

// Squared gap between each original hidden neuron and the cluster-neuron
// that absorbed it, weighted 1/|delta| (global) or by the normalized
// kernel around `anchor` (local).
StructuralUnfaithfulness structural_unfaithfulness(const Mlp& original,
                                                   const ClusteredMlp& compressed,
                                                   const Matrix& delta,
                                                   const std::optional<KernelAnchor>& anchor = {});

// Supplementary reading of the structural gap: each original neuron is
// evaluated in the compressed network's context (its own incoming row,
// with sources merged by summing over the previous layer's clusters, fed
// with the compressed network's previous-layer outputs) and compared with
// its cluster-neuron. Same weighting as structural_unfaithfulness.
StructuralUnfaithfulness structural_unfaithfulness_in_context(
    const Mlp& original, const ClusteredMlp& compressed, const Matrix& delta,
    const std::optional<KernelAnchor>& anchor = {});

// Product of hidden cluster counts and the output width.
struct CognitiveComplexity {
  std::string exact;  // decimal
  double log10 = 0.0;
};

CognitiveComplexity cognitive_complexity(const Mlp& compressed);

// Fraction of neurons per hidden layer whose output is <= 1e-9 on every
// row of `delta`. Returns nullopt for non-ReLU networks.
std::optional<std::vector<double>> dead_neuron_ratio(const Mlp& model, const Matrix& delta);

struct EvalReport {
  double io_global = 0.0;
  double io_global_raw = 0.0;
  std::optional<double> io_local;
  double structural = 0.0;
  std::vector<double> structural_per_layer;
  std::vector<double> structural_cumulative;
  double structural_in_context = 0.0;
  CognitiveComplexity cognitive_complexity;
  std::optional<std::vector<double>> dead_ratio_per_layer;             // original network
  std::optional<std::vector<double>> dead_ratio_per_layer_compressed;  // compressed network

  // Metadata.
  std::string origin_hash;
  std::string method;
  std::string mode;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::string delta_description;
  std::size_t delta_size = 0;
  std::string scope = "global";
  std::optional<std::size_t> anchor_sample;
  std::optional<double> sigma;
};

// Evaluates every metric. With an anchor, io_local is filled and the
// structural series use kernel weights; otherwise they are global.
EvalReport evaluate(const Mlp& original, const ClusteredMlp& compressed, const Matrix& delta,
                    const std::optional<KernelAnchor>& anchor = {},
                    std::optional<std::size_t> anchor_sample = {});

std::string to_json(const EvalReport& report);
// `layer,structural,cumulative,dead_ratio`
std::string per_layer_csv(const EvalReport& report);

}  // namespace illc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "illc/cluster.hpp"
#include "illc/mlp.hpp"

namespace illc {

enum class Method { illc, oneshot };
enum class Mode { global, local };

std::string_view to_string(Method m);
std::string_view to_string(Mode m);
Method parse_method(std::string_view name);
Mode parse_mode(std::string_view name);

// Input sample and kernel width that localize edge aggregation.
struct LocalAnchor {
  std::vector<double> x;
  double sigma = 0.0;
  std::optional<std::size_t> sample_index;  // row of the dataset, when known
};

struct CompressOptions {
  double gamma = 0.2;
  std::uint64_t seed = 0;
  Mode mode = Mode::global;
  std::optional<LocalAnchor> anchor;  // required iff mode == local
};

// A compressed network whose hidden neurons are cluster-neurons, with the
// per-layer partition that produced it.
struct ClusteredMlp {
  Mlp model;
  std::vector<LayerClustering> clustering;  // hidden layers 1..d
  std::string origin_hash;
  Method method = Method::illc;
  Mode mode = Mode::global;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::optional<LocalAnchor> anchor;
  // Full-batch layer evaluations spent while compressing.
  std::uint64_t layer_evaluations = 0;
};

// Mean bias of a cluster.
double agg_bias_global(std::span<const double> biases, std::span<const std::size_t> members);

// Sum over source members of the mean over target members of
// weights(target, source).
double agg_edge_global(const Matrix& weights, std::span<const std::size_t> source,
                       std::span<const std::size_t> target);

// Kernel-weighted edge aggregation. For each sample x' with normalized
// kernel weight pi[x'], source member i contributes
//   pi[x'] * O_orig[x'][i] / O_cluster[x'] * mean_{j in target} W(j, i),
// where O_cluster is the activation of the source cluster-neuron. When
// O_cluster[x'] <= 1e-9 the ratio falls back to 1 (the global term).
// `original_activations` is |samples| x |layer| and `cluster_activation`
// holds one value per sample.
double agg_edge_local(const Matrix& weights, std::span<const std::size_t> source,
                      std::span<const std::size_t> target, const Matrix& original_activations,
                      std::span<const double> cluster_activation,
                      std::span<const double> kernel);

// Per-neuron scale factors used by the outgoing-weight sum in local mode:
// alpha_i = sum_x' pi[x'] * ratio(x', i).
std::vector<double> local_edge_scales(const LayerClustering& clustering,
                                      const Matrix& original_activations,
                                      const Matrix& cluster_activations,
                                      std::span<const double> kernel);

// Baseline: every hidden layer is clustered from the ORIGINAL network's
// activations on `inputs`, then all merges are applied.
ClusteredMlp compress_oneshot(const Mlp& model, const Matrix& inputs,
                              const CompressOptions& options, ForwardCounter* counter = nullptr);

// Iterative layer-by-layer compression: layer l is clustered from
// activations produced by the already-compressed layers 1..l-1.
ClusteredMlp compress_illc(const Mlp& model, const Matrix& inputs,
                           const CompressOptions& options, ForwardCounter* counter = nullptr);

ClusteredMlp compress(Method method, const Mlp& model, const Matrix& inputs,
                      const CompressOptions& options, ForwardCounter* counter = nullptr);

// Sidecar JSON: {method, mode, gamma, seed, clustering, origin_hash, ...}.
std::string sidecar_json(const ClusteredMlp& c);
ClusteredMlp clustered_from_files(const std::filesystem::path& model_path,
                                  const std::filesystem::path& sidecar_path);
void save_clustered(const ClusteredMlp& c, const std::filesystem::path& model_path,
                    const std::filesystem::path& sidecar_path);

// `out.json` -> `out.sidecar.json`.
std::filesystem::path default_sidecar_path(const std::filesystem::path& model_path);

}  // namespace illc

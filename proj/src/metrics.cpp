#include "illc/metrics.hpp"

#include <cmath>
#include <cstdint>

#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/kernel.hpp"
#include "json.hpp"

namespace illc {
namespace {

void check_pair(const Mlp& original, const Mlp& compressed, const Matrix& delta) {
  if (delta.rows() == 0) throw ValidationError("evaluation dataset is empty");
  if (original.input_dim() != delta.cols() || compressed.input_dim() != delta.cols())
    throw DimensionError("evaluation dataset width does not match the models");
  if (original.output_dim() != compressed.output_dim())
    throw DimensionError("models disagree on output width");
}

std::vector<double> squared_output_gaps(const Mlp& original, const Mlp& compressed,
                                        const Matrix& delta) {
  check_pair(original, compressed, delta);
  const Matrix a = predict(original, delta);
  const Matrix b = predict(compressed, delta);
  std::vector<double> gaps(delta.rows(), 0.0);
  for (std::size_t r = 0; r < delta.rows(); ++r)
    for (std::size_t v = 0; v < a.cols(); ++v) {
      const double d = a(r, v) - b(r, v);
      gaps[r] += d * d;
    }
  return gaps;
}

// Small base-1e9 big integer, just enough for a product of layer widths.
std::string product_decimal(const std::vector<std::size_t>& factors) {
  std::vector<std::uint64_t> limbs{1};
  constexpr std::uint64_t kBase = 1'000'000'000ull;
  for (auto f : factors) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs) {
      const unsigned __int128 v = static_cast<unsigned __int128>(limb) * f + carry;
      limb = static_cast<std::uint64_t>(v % kBase);
      carry = static_cast<std::uint64_t>(v / kBase);
    }
    while (carry) {
      limbs.push_back(carry % kBase);
      carry /= kBase;
    }
  }
  std::string s = std::to_string(limbs.back());
  for (std::size_t i = limbs.size() - 1; i-- > 0;) {
    std::string part = std::to_string(limbs[i]);
    s += std::string(9 - part.size(), '0') + part;
  }
  return s;
}

void check_clustering(const Mlp& original, const ClusteredMlp& compressed, const Matrix& delta) {
  const Mlp& mu = compressed.model;
  check_pair(original, mu, delta);
  const std::size_t d = original.depth();
  if (mu.depth() != d || compressed.clustering.size() != d)
    throw ValidationError("clustering does not align with the original network's hidden layers");
  for (std::size_t l = 1; l <= d; ++l) {
    const auto& lc = compressed.clustering[l - 1];
    if (lc.labels.size() != original.layer_sizes()[l] || lc.k != mu.layer_sizes()[l])
      throw ValidationError("clustering of layer " + std::to_string(l) +
                            " does not match the models");
    for (auto label : lc.labels)
      if (label >= lc.k) throw ValidationError("cluster label out of range");
  }
}

std::vector<double> sample_weights(const Matrix& delta, const std::optional<KernelAnchor>& anchor) {
  if (anchor) return kernel_weights(delta, anchor->x, anchor->sigma);
  return std::vector<double>(delta.rows(), 1.0 / static_cast<double>(delta.rows()));
}

// Weighted per-layer squared gaps between member activations
// members[l] (N x |V_l|) and cluster activations clusters[l] (N x K_l).
StructuralUnfaithfulness accumulate(const ClusteredMlp& compressed,
                                    const std::vector<const Matrix*>& members,
                                    const std::vector<const Matrix*>& clusters,
                                    const std::vector<double>& weights) {
  const std::size_t d = compressed.clustering.size();
  StructuralUnfaithfulness out;
  out.per_layer.assign(d, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    const auto& labels = compressed.clustering[l].labels;
    const Matrix& orig = *members[l];
    const Matrix& clus = *clusters[l];
    double layer_total = 0.0;
    for (std::size_t r = 0; r < weights.size(); ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const double g = orig(r, i) - clus(r, labels[i]);
        s += g * g;
      }
      layer_total += weights[r] * s;
    }
    out.per_layer[l] = layer_total;
  }
  out.cumulative.resize(d);
  double running = 0.0;
  for (std::size_t l = 0; l < d; ++l) {
    running += out.per_layer[l];
    out.cumulative[l] = running;
  }
  out.total = running;
  return out;
}

}  // namespace

IoUnfaithfulness io_unfaithfulness_global(const Mlp& original, const Mlp& compressed,
                                          const Matrix& delta) {
  const auto gaps = squared_output_gaps(original, compressed, delta);
  IoUnfaithfulness out;
  for (double g : gaps) out.raw += g;
  out.mean = out.raw / static_cast<double>(gaps.size());
  return out;
}

double io_unfaithfulness_local(const Mlp& original, const Mlp& compressed, const Matrix& delta,
                               std::span<const double> anchor, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("kernel width sigma must be > 0");
  const auto gaps = squared_output_gaps(original, compressed, delta);
  const auto pi = kernel_weights(delta, anchor, sigma);
  double total = 0.0;
  for (std::size_t r = 0; r < gaps.size(); ++r) total += pi[r] * gaps[r];
  return total;
}

StructuralUnfaithfulness structural_unfaithfulness(const Mlp& original,
                                                   const ClusteredMlp& compressed,
                                                   const Matrix& delta,
                                                   const std::optional<KernelAnchor>& anchor) {
  check_clustering(original, compressed, delta);
  const auto weights = sample_weights(delta, anchor);
  const ActivationStack a = forward_collect(original, delta);
  const ActivationStack b = forward_collect(compressed.model, delta);
  std::vector<const Matrix*> members, clusters;
  for (std::size_t l = 1; l <= original.depth(); ++l) {
    members.push_back(&a.post[l]);
    clusters.push_back(&b.post[l]);
  }
  return accumulate(compressed, members, clusters, weights);
}

StructuralUnfaithfulness structural_unfaithfulness_in_context(
    const Mlp& original, const ClusteredMlp& compressed, const Matrix& delta,
    const std::optional<KernelAnchor>& anchor) {
  check_clustering(original, compressed, delta);
  const auto weights = sample_weights(delta, anchor);
  const ActivationStack b = forward_collect(compressed.model, delta);
  std::vector<Matrix> context;
  for (std::size_t l = 1; l <= original.depth(); ++l) {
    const Matrix& w = original.weights(l - 1);
    Matrix merged(w.rows(), compressed.model.layer_sizes()[l - 1]);
    for (std::size_t j = 0; j < w.rows(); ++j)
      for (std::size_t i = 0; i < w.cols(); ++i) {
        const std::size_t src = l == 1 ? i : compressed.clustering[l - 2].labels[i];
        merged(j, src) += w(j, i);
      }
    context.push_back(apply_activation(
        original.hidden_activation(),
        layer_preactivation(b.post[l - 1], merged, original.bias(l - 1))));
  }
  std::vector<const Matrix*> members, clusters;
  for (std::size_t l = 1; l <= original.depth(); ++l) {
    members.push_back(&context[l - 1]);
    clusters.push_back(&b.post[l]);
  }
  return accumulate(compressed, members, clusters, weights);
}

CognitiveComplexity cognitive_complexity(const Mlp& compressed) {
  const auto& sizes = compressed.layer_sizes();
  std::vector<std::size_t> factors(sizes.begin() + 1, sizes.end());
  CognitiveComplexity c;
  c.exact = product_decimal(factors);
  for (auto f : factors) c.log10 += std::log10(static_cast<double>(f));
  return c;
}

std::optional<std::vector<double>> dead_neuron_ratio(const Mlp& model, const Matrix& delta) {
  if (model.hidden_activation() != Activation::relu) return std::nullopt;
  if (delta.rows() == 0) throw ValidationError("evaluation dataset is empty");
  const ActivationStack s = forward_collect(model, delta);
  std::vector<double> ratios;
  for (std::size_t l = 1; l <= model.depth(); ++l) {
    const Matrix& post = s.post[l];
    std::size_t dead = 0;
    for (std::size_t i = 0; i < post.cols(); ++i) {
      bool alive = false;
      for (std::size_t r = 0; r < post.rows() && !alive; ++r) alive = post(r, i) > 1e-9;
      if (!alive) ++dead;
    }
    ratios.push_back(static_cast<double>(dead) / static_cast<double>(post.cols()));
  }
  return ratios;
}

EvalReport evaluate(const Mlp& original, const ClusteredMlp& compressed, const Matrix& delta,
                    const std::optional<KernelAnchor>& anchor,
                    std::optional<std::size_t> anchor_sample) {
  EvalReport r;
  const auto io = io_unfaithfulness_global(original, compressed.model, delta);
  r.io_global = io.mean;
  r.io_global_raw = io.raw;
  if (anchor) {
    r.io_local =
        io_unfaithfulness_local(original, compressed.model, delta, anchor->x, anchor->sigma);
    r.scope = "local";
    r.sigma = anchor->sigma;
    r.anchor_sample = anchor_sample;
  }
  const auto s = structural_unfaithfulness(original, compressed, delta, anchor);
  r.structural = s.total;
  r.structural_per_layer = s.per_layer;
  r.structural_cumulative = s.cumulative;
  r.structural_in_context = structural_unfaithfulness_in_context(original, compressed, delta, anchor).total;
  r.cognitive_complexity = cognitive_complexity(compressed.model);
  r.dead_ratio_per_layer = dead_neuron_ratio(original, delta);
  r.dead_ratio_per_layer_compressed = dead_neuron_ratio(compressed.model, delta);
  r.origin_hash = compressed.origin_hash;
  r.method = std::string(to_string(compressed.method));
  r.mode = std::string(to_string(compressed.mode));
  r.gamma = compressed.gamma;
  r.seed = compressed.seed;
  r.delta_size = delta.rows();
  return r;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["io_global"] = r.io_global;
  j["io_global_raw"] = r.io_global_raw;
  j["io_local"] = r.io_local ? nlohmann::ordered_json(*r.io_local) : nlohmann::ordered_json();
  j["structural"] = r.structural;
  j["structural_per_layer"] = r.structural_per_layer;
  j["structural_cumulative"] = r.structural_cumulative;
  j["structural_in_context"] = r.structural_in_context;
  j["cognitive_complexity"] = r.cognitive_complexity.exact;
  j["cognitive_complexity_log10"] = r.cognitive_complexity.log10;
  j["dead_ratio_per_layer"] = r.dead_ratio_per_layer
                                  ? nlohmann::ordered_json(*r.dead_ratio_per_layer)
                                  : nlohmann::ordered_json();
  j["dead_ratio_per_layer_compressed"] =
      r.dead_ratio_per_layer_compressed
          ? nlohmann::ordered_json(*r.dead_ratio_per_layer_compressed)
          : nlohmann::ordered_json();
  auto& m = j["metadata"];
  m["origin_hash"] = r.origin_hash;
  m["method"] = r.method;
  m["mode"] = r.mode;
  m["gamma"] = r.gamma;
  m["compression_rate"] = 1.0 - r.gamma;
  m["seed"] = r.seed;
  m["scope"] = r.scope;
  m["delta"] = r.delta_description;
  m["delta_size"] = r.delta_size;
  m["normalization"] = r.scope == "local" ? "normalized kernel weights" : "per-sample mean";
  if (r.anchor_sample) m["anchor_sample"] = *r.anchor_sample;
  if (r.sigma) m["sigma"] = *r.sigma;
  return j.dump(2) + "\n";
}

std::string per_layer_csv(const EvalReport& r) {
  std::string s = "layer,structural,cumulative,dead_ratio\n";
  for (std::size_t l = 0; l < r.structural_per_layer.size(); ++l) {
    s += std::to_string(l + 1) + "," + format_double(r.structural_per_layer[l]) + "," +
         format_double(r.structural_cumulative[l]) + ",";
    if (r.dead_ratio_per_layer) s += format_double((*r.dead_ratio_per_layer)[l]);
    s += "\n";
  }
  return s;
}

}  // namespace illc

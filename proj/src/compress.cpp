#include "illc/compress.hpp"

#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/kernel.hpp"
#include "json.hpp"

namespace illc {
namespace {

constexpr double kClusterActivationFloor = 1e-9;

struct HiddenLayer {
  Matrix pre;
  Matrix post;
};

// Pre/post activations of hidden layers 1..d of `model`; d evaluations.
std::vector<HiddenLayer> hidden_forward(const Mlp& model, const Matrix& inputs,
                                        ForwardCounter* counter) {
  std::vector<HiddenLayer> out;
  const Matrix* x = &inputs;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    Matrix pre = layer_preactivation(*x, model.weights(l), model.bias(l));
    Matrix post = apply_activation(model.hidden_activation(), pre);
    out.push_back({std::move(pre), std::move(post)});
    x = &out.back().post;
  }
  if (counter) counter->add(model.depth());
  return out;
}

// Column means of `pre` over each cluster's members: the pre-activation of
// a cluster-neuron whose incoming row and bias are member means.
Matrix cluster_preactivation(const Matrix& pre,
                             const std::vector<std::vector<std::size_t>>& members) {
  Matrix out(pre.rows(), members.size());
  for (std::size_t r = 0; r < pre.rows(); ++r)
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto& m = members[c];
      double s = pre(r, m[0]);
      for (std::size_t k = 1; k < m.size(); ++k) s += pre(r, m[k]);
      out(r, c) = s / static_cast<double>(m.size());
    }
  return out;
}

struct Parameters {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Merges hidden layer `layer` (1-based) in place: incoming rows and biases
// averaged over members, outgoing columns summed (scaled per neuron when
// `scales` is nonempty).
void merge_layer(Parameters& p, std::size_t layer, const LayerClustering& clustering,
                 std::span<const double> scales) {
  const auto members = clustering.members();
  const std::size_t k = members.size();

  const Matrix& in = p.weights[layer - 1];
  const auto& bias = p.biases[layer - 1];
  Matrix new_in(k, in.cols());
  std::vector<double> new_bias(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& m = members[c];
    const double n = static_cast<double>(m.size());
    auto dst = new_in.row(c);
    for (std::size_t i = 0; i < in.cols(); ++i) {
      double s = in(m[0], i);
      for (std::size_t t = 1; t < m.size(); ++t) s += in(m[t], i);
      dst[i] = s / n;
    }
    new_bias[c] = agg_bias_global(bias, m);
  }

  const Matrix& out = p.weights[layer];
  Matrix new_out(out.rows(), k);
  for (std::size_t j = 0; j < out.rows(); ++j)
    for (std::size_t c = 0; c < k; ++c) {
      const auto& m = members[c];
      double s = 0.0;
      for (std::size_t t = 0; t < m.size(); ++t) {
        const double w = scales.empty() ? out(j, m[t]) : scales[m[t]] * out(j, m[t]);
        s = t == 0 ? w : s + w;
      }
      new_out(j, c) = s;
    }

  p.weights[layer - 1] = std::move(new_in);
  p.biases[layer - 1] = std::move(new_bias);
  p.weights[layer] = std::move(new_out);
}

std::vector<double> resolve_kernel(const Matrix& inputs, const CompressOptions& options) {
  if (options.mode == Mode::global) return {};
  if (!options.anchor) throw ConfigError("local compression needs an anchor sample and sigma");
  return kernel_weights(inputs, options.anchor->x, options.anchor->sigma);
}

void validate_inputs(const Mlp& model, const Matrix& inputs, const CompressOptions& options) {
  if (inputs.rows() == 0) throw ValidationError("compression needs a nonempty dataset");
  if (inputs.cols() != model.input_dim())
    throw DimensionError("dataset has " + std::to_string(inputs.cols()) +
                         " features, model expects " + std::to_string(model.input_dim()));
  if (!inputs.all_finite()) throw ValidationError("dataset contains non-finite values");
  cluster_count(options.gamma, 1);  // range check on gamma
}

ClusteredMlp assemble(const Mlp& model, Parameters p, std::vector<LayerClustering> clustering,
                      Method method, const CompressOptions& options, std::uint64_t evaluations) {
  std::vector<std::size_t> sizes{model.input_dim()};
  for (const auto& lc : clustering) sizes.push_back(lc.k);
  sizes.push_back(model.output_dim());
  Mlp mu(std::move(sizes), std::move(p.weights), std::move(p.biases), model.hidden_activation(),
         model.output_activation());
  return ClusteredMlp{std::move(mu),   std::move(clustering), model_hash(model),
                      method,          options.mode,          options.gamma,
                      options.seed,    options.anchor,        evaluations};
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::illc ? "illc" : "oneshot"; }
std::string_view to_string(Mode m) { return m == Mode::global ? "global" : "local"; }

Method parse_method(std::string_view name) {
  if (name == "illc") return Method::illc;
  if (name == "oneshot") return Method::oneshot;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected illc or oneshot)");
}

Mode parse_mode(std::string_view name) {
  if (name == "global") return Mode::global;
  if (name == "local") return Mode::local;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected global or local)");
}

double agg_bias_global(std::span<const double> biases, std::span<const std::size_t> members) {
  if (members.empty()) throw ValidationError("bias aggregation over an empty cluster");
  double s = biases[members[0]];
  for (std::size_t t = 1; t < members.size(); ++t) s += biases[members[t]];
  return s / static_cast<double>(members.size());
}

double agg_edge_global(const Matrix& weights, std::span<const std::size_t> source,
                       std::span<const std::size_t> target) {
  if (source.empty() || target.empty())
    throw ValidationError("edge aggregation over an empty cluster");
  double total = 0.0;
  for (auto i : source) {
    double s = 0.0;
    for (auto j : target) s += weights(j, i);
    total += s / static_cast<double>(target.size());
  }
  return total;
}

double agg_edge_local(const Matrix& weights, std::span<const std::size_t> source,
                      std::span<const std::size_t> target, const Matrix& original_activations,
                      std::span<const double> cluster_activation,
                      std::span<const double> kernel) {
  if (source.empty() || target.empty())
    throw ValidationError("edge aggregation over an empty cluster");
  if (kernel.empty()) throw ValidationError("local aggregation needs a nonempty neighbourhood");
  if (original_activations.rows() != kernel.size() || cluster_activation.size() != kernel.size())
    throw DimensionError("activation tables must have one row per neighbourhood sample");
  double total = 0.0;
  for (std::size_t r = 0; r < kernel.size(); ++r) {
    const double oc = cluster_activation[r];
    double inner = 0.0;
    for (auto i : source) {
      const double ratio =
          oc > kClusterActivationFloor ? original_activations(r, i) / oc : 1.0;
      double s = 0.0;
      for (auto j : target) s += weights(j, i);
      inner += ratio * s / static_cast<double>(target.size());
    }
    total += kernel[r] * inner;
  }
  return total;
}

std::vector<double> local_edge_scales(const LayerClustering& clustering,
                                      const Matrix& original_activations,
                                      const Matrix& cluster_activations,
                                      std::span<const double> kernel) {
  const std::size_t width = clustering.labels.size();
  if (original_activations.cols() != width || cluster_activations.cols() != clustering.k ||
      original_activations.rows() != kernel.size() ||
      cluster_activations.rows() != kernel.size())
    throw DimensionError("local edge scales: activation tables do not match clustering");
  std::vector<double> scales(width, 0.0);
  for (std::size_t r = 0; r < kernel.size(); ++r)
    for (std::size_t i = 0; i < width; ++i) {
      const double oc = cluster_activations(r, clustering.labels[i]);
      const double ratio =
          oc > kClusterActivationFloor ? original_activations(r, i) / oc : 1.0;
      scales[i] += kernel[r] * ratio;
    }
  return scales;
}

ClusteredMlp compress_oneshot(const Mlp& model, const Matrix& inputs,
                              const CompressOptions& options, ForwardCounter* counter) {
  validate_inputs(model, inputs, options);
  const std::vector<double> kernel = resolve_kernel(inputs, options);
  const auto original = hidden_forward(model, inputs, counter);

  Parameters p{model.all_weights(), model.all_biases()};
  std::vector<LayerClustering> clustering;
  for (std::size_t l = 1; l <= model.depth(); ++l) {
    const HiddenLayer& layer = original[l - 1];
    LayerClustering lc = cluster_layer(layer.post, l, options.gamma, options.seed + l);
    std::vector<double> scales;
    if (options.mode == Mode::local) {
      const Matrix cluster_post = apply_activation(
          model.hidden_activation(), cluster_preactivation(layer.pre, lc.members()));
      scales = local_edge_scales(lc, layer.post, cluster_post, kernel);
    }
    merge_layer(p, l, lc, scales);
    clustering.push_back(std::move(lc));
  }
  return assemble(model, std::move(p), std::move(clustering), Method::oneshot, options,
                  model.depth());
}

ClusteredMlp compress_illc(const Mlp& model, const Matrix& inputs,
                           const CompressOptions& options, ForwardCounter* counter) {
  validate_inputs(model, inputs, options);
  const std::vector<double> kernel = resolve_kernel(inputs, options);
  std::uint64_t evaluations = 0;

  // Local mode compares against the original network's activations.
  std::vector<HiddenLayer> original;
  if (options.mode == Mode::local) {
    original = hidden_forward(model, inputs, counter);
    evaluations += model.depth();
  }

  Parameters p{model.all_weights(), model.all_biases()};
  std::vector<LayerClustering> clustering;
  Matrix current = inputs;
  for (std::size_t l = 1; l <= model.depth(); ++l) {
    // Members' pre-activations given the already-compressed prefix.
    const Matrix pre = layer_preactivation(current, p.weights[l - 1], p.biases[l - 1]);
    if (counter) counter->add(1);
    ++evaluations;
    const Matrix post = apply_activation(model.hidden_activation(), pre);

    LayerClustering lc = cluster_layer(post, l, options.gamma, options.seed + l);
    // The merged layer's output follows from the remembered member
    // pre-activations; no second pass through the layer is needed.
    Matrix next =
        apply_activation(model.hidden_activation(), cluster_preactivation(pre, lc.members()));

    std::vector<double> scales;
    if (options.mode == Mode::local)
      scales = local_edge_scales(lc, original[l - 1].post, next, kernel);
    merge_layer(p, l, lc, scales);
    clustering.push_back(std::move(lc));
    current = std::move(next);
  }
  return assemble(model, std::move(p), std::move(clustering), Method::illc, options,
                  evaluations);
}

ClusteredMlp compress(Method method, const Mlp& model, const Matrix& inputs,
                      const CompressOptions& options, ForwardCounter* counter) {
  return method == Method::illc ? compress_illc(model, inputs, options, counter)
                                : compress_oneshot(model, inputs, options, counter);
}

std::string sidecar_json(const ClusteredMlp& c) {
  nlohmann::ordered_json j;
  j["method"] = to_string(c.method);
  j["mode"] = to_string(c.mode);
  j["gamma"] = c.gamma;
  j["seed"] = c.seed;
  auto& layers = j["clustering"] = nlohmann::ordered_json::array();
  for (const auto& lc : c.clustering)
    layers.push_back({{"layer", lc.layer}, {"k", lc.k}, {"labels", lc.labels}});
  j["origin_hash"] = c.origin_hash;
  j["layer_evaluations"] = c.layer_evaluations;
  if (c.anchor) {
    nlohmann::ordered_json a;
    a["sigma"] = c.anchor->sigma;
    if (c.anchor->sample_index) a["sample"] = *c.anchor->sample_index;
    a["x"] = c.anchor->x;
    j["anchor"] = std::move(a);
  }
  return j.dump(2) + "\n";
}

ClusteredMlp clustered_from_files(const std::filesystem::path& model_path,
                                  const std::filesystem::path& sidecar_path) {
  Mlp mu = load_mlp(model_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(sidecar_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(sidecar_path.string() + ": " + e.what());
  }
  try {
    ClusteredMlp c{std::move(mu)};
    c.origin_hash = j.at("origin_hash").get<std::string>();
    c.method = parse_method(j.at("method").get<std::string>());
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.gamma = j.at("gamma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.layer_evaluations = j.value("layer_evaluations", std::uint64_t{0});
    for (const auto& lj : j.at("clustering")) {
      LayerClustering lc;
      lc.layer = lj.at("layer").get<std::size_t>();
      lc.k = lj.at("k").get<std::size_t>();
      lc.labels = lj.at("labels").get<std::vector<std::size_t>>();
      c.clustering.push_back(std::move(lc));
    }
    if (j.contains("anchor")) {
      LocalAnchor a;
      const auto& aj = j.at("anchor");
      a.sigma = aj.at("sigma").get<double>();
      a.x = aj.at("x").get<std::vector<double>>();
      if (aj.contains("sample")) a.sample_index = aj.at("sample").get<std::size_t>();
      c.anchor = std::move(a);
    }
    const auto& sizes = c.model.layer_sizes();
    if (c.clustering.size() != c.model.depth())
      throw ValidationError("sidecar lists " + std::to_string(c.clustering.size()) +
                            " clustered layers, model has " + std::to_string(c.model.depth()));
    for (std::size_t l = 0; l < c.clustering.size(); ++l) {
      const auto& lc = c.clustering[l];
      if (lc.k != sizes[l + 1])
        throw ValidationError("sidecar layer " + std::to_string(lc.layer) + " has k=" +
                              std::to_string(lc.k) + " but model layer has " +
                              std::to_string(sizes[l + 1]) + " neurons");
      for (auto label : lc.labels)
        if (label >= lc.k) throw ValidationError("sidecar cluster label out of range");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar_path.string() + ": " + e.what());
  }
}

void save_clustered(const ClusteredMlp& c, const std::filesystem::path& model_path,
                    const std::filesystem::path& sidecar_path) {
  save_mlp(c.model, model_path);
  write_text_file(sidecar_path, sidecar_json(c));
}

std::filesystem::path default_sidecar_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension();
  p += ".sidecar.json";
  return p;
}

}  // namespace illc

#include "illc/qbaf.hpp"

#include <cstdio>
#include <unordered_map>

#include "illc/errors.hpp"
#include "json.hpp"

namespace illc {
namespace {

std::string argument_id(std::size_t layer, std::size_t index) {
  return "L" + std::to_string(layer) + "_N" + std::to_string(index);
}

Qbaf build(const Mlp& model, std::optional<std::span<const double>> input,
           const std::vector<LayerClustering>* clustering) {
  if (input && input->size() != model.input_dim())
    throw DimensionError("input has " + std::to_string(input->size()) +
                         " values, model expects " + std::to_string(model.input_dim()));
  Qbaf q;
  q.layer_sizes = model.layer_sizes();
  const std::size_t layers = q.layer_sizes.size();
  q.layer_activation.push_back(Activation::identity);
  for (std::size_t l = 0; l + 1 < layers; ++l) q.layer_activation.push_back(model.activation_after(l));

  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t i = 0; i < q.layer_sizes[l]; ++i) {
      Argument a;
      a.id = argument_id(l, i);
      a.layer = l;
      if (l == 0) {
        a.name = "x" + std::to_string(i);
        a.base_score = input ? (*input)[i] : 0.0;
        a.base_preactivation = a.base_score;
      } else {
        const double bias = model.bias(l - 1)[i];
        a.base_preactivation = bias;
        a.base_score = activation_apply(q.layer_activation[l], bias);
        if (l + 1 == layers) {
          a.name = "out" + std::to_string(i);
        } else if (clustering) {
          const auto members = (*clustering)[l - 1].members()[i];
          a.name = "L" + std::to_string(l) + " C" + std::to_string(i) + " {";
          for (std::size_t k = 0; k < members.size(); ++k)
            a.name += (k ? "," : "") + std::to_string(members[k]);
          a.name += "}";
        } else {
          a.name = "L" + std::to_string(l) + " h" + std::to_string(i);
        }
      }
      q.arguments.push_back(std::move(a));
    }
  }

  std::size_t src_base = 0;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    const std::size_t dst_base = src_base + q.layer_sizes[l];
    const Matrix& w = model.weights(l);
    for (std::size_t j = 0; j < w.rows(); ++j)
      for (std::size_t i = 0; i < w.cols(); ++i) {
        const double v = w(j, i);
        if (v == 0.0) continue;
        q.edges.push_back(
            {src_base + i, dst_base + j, v, v < 0.0 ? Polarity::attack : Polarity::support});
      }
    src_base = dst_base;
  }
  return q;
}

const char* polarity_name(Polarity p) { return p == Polarity::attack ? "attack" : "support"; }

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::size_t Qbaf::first_of_layer(std::size_t layer) const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer; ++l) n += layer_sizes.at(l);
  return n;
}

std::size_t Qbaf::attack_count() const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.polarity == Polarity::attack;
  return n;
}

std::size_t Qbaf::support_count() const { return edges.size() - attack_count(); }

Qbaf to_qbaf(const Mlp& model, std::optional<std::span<const double>> input) {
  return build(model, input, nullptr);
}

Qbaf to_qbaf(const ClusteredMlp& model, std::optional<std::span<const double>> input) {
  return build(model.model, input, &model.clustering);
}

std::vector<double> qbaf_forward(const Qbaf& qbaf, std::span<const double> input_values) {
  const std::size_t n = qbaf.arguments.size();
  if (qbaf.layer_sizes.empty() || input_values.size() != qbaf.layer_sizes[0])
    throw DimensionError("expected " +
                         std::to_string(qbaf.layer_sizes.empty() ? 0 : qbaf.layer_sizes[0]) +
                         " input values");
  if (qbaf.layer_activation.size() != qbaf.layer_sizes.size())
    throw ValidationError("QBAF is missing per-layer influence functions");
  std::size_t expected = 0;
  for (auto s : qbaf.layer_sizes) expected += s;
  if (expected != n) throw ValidationError("QBAF layer sizes do not cover its arguments");

  std::vector<std::vector<const Edge*>> incoming(n);
  for (const auto& e : qbaf.edges) {
    if (e.from >= n || e.to >= n)
      throw ValidationError("dangling edge " + std::to_string(e.from) + " -> " +
                            std::to_string(e.to));
    if (qbaf.arguments[e.to].layer != qbaf.arguments[e.from].layer + 1)
      throw ValidationError("edge " + qbaf.arguments[e.from].id + " -> " +
                            qbaf.arguments[e.to].id + " skips a layer");
    incoming[e.to].push_back(&e);
  }

  std::vector<double> strength(n, 0.0);
  for (std::size_t i = 0; i < qbaf.layer_sizes[0]; ++i) strength[i] = input_values[i];
  for (std::size_t a = qbaf.layer_sizes[0]; a < n; ++a) {
    double h = 0.0;
    for (const Edge* e : incoming[a]) h += e->weight * strength[e->from];
    h += qbaf.arguments[a].base_preactivation;
    strength[a] = activation_apply(qbaf.layer_activation[qbaf.arguments[a].layer], h);
  }
  return strength;
}

QbafFormat parse_qbaf_format(std::string_view name) {
  if (name == "dot") return QbafFormat::dot;
  if (name == "json") return QbafFormat::json;
  throw ConfigError("unknown QBAF format '" + std::string(name) + "' (expected dot or json)");
}

std::string export_qbaf(const Qbaf& q, QbafFormat format) {
  if (format == QbafFormat::dot) {
    std::string s = "digraph qbaf {\n  rankdir=LR;\n";
    for (const auto& a : q.arguments)
      s += "  \"" + dot_escape(a.id) + "\" [label=\"" + dot_escape(a.name) + "\\n\xCE\xB2=" +
           fixed4(a.base_score) + "\"];\n";
    for (const auto& e : q.edges)
      s += "  \"" + dot_escape(q.arguments[e.from].id) + "\" -> \"" +
           dot_escape(q.arguments[e.to].id) + "\" [color=" +
           (e.polarity == Polarity::attack ? "red" : "green") + ", label=\"" + fixed4(e.weight) +
           "\"];\n";
    s += "}\n";
    return s;
  }

  nlohmann::ordered_json j;
  j["layer_sizes"] = q.layer_sizes;
  auto& acts = j["layer_activation"] = nlohmann::ordered_json::array();
  for (auto a : q.layer_activation) acts.push_back(std::string(to_string(a)));
  auto& args = j["arguments"] = nlohmann::ordered_json::array();
  for (const auto& a : q.arguments)
    args.push_back({{"id", a.id},
                    {"layer", a.layer},
                    {"name", a.name},
                    {"base_score", a.base_score},
                    {"base_preactivation", a.base_preactivation}});
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : q.edges)
    edges.push_back({{"from", q.arguments[e.from].id},
                     {"to", q.arguments[e.to].id},
                     {"weight", e.weight},
                     {"polarity", polarity_name(e.polarity)}});
  return j.dump(2) + "\n";
}

Qbaf qbaf_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("QBAF JSON: ") + e.what());
  }
  try {
    Qbaf q;
    q.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("layer_activation"))
      q.layer_activation.push_back(parse_activation(a.get<std::string>()));
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& aj : j.at("arguments")) {
      Argument a;
      a.id = aj.at("id").get<std::string>();
      a.layer = aj.at("layer").get<std::size_t>();
      a.name = aj.at("name").get<std::string>();
      a.base_score = aj.at("base_score").get<double>();
      a.base_preactivation = aj.at("base_preactivation").get<double>();
      if (!index.emplace(a.id, q.arguments.size()).second)
        throw ValidationError("duplicate argument id '" + a.id + "'");
      q.arguments.push_back(std::move(a));
    }
    for (const auto& ej : j.at("edges")) {
      Edge e;
      const auto from = ej.at("from").get<std::string>();
      const auto to = ej.at("to").get<std::string>();
      auto f = index.find(from);
      auto t = index.find(to);
      if (f == index.end() || t == index.end())
        throw ValidationError("dangling edge " + from + " -> " + to);
      e.from = f->second;
      e.to = t->second;
      e.weight = ej.at("weight").get<double>();
      const auto pol = ej.at("polarity").get<std::string>();
      if (pol != "attack" && pol != "support")
        throw ParseError("QBAF JSON: unknown polarity '" + pol + "'");
      e.polarity = pol == "attack" ? Polarity::attack : Polarity::support;
      if ((e.weight < 0.0) != (e.polarity == Polarity::attack) || e.weight == 0.0)
        throw ValidationError("edge " + from + " -> " + to + " has polarity inconsistent with weight");
      q.edges.push_back(e);
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("QBAF JSON: ") + e.what());
  }
}

}  // namespace illc

#include "illc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "illc/compress.hpp"
#include "illc/data.hpp"
#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/kernel.hpp"
#include "illc/metrics.hpp"
#include "illc/qbaf.hpp"
#include "illc/sweep.hpp"
#include "illc/train.hpp"

namespace illc::cli {
namespace fs = std::filesystem;
namespace {

// Dataset options shared by every command that needs samples.
struct DataOptions {
  std::string path;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::string delta = "full";

  void add_to(CLI::App& app, bool with_delta) {
    app.add_option("--data", path, "WDBC CSV (id,diagnosis,f1..f30)")->required();
    app.add_option("--test-fraction", test_fraction, "held-out fraction of the stratified split")
        ->capture_default_str();
    app.add_option("--split-seed", split_seed, "seed of the train/test split")
        ->capture_default_str();
    if (with_delta)
      app.add_option("--delta", delta, "evaluation set: full, train or test")
          ->check(CLI::IsMember({"full", "train", "test"}))
          ->capture_default_str();
  }
};

struct PreparedData {
  Dataset train;     // standardized
  Dataset test;      // standardized
  Dataset full;      // standardized
  Matrix delta;      // selected evaluation set
  std::string delta_description;
};

PreparedData prepare(const DataOptions& o) {
  const Dataset raw = load_wdbc(o.path);
  const Split sp = split(raw, o.test_fraction, o.split_seed);
  const Standardizer st = fit_standardize(sp.train);
  PreparedData p{st.transform(sp.train), st.transform(sp.test), st.transform(raw), {}, {}};
  if (o.delta == "train")
    p.delta = p.train.features;
  else if (o.delta == "test")
    p.delta = p.test.features;
  else
    p.delta = p.full.features;
  std::ostringstream d;
  d << o.delta << " standardized dataset (" << fs::path(o.path).filename().string()
    << ", test_fraction=" << o.test_fraction << ", split_seed=" << o.split_seed << ")";
  p.delta_description = d.str();
  return p;
}

// Resolves --rate / --gamma into gamma.
double resolve_gamma(const std::optional<double>& rate, const std::optional<double>& gamma) {
  double g = 0.2;
  if (rate) {
    if (!(*rate >= 0.0 && *rate < 1.0))
      throw ConfigError("--rate must lie in [0,1) (gamma = 1 - rate must be > 0)");
    g = 1.0 - *rate;
  } else if (gamma) {
    g = *gamma;
  }
  if (!(g > 0.0 && g <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
  return g;
}

std::optional<KernelAnchor> resolve_anchor(const std::string& scope,
                                           const std::optional<std::size_t>& sample,
                                           const std::string& sigma, const Matrix& delta) {
  if (scope == "global") return std::nullopt;
  if (!sample) throw ConfigError("local scope needs --sample");
  if (*sample >= delta.rows())
    throw ConfigError("--sample " + std::to_string(*sample) + " is outside the evaluation set (" +
                      std::to_string(delta.rows()) + " rows)");
  KernelAnchor a;
  auto row = delta.row(*sample);
  a.x.assign(row.begin(), row.end());
  if (sigma == "auto") {
    a.sigma = median_pairwise_distance(delta);
  } else {
    try {
      std::size_t used = 0;
      a.sigma = std::stod(sigma, &used);
      if (used != sigma.size()) throw std::invalid_argument(sigma);
    } catch (const std::exception&) {
      throw ConfigError("--sigma must be 'auto' or a positive number, got '" + sigma + "'");
    }
  }
  if (!(a.sigma > 0.0)) throw ConfigError("--sigma must be > 0");
  return a;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

int cmd_train(const TrainConfig& tc, const DataOptions& data, const std::string& out_path,
              std::string log_path, const std::string& dump_path, std::ostream& out) {
  tc.validate();
  const PreparedData p = prepare(data);
  const TrainResult r = train(p.train, tc);
  save_mlp(r.model, out_path);
  if (log_path.empty()) {
    fs::path lp = out_path;
    lp.replace_extension();
    lp += ".log.csv";
    log_path = lp.string();
  }
  write_text_file(log_path, log_to_csv(r.log));
  if (!dump_path.empty()) write_text_file(dump_path, to_csv(p.full));
  out << "layer_sizes " << join(r.model.layer_sizes()) << "\n";
  out << "train_accuracy " << format_double(accuracy(r.model, p.train)) << "\n";
  out << "test_accuracy " << format_double(accuracy(r.model, p.test)) << "\n";
  out << "model " << out_path << "\nlog " << log_path << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clustering-based MLP compression (ILLC and one-shot) with faithfulness metrics "
               "and QBAF export",
               "illc"};
  app.require_subcommand(1);

  // train
  TrainConfig tc;
  DataOptions train_data;
  std::string train_out = "model.json", train_log, train_dump;
  std::string init_name = "he", act_name = "relu";
  auto* train_cmd = app.add_subcommand("train", "train an MLP on the standardized train split");
  train_data.add_to(*train_cmd, false);
  train_cmd->add_option("--layers", tc.hidden_layers, "number of hidden layers")->capture_default_str();
  train_cmd->add_option("--width", tc.hidden_width, "neurons per hidden layer")->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate, "SGD learning rate")->capture_default_str();
  train_cmd->add_option("--seed", tc.seed, "initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--init", init_name, "he, xavier or gaussian")->capture_default_str();
  train_cmd->add_option("--activation", act_name, "relu, sigmoid or tanh")->capture_default_str();
  train_cmd->add_option("--out", train_out, "model JSON path")->capture_default_str();
  train_cmd->add_option("--log", train_log, "training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--dump-standardized", train_dump,
                        "also write the standardized dataset as CSV");

  // compress
  DataOptions comp_data;
  std::string comp_model, comp_out = "compressed.json", comp_sidecar, comp_method = "illc",
                          comp_mode = "global", comp_sigma = "auto";
  std::optional<double> comp_rate, comp_gamma;
  std::optional<std::size_t> comp_sample;
  std::uint64_t comp_seed = 0;
  auto* comp_cmd = app.add_subcommand("compress", "cluster hidden neurons and merge them");
  comp_cmd->add_option("--model", comp_model, "original model JSON")->required();
  comp_data.add_to(*comp_cmd, true);
  comp_cmd->add_option("--method", comp_method, "illc or oneshot")->capture_default_str();
  auto* rate_opt = comp_cmd->add_option(
      "--rate", comp_rate, "compression rate r in [0,1); neurons kept per layer = (1-r)*width");
  auto* gamma_opt =
      comp_cmd->add_option("--gamma", comp_gamma, "shrinkage factor gamma = 1 - rate, in (0,1]");
  rate_opt->excludes(gamma_opt);
  comp_cmd->add_option("--seed", comp_seed, "clustering seed (layer l uses seed + l)")
      ->capture_default_str();
  comp_cmd->add_option("--mode", comp_mode, "global or local edge aggregation")->capture_default_str();
  comp_cmd->add_option("--sample", comp_sample, "anchor row of the evaluation set (local mode)");
  comp_cmd->add_option("--sigma", comp_sigma, "kernel width or 'auto' (median pairwise distance)")
      ->capture_default_str();
  comp_cmd->add_option("--out", comp_out, "compressed model JSON")->capture_default_str();
  comp_cmd->add_option("--sidecar", comp_sidecar, "sidecar JSON (default <out>.sidecar.json)");

  // evaluate
  DataOptions eval_data;
  std::string eval_original, eval_compressed, eval_sidecar, eval_scope = "global",
                                                           eval_sigma = "auto", eval_out, eval_csv;
  std::optional<std::size_t> eval_sample;
  auto* eval_cmd = app.add_subcommand("evaluate", "faithfulness and complexity report");
  eval_cmd->add_option("--original", eval_original)->required();
  eval_cmd->add_option("--compressed", eval_compressed)->required();
  eval_cmd->add_option("--sidecar", eval_sidecar, "default <compressed>.sidecar.json");
  eval_data.add_to(*eval_cmd, true);
  eval_cmd->add_option("--scope", eval_scope, "global or local")
      ->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  eval_cmd->add_option("--sample", eval_sample, "anchor row (local scope)");
  eval_cmd->add_option("--sigma", eval_sigma, "kernel width or 'auto'")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "report JSON path (default: stdout)");
  eval_cmd->add_option("--csv", eval_csv, "per-layer CSV path");

  // sweep
  DataOptions sweep_data;
  std::vector<std::size_t> sweep_layers{5, 10, 20}, sweep_widths{100};
  std::vector<std::string> sweep_methods{"illc", "oneshot"};
  std::vector<std::uint64_t> sweep_seeds{0};
  std::optional<double> sweep_rate, sweep_gamma;
  std::string sweep_out = "sweep.csv";
  bool sweep_append = false;
  TrainConfig sweep_tc;
  std::size_t sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "train, compress and evaluate over a grid");
  sweep_data.add_to(*sweep_cmd, true);
  sweep_cmd->add_option("--layers", sweep_layers, "hidden-layer counts")->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--widths", sweep_widths, "hidden widths")->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--methods", sweep_methods, "compression methods")->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "training/clustering seeds")->delimiter(',')
      ->capture_default_str();
  auto* srate = sweep_cmd->add_option("--rate", sweep_rate, "compression rate (default 0.8)");
  auto* sgamma = sweep_cmd->add_option("--gamma", sweep_gamma, "shrinkage factor gamma = 1 - rate");
  srate->excludes(sgamma);
  sweep_cmd->add_option("--epochs", sweep_tc.epochs)->capture_default_str();
  sweep_cmd->add_option("--batch-size", sweep_tc.batch_size)->capture_default_str();
  sweep_cmd->add_option("--lr", sweep_tc.learning_rate)->capture_default_str();
  sweep_cmd->add_option("--threads", sweep_threads)->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "results CSV")->capture_default_str();
  sweep_cmd->add_flag("--append", sweep_append, "append rows to an existing results CSV");

  // export-qbaf
  std::string qbaf_model, qbaf_sidecar, qbaf_format = "dot", qbaf_out, qbaf_data_path;
  std::optional<std::size_t> qbaf_sample;
  DataOptions qbaf_data;
  auto* qbaf_cmd = app.add_subcommand("export-qbaf", "export the argumentation graph of a model");
  qbaf_cmd->add_option("--model", qbaf_model)->required();
  qbaf_cmd->add_option("--sidecar", qbaf_sidecar, "sidecar for cluster names (optional)");
  qbaf_cmd->add_option("--format", qbaf_format, "dot or json")->capture_default_str();
  qbaf_cmd->add_option("--out", qbaf_out, "output path (default: stdout)");
  qbaf_cmd->add_option("--data", qbaf_data.path, "dataset providing --sample");
  qbaf_cmd->add_option("--sample", qbaf_sample, "row whose values become input base scores");

  // standardize
  DataOptions std_data;
  std::string std_out = "standardized.csv";
  auto* std_cmd = app.add_subcommand("standardize", "write the standardized dataset as CSV");
  std_data.add_to(*std_cmd, true);
  std_cmd->add_option("--out", std_out)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train_cmd) {
      tc.init = parse_init(init_name);
      tc.activation = parse_activation(act_name);
      return cmd_train(tc, train_data, train_out, train_log, train_dump, out);
    }

    if (*comp_cmd) {
      const double gamma = resolve_gamma(comp_rate, comp_gamma);
      const Method method = parse_method(comp_method);
      const Mode mode = parse_mode(comp_mode);
      const Mlp model = load_mlp(comp_model);
      const PreparedData p = prepare(comp_data);
      CompressOptions opts;
      opts.gamma = gamma;
      opts.seed = comp_seed;
      opts.mode = mode;
      if (mode == Mode::local) {
        auto a = resolve_anchor("local", comp_sample, comp_sigma, p.delta);
        opts.anchor = LocalAnchor{a->x, a->sigma, comp_sample};
      }
      const ClusteredMlp c = compress(method, model, p.delta, opts);
      const fs::path sidecar = comp_sidecar.empty() ? default_sidecar_path(comp_out) : fs::path(comp_sidecar);
      save_clustered(c, comp_out, sidecar);
      out << "layer_sizes " << join(c.model.layer_sizes()) << "\n";
      out << "layer_evaluations " << c.layer_evaluations << "\n";
      out << "model " << comp_out << "\nsidecar " << sidecar.string() << "\n";
      return kOk;
    }

    if (*eval_cmd) {
      const Mlp original = load_mlp(eval_original);
      const fs::path sidecar =
          eval_sidecar.empty() ? default_sidecar_path(eval_compressed) : fs::path(eval_sidecar);
      const ClusteredMlp c = clustered_from_files(eval_compressed, sidecar);
      const std::string hash = model_hash(original);
      if (hash != c.origin_hash)
        throw ValidationError("compressed model was derived from a different original (sidecar "
                              "origin_hash " + c.origin_hash + ", '" + eval_original +
                              "' hashes to " + hash + ")");
      const PreparedData p = prepare(eval_data);
      const auto anchor = resolve_anchor(eval_scope, eval_sample, eval_sigma, p.delta);
      EvalReport r = evaluate(original, c, p.delta, anchor, eval_sample);
      r.delta_description = p.delta_description;
      const std::string json = to_json(r);
      if (eval_out.empty())
        out << json;
      else
        write_text_file(eval_out, json);
      if (!eval_csv.empty()) write_text_file(eval_csv, per_layer_csv(r));
      return kOk;
    }

    if (*sweep_cmd) {
      SweepConfig sc;
      sc.layers = sweep_layers;
      sc.widths = sweep_widths;
      for (const auto& m : sweep_methods) sc.methods.push_back(parse_method(m));
      sc.seeds = sweep_seeds;
      std::optional<double> rate = sweep_rate;
      if (!rate && !sweep_gamma) rate = 0.8;
      sc.gamma = resolve_gamma(rate, sweep_gamma);
      sc.train = sweep_tc;
      sc.threads = sweep_threads;
      for (auto l : sc.layers)
        if (l < 1) throw ConfigError("--layers entries must be >= 1");
      for (auto w : sc.widths)
        if (w < 1) throw ConfigError("--widths entries must be >= 1");
      const PreparedData p = prepare(sweep_data);
      const auto rows = run_sweep(sc, p.train, p.delta);
      const bool append = sweep_append && fs::exists(sweep_out);
      if (append) {
        const std::string existing = read_text_file(sweep_out);
        if (existing.rfind(sweep_csv_header(), 0) != 0)
          throw IoError("'" + sweep_out + "' does not start with the sweep CSV header");
        std::ofstream f(sweep_out, std::ios::app | std::ios::binary);
        if (!f) throw IoError("cannot append to '" + sweep_out + "'");
        f << sweep_csv_rows(rows);
      } else {
        write_text_file(sweep_out, sweep_csv_header() + sweep_csv_rows(rows));
      }
      out << "rows " << rows.size() << "\nresults " << sweep_out << "\n";
      return kOk;
    }

    if (*qbaf_cmd) {
      const QbafFormat format = parse_qbaf_format(qbaf_format);
      if (!fs::exists(qbaf_model)) throw IoError("model file '" + qbaf_model + "' does not exist");
      std::vector<double> input;
      if (qbaf_sample) {
        if (qbaf_data.path.empty()) throw ConfigError("--sample needs --data");
        const PreparedData p = prepare(qbaf_data);
        if (*qbaf_sample >= p.full.size()) throw ConfigError("--sample is out of range");
        auto row = p.full.features.row(*qbaf_sample);
        input.assign(row.begin(), row.end());
      }
      const std::optional<std::span<const double>> in =
          qbaf_sample ? std::optional<std::span<const double>>(input) : std::nullopt;
      Qbaf q;
      fs::path sidecar = qbaf_sidecar.empty() ? default_sidecar_path(qbaf_model) : fs::path(qbaf_sidecar);
      if (!qbaf_sidecar.empty() || fs::exists(sidecar))
        q = to_qbaf(clustered_from_files(qbaf_model, sidecar), in);
      else
        q = to_qbaf(load_mlp(qbaf_model), in);
      const std::string text = export_qbaf(q, format);
      if (qbaf_out.empty())
        out << text;
      else
        write_text_file(qbaf_out, text);
      return kOk;
    }

    if (*std_cmd) {
      const PreparedData p = prepare(std_data);
      Dataset d;
      if (std_data.delta == "train")
        d = p.train;
      else if (std_data.delta == "test")
        d = p.test;
      else
        d = p.full;
      write_text_file(std_out, to_csv(d));
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kConfigError;
}

}  // namespace illc::cli

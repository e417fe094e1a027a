#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "illc/compress.hpp"
#include "illc/data.hpp"
#include "illc/train.hpp"

namespace illc {

struct SweepConfig {
  std::vector<std::size_t> layers;
  std::vector<std::size_t> widths;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  double gamma = 0.2;
  TrainConfig train;  // hidden_layers/width/seed are overridden per job
  std::size_t threads = 1;
};

struct SweepRow {
  std::size_t layers = 0;
  std::size_t width = 0;
  Method method = Method::illc;
  std::uint64_t seed = 0;
  double io = 0.0;          // global input-output unfaithfulness (mean)
  double structural = 0.0;  // global structural unfaithfulness
  double omega_log10 = 0.0;
  double train_accuracy = 0.0;
  std::uint64_t compression_evaluations = 0;
};

// Trains one model per (layers, width, seed) on `train_data`, compresses it
// with every method, and evaluates on `delta`. Rows come back in grid order
// layers > width > method > seed regardless of thread count.
std::vector<SweepRow> run_sweep(const SweepConfig& config, const Dataset& train_data,
                                const Matrix& delta);

std::string sweep_csv_header();
std::string sweep_csv_rows(const std::vector<SweepRow>& rows);

}  // namespace illc

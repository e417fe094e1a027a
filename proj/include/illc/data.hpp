#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "illc/matrix.hpp"

namespace illc {

// Labelled tabular data. Labels are 0 (benign) / 1 (malignant) for WDBC.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

inline constexpr std::size_t kWdbcFeatures = 30;

// Parses the UCI WDBC layout `id,diagnosis,f1..f30` with diagnosis in
// {M,B}. A header row is detected when its first field is non-numeric and
// its second field is not a diagnosis letter.
Dataset parse_wdbc(std::string_view text);
Dataset load_wdbc(const std::filesystem::path& path);

// Column-wise z-scoring. Columns whose population std is below 1e-12 are
// flagged constant and map to 0.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> constant;

  Matrix transform(const Matrix& x) const;
  Dataset transform(const Dataset& d) const;
};

Standardizer fit_standardize(const Dataset& train);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // ascending indices into the source
  std::vector<std::size_t> test_rows;
};

// Stratified, seeded split. |test| = ceil(fraction * N) clamped to
// [1, N-1]; per-class test quotas by largest remainder (ties go to the
// lower label); within each class (ascending label order) the file-order
// index list is shuffled by Fisher-Yates on a single SplitMix64(seed)
// stream and the first quota rows go to the test side.
Split split(const Dataset& data, double test_fraction, std::uint64_t seed);

// `label,f1..fF` CSV dump.
std::string to_csv(const Dataset& d);

}  // namespace illc

#include "illc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/rng.hpp"

namespace illc {
namespace {

const char* const kWdbcNames[kWdbcFeatures] = {
    "radius_mean",       "texture_mean",        "perimeter_mean",
    "area_mean",         "smoothness_mean",     "compactness_mean",
    "concavity_mean",    "concave_points_mean", "symmetry_mean",
    "fractal_dimension_mean", "radius_se",      "texture_se",
    "perimeter_se",      "area_se",             "smoothness_se",
    "compactness_se",    "concavity_se",        "concave_points_se",
    "symmetry_se",       "fractal_dimension_se", "radius_worst",
    "texture_worst",     "perimeter_worst",     "area_worst",
    "smoothness_worst",  "compactness_worst",   "concavity_worst",
    "concave_points_worst", "symmetry_worst",   "fractal_dimension_worst"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_diagnosis(std::string_view s) { return s == "M" || s == "B"; }

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels.at(r));
  out.feature_names = feature_names;
  return out;
}

Dataset parse_wdbc(std::string_view text) {
  constexpr std::size_t kFields = kWdbcFeatures + 2;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> names(std::begin(kWdbcNames), std::end(kWdbcNames));

  std::size_t line_no = 0;
  bool first_content = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      double ignored;
      if (!parse_number(fields[0], ignored) && !(fields.size() > 1 && is_diagnosis(fields[1]))) {
        if (fields.size() == kFields)
          for (std::size_t f = 0; f < kWdbcFeatures; ++f) names[f] = std::string(fields[f + 2]);
        continue;
      }
    }
    const std::string where = "row " + std::to_string(line_no);
    if (fields.size() != kFields)
      throw ParseError(where + ": expected " + std::to_string(kFields) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    if (!is_diagnosis(fields[1]))
      throw ParseError(where + ": unknown diagnosis '" + std::string(fields[1]) + "'", line_no);
    std::vector<double> values(kWdbcFeatures);
    for (std::size_t f = 0; f < kWdbcFeatures; ++f)
      if (!parse_number(fields[f + 2], values[f]))
        throw ParseError(where + ": non-numeric feature " + std::to_string(f + 1) + " '" +
                             std::string(fields[f + 2]) + "'",
                         line_no);
    rows.push_back(std::move(values));
    labels.push_back(fields[1] == "M" ? 1 : 0);
  }
  if (rows.empty()) throw ParseError("no data rows");
  Dataset d;
  d.features = Matrix::from_rows(rows);
  d.labels = std::move(labels);
  d.feature_names = std::move(names);
  return d;
}

Dataset load_wdbc(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("data file '" + path.string() + "' does not exist");
  try {
    return parse_wdbc(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.row());
  }
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != means.size())
    throw DimensionError("standardizer fitted on " + std::to_string(means.size()) +
                         " columns, got " + std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = constant[c] ? 0.0 : (x(r, c) - means[c]) / stds[c];
  return out;
}

Dataset Standardizer::transform(const Dataset& d) const {
  Dataset out = d;
  out.features = transform(d.features);
  return out;
}

Standardizer fit_standardize(const Dataset& train) {
  const std::size_t n = train.features.rows();
  if (n == 0) throw ValidationError("cannot standardize an empty dataset");
  const std::size_t f = train.features.cols();
  Standardizer s;
  s.means.assign(f, 0.0);
  s.stds.assign(f, 0.0);
  s.constant.assign(f, false);
  for (std::size_t c = 0; c < f; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += train.features(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = train.features(r, c) - mean;
      ss += d * d;
    }
    s.means[c] = mean;
    s.stds[c] = std::sqrt(ss / static_cast<double>(n));
    s.constant[c] = s.stds[c] < 1e-12;
  }
  return s;
}

Split split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0,1)");
  const std::size_t n = data.size();
  if (n < 2) throw ValidationError("need at least two samples to split");

  std::size_t n_test =
      static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);

  // Largest-remainder apportionment of n_test across classes.
  struct Quota {
    int label;
    std::size_t count;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [label, idx] : by_class) {
    const double exact =
        static_cast<double>(n_test) * static_cast<double>(idx.size()) / static_cast<double>(n);
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({label, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t k = 0; assigned < n_test; k = (k + 1) % order.size()) {
    auto& q = quotas[order[k]];
    if (q.count < by_class[q.label].size()) {
      ++q.count;
      ++assigned;
    }
  }

  SplitMix64 rng(seed);
  Split out;
  std::size_t qi = 0;
  for (auto& [label, idx] : by_class) {
    shuffle(idx, rng);
    const std::size_t take = quotas[qi++].count;
    out.test_rows.insert(out.test_rows.end(), idx.begin(), idx.begin() + take);
    out.train_rows.insert(out.train_rows.end(), idx.begin() + take, idx.end());
  }
  std::sort(out.test_rows.begin(), out.test_rows.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

std::string to_csv(const Dataset& d) {
  std::string s = "label";
  for (std::size_t f = 0; f < d.feature_count(); ++f) s += ",f" + std::to_string(f + 1);
  s += '\n';
  for (std::size_t r = 0; r < d.size(); ++r) {
    s += std::to_string(d.labels[r]);
    for (std::size_t f = 0; f < d.feature_count(); ++f) s += "," + format_double(d.features(r, f));
    s += '\n';
  }
  return s;
}

}  // namespace illc

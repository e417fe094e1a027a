#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "doctest.h"
#include "illc/data.hpp"
#include "illc/errors.hpp"

using namespace illc;

namespace {

std::string wdbc_row(int id, const char* diagnosis, double base) {
  std::string s = std::to_string(id) + "," + diagnosis;
  for (int f = 0; f < 30; ++f) s += "," + std::to_string(base + f);
  return s + "\n";
}

Dataset load_bundled() { return load_wdbc(std::string(ILLC_DATA_DIR) + "/wdbc.csv"); }

// Ten samples, five per class.
Dataset balanced_ten() {
  std::string text;
  for (int i = 0; i < 10; ++i) text += wdbc_row(i + 1, i % 2 ? "M" : "B", i);
  return parse_wdbc(text);
}

}  // namespace

TEST_CASE("parse a single malignant row") {
  std::string row = "842302,M";
  for (int f = 0; f < 30; ++f) row += ",1.0";
  const Dataset d = parse_wdbc(row + "\n");
  CHECK(d.size() == 1);
  CHECK(d.feature_count() == 30);
  CHECK(d.labels[0] == 1);
  CHECK(d.features(0, 29) == 1.0);
  CHECK(d.feature_names.size() == 30);
}

TEST_CASE("parse errors name the offending row") {
  std::string text = wdbc_row(1, "B", 0.0);
  std::string bad = "2,M";
  for (int f = 0; f < 29; ++f) bad += ",1.0";
  text += bad + "\n";
  try {
    parse_wdbc(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(parse_wdbc(wdbc_row(1, "X", 0.0)), ParseError);
  std::string nonnum = wdbc_row(1, "B", 0.0);
  nonnum.replace(nonnum.find(",0.0"), 4, ",abc");
  CHECK_THROWS_AS(parse_wdbc(nonnum), ParseError);
}

TEST_CASE("header line is detected and used for feature names") {
  std::string header = "id,diagnosis";
  for (int f = 0; f < 30; ++f) header += ",feat" + std::to_string(f);
  const Dataset d = parse_wdbc(header + "\n" + wdbc_row(1, "B", 0.0) + wdbc_row(2, "M", 1.0));
  CHECK(d.size() == 2);
  CHECK(d.feature_names[3] == "feat3");
  CHECK(d.labels == std::vector<int>{0, 1});
}

TEST_CASE("missing file raises IoError naming the path") {
  try {
    load_wdbc("/nonexistent/wdbc.csv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/wdbc.csv") != std::string::npos);
  }
}

TEST_CASE("standardizer on a two-sample column") {
  Dataset d;
  d.features = Matrix::from_rows({{1.0, 5.0}, {3.0, 5.0}});
  d.labels = {0, 1};
  const Standardizer s = fit_standardize(d);
  CHECK(s.means[0] == 2.0);
  CHECK(s.stds[0] == 1.0);
  CHECK(s.constant[1]);
  CHECK_FALSE(s.constant[0]);
  const Matrix t = s.transform(d.features);
  CHECK(t(0, 0) == -1.0);
  CHECK(t(1, 0) == 1.0);
  CHECK(t(0, 1) == 0.0);
  CHECK(t(1, 1) == 0.0);
  CHECK_THROWS_AS(s.transform(Matrix(1, 3)), DimensionError);
}

TEST_CASE("bundled WDBC file") {
  const Dataset d = load_bundled();
  CHECK(d.size() == 569);
  CHECK(d.feature_count() == 30);
  CHECK(std::count(d.labels.begin(), d.labels.end(), 1) == 212);
  CHECK(d.features.all_finite());
}

TEST_CASE("train-fitted standardization of WDBC") {
  const Dataset d = load_bundled();
  const Split sp = split(d, 0.2, 0);
  const Standardizer s = fit_standardize(sp.train);
  const Matrix t = s.transform(sp.train.features);
  const double n = static_cast<double>(t.rows());
  for (std::size_t c = 0; c < t.cols(); ++c) {
    // Independent one-pass oracle (Welford) on the raw column.
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < sp.train.features.rows(); ++r) {
      const double x = sp.train.features(r, c);
      const double delta = x - mean;
      mean += delta / static_cast<double>(r + 1);
      m2 += delta * (x - mean);
    }
    CHECK(s.means[c] == doctest::Approx(mean).epsilon(1e-10));
    CHECK(s.stds[c] == doctest::Approx(std::sqrt(m2 / n)).epsilon(1e-10));

    double tm = 0.0, tv = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) tm += t(r, c);
    tm /= n;
    for (std::size_t r = 0; r < t.rows(); ++r) tv += (t(r, c) - tm) * (t(r, c) - tm);
    CHECK(std::abs(tm) < 1e-10);
    CHECK(std::abs(std::sqrt(tv / n) - 1.0) < 1e-10);
  }
}

TEST_CASE("split of ten balanced samples") {
  const Dataset d = balanced_ten();
  const Split sp = split(d, 0.2, 0);
  CHECK(sp.test.size() == 2);
  CHECK(sp.train.size() == 8);
  CHECK(std::count(sp.test.labels.begin(), sp.test.labels.end(), 1) == 1);
  CHECK(std::count(sp.test.labels.begin(), sp.test.labels.end(), 0) == 1);
}

TEST_CASE("split is deterministic and seed dependent") {
  const Dataset d = load_bundled();
  const Split a = split(d, 0.2, 7);
  const Split b = split(d, 0.2, 7);
  CHECK(a.test_rows == b.test_rows);
  CHECK(a.train.features == b.train.features);
  CHECK(split(d, 0.2, 8).test_rows != a.test_rows);
}

TEST_CASE("WDBC split sizes and stratification") {
  const Dataset d = load_bundled();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Split sp = split(d, 0.2, seed);
    CHECK(sp.test.size() == 114);
    const auto m = std::count(sp.test.labels.begin(), sp.test.labels.end(), 1);
    CHECK(m >= 42);
    CHECK(m <= 43);
  }
}

TEST_CASE("split partitions the index set") {
  const Dataset d = load_bundled();
  for (double f : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    const Split sp = split(d, f, 3);
    CHECK(sp.train.size() >= 1);
    CHECK(sp.test.size() >= 1);
    std::vector<std::size_t> all = sp.train_rows;
    all.insert(all.end(), sp.test_rows.begin(), sp.test_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(d.size());
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(std::is_sorted(sp.test_rows.begin(), sp.test_rows.end()));
    for (std::size_t k = 0; k < sp.test_rows.size(); ++k)
      CHECK(sp.test.labels[k] == d.labels[sp.test_rows[k]]);
  }
}

TEST_CASE("split rejects fractions outside (0, 1)") {
  const Dataset d = balanced_ten();
  CHECK_THROWS_AS(split(d, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(split(d, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(split(d, -0.5, 0), ConfigError);
}

TEST_CASE("csv dump has a header and one line per sample") {
  const std::string csv = to_csv(balanced_ten());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(csv.rfind("label,", 0) == 0);
}

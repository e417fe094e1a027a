#pragma once

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "illc/mlp.hpp"
#include "illc/rng.hpp"

namespace illc::testing {

// Random network with the given layer sizes; weights ~ N(0, scale^2),
// biases ~ N(0, bias_scale^2).
inline Mlp random_mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed,
                      Activation hidden = Activation::relu, double scale = 0.7,
                      double bias_scale = 0.3, Activation output = Activation::sigmoid) {
  SplitMix64 rng(seed);
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix m(sizes[l + 1], sizes[l]);
    for (double& v : m.data()) v = scale * rng.normal();
    w.push_back(std::move(m));
    std::vector<double> bias(sizes[l + 1]);
    for (double& v : bias) v = bias_scale * rng.normal();
    b.push_back(std::move(bias));
  }
  return Mlp(sizes, std::move(w), std::move(b), hidden, output);
}

inline Matrix random_inputs(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  SplitMix64 rng(seed);
  Matrix x(rows, cols);
  for (double& v : x.data()) v = scale * rng.normal();
  return x;
}

// Plain Lloyd with uniformly random initial centres, written independently of
// the library for use as a reference. Returns the final inertia.
inline double reference_kmeans(const Matrix& p, std::size_t k, std::mt19937_64& gen) {
  const std::size_t n = p.rows(), dim = p.cols();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), gen);
  std::vector<std::vector<double>> c(k);
  for (std::size_t j = 0; j < k; ++j) c[j].assign(p.row(idx[j]).begin(), p.row(idx[j]).end());
  std::vector<std::size_t> assign(n, k);
  for (int it = 0; it < 1000; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double d = 0;
        for (std::size_t t = 0; t < dim; ++t) d += (p(i, t) - c[j][t]) * (p(i, t) - c[j][t]);
        if (d < bd) bd = d, best = j;
      }
      changed |= assign[i] != best;
      assign[i] = best;
    }
    if (!changed) break;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> s(dim, 0.0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == j) {
          ++cnt;
          for (std::size_t t = 0; t < dim; ++t) s[t] += p(i, t);
        }
      if (cnt)
        for (std::size_t t = 0; t < dim; ++t) c[j][t] = s[t] / static_cast<double>(cnt);
    }
  }
  double inertia = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < dim; ++t) inertia += (p(i, t) - c[assign[i]][t]) * (p(i, t) - c[assign[i]][t]);
  return inertia;
}

// 40 points around three well separated centres.
inline Matrix three_blobs(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double centres[3][2] = {{0, 0}, {6, 0}, {0, 6}};
  Matrix p(40, 2);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t t = 0; t < 2; ++t) p(i, t) = centres[i % 3][t] + rng.normal();
  return p;
}

}  // namespace illc::testing

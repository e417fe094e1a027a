#include "illc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "illc/errors.hpp"
#include "illc/rng.hpp"

namespace illc {
namespace {

std::size_t nearest(std::span<const double> p, const Matrix& centroids, double* dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, SplitMix64& rng) {
  const std::size_t m = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(m, false);
  auto take = [&](std::size_t c, std::size_t p) {
    chosen[p] = true;
    auto src = points.row(p);
    auto dst = centroids.row(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
  };
  take(0, static_cast<std::size_t>(rng.below(m)));

  std::vector<double> d2(m);
  for (std::size_t p = 0; p < m; ++p) d2[p] = squared_distance(points.row(p), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = m;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        acc += d2[p];
        if (d2[p] > 0.0 && acc > target) {
          pick = p;
          break;
        }
      }
      if (pick == m)  // rounding left target past the end
        for (std::size_t p = m; p-- > 0;)
          if (d2[p] > 0.0) {
            pick = p;
            break;
          }
    } else {
      // Every point coincides with a centroid: take the lowest unused index.
      for (std::size_t p = 0; p < m; ++p)
        if (!chosen[p]) {
          pick = p;
          break;
        }
    }
    take(c, pick);
    for (std::size_t p = 0; p < m; ++p)
      d2[p] = std::min(d2[p], squared_distance(points.row(p), centroids.row(c)));
  }
  return centroids;
}

void update_centroids(const Matrix& points, const std::vector<std::size_t>& labels,
                      Matrix& centroids) {
  std::vector<std::size_t> counts(centroids.rows(), 0);
  Matrix sums(centroids.rows(), centroids.cols());
  for (std::size_t p = 0; p < points.rows(); ++p) {
    ++counts[labels[p]];
    auto src = points.row(p);
    auto dst = sums.row(labels[p]);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (counts[c] == 0) continue;
    auto s = sums.row(c);
    auto dst = centroids.row(c);
    const double n = static_cast<double>(counts[c]);
    for (std::size_t i = 0; i < s.size(); ++i) dst[i] = s[i] / n;
  }
}

// Assigns every point to its nearest centroid, then fills empty clusters.
void assign(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& labels) {
  const std::size_t m = points.rows();
  const std::size_t k = centroids.rows();
  std::vector<double> dist(m);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t p = 0; p < m; ++p) {
    labels[p] = nearest(points.row(p), centroids, &dist[p]);
    ++counts[labels[p]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t victim = m;
    double far = -1.0;
    for (std::size_t p = 0; p < m; ++p)
      if (counts[labels[p]] > 1 && dist[p] > far) {
        far = dist[p];
        victim = p;
      }
    --counts[labels[victim]];
    labels[victim] = c;
    counts[c] = 1;
    dist[victim] = 0.0;
    auto src = points.row(victim);
    auto dst = centroids.row(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
  }
}

double inertia_of(const Matrix& points, const Matrix& centroids,
                  const std::vector<std::size_t>& labels) {
  double s = 0.0;
  for (std::size_t p = 0; p < points.rows(); ++p)
    s += squared_distance(points.row(p), centroids.row(labels[p]));
  return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  const std::size_t m = points.rows();
  if (k < 1 || k > m)
    throw ValidationError("k-means needs 1 <= k <= " + std::to_string(m) + ", got k=" +
                          std::to_string(k));
  if (!points.all_finite()) throw ValidationError("k-means points must be finite");

  SplitMix64 rng(seed);
  KMeansResult r;
  r.centroids = seed_plus_plus(points, k, rng);
  r.labels.assign(m, 0);
  assign(points, r.centroids, r.labels);

  std::vector<std::size_t> previous;
  while (r.iterations < max_iterations) {
    previous = r.labels;
    update_centroids(points, r.labels, r.centroids);
    r.inertia_trace.push_back(inertia_of(points, r.centroids, r.labels));
    ++r.iterations;
    assign(points, r.centroids, r.labels);
    if (r.labels == previous) break;
  }
  update_centroids(points, r.labels, r.centroids);
  r.inertia = inertia_of(points, r.centroids, r.labels);
  return r;
}

std::vector<std::vector<std::size_t>> LayerClustering::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < labels.size(); ++i) out.at(labels[i]).push_back(i);
  return out;
}

std::size_t cluster_count(double gamma, std::size_t width) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
  const auto k = static_cast<std::size_t>(std::llround(gamma * static_cast<double>(width)));
  return std::clamp<std::size_t>(k, 1, width);
}

LayerClustering cluster_layer(const Matrix& activations, std::size_t layer, double gamma,
                              std::uint64_t seed) {
  const std::size_t width = activations.cols();
  const std::size_t k = cluster_count(gamma, width);
  LayerClustering lc;
  lc.layer = layer;
  lc.k = k;
  lc.labels.resize(width);
  if (k == width) {
    for (std::size_t i = 0; i < width; ++i) lc.labels[i] = i;
    return lc;
  }
  const KMeansResult km = kmeans(activations.transposed(), k, seed);
  std::vector<std::size_t> remap(k, k);
  std::size_t next = 0;
  for (std::size_t i = 0; i < width; ++i) {
    auto& slot = remap[km.labels[i]];
    if (slot == k) slot = next++;
    lc.labels[i] = slot;
  }
  return lc;
}

}  // namespace illc

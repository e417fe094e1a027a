#pragma once

#include <cstdint>
#include <vector>

#include "illc/matrix.hpp"

namespace illc {

struct KMeansResult {
  std::vector<std::size_t> labels;  // one per point, in [0, k)
  Matrix centroids;                 // k x dims
  double inertia = 0.0;             // sum of squared distances to assigned centroid
  std::size_t iterations = 0;
  std::vector<double> inertia_trace;  // inertia after each Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding on SplitMix64(seed). Stops at
// an assignment fixpoint or after `max_iterations`. Nearest-centroid ties
// go to the lowest index; a cluster left empty steals the point farthest
// from its own centroid (taken from a cluster with more than one member).
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 300);

// Partition of one hidden layer's neurons.
struct LayerClustering {
  std::size_t layer = 0;             // hidden layer index, 1-based
  std::size_t k = 0;
  std::vector<std::size_t> labels;   // one per neuron

  // Member neuron indices of every cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;

  friend bool operator==(const LayerClustering&, const LayerClustering&) = default;
};

// max(1, round(gamma * width)).
std::size_t cluster_count(double gamma, std::size_t width);

// Clusters the neurons of one layer from an N x width activation table
// (each neuron is a point with one coordinate per sample). Labels are
// renumbered in order of first appearance, so cluster 0 always contains
// neuron 0 and gamma = 1 yields the identity labelling.
LayerClustering cluster_layer(const Matrix& activations, std::size_t layer, double gamma,
                              std::uint64_t seed);

}  // namespace illc

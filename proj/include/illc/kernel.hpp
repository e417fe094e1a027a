#pragma once

#include <span>
#include <vector>

#include "illc/matrix.hpp"

namespace illc {

// pi(x', x) = exp(-|x' - x|^2 / sigma^2) for every row x' of `samples`,
// normalized to sum to one. Throws for sigma <= 0, an empty sample set, or
// when every weight underflows.
std::vector<double> kernel_weights(const Matrix& samples, std::span<const double> anchor,
                                   double sigma);

// Median Euclidean distance over all unordered pairs of distinct rows.
// Default kernel width when none is given.
double median_pairwise_distance(const Matrix& samples);

}  // namespace illc

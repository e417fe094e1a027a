#include "illc/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "illc/errors.hpp"

namespace illc {

std::vector<double> kernel_weights(const Matrix& samples, std::span<const double> anchor,
                                   double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("kernel width sigma must be > 0");
  if (samples.rows() == 0) throw ValidationError("kernel needs a nonempty sample set");
  if (anchor.size() != samples.cols())
    throw DimensionError("anchor has " + std::to_string(anchor.size()) +
                         " features, samples have " + std::to_string(samples.cols()));
  std::vector<double> w(samples.rows());
  const double s2 = sigma * sigma;
  double total = 0.0;
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    w[r] = std::exp(-squared_distance(samples.row(r), anchor) / s2);
    total += w[r];
  }
  if (!(total > 0.0)) throw ValidationError("all kernel weights underflowed; increase sigma");
  for (double& v : w) v /= total;
  return w;
}

double median_pairwise_distance(const Matrix& samples) {
  const std::size_t n = samples.rows();
  if (n < 2) throw ValidationError("median pairwise distance needs at least two samples");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      d.push_back(std::sqrt(squared_distance(samples.row(a), samples.row(b))));
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  const double upper = d[mid];
  if (d.size() % 2 == 1) return upper;
  const double lower = *std::max_element(d.begin(), d.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace illc

#pragma once

// Small statistics toolkit used by the validation suite: streaming moments
// (Welford), median, and Kolmogorov-Smirnov one- and two-sample tests with
// the Stephens small-sample correction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace viso {

struct Accumulator {
  long long count = 0;
  double mean_ = 0;
  double m2_ = 0;

  void add(double x) {
    count++;
    double d = x - mean_;
    mean_ += d / static_cast<double>(count);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double variance() const {  // sample variance (n-1 denominator)
    return count > 1 ? m2_ / static_cast<double>(count - 1) : 0.0;
  }
  double stderr_mean() const {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  const size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  double hi = v[h];
  if (v.size() % 2) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + h);
  return 0.5 * (lo + hi);
}

// survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
// of the Kolmogorov limiting distribution
inline double ks_q(double lambda) {
  if (lambda < 1e-6) return 1.0;
  const double l2 = lambda * lambda;
  double sum = 0, prev = 1e300;
  for (int j = 1; j <= 200; j++) {
    double term = 2.0 * ((j & 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * l2);
    sum += term;
    if (std::abs(term) <= 1e-3 * std::abs(prev) || std::abs(term) <= 1e-12 * std::abs(sum)) break;
    prev = term;
  }
  return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
  double d = 0;  // sup-distance between empirical laws
  double p = 0;  // approximate significance via the Stephens-corrected limit
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n1 = a.size(), n2 = b.size();
  size_t i = 0, j = 0;
  double d = 0, f1 = 0, f2 = 0;
  while (i < n1 && j < n2) {
    double x1 = a[i], x2 = b[j];
    if (x1 <= x2) f1 = static_cast<double>(++i) / static_cast<double>(n1);
    if (x2 <= x1) f2 = static_cast<double>(++j) / static_cast<double>(n2);
    d = std::max(d, std::abs(f1 - f2));
  }
  const double en =
      std::sqrt(static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2));
  return {d, ks_q((en + 0.12 + 0.11 / en) * d)};
}

inline KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(a.begin(), a.end());
  const size_t n = a.size();
  double d = 0;
  for (size_t i = 0; i < n; i++) {
    double f = cdf(a[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / static_cast<double>(n) - f,
                             f - static_cast<double>(i) / static_cast<double>(n)));
  }
  const double en = std::sqrt(static_cast<double>(n));
  return {d, ks_q((en + 0.12 + 0.11 / en) * d)};
}

}  // namespace viso

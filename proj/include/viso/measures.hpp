#pragma once

// Samplers for the coherent measures driving the chains: uniform (Haar),
// the tilted one-parameter family, and the two-parameter permutation
// measure, plus the capacity estimator built on the determinant identity
// det(Id - u_n) = prod_k (1 - <e_k, x_k>).
//
// Samplers take an explicit RNG handle and keep no global state; replica r
// of a run must use Rng(master_seed, r) so parallel schedules cannot change
// the output.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "viso/builder.hpp"
#include "viso/constants.hpp"
#include "viso/linalg.hpp"
#include "viso/rng.hpp"
#include "viso/stats.hpp"

namespace viso {

enum class MeasureKind { haar, hua_pickrell, ewens };

struct MeasureSpec {
  MeasureKind kind = MeasureKind::haar;
  cplx delta{0, 0};    // hua_pickrell tilt, Re delta >= 0
  double theta = 1.0;  // ewens weight, > 0
  std::uint64_t seed = 0;

  static MeasureSpec haar(std::uint64_t seed) {
    MeasureSpec s;
    s.kind = MeasureKind::haar;
    s.seed = seed;
    return s;
  }
  static MeasureSpec hua_pickrell(cplx delta, std::uint64_t seed) {
    if (delta.real() < 0)
      throw std::invalid_argument("MeasureSpec: tilt with negative real part is unsupported");
    MeasureSpec s;
    s.kind = MeasureKind::hua_pickrell;
    s.delta = delta;
    s.seed = seed;
    return s;
  }
  static MeasureSpec ewens(double theta, std::uint64_t seed) {
    if (!(theta > 0)) throw std::invalid_argument("MeasureSpec: theta must be positive");
    MeasureSpec s;
    s.kind = MeasureKind::ewens;
    s.theta = theta;
    s.seed = seed;
    return s;
  }
  std::string name() const {
    switch (kind) {
      case MeasureKind::haar: return "haar";
      case MeasureKind::hua_pickrell: return "hua_pickrell";
      case MeasureKind::ewens: return "ewens";
    }
    return "?";
  }
};

// uniform on the complex unit sphere: normalized standard complex Gaussians
inline CVector sample_sphere(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_sphere: dimension must be >= 1");
  CVector x(n);
  double nn = 0;
  do {
    for (auto& e : x) e = cplx(rng.normal(), rng.normal());
    nn = norm2(x);
  } while (nn < 1e-6);
  for (auto& e : x) e /= nn;
  return x;
}

// Rejection sampling of the tilted sphere law with density proportional to
// h(x) = |1 - z|^(2 Re d) * exp(2 Im d * arg(1 - z)),  z = <e_n, x>,
// against the uniform sphere.  On the closed disk |1 - z| <= 2 and
// arg(1 - z) in (-pi/2, pi/2), so h <= M = 2^(2 Re d) * exp(pi |Im d|)
// whenever Re d >= 0; for Re d < 0 the density is unbounded near z = 1 and
// plain rejection fails, hence the parameter restriction.
inline CVector sample_hua_pickrell_vector(int n, cplx delta, Rng& rng,
                                          long long* attempts = nullptr) {
  if (delta.real() < 0)
    throw std::invalid_argument(
        "sample_hua_pickrell_vector: tilt with negative real part is unsupported");
  if (delta == cplx(0, 0)) {
    if (attempts) *attempts = 1;
    return sample_sphere(n, rng);  // h is identically 1: accept everything, same stream
  }
  const double m = std::pow(2.0, 2.0 * delta.real()) * std::exp(pi * std::abs(delta.imag()));
  long long tries = 0;
  for (;;) {
    CVector x = sample_sphere(n, rng);
    tries++;
    const cplx omz = 1.0 - x[n - 1];
    const double h =
        std::pow(std::abs(omz), 2.0 * delta.real()) * std::exp(2.0 * delta.imag() * std::arg(omz));
    if (rng.u01() * m < h) {
      if (attempts) *attempts = tries;
      return x;
    }
  }
}

// index law of the restaurant process: n with probability theta/(theta+n-1),
// each j < n with probability 1/(theta+n-1)
inline int sample_ewens_index(int n, double theta, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_ewens_index: dimension must be >= 1");
  if (!(theta > 0)) throw std::invalid_argument("sample_ewens_index: theta must be positive");
  const double u = rng.u01() * (theta + n - 1);
  if (u < theta || n == 1) return n;
  const int j = 1 + static_cast<int>(u - theta);
  return j < n ? j : n - 1;
}

inline CVector sample_measure_vector(const MeasureSpec& spec, int k, Rng& rng) {
  switch (spec.kind) {
    case MeasureKind::haar: return sample_sphere(k, rng);
    case MeasureKind::hua_pickrell: return sample_hua_pickrell_vector(k, spec.delta, rng);
    case MeasureKind::ewens: return basis_vector(k, sample_ewens_index(k, spec.theta, rng) - 1);
  }
  throw std::logic_error("sample_measure_vector: unreachable");
}

inline VirtualIsometryState sample_virtual_isometry(const MeasureSpec& spec, int n_max, Rng& rng) {
  if (n_max < 1) throw std::invalid_argument("sample_virtual_isometry: n_max must be >= 1");
  VirtualIsometryState s = init(sample_measure_vector(spec, 1, rng));
  while (s.n < n_max) s = extend(s, sample_measure_vector(spec, s.n + 1, rng));
  return s;
}

// sum_k Log(1 - <e_k, x_k>) with the principal logarithm of each factor;
// every 1 - z has positive real part on the sphere, so each term's imaginary
// part lies in (-pi/2, pi/2) and the sum is branch-consistent
inline cplx log_det_id_minus(const std::vector<CVector>& xs) {
  cplx sum = 0;
  for (size_t k = 0; k < xs.size(); k++) {
    const cplx factor = 1.0 - xs[k][k];
    if (std::abs(factor) < 1e-14)
      throw SingularMatrixError("log_det_id_minus: factor vanishes, determinant is 0");
    sum += std::log(factor);
  }
  return sum;
}

struct CapacityEstimate {
  cplx mean{0, 0};
  double se_re = 0;
  double se_im = 0;
  long long samples = 0;
};

// Monte Carlo mean of log det(Id - u_n) over the measure, computed through
// the generating vectors only (no matrix is materialized).  Paths hitting a
// singular factor are resampled; measures that put mass on singular chains
// (any permutation measure: every cycle contributes eigenvalue 1) exhaust
// the retry budget and raise.
inline CapacityEstimate capacity_estimate(const MeasureSpec& spec, int n, long long samples,
                                          Rng& rng) {
  if (samples < 2) throw std::invalid_argument("capacity_estimate: need at least 2 samples");
  Accumulator re, im;
  for (long long s = 0; s < samples; s++) {
    cplx sum = 0;
    int tries = 0;
    for (;;) {
      if (++tries > 100)
        throw std::runtime_error(
            "capacity_estimate: persistent singular factors; measure concentrates on "
            "det(Id - u) = 0");
      sum = 0;
      bool ok = true;
      for (int k = 1; k <= n && ok; k++) {
        const cplx nu = sample_measure_vector(spec, k, rng)[k - 1];
        const cplx factor = 1.0 - nu;
        if (std::abs(factor) < 1e-14)
          ok = false;
        else
          sum += std::log(factor);
      }
      if (ok) break;
    }
    re.add(sum.real());
    im.add(sum.imag());
  }
  return {cplx(re.mean(), im.mean()), re.stderr_mean(), im.stderr_mean(), samples};
}

}  // namespace viso

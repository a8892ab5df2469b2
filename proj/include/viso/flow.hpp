#pragma once

// Matrix-free eigenangle flow. A dimension step is described by StepParams,
// either sampled (Haar) or recovered from an explicit chain state; advance
// (secular.hpp) pushes the angles from n to n+1, and run_haar_spectral
// iterates that from dimension 1, recording tracked angles, the weights they
// consume, and per-step scale diagnostics. The characteristic-polynomial
// recursion gives an independent check on the advanced spectrum that never
// touches the secular roots.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "viso/builder.hpp"
#include "viso/constants.hpp"
#include "viso/linalg.hpp"
#include "viso/rng.hpp"
#include "viso/secular.hpp"

namespace viso {

// rho = sqrt(Beta(1,n)), psi uniform on (-pi, pi], gamma flat Dirichlet
// (normalized unit exponentials, the law of squared moduli of a uniform
// complex unit vector); the three are independent.
inline StepParams sample_step_haar(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_step_haar: dimension must be >= 1");
  StepParams p;
  p.rho = std::sqrt(1.0 - std::pow(rng.u01_open(), 1.0 / n));
  p.psi = rng.signed_angle();
  p.gamma.resize(n);
  double sum = 0;
  do {  // single exponentials may round to zero; an all-zero draw cannot normalize
    sum = 0;
    for (double& g : p.gamma) {
      g = rng.exponential();
      sum += g;
    }
  } while (!(sum > 0));
  for (double& g : p.gamma) g /= sum;
  return p;
}

namespace flow_detail {

// representative of k in 1..n under shifts by n
inline int periodic_index(long long k, int n) {
  long long q = (k - 1) / n;
  if ((k - 1) % n < 0) q--;
  return static_cast<int>(k - q * n);
}

}  // namespace flow_detail

// theta_k for any integer k under theta_{k+n} = theta_k + 2pi
inline double angle_at_index(const SpectralState& s, long long k) {
  const int idx = flow_detail::periodic_index(k, s.n);
  const long long j = (k - idx) / s.n;
  return s.angles[idx - 1] + two_pi * static_cast<double>(j);
}

// P_{n+1}(z) from P_n(z) = prod(z - e^{i theta_k}) and the step parameters:
// P_n(z) * [(z - nu) - (z - 1) (1 - rho^2) / (conj(nu) - 1) * sum gamma_k
// e^{i theta_k} / (z - e^{i theta_k})] with nu = rho e^{i psi}.
inline cplx charpoly_recursion_eval(const SpectralState& s, const StepParams& p, cplx z) {
  secular_detail::validate(s, p);
  const cplx nu = std::polar(p.rho, p.psi);
  const cplx nub1 = std::conj(nu) - 1.0;
  if (std::abs(nub1) < 1e-15)
    throw std::invalid_argument("charpoly recursion: reflection parameter is degenerate");
  const double w = 1.0 - p.rho * p.rho;
  cplx prod = 1.0, sum = 0.0;
  for (int k = 0; k < s.n; k++) {
    const cplx lam = std::polar(1.0, s.angles[k]);
    const cplx d = z - lam;
    if (std::abs(d) <= 1e-12)
      throw std::invalid_argument("charpoly recursion: evaluation point is on a pole");
    prod *= d;
    sum += p.gamma[k] * lam / d;
  }
  return prod * ((z - nu) - (z - 1.0) * (w / nub1) * sum);
}

// Recovers the step parameters linking a chain state to its next generating
// vector: eigenvectors f_k of s.u by inverse iteration with fixed shift
// e^{i theta_k}(1 + 1e-8), then gamma_k proportional to |<f_k, x>|^2 and
// nu = <e_{n+1}, x>. Returns nullopt when x = e_{n+1}: that extension fixes
// e_{n+1}, appending the unit eigenvalue the (0, 2pi) convention excludes,
// so no step parameters exist.
inline std::optional<StepParams> spectral_params_from_matrix(
    const VirtualIsometryState& s, const CVector& x_next,
    const std::vector<double>& known_angles) {
  const int n = s.n;
  if (n < 1) throw std::invalid_argument("parameter recovery: empty chain state");
  if (static_cast<int>(x_next.size()) != n + 1)
    throw std::invalid_argument("parameter recovery: vector must have dimension n+1");
  if (!is_unit(x_next)) throw std::invalid_argument("parameter recovery: vector must be unit");
  if (static_cast<int>(known_angles.size()) != n)
    throw std::invalid_argument("parameter recovery: need one angle per dimension");

  double dev2 = 0;
  for (int j = 0; j < n; j++) dev2 += std::norm(x_next[j]);
  dev2 += std::norm(x_next[n] - 1.0);
  if (std::sqrt(dev2) <= 1e-12) return std::nullopt;

  for (int k = 0; k + 1 < n; k++)
    if (known_angles[k + 1] - known_angles[k] < 1e-10)
      throw std::runtime_error("parameter recovery: eigenangles closer than 1e-10");
  if (n >= 2 && known_angles[0] + two_pi - known_angles[n - 1] < 1e-10)
    throw std::runtime_error("parameter recovery: eigenangles closer than 1e-10");

  // fixed generic start vector keeps recovery a pure function of its inputs
  Rng start(0x9e3779b97f4a7c15ull);
  CVector f0(n);
  double nn = 0;
  for (auto& c : f0) {
    c = cplx(start.normal(), start.normal());
    nn += std::norm(c);
  }
  nn = std::sqrt(nn);
  for (auto& c : f0) c /= nn;

  const CVector x_head(x_next.begin(), x_next.begin() + n);
  const cplx nu = x_next[n];

  StepParams p;
  p.rho = std::abs(nu);
  p.psi = std::arg(nu);
  p.gamma.resize(n);
  double gsum = 0;
  for (int k = 0; k < n; k++) {
    const cplx shift = std::polar(1.0 + 1e-8, known_angles[k]);
    CMatrix a = s.u;
    for (int j = 0; j < n; j++) a(j, j) -= shift;
    const LUFactors lu = lu_factor(a);
    CVector f = f0;
    cplx lam = 0;
    double res = 1e300;
    for (int it = 0; it < 5; it++) {
      f = lu_solve(lu, f);
      const double fn = norm2(f);
      for (auto& c : f) c /= fn;
      const CVector uf = matvec(s.u, f);
      lam = inner(f, uf);
      double r2 = 0;
      for (int j = 0; j < n; j++) r2 += std::norm(uf[j] - lam * f[j]);
      res = std::sqrt(r2);
      if (res <= 1e-12) break;
    }
    if (res > 1e-8)
      throw std::runtime_error("parameter recovery: inverse iteration stalled at angle index " +
                               std::to_string(k + 1));
    if (std::abs(lam - std::polar(1.0, known_angles[k])) > 1e-6)
      throw std::runtime_error(
          "parameter recovery: converged to an eigenvalue far from the requested angle");
    p.gamma[k] = std::norm(inner(f, x_head));
    gsum += p.gamma[k];
  }
  // sum |mu_k|^2 equals 1 - |nu|^2 up to eigensolve error; normalizing by
  // the computed sum keeps the weights an exact unit partition
  if (!(gsum > 0))
    throw std::runtime_error("parameter recovery: vector orthogonal to every eigenvector");
  for (double& g : p.gamma) g /= gsum;
  return p;
}

// one step's scale parameters plus the gap range of the state it consumed
struct StepRecord {
  int n = 0;
  double rho = 0;
  double psi = 0;
  double gamma_max = 0;
  double min_gap = 0;  // circular, wraparound gap included
  double max_gap = 0;
};

// per-index series over n = 1..n_max; gamma[i] is the weight consumed by the
// step taken at dimension i+1, one entry shorter than theta
struct Trajectory {
  long long k = 0;
  std::vector<double> theta;
  std::vector<double> gamma;
  std::vector<double> rescaled;  // n * theta / 2pi
};

struct SpectralRun {
  std::vector<Trajectory> tracked;
  std::vector<StepRecord> steps;
  SpectralState final_state;
};

// advance failure wrapped with everything needed to reproduce the step
struct AdvanceFailure : std::runtime_error {
  SpectralState state;
  StepParams params;
  AdvanceFailure(const SpectralState& s, const StepParams& p, const std::string& inner)
      : std::runtime_error("spectral flow failed at n = " + std::to_string(s.n) + ": " + inner),
        state(s),
        params(p) {}
};

inline SpectralRun run_haar_spectral(int n_max, const std::vector<long long>& tracked_indices,
                                     Rng& rng) {
  if (n_max < 1) throw std::invalid_argument("run_haar_spectral: n_max must be >= 1");
  SpectralRun out;
  out.tracked.reserve(tracked_indices.size());
  for (long long k : tracked_indices) {
    Trajectory t;
    t.k = k;
    t.theta.reserve(n_max);
    t.gamma.reserve(n_max - 1);
    t.rescaled.reserve(n_max);
    out.tracked.push_back(std::move(t));
  }
  out.steps.reserve(n_max - 1);

  SpectralState s;
  s.n = 1;
  s.angles = {rng.angle()};

  auto record_state = [&](const SpectralState& st) {
    for (Trajectory& t : out.tracked) {
      const double th = angle_at_index(st, t.k);
      t.theta.push_back(th);
      t.rescaled.push_back(static_cast<double>(st.n) * th / two_pi);
    }
  };
  record_state(s);

  for (int n = 1; n < n_max; n++) {
    const StepParams p = sample_step_haar(n, rng);

    StepRecord rec;
    rec.n = n;
    rec.rho = p.rho;
    rec.psi = p.psi;
    rec.gamma_max = *std::max_element(p.gamma.begin(), p.gamma.end());
    double mn = s.angles[0] + two_pi - s.angles[n - 1];
    double mx = mn;
    for (int i = 0; i + 1 < n; i++) {
      const double d = s.angles[i + 1] - s.angles[i];
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    rec.min_gap = mn;
    rec.max_gap = mx;
    out.steps.push_back(rec);

    for (Trajectory& t : out.tracked)
      t.gamma.push_back(p.gamma[flow_detail::periodic_index(t.k, n) - 1]);

    try {
      s = advance(s, p);
    } catch (const BracketError& e) {
      throw AdvanceFailure(s, p, e.what());
    }
    record_state(s);
  }
  out.final_state = std::move(s);
  return out;
}

}  // namespace viso

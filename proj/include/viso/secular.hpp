#pragma once

// The secular function and the interlacing eigenangle update.
//
//   phi(eta) = (1 + rho^2) cos(eta/2) - 2 rho cos(eta/2 - psi)
//            + (1 - rho^2) sin(eta/2) sum_k gamma_k cot((eta - theta_k)/2)
//
// has exactly one simple zero in each of the n+1 circular intervals cut by
// the poles theta_1 < ... < theta_n (plus the hard interval ends 0 and 2pi),
// and those zeros are the eigenangles one dimension up.  advance() returns
// them in order; interlacing is audited unconditionally on every call.
//
// Root-finding engine, per interval:
//   probe:   one vectorized kernel pass (float when the far field is far
//            enough, double otherwise) anchors a quadratic Taylor model of
//            the far field; the near poles are kept exact
//   model:   safeguarded Newton on (Taylor far field + exact near cots)
//   certify: up to 3 passes of the exact double kernel at the model root;
//            each pass updates a hard sign bracket, takes a Newton step and
//            re-polishes on a re-anchored model; a root is accepted only if
//            the certified correction is a small fraction of the interval
//   carry:   the certified far field seeds the next interval's model when
//            its pole window still covers that interval
//   fallback: bracketed bisection accelerated by a 2-flank-pole model, with
//            every evaluation exact (used for small n and on any fast-path
//            rejection; always correct)
//
// Weights below 1e-14 are treated as exactly zero: the pole angle persists
// as an eigenangle and its two intervals merge.  Bracket ends start at
// max(1e-15, 1e-13 * gap) off each pole; a wrong sign there walks the
// offset down geometrically to 4 units of roundoff before declaring the
// root equal to the pole.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>
#ifdef __AVX512F__
#include <immintrin.h>
#endif

#include "viso/constants.hpp"

namespace viso {

struct StepParams {
  double rho = 0;              // modulus of the new vector's last coordinate, in [0, 1)
  double psi = 0;              // its argument
  std::vector<double> gamma;   // spectral weights, nonnegative, summing to 1
};

struct SpectralState {
  int n = 0;
  std::vector<double> angles;  // strictly increasing, each in (0, 2pi)
};

// Raised when an interval's sign structure cannot be certified even after
// pole-offset shrinking; carries everything needed to reproduce the case.
struct BracketError : std::runtime_error {
  int n;
  int interval;
  double lo, hi;
  double phi_lo, phi_hi;
  BracketError(int n_, int interval_, double lo_, double hi_, double plo, double phi)
      : std::runtime_error("secular bracket failure in interval " + std::to_string(interval_) +
                           " of " + std::to_string(n_ + 1) + ": phi(" + std::to_string(lo_) +
                           ") = " + std::to_string(plo) + ", phi(" + std::to_string(hi_) +
                           ") = " + std::to_string(phi)),
        n(n_), interval(interval_), lo(lo_), hi(hi_), phi_lo(plo), phi_hi(phi) {}
};

namespace secular_detail {

inline constexpr double WEIGHT_FLOOR = 1e-14;

// ---- kernels: S0 = sum g cot((eta-th)/2), S1 = sum g cot^2, S2 = sum g cot^3 ----
// cot((eta-th)/2) = (sa*s_j + ca*c_j)/(sa*c_j - ca*s_j), c_j = cos(th_j/2), s_j = sin(th_j/2)

inline void cot_sums_d(const double* c, const double* s, const double* g, int n,
                       double ca, double sa, double* S0, double* S1, double* S2) {
  double a0s = 0, a1s = 0, a2s = 0;
  int i = 0;
#ifdef __AVX512F__
  const __m512d two = _mm512_set1_pd(2.0);
  __m512d vca = _mm512_set1_pd(ca), vsa = _mm512_set1_pd(sa);
  __m512d A0 = _mm512_setzero_pd(), B0 = _mm512_setzero_pd(), D0 = _mm512_setzero_pd();
  __m512d A1 = _mm512_setzero_pd(), B1 = _mm512_setzero_pd(), D1 = _mm512_setzero_pd();
  __m512d A2 = _mm512_setzero_pd(), B2 = _mm512_setzero_pd(), D2 = _mm512_setzero_pd();
  __m512d A3 = _mm512_setzero_pd(), B3 = _mm512_setzero_pd(), D3 = _mm512_setzero_pd();
#define VISO_CSD_BLK(J, AA, BB, DD)                                         \
  {                                                                         \
    __m512d cj = _mm512_loadu_pd(c + i + 8 * (J));                          \
    __m512d sj = _mm512_loadu_pd(s + i + 8 * (J));                          \
    __m512d num = _mm512_fmadd_pd(vsa, sj, _mm512_mul_pd(vca, cj));         \
    __m512d den = _mm512_fmsub_pd(vsa, cj, _mm512_mul_pd(vca, sj));         \
    __m512d r = _mm512_rcp14_pd(den);                                       \
    r = _mm512_mul_pd(r, _mm512_fnmadd_pd(den, r, two));                    \
    r = _mm512_mul_pd(r, _mm512_fnmadd_pd(den, r, two));                    \
    __m512d ct = _mm512_mul_pd(num, r);                                     \
    __m512d t = _mm512_mul_pd(_mm512_loadu_pd(g + i + 8 * (J)), ct);        \
    __m512d u = _mm512_mul_pd(t, ct);                                       \
    AA = _mm512_add_pd(AA, t);                                              \
    BB = _mm512_add_pd(BB, u);                                              \
    DD = _mm512_fmadd_pd(u, ct, DD);                                        \
  }
  for (; i + 32 <= n; i += 32) {
    VISO_CSD_BLK(0, A0, B0, D0)
    VISO_CSD_BLK(1, A1, B1, D1)
    VISO_CSD_BLK(2, A2, B2, D2)
    VISO_CSD_BLK(3, A3, B3, D3)
  }
  for (; i + 8 <= n; i += 8) VISO_CSD_BLK(0, A0, B0, D0)
#undef VISO_CSD_BLK
  a0s = _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(A0, A1), _mm512_add_pd(A2, A3)));
  a1s = _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(B0, B1), _mm512_add_pd(B2, B3)));
  a2s = _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(D0, D1), _mm512_add_pd(D2, D3)));
#endif
  for (; i < n; i++) {
    double num = sa * s[i] + ca * c[i];
    double den = sa * c[i] - ca * s[i];
    double ct = num / den, t = g[i] * ct, u = t * ct;
    a0s += t;
    a1s += u;
    a2s += u * ct;
  }
  *S0 = a0s;
  *S1 = a1s;
  *S2 = a2s;
}

inline void cot_sums_f(const float* c, const float* s, const float* g, int n,
                       float ca, float sa, double* S0, double* S1, double* S2) {
  float a0s = 0, a1s = 0, a2s = 0;
  int i = 0;
#ifdef __AVX512F__
  const __m512 two = _mm512_set1_ps(2.0f);
  __m512 vca = _mm512_set1_ps(ca), vsa = _mm512_set1_ps(sa);
  __m512 A0 = _mm512_setzero_ps(), B0 = _mm512_setzero_ps(), D0 = _mm512_setzero_ps();
  __m512 A1 = _mm512_setzero_ps(), B1 = _mm512_setzero_ps(), D1 = _mm512_setzero_ps();
  for (; i + 32 <= n; i += 32) {
    __m512 c0 = _mm512_loadu_ps(c + i), s0 = _mm512_loadu_ps(s + i);
    __m512 c1 = _mm512_loadu_ps(c + i + 16), s1 = _mm512_loadu_ps(s + i + 16);
    __m512 num0 = _mm512_fmadd_ps(vsa, s0, _mm512_mul_ps(vca, c0));
    __m512 den0 = _mm512_fmsub_ps(vsa, c0, _mm512_mul_ps(vca, s0));
    __m512 num1 = _mm512_fmadd_ps(vsa, s1, _mm512_mul_ps(vca, c1));
    __m512 den1 = _mm512_fmsub_ps(vsa, c1, _mm512_mul_ps(vca, s1));
    __m512 r0 = _mm512_rcp14_ps(den0);
    r0 = _mm512_mul_ps(r0, _mm512_fnmadd_ps(den0, r0, two));
    __m512 r1 = _mm512_rcp14_ps(den1);
    r1 = _mm512_mul_ps(r1, _mm512_fnmadd_ps(den1, r1, two));
    __m512 ct0 = _mm512_mul_ps(num0, r0), ct1 = _mm512_mul_ps(num1, r1);
    __m512 t0 = _mm512_mul_ps(_mm512_loadu_ps(g + i), ct0);
    __m512 t1 = _mm512_mul_ps(_mm512_loadu_ps(g + i + 16), ct1);
    __m512 u0 = _mm512_mul_ps(t0, ct0), u1 = _mm512_mul_ps(t1, ct1);
    A0 = _mm512_add_ps(A0, t0);
    A1 = _mm512_add_ps(A1, t1);
    B0 = _mm512_add_ps(B0, u0);
    B1 = _mm512_add_ps(B1, u1);
    D0 = _mm512_fmadd_ps(u0, ct0, D0);
    D1 = _mm512_fmadd_ps(u1, ct1, D1);
  }
  a0s = _mm512_reduce_add_ps(_mm512_add_ps(A0, A1));
  a1s = _mm512_reduce_add_ps(_mm512_add_ps(B0, B1));
  a2s = _mm512_reduce_add_ps(_mm512_add_ps(D0, D1));
#endif
  for (; i < n; i++) {
    float num = sa * s[i] + ca * c[i];
    float den = sa * c[i] - ca * s[i];
    float ct = num / den, t = g[i] * ct, u = t * ct;
    a0s += t;
    a1s += u;
    a2s += u * ct;
  }
  *S0 = a0s;
  *S1 = a1s;
  *S2 = a2s;
}

inline double cot_half(double d) { return 1.0 / std::tan(0.5 * d); }

// cot((x-th)/2) from precomputed half-angle cos/sin of both x and th; 2pi shifts of th
// are invisible (cot has period pi).  Near a pole the cancellation in the denominator
// loses digits, so |den| small falls back to the difference form, reduced mod 2pi.
inline double cot_fast(double ca, double sa, double ch, double sh,
                       double x, double th_unwrapped) {
  double num = sa * sh + ca * ch;
  double den = sa * ch - ca * sh;
  if (std::fabs(den) > 1e-2) return num / den;
  double d = x - th_unwrapped;
  d -= two_pi * std::nearbyint(d * (1.0 / two_pi));
  double t = 0.5 * d, t2 = t * t;
  double sn = t * (1.0 - t2 * (1.0 / 6.0) * (1.0 - t2 * (1.0 / 20.0) * (1.0 - t2 * (1.0 / 42.0))));
  double cs = 1.0 - t2 * 0.5 * (1.0 - t2 * (1.0 / 12.0) * (1.0 - t2 * (1.0 / 30.0)));
  return cs / sn;
}

inline constexpr int NS_MAX = 32;

// ---- workspace (scratch reused across advances; no observable state) ----
// The padded arrays replicate the pole data circularly NS_MAX deep on both
// sides (unwrapped angles, half-angle cos/sin, weights, weight prefix sums),
// so a near set is a pointer view instead of a per-interval copy.  The 2pi
// shifts leave cos(th/2)/sin(th/2) usable as-is: every consumer evaluates
// cot((x - th)/2), which has period 2pi in th, through forms blind to them.
struct Workspace {
  int n = 0;
  std::vector<double> th, g, c, s;
  std::vector<float> cf, sf, gf;
  std::vector<double> thp, cp, sp, gp, gpre;  // padded, index offset NS_MAX
  double rho = 0, psi = 0, w = 1;
  double ka = 0, kb = 0;  // phi(x) = ka cos(x/2) + kb sin(x/2) + w sin(x/2) sum
  void load(const std::vector<double>& angles, double rho_, double psi_,
            const std::vector<double>& gamma) {
    n = static_cast<int>(angles.size());
    th.assign(angles.begin(), angles.end());
    g.assign(gamma.begin(), gamma.end());
    c.resize(n);
    s.resize(n);
    cf.resize(n);
    sf.resize(n);
    gf.resize(n);
    for (int i = 0; i < n; i++) {
      c[i] = std::cos(0.5 * th[i]);
      s[i] = std::sin(0.5 * th[i]);
      cf[i] = static_cast<float>(c[i]);
      sf[i] = static_cast<float>(s[i]);
      gf[i] = static_cast<float>(g[i]);
    }
    const int P = NS_MAX, np = n + 2 * P;
    thp.resize(np);
    cp.resize(np);
    sp.resize(np);
    gp.resize(np);
    gpre.resize(np + 1);
    gpre[0] = 0;
    for (int j = -P; j < n + P; j++) {
      int jm = j;
      double shift = 0;
      while (jm < 0) {
        jm += n;
        shift -= two_pi;
      }
      while (jm >= n) {
        jm -= n;
        shift += two_pi;
      }
      thp[P + j] = th[jm] + shift;
      cp[P + j] = c[jm];
      sp[P + j] = s[jm];
      gp[P + j] = g[jm];
      gpre[P + j + 1] = gpre[P + j] + g[jm];
    }
    rho = rho_;
    psi = psi_;
    w = 1.0 - rho * rho;
    // ka = 1 + rho^2 - 2 rho cos(psi), in a form that cannot cancel:
    // phi(0) = ka > 0 and phi(2pi) = -ka < 0 anchor the two hard interval ends
    const double sh = std::sin(0.5 * psi);
    ka = (1.0 - rho) * (1.0 - rho) + 4.0 * rho * sh * sh;
    kb = -2.0 * rho * std::sin(psi);
  }
};

// ---- exact pole set for one interval: a contiguous run viewed in the pad ----
struct NearSet {
  const double* ang = nullptr;  // unwrapped pole angles
  const double* ch = nullptr;   // cos(th/2), sin(th/2) (period pi: wraps free)
  const double* sh = nullptr;
  const double* gam = nullptr;
  int cnt = 0;
  int base_mod = 0;            // run_lo reduced to [0, n): kernels zero real weights
  double gsum = 0;             // sum of exact weights
  double D = 0;                // distance from interval midpoint to nearest far pole
  int run_lo = 0, run_hi = 0;  // pole range held exactly, in unwrapped index space
};

// poles around interval i (between pole i-1 and pole i), grown outward until the
// remaining far field is at least `radius` away from the midpoint (or the cap hits)
inline NearSet near_set(const Workspace& ws, int i, double x0, double radius) {
  const int n = ws.n, P = NS_MAX;
  const double* tp = ws.thp.data() + P;
  int lo = i - 1;
  int hi = (n > 1) ? i : i - 1;  // n=1: both flanks are the same pole
  int cnt = hi - lo + 1;
  double dl = x0 - tp[lo - 1], dr = tp[hi + 1] - x0;
  while (cnt < NS_MAX && cnt < n) {
    if (dl > radius && dr > radius) break;
    if (dl <= dr) {
      lo--;
      dl = x0 - tp[lo - 1];
    } else {
      hi++;
      dr = tp[hi + 1] - x0;
    }
    cnt++;
  }
  NearSet ns;
  ns.ang = tp + lo;
  ns.ch = ws.cp.data() + P + lo;
  ns.sh = ws.sp.data() + P + lo;
  ns.gam = ws.gp.data() + P + lo;
  ns.cnt = cnt;
  ns.base_mod = ((lo % n) + n) % n;
  ns.gsum = ws.gpre[P + hi + 1] - ws.gpre[P + lo];
  ns.run_lo = lo;
  ns.run_hi = hi;
  ns.D = (cnt >= n) ? 1e300 : std::min(dl, dr);
  return ns;
}

// zero the run's weights in the live array the kernels read, remembering them
template <class T>
inline void zero_run(T* arr, int n, const NearSet& ns, T* sav) {
  int j = ns.base_mod;
  for (int k = 0; k < ns.cnt; k++) {
    sav[k] = arr[j];
    arr[j] = T(0);
    if (++j == n) j = 0;
  }
}

template <class T>
inline void restore_run(T* arr, int n, const NearSet& ns, const T* sav) {
  int j = ns.base_mod;
  for (int k = 0; k < ns.cnt; k++) {
    arr[j] = sav[k];
    if (++j == n) j = 0;
  }
}

// ---- cheap model ----
struct FarTaylor {
  double x0, f0, f1, f2;
};

struct CheapCtx {
  const Workspace* ws;
  const NearSet* ns;
  FarTaylor ft;
  double G;             // far weight total
  double xb, cab, sab;  // trig base: cos/sin of xb/2, rotated to the eval point
};

// sin/cos of a small half-angle offset; |h| <= 0.06 keeps both under 1 ulp.
// Below |h| = 1e-3 (the common case once intervals are narrow) the truncated
// series is already exact to ~1e-21, so skip the deep Horner chain.
inline void small_sincos(double h, double* sn, double* csm1) {
  double h2 = h * h;
  if (h2 < 1e-6) {
    *sn = h * (1.0 - h2 * (1.0 / 6.0) * (1.0 - h2 * (1.0 / 20.0)));
    *csm1 = -h2 * 0.5 * (1.0 - h2 * (1.0 / 12.0));
    return;
  }
  *sn = h * (1.0 - h2 * (1.0 / 6.0) * (1.0 - h2 * (1.0 / 20.0)
           * (1.0 - h2 * (1.0 / 42.0) * (1.0 - h2 * (1.0 / 72.0)))));
  *csm1 = -h2 * 0.5 * (1.0 - h2 * (1.0 / 12.0) * (1.0 - h2 * (1.0 / 30.0)
                     * (1.0 - h2 * (1.0 / 56.0))));
}

inline double cheap_phi(const CheapCtx& cc, double x, double* dphi) {
  const Workspace& ws = *cc.ws;
  double sn, csm1;
  small_sincos(0.5 * (x - cc.xb), &sn, &csm1);
  double ca = cc.cab + (cc.cab * csm1 - cc.sab * sn);
  double sa = cc.sab + (cc.sab * csm1 + cc.cab * sn);
  double d = x - cc.ft.x0;
  double T = cc.ft.f0 + d * (cc.ft.f1 + 0.5 * d * cc.ft.f2);
  double dT = cc.ft.f1 + d * cc.ft.f2;
  const NearSet& ns = *cc.ns;
  double S0n = 0, S1n = 0;
  int k = 0;
#ifdef __AVX512F__
  // model precision only needs cot to ~1e-10 relative, so the fused form holds
  // down to |den| ~ 3e-6; rarer lanes go through the series fallback below
  __m512d vca = _mm512_set1_pd(ca), vsa = _mm512_set1_pd(sa);
  __m512d vS0 = _mm512_setzero_pd(), vS1 = _mm512_setzero_pd();
  const __m512d two = _mm512_set1_pd(2.0);
  const __m512d dmin = _mm512_set1_pd(3e-6);
  for (; k < ns.cnt; k += 8) {
    __mmask8 m = (__mmask8)((ns.cnt - k >= 8) ? 0xFF : ((1u << (ns.cnt - k)) - 1));
    __m512d ch = _mm512_maskz_loadu_pd(m, ns.ch + k);
    __m512d sh = _mm512_maskz_loadu_pd(m, ns.sh + k);
    __m512d gm = _mm512_maskz_loadu_pd(m, ns.gam + k);
    __m512d num = _mm512_fmadd_pd(vsa, sh, _mm512_mul_pd(vca, ch));
    __m512d den = _mm512_fmsub_pd(vsa, ch, _mm512_mul_pd(vca, sh));
    __mmask8 good = _mm512_mask_cmp_pd_mask(m, _mm512_abs_pd(den), dmin, _CMP_GE_OQ);
    __m512d r = _mm512_rcp14_pd(den);
    r = _mm512_mul_pd(r, _mm512_fnmadd_pd(den, r, two));
    r = _mm512_mul_pd(r, _mm512_fnmadd_pd(den, r, two));
    __m512d ct = _mm512_mul_pd(num, r);
    __m512d t = _mm512_maskz_mul_pd(good, gm, ct);
    __m512d u = _mm512_maskz_mul_pd(good, t, ct);
    vS0 = _mm512_add_pd(vS0, t);
    vS1 = _mm512_add_pd(vS1, u);
    unsigned bad = (unsigned)(m & ~good);
    while (bad) {
      int b = __builtin_ctz(bad);
      bad &= bad - 1;
      int kk = k + b;
      double dd = x - ns.ang[kk];
      dd -= two_pi * std::nearbyint(dd * (1.0 / two_pi));
      double psn, pcsm1;
      small_sincos(0.5 * dd, &psn, &pcsm1);
      double ct2 = (1.0 + pcsm1) / psn;
      double t2 = ns.gam[kk] * ct2;
      S0n += t2;
      S1n += t2 * ct2;
    }
  }
  // one fused shuffle tree hands back both sums (cheaper than two reductions)
  __m512d z = _mm512_add_pd(_mm512_unpacklo_pd(vS0, vS1), _mm512_unpackhi_pd(vS0, vS1));
  __m256d q = _mm256_add_pd(_mm512_castpd512_pd256(z), _mm512_extractf64x4_pd(z, 1));
  __m128d r2 = _mm_add_pd(_mm256_castpd256_pd128(q), _mm256_extractf128_pd(q, 1));
  S0n += _mm_cvtsd_f64(r2);
  S1n += _mm_cvtsd_f64(_mm_unpackhi_pd(r2, r2));
#else
  for (; k < ns.cnt; k++) {
    double ct = cot_fast(ca, sa, ns.ch[k], ns.sh[k], x, ns.ang[k]);
    double t = ns.gam[k] * ct;
    S0n += t;
    S1n += t * ct;
  }
#endif
  double sum = T + S0n;
  double dsum = dT - 0.5 * (ns.gsum + S1n);
  double phi = ws.ka * ca + ws.kb * sa + ws.w * sa * sum;
  if (dphi)
    *dphi = 0.5 * (ws.kb * ca - ws.ka * sa) + ws.w * (0.5 * ca * sum + sa * dsum);
  return phi;
}

// safeguarded Newton on the cheap model; signs + at lo, - at hi hold structurally
inline double cheap_solve(const CheapCtx& cc, double lo, double hi, double x0, double rtol) {
  double a = lo, b = hi;
  double span = hi - lo;
  double tol = std::max(rtol * span, 4e-16 * (1.0 + std::fabs(lo)));
  double x = std::min(std::max(x0, a), b);  // closed clamp: starting on an edge is fine
  for (int it = 0; it < 24; it++) {
    double fp;
    double f = cheap_phi(cc, x, &fp);
    if (f == 0) return x;
    if (f > 0) a = x;
    else b = x;
    double xn;
    if (fp < 0) {
      xn = x - f / fp;
      if (std::fabs(xn - x) <= tol) return xn;  // converged; may sit on the bracket edge
      if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
    } else xn = 0.5 * (a + b);
    if (std::fabs(xn - x) <= tol || b - a <= tol) return xn;
    x = xn;
  }
  return x;
}

// ---- reference bracketed solver (exact kernel every eval; certified) ----

inline double ref_phi(Workspace& ws, double eta, const NearSet& ns) {
  double ca = std::cos(0.5 * eta), sa = std::sin(0.5 * eta);
  double saved[NS_MAX];
  zero_run(ws.g.data(), ws.n, ns, saved);
  double S0, S1, S2;
  cot_sums_d(ws.c.data(), ws.s.data(), ws.g.data(), ws.n, ca, sa, &S0, &S1, &S2);
  restore_run(ws.g.data(), ws.n, ns, saved);
  double sum = S0;
  for (int k = 0; k < ns.cnt; k++) sum += ns.gam[k] * cot_half(eta - ns.ang[k]);
  return ws.ka * ca + ws.kb * sa + ws.w * sa * sum;
}

struct RootOut {
  double root;
  int collapse;  // -1: collapsed to the left pole, +1: right pole, 0: interior root
};

// Bisection with model acceleration via the two flank poles only (robust path).
// Certifies the bracket signs up front: a wrong sign at an offset endpoint walks
// the offset toward the pole geometrically; exhaustion at 4 ulp collapses the
// root onto the pole.  Inconsistent signs at both ends raise BracketError.
inline RootOut solve_ref(Workspace& ws, const NearSet& ns, double al, double ar,
                         double gl, double gr, double lo, double hi,
                         bool hard_lo, bool hard_hi, int interval) {
  double phi_lo = ref_phi(ws, lo, ns);
  double phi_hi = ref_phi(ws, hi, ns);
  if (phi_lo == 0.0) return {lo, 0};
  if (phi_hi == 0.0) return {hi, 0};
  const bool bad_lo = !(phi_lo > 0), bad_hi = !(phi_hi < 0);
  if (bad_lo && bad_hi) throw BracketError(ws.n, interval, lo, hi, phi_lo, phi_hi);
  if (bad_lo) {
    if (hard_lo) throw BracketError(ws.n, interval, lo, hi, phi_lo, phi_hi);
    // the root hides in (al, lo): shrink the offset toward the pole
    const double four_ulp = 4.0 * 2.220446049250313e-16 * std::max(1.0, std::fabs(al));
    double off = lo - al;
    hi = lo;
    bool found = false;
    while ((off *= 0.125) > four_ulp) {
      double cand = al + off;
      if (!(cand > al && cand < hi)) break;
      double p = ref_phi(ws, cand, ns);
      if (p > 0) {
        lo = cand;
        found = true;
        break;
      }
      hi = cand;
    }
    if (!found) return {al, -1};
  } else if (bad_hi) {
    if (hard_hi) throw BracketError(ws.n, interval, lo, hi, phi_lo, phi_hi);
    const double four_ulp = 4.0 * 2.220446049250313e-16 * std::max(1.0, std::fabs(ar));
    double off = ar - hi;
    lo = hi;
    bool found = false;
    while ((off *= 0.125) > four_ulp) {
      double cand = ar - off;
      if (!(cand > lo && cand < ar)) break;
      double p = ref_phi(ws, cand, ns);
      if (p < 0) {
        hi = cand;
        found = true;
        break;
      }
      lo = cand;
    }
    if (!found) return {ar, +1};
  }

  const double STEP_TOL = std::max(1e-13 * (hi - lo), 8e-16);
  double blo = lo, bhi = hi;
  double x = 0.5 * (blo + bhi);
  int since_shrink = 0;
  double width_mark = bhi - blo;
  double root = 0.5 * (blo + bhi);
  for (int it = 0; it < 220; it++) {
    double sa = std::sin(0.5 * x);
    double phi = ref_phi(ws, x, ns);
    if (phi > 0) blo = x;
    else bhi = x;
    root = 0.5 * (blo + bhi);
    if (bhi - blo <= STEP_TOL) break;
    double width = bhi - blo;
    if (width <= 0.5 * width_mark) {
      width_mark = width;
      since_shrink = 0;
    } else since_shrink++;
    // 2-pole model frozen at x
    double W = ws.w * sa;
    double cl = cot_half(x - al), cr = cot_half(x - ar);
    double F0 = phi - W * (gl * cl + gr * cr);
    // solve F0 + W(gl cot((y-al)/2) + gr cot((y-ar)/2)) = 0 in (blo,bhi)
    double mlo = F0 + W * (gl * cot_half(blo - al) + gr * cot_half(blo - ar));
    double mhi = F0 + W * (gl * cot_half(bhi - al) + gr * cot_half(bhi - ar));
    bool ok = (mlo > 0 && mhi < 0);
    double xm = 0.5 * (blo + bhi);
    if (ok) {
      double a2 = blo, b2 = bhi, y = x;
      if (!(y > a2 && y < b2)) y = 0.5 * (a2 + b2);
      for (int k = 0; k < 60; k++) {
        double cly = cot_half(y - al), cry = cot_half(y - ar);
        double f = F0 + W * (gl * cly + gr * cry);
        double fp = -0.5 * W * (gl * (1 + cly * cly) + gr * (1 + cry * cry));
        if (f > 0) a2 = y;
        else b2 = y;
        double yn = (fp < 0) ? y - f / fp : 0.5 * (a2 + b2);
        if (!(yn > a2 && yn < b2)) yn = 0.5 * (a2 + b2);
        if (std::fabs(yn - y) <= 1e-16 * (1 + std::fabs(y))) {
          y = yn;
          break;
        }
        y = yn;
      }
      xm = y;
    }
    if (!ok || since_shrink >= 3 || !(xm > blo && xm < bhi)) {
      x = 0.5 * (blo + bhi);
      since_shrink = 0;
      width_mark = width;
    } else x = xm;
  }
  return {root, 0};
}

// ---- fast path: probe (or carried Taylor) + double certify ----
struct FastOut {
  double root;
  bool ok;
};

// Taylor data surviving from one interval's certify to seed the next interval's guess.
// The field is anchored at the last exact kernel eval; ns lists the poles it excludes.
struct Carry {
  bool valid = false;
  double x0ref = 0;   // midpoint where ns.D was measured
  double D = 0;
  double G = 0;
  double frac = 0.5;  // previous root's relative interval position, as the next start
  FarTaylor ft;
  NearSet ns;
};

inline FastOut solve_fast(Workspace& ws, int i, const NearSet& ns,
                          double lo, double hi, Carry& carry) {
  int n = ws.n;
  double span = hi - lo;
  double x0 = 0.5 * (lo + hi);
  if (!(ns.D > 2.0 * span) || ns.D < 1e-6) return {0, false};  // Taylor radius too small
  double G = 1.0 - ns.gsum;
  if (G < 0) G = 0;

  CheapCtx cc;
  cc.ws = &ws;
  cc.xb = x0;
  cc.cab = std::cos(0.5 * x0);
  cc.sab = std::sin(0.5 * x0);
  double x1;
  // carried field is usable if it still holds this interval's flank poles exactly
  // and the whole interval sits well inside its Taylor radius
  if (carry.valid && carry.ns.run_lo <= i - 1 && carry.ns.run_hi >= i &&
      (hi - carry.ft.x0) + std::fabs(carry.ft.x0 - carry.x0ref) <= 0.55 * carry.D) {
    cc.ns = &carry.ns;
    cc.G = carry.G;
    cc.ft = carry.ft;
    x1 = cheap_solve(cc, lo, hi, lo + carry.frac * span, 3e-5);
  } else {
    // probe at x0: float kernel unless the far field starts too close for float angles
    double S0, S1, S2;
    if (ns.D >= 1e-4) {
      float saved[NS_MAX];
      zero_run(ws.gf.data(), n, ns, saved);
      cot_sums_f(ws.cf.data(), ws.sf.data(), ws.gf.data(), n,
                 (float)cc.cab, (float)cc.sab, &S0, &S1, &S2);
      restore_run(ws.gf.data(), n, ns, saved);
    } else {
      double saved[NS_MAX];
      zero_run(ws.g.data(), n, ns, saved);
      cot_sums_d(ws.c.data(), ws.s.data(), ws.g.data(), n,
                 cc.cab, cc.sab, &S0, &S1, &S2);
      restore_run(ws.g.data(), n, ns, saved);
    }
    cc.ns = &ns;
    cc.G = G;
    cc.ft = {x0, S0, -0.5 * (G + S1), 0.5 * (S0 + S2)};
    x1 = cheap_solve(cc, lo, hi, carry.valid ? lo + carry.frac * span : x0, 3e-5);
  }

  // certify passes: exact triple at x1, Newton, re-anchored quadratic polish
  cc.ns = &ns;
  cc.G = G;
  double blo = lo, bhi = hi;
  for (int rep = 0; rep < 3; rep++) {
    double sn_, csm1_;
    small_sincos(0.5 * (x1 - cc.xb), &sn_, &csm1_);
    double ca = cc.cab + (cc.cab * csm1_ - cc.sab * sn_);
    double sa = cc.sab + (cc.sab * csm1_ + cc.cab * sn_);
    double dsav[NS_MAX];
    zero_run(ws.g.data(), n, ns, dsav);
    double T0, T1, T2;
    cot_sums_d(ws.c.data(), ws.s.data(), ws.g.data(), n, ca, sa, &T0, &T1, &T2);
    restore_run(ws.g.data(), n, ns, dsav);
    double sum = T0, dsum = -0.5 * (G + T1);
    for (int k = 0; k < ns.cnt; k++) {
      double ct = cot_fast(ca, sa, ns.ch[k], ns.sh[k], x1, ns.ang[k]);
      sum += ns.gam[k] * ct;
      dsum -= 0.5 * ns.gam[k] * (1.0 + ct * ct);
    }
    double phi = ws.ka * ca + ws.kb * sa + ws.w * sa * sum;
    double dphi = 0.5 * (ws.kb * ca - ws.ka * sa) + ws.w * (0.5 * ca * sum + sa * dsum);
    if (phi > 0) blo = std::max(blo, x1);
    else bhi = std::min(bhi, x1);
    if (!(dphi < 0)) return {0, false};
    double xn = x1 - phi / dphi;
    if (!(xn > lo && xn < hi)) return {0, false};
    // quadratic model anchored at exact far data
    cc.ft = {x1, T0, -0.5 * (G + T1), 0.5 * (T0 + T2)};
    double x3 = cheap_solve(cc, std::max(blo, std::min(xn, x1) - 0.25 * span),
                            std::min(bhi, std::max(xn, x1) + 0.25 * span), xn, 1e-16);
    double step = std::fabs(x3 - x1);
    if (step <= 2e-3 * span) {
      carry.valid = true;
      carry.x0ref = x0;
      carry.D = ns.D;
      carry.G = G;
      carry.ft = cc.ft;
      carry.ns = ns;  // pointer view; the pad is stable for the whole advance
      carry.frac = (x3 - lo) / span;
      return {x3, true};
    }
    x1 = x3;
  }
  return {0, false};
}

// ---- engine driver over one full set of intervals (all weights active) ----
struct EngineOut {
  std::vector<double> roots;         // m+1 roots, ascending
  std::vector<std::int8_t> collapse; // per root: -1/+1 pole collapse, 0 interior
};

inline EngineOut advance_active(Workspace& ws, const std::vector<double>& angles,
                                double rho, double psi, const std::vector<double>& gamma,
                                bool allow_fast) {
  const int n = static_cast<int>(angles.size());
  ws.load(angles, rho, psi, gamma);
  EngineOut out;
  out.roots.resize(n + 1);
  out.collapse.assign(n + 1, 0);
  Carry carry;
  for (int i = 0; i <= n; i++) {
    double al = (i == 0) ? angles[n - 1] - two_pi : angles[i - 1];
    double ar = (i == n) ? angles[0] + two_pi : angles[i];
    double gl = ws.g[(i == 0) ? n - 1 : i - 1];
    double gr = ws.g[(i == n) ? 0 : i];
    bool hard_lo = (i == 0), hard_hi = (i == n);
    double span = std::min(ar, two_pi) - std::max(al, 0.0);
    double lo = hard_lo ? 0.0 : al + std::max(1e-15, 1e-13 * span);
    double hi = hard_hi ? two_pi : ar - std::max(1e-15, 1e-13 * span);
    NearSet ns = near_set(ws, i, 0.5 * (lo + hi), 4.0 * span);
    bool done = false;
    if (allow_fast && n >= 64) {
      FastOut f = solve_fast(ws, i, ns, lo, hi, carry);
      if (f.ok) {
        out.roots[i] = f.root;
        done = true;
      }
    }
    if (!done) {
      RootOut r = solve_ref(ws, ns, al, ar, gl, gr, lo, hi, hard_lo, hard_hi, i);
      out.roots[i] = r.root;
      out.collapse[i] = static_cast<std::int8_t>(r.collapse);
    }
  }
  return out;
}

inline Workspace& tls_workspace() {
  thread_local Workspace ws;
  return ws;
}

inline void validate(const SpectralState& s, const StepParams& p) {
  const int n = s.n;
  if (n < 1 || static_cast<int>(s.angles.size()) != n)
    throw std::invalid_argument("advance: state dimension mismatch");
  if (static_cast<int>(p.gamma.size()) != n)
    throw std::invalid_argument("advance: gamma size must equal n");
  if (!(p.rho >= 0.0) || !(p.rho < 1.0))
    throw std::invalid_argument("advance: rho must lie in [0, 1)");
  if (!std::isfinite(p.psi)) throw std::invalid_argument("advance: psi must be finite");
  double prev = 0.0;
  for (int k = 0; k < n; k++) {
    const double a = s.angles[k];
    if (!(a > prev)) throw std::invalid_argument("advance: angles must be strictly increasing");
    prev = a;
  }
  if (!(prev < two_pi)) throw std::invalid_argument("advance: angles must lie in (0, 2pi)");
  // compensated total so the check does not drown in summation error at large n
  double sum = 0, comp = 0;
  for (int k = 0; k < n; k++) {
    const double g = p.gamma[k];
    if (!(g >= 0)) throw std::invalid_argument("advance: weights must be nonnegative");
    double y = g - comp, t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("advance: weights must sum to 1 (within 1e-12)");
}

}  // namespace secular_detail

// The secular function value, computed term-exactly: principal range reduction
// per pole and Kahan compensation over the cotangent sum.  eta may be any real;
// evaluation closer than 1e-15 (circularly) to a pole is an error.
inline double phi_eval_with_scale(const SpectralState& s, const StepParams& p, double eta,
                                  double* scale_out) {
  secular_detail::validate(s, p);
  const double rho = p.rho;
  const double ca = std::cos(0.5 * eta), sa = std::sin(0.5 * eta);
  double sum = 0, comp = 0, abs_sum = 0;
  for (int k = 0; k < s.n; k++) {
    double d = eta - s.angles[k];
    d -= two_pi * std::nearbyint(d * (1.0 / two_pi));
    if (std::fabs(d) <= 1e-15)
      throw std::invalid_argument("phi_eval: evaluation point is on a pole");
    const double term = p.gamma[k] / std::tan(0.5 * d);
    abs_sum += std::fabs(term);
    double y = term - comp, t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double w = 1.0 - rho * rho;
  const double head = (1.0 + rho * rho) * ca - 2.0 * rho * std::cos(0.5 * eta - p.psi);
  if (scale_out)
    *scale_out = (1.0 + rho * rho) * std::fabs(ca) + 2.0 * rho + w * std::fabs(sa) * abs_sum;
  return head + w * sa * sum;
}

inline double phi_eval(const SpectralState& s, const StepParams& p, double eta) {
  return phi_eval_with_scale(s, p, eta, nullptr);
}

namespace secular_detail {

inline SpectralState advance_impl(const SpectralState& s, const StepParams& p, bool allow_fast) {
  validate(s, p);
  const int n = s.n;

  // split active poles from frozen ones (weight below the floor: the angle
  // persists unchanged and no root is solved against it)
  std::vector<double> ang_a, gam_a, persisted;
  ang_a.reserve(n);
  gam_a.reserve(n);
  std::vector<std::uint8_t> frozen(n, 0);
  for (int k = 0; k < n; k++) {
    if (p.gamma[k] < WEIGHT_FLOOR) {
      frozen[k] = 1;
      persisted.push_back(s.angles[k]);
    } else {
      ang_a.push_back(s.angles[k]);
      gam_a.push_back(p.gamma[k]);
    }
  }
  const int m = static_cast<int>(ang_a.size());
  if (m == 0) throw std::invalid_argument("advance: all weights below the floor");

  EngineOut eng = advance_active(tls_workspace(), ang_a, p.rho, p.psi, gam_a, allow_fast);

  // merge roots with persisted angles; remember which outputs may legally
  // touch an input angle (persisted, or collapse onto an active pole)
  SpectralState out;
  out.n = n + 1;
  out.angles.resize(n + 1);
  std::vector<std::uint8_t> may_touch(n + 1, 0);
  {
    size_t ir = 0, ip = 0, io = 0;
    while (ir < eng.roots.size() || ip < persisted.size()) {
      bool take_root = ip >= persisted.size() ||
                       (ir < eng.roots.size() && eng.roots[ir] <= persisted[ip]);
      if (take_root) {
        may_touch[io] = eng.collapse[ir] != 0;
        out.angles[io++] = eng.roots[ir++];
      } else {
        may_touch[io] = 1;
        out.angles[io++] = persisted[ip++];
      }
    }
  }

  // unconditional interlacing audit: out[0] < in[0] < out[1] < ... < out[n],
  // ends inside (0, 2pi), equality allowed only where recorded above
  bool ok = out.angles[0] > 0.0 && out.angles[n] < two_pi;
  for (int i = 0; ok && i < n; i++) {
    const double a = out.angles[i], b = s.angles[i], c = out.angles[i + 1];
    const bool left = (a < b) || (a == b && may_touch[i]);
    const bool right = (b < c) || (b == c && may_touch[i + 1]);
    ok = left && right;
  }
  for (int i = 0; ok && i < n; i++)
    ok = out.angles[i] < out.angles[i + 1] ||
         (out.angles[i] == out.angles[i + 1] && may_touch[i] && may_touch[i + 1]);
  if (!ok) throw std::logic_error("advance: interlacing audit failed");
  return out;
}

}  // namespace secular_detail

// Advance the eigenangles one dimension: the n+1 roots of the secular
// function, strictly interlacing the inputs.  Pure; scratch is thread-local.
inline SpectralState advance(const SpectralState& s, const StepParams& p) {
  return secular_detail::advance_impl(s, p, true);
}

// Same contract, forcing the bracketed reference path for every interval.
// Slower; used by the validation suite to cross-check the fast engine.
inline SpectralState advance_reference(const SpectralState& s, const StepParams& p) {
  return secular_detail::advance_impl(s, p, false);
}

}  // namespace viso

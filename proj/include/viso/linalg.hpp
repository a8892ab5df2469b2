#pragma once
// Dense complex linear algebra over double: vectors, row-major square
// matrices, rank-one reflections, LU determinant/rank/solve, characteristic
// polynomial values, and the Cayley transform pair.
//
// Convention fixed throughout the library: inner products conjugate the FIRST
// argument (inner(a, b) = sum conj(a_i) b_i).  Both conventions exist in the
// wild; every formula here assumes this one.
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace viso {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CMatrix {
  int n = 0;
  std::vector<cplx> a;  // row-major, n*n entries

  CMatrix() = default;
  explicit CMatrix(int dim) : n(dim), a(static_cast<size_t>(dim) * dim) {}

  cplx& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  const cplx& operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

inline CMatrix identity(int n) {
  CMatrix m(n);
  for (int i = 0; i < n; i++) m(i, i) = 1.0;
  return m;
}

inline CVector basis_vector(int n, int k) {
  CVector e(n, cplx(0, 0));
  e[k] = 1.0;
  return e;
}

inline cplx inner(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: dimension mismatch");
  cplx s = 0;
  for (size_t i = 0; i < a.size(); i++) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(const CVector& a) {
  double s = 0;
  for (const auto& e : a) s += std::norm(e);
  return std::sqrt(s);
}

inline bool is_unit(const CVector& x, double tol = 1e-12) {
  return std::abs(norm2(x) - 1.0) <= tol;
}

inline CVector matvec(const CMatrix& m, const CVector& x) {
  if (static_cast<int>(x.size()) != m.n) throw std::invalid_argument("apply: dimension mismatch");
  CVector y(m.n, cplx(0, 0));
  for (int i = 0; i < m.n; i++) {
    cplx s = 0;
    for (int j = 0; j < m.n; j++) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline CMatrix mul(const CMatrix& a, const CMatrix& b) {
  if (a.n != b.n) throw std::invalid_argument("mul: dimension mismatch");
  const int n = a.n;
  CMatrix c(n);
  for (int i = 0; i < n; i++)
    for (int k = 0; k < n; k++) {
      const cplx aik = a(i, k);
      if (aik == cplx(0, 0)) continue;
      for (int j = 0; j < n; j++) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline CMatrix dagger(const CMatrix& m) {
  CMatrix d(m.n);
  for (int i = 0; i < m.n; i++)
    for (int j = 0; j < m.n; j++) d(i, j) = std::conj(m(j, i));
  return d;
}

inline CMatrix sub(const CMatrix& a, const CMatrix& b) {
  if (a.n != b.n) throw std::invalid_argument("sub: dimension mismatch");
  CMatrix c(a.n);
  for (size_t i = 0; i < a.a.size(); i++) c.a[i] = a.a[i] - b.a[i];
  return c;
}

// block diagonal a (+) Id_k
inline CMatrix direct_sum_identity(const CMatrix& a, int k) {
  CMatrix c(a.n + k);
  for (int i = 0; i < a.n; i++)
    for (int j = 0; j < a.n; j++) c(i, j) = a(i, j);
  for (int i = a.n; i < c.n; i++) c(i, i) = 1.0;
  return c;
}

inline cplx trace(const CMatrix& m) {
  cplx t = 0;
  for (int i = 0; i < m.n; i++) t += m(i, i);
  return t;
}

inline double norm_max(const CMatrix& m) {
  double v = 0;
  for (const auto& e : m.a) v = std::max(v, std::abs(e));
  return v;
}

inline double norm_max_diff(const CMatrix& a, const CMatrix& b) {
  if (a.n != b.n) throw std::invalid_argument("norm_max_diff: dimension mismatch");
  double v = 0;
  for (size_t i = 0; i < a.a.size(); i++) v = std::max(v, std::abs(a.a[i] - b.a[i]));
  return v;
}

// max-norm of u'u - Id; a tagged-unitary matrix keeps this below n * 1e-12
inline double unitarity_error(const CMatrix& u) {
  return norm_max_diff(mul(dagger(u), u), identity(u.n));
}

// ---- reflections ----
// The rank-one reflection with r(e_n) = x: r = Id + (1/(conj(nu) - 1)) v v',
// v = x - e_n, nu = inner(e_n, x).  Within 1e-12 of x = e_n the formula
// degenerates (denominator -> 0) and the map is the identity.

inline bool reflection_is_identity(const CVector& x) {
  const int n = static_cast<int>(x.size());
  double d2 = 0;
  for (int i = 0; i + 1 < n; i++) d2 += std::norm(x[i]);
  d2 += std::norm(x[n - 1] - 1.0);
  return std::sqrt(d2) <= 1e-12;
}

inline CMatrix make_reflection(const CVector& x) {
  if (!is_unit(x)) throw std::invalid_argument("make_reflection: input is not a unit vector");
  const int n = static_cast<int>(x.size());
  CMatrix r = identity(n);
  if (reflection_is_identity(x)) return r;
  const cplx nu = x[n - 1];
  const cplx c = 1.0 / (std::conj(nu) - 1.0);
  CVector v = x;
  v[n - 1] -= 1.0;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) r(i, j) += c * v[i] * std::conj(v[j]);
  return r;
}

// m <- r m without materializing r, where r is the reflection sending e_n to x.
// Costs O(n^2); exact (no rounding) when x has entries in {0, 1} so permutation
// chains stay integer-valued.
inline void apply_reflection_left(const CVector& x, CMatrix& m) {
  const int n = static_cast<int>(x.size());
  if (n != m.n) throw std::invalid_argument("apply_reflection_left: dimension mismatch");
  if (!is_unit(x)) throw std::invalid_argument("apply_reflection_left: input is not a unit vector");
  if (reflection_is_identity(x)) return;
  const cplx nu = x[n - 1];
  const cplx c = 1.0 / (std::conj(nu) - 1.0);
  CVector v = x;
  v[n - 1] -= 1.0;
  CVector w(n, cplx(0, 0));  // w = v' m
  for (int i = 0; i < n; i++) {
    const cplx cv = std::conj(v[i]);
    if (cv == cplx(0, 0)) continue;
    for (int j = 0; j < n; j++) w[j] += cv * m(i, j);
  }
  for (int i = 0; i < n; i++) {
    const cplx cvi = c * v[i];
    if (cvi == cplx(0, 0)) continue;
    for (int j = 0; j < n; j++) m(i, j) += cvi * w[j];
  }
}

// ---- LU with partial pivoting ----

struct LUFactors {
  int n = 0;
  std::vector<cplx> lu;      // packed L\U
  std::vector<int> piv;      // row swaps applied at each step
  int parity = 1;            // sign of the row permutation
  double min_pivot_abs = 0;  // smallest |pivot| encountered
};

inline LUFactors lu_factor(const CMatrix& m) {
  const int n = m.n;
  LUFactors f;
  f.n = n;
  f.lu = m.a;
  f.piv.resize(n);
  f.min_pivot_abs = (n > 0) ? 1e300 : 0.0;
  auto at = [&](int i, int j) -> cplx& { return f.lu[static_cast<size_t>(i) * n + j]; };
  for (int k = 0; k < n; k++) {
    int p = k;
    double best = std::abs(at(k, k));
    for (int i = k + 1; i < n; i++) {
      double v = std::abs(at(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    f.piv[k] = p;
    if (p != k) {
      for (int j = 0; j < n; j++) std::swap(at(k, j), at(p, j));
      f.parity = -f.parity;
    }
    f.min_pivot_abs = std::min(f.min_pivot_abs, best);
    if (best == 0.0) continue;  // singular; remaining column already zero
    const cplx inv = 1.0 / at(k, k);
    for (int i = k + 1; i < n; i++) {
      const cplx l = at(i, k) * inv;
      at(i, k) = l;
      if (l == cplx(0, 0)) continue;
      for (int j = k + 1; j < n; j++) at(i, j) -= l * at(k, j);
    }
  }
  return f;
}

inline CVector lu_solve(const LUFactors& f, CVector b) {
  const int n = f.n;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("lu_solve: dimension mismatch");
  auto at = [&](int i, int j) -> const cplx& { return f.lu[static_cast<size_t>(i) * n + j]; };
  // row swaps were applied to already-built L columns during factorization,
  // so permute b completely before the triangular solves
  for (int k = 0; k < n; k++)
    if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  for (int k = 0; k < n; k++)
    for (int i = k + 1; i < n; i++) b[i] -= at(i, k) * b[k];
  for (int i = n - 1; i >= 0; i--) {
    for (int j = i + 1; j < n; j++) b[i] -= at(i, j) * b[j];
    b[i] /= at(i, i);
  }
  return b;
}

inline cplx det(const CMatrix& m) {
  if (m.n == 0) return 1.0;
  LUFactors f = lu_factor(m);
  cplx d = static_cast<double>(f.parity);
  for (int i = 0; i < m.n; i++) d *= f.lu[static_cast<size_t>(i) * m.n + i];
  return d;
}

// pivot count after row reduction; threshold scales with the matrix magnitude
inline int rank(const CMatrix& m, double tol) {
  if (tol <= 0) throw std::invalid_argument("rank: tolerance must be positive");
  const int n = m.n;
  std::vector<cplx> w = m.a;
  auto at = [&](int i, int j) -> cplx& { return w[static_cast<size_t>(i) * n + j]; };
  const double thresh = tol * std::max(1.0, norm_max(m));
  int r = 0;
  for (int col = 0; col < n && r < n; col++) {
    int p = r;
    double best = std::abs(at(r, col));
    for (int i = r + 1; i < n; i++) {
      double v = std::abs(at(i, col));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best <= thresh) continue;
    if (p != r)
      for (int j = 0; j < n; j++) std::swap(at(r, j), at(p, j));
    const cplx inv = 1.0 / at(r, col);
    for (int i = r + 1; i < n; i++) {
      const cplx l = at(i, col) * inv;
      if (l == cplx(0, 0)) continue;
      for (int j = col; j < n; j++) at(i, j) -= l * at(r, j);
    }
    r++;
  }
  return r;
}

// det(z Id - u)
inline cplx charpoly_eval(const CMatrix& u, cplx z) {
  CMatrix m(u.n);
  for (int i = 0; i < u.n; i++)
    for (int j = 0; j < u.n; j++) m(i, j) = (i == j ? z : cplx(0, 0)) - u(i, j);
  return det(m);
}

// solve a X = b for matrix right-hand side (column by column)
inline CMatrix solve_matrix(const CMatrix& a, const CMatrix& b, double singular_tol = 0.0) {
  LUFactors f = lu_factor(a);
  if (singular_tol > 0 && f.min_pivot_abs <= singular_tol)
    throw SingularMatrixError("solve_matrix: pivot below tolerance");
  const int n = a.n;
  CMatrix x(n);
  CVector col(n);
  for (int j = 0; j < n; j++) {
    for (int i = 0; i < n; i++) col[i] = b(i, j);
    CVector s = lu_solve(f, col);
    for (int i = 0; i < n; i++) x(i, j) = s[i];
  }
  return x;
}

// ---- Cayley transforms ----
// cayley: Hermitian m -> (m - i)(m + i)^{-1}, a unitary with no eigenvalue 1.
// inverse_cayley: u -> i (Id + u)(Id - u)^{-1}; requires 1 not an eigenvalue.

inline CMatrix cayley(const CMatrix& m) {
  const int n = m.n;
  double herm = 0;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) herm = std::max(herm, std::abs(m(i, j) - std::conj(m(j, i))));
  if (herm > 1e-10) throw std::invalid_argument("cayley: input is not Hermitian");
  CMatrix plus = m, minus = m;
  for (int i = 0; i < n; i++) {
    plus(i, i) += cplx(0, 1);
    minus(i, i) -= cplx(0, 1);
  }
  // (m - i)(m + i)^{-1} = solve of (m + i)' from the right via transposes;
  // equivalently X with X (m + i) = (m - i), i.e. X = minus * inv(plus)
  CMatrix inv_plus = solve_matrix(plus, identity(n));
  return mul(minus, inv_plus);
}

inline CMatrix inverse_cayley(const CMatrix& u) {
  const int n = u.n;
  CMatrix idmu(n), idpu(n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) {
      const cplx id = (i == j) ? cplx(1, 0) : cplx(0, 0);
      idmu(i, j) = id - u(i, j);
      idpu(i, j) = id + u(i, j);
    }
  LUFactors f = lu_factor(idmu);
  if (f.min_pivot_abs <= 1e-10)
    throw SingularMatrixError("inverse_cayley: eigenvalue 1 obstruction (Id - u singular)");
  CMatrix x(n);
  CVector col(n);
  for (int j = 0; j < n; j++) {
    for (int i = 0; i < n; i++) col[i] = idpu(i, j);
    CVector s = lu_solve(f, col);
    for (int i = 0; i < n; i++) x(i, j) = cplx(0, 1) * s[i];
  }
  return x;
}

}  // namespace viso

#pragma once

// Rank-minimizing projections between unitary groups of different sizes.
//
// project() peels one dimension at a time: the image v of u under the
// one-step map is the unique element of U(n-1) closest to u in rank
// distance, characterized by v(x) = u(x) + c(x) w with w = e_n - u(e_n)
// and c(x) chosen so that v fixes e_n.  project_neretin() is the block
// form A + B (Id - D)^-1 C of the same map; it fails exactly when Id - D
// is singular, while the peeling form handles that case (u fixing e_n)
// by restriction.

#include <stdexcept>

#include "viso/linalg.hpp"

namespace viso {

inline CMatrix one_step_project(const CMatrix& u) {
  const int n = u.n;
  if (n < 2) throw std::invalid_argument("one_step_project: dimension must be >= 2");
  CVector en = basis_vector(n, n - 1);
  CVector uen(n);
  for (int i = 0; i < n; i++) uen[i] = u(i, n - 1);

  CVector w(n);
  for (int i = 0; i < n; i++) w[i] = en[i] - uen[i];
  double wn = norm2(w);

  CMatrix v(n - 1);
  if (wn <= 1e-12) {
    // u already fixes e_n: restrict to the orthogonal complement
    for (int i = 0; i + 1 < n; i++)
      for (int j = 0; j + 1 < n; j++) v(i, j) = u(i, j);
    return v;
  }

  cplx denom = inner(w, uen);
  for (int j = 0; j + 1 < n; j++) {
    CVector uej(n);
    for (int i = 0; i < n; i++) uej[i] = u(i, j);
    cplx c = inner(w, uej) / denom;
    for (int i = 0; i + 1 < n; i++) v(i, j) = uej[i] + c * w[i];
  }
  return v;
}

inline CMatrix project(const CMatrix& u, int m) {
  if (m < 1 || m > u.n) throw std::invalid_argument("project: target dimension out of range");
  CMatrix v = u;
  while (v.n > m) v = one_step_project(v);
  return v;
}

// Block form: split u at row/column m into [[A, B], [C, D]] and return
// A + B (Id - D)^-1 C.  Throws SingularMatrixError when Id - D is singular.
inline CMatrix project_neretin(const CMatrix& u, int m) {
  const int n = u.n;
  if (m < 1 || m > n) throw std::invalid_argument("project_neretin: target dimension out of range");
  if (m == n) return u;
  const int k = n - m;

  CMatrix idm_d(k);
  for (int i = 0; i < k; i++)
    for (int j = 0; j < k; j++) idm_d(i, j) = (i == j ? 1.0 : 0.0) - u(m + i, m + j);
  LUFactors f = lu_factor(idm_d);
  if (f.min_pivot_abs <= 1e-10)
    throw SingularMatrixError("project_neretin: Id - D singular (corner fixes a vector)");

  CMatrix v(m);
  for (int i = 0; i < m; i++)
    for (int j = 0; j < m; j++) v(i, j) = u(i, j);
  CVector col(k);
  for (int j = 0; j < m; j++) {
    for (int i = 0; i < k; i++) col[i] = u(m + i, j);
    CVector x = lu_solve(f, col);  // (Id - D)^-1 C, one column of C at a time
    for (int i = 0; i < m; i++) {
      cplx acc = 0;
      for (int l = 0; l < k; l++) acc += u(i, m + l) * x[l];
      v(i, j) += acc;
    }
  }
  return v;
}

inline int rank_distance(const CMatrix& u, const CMatrix& v) {
  if (u.n != v.n) throw std::invalid_argument("rank_distance: dimension mismatch");
  return rank(sub(u, v), 1e-9);
}

}  // namespace viso

#pragma once

// Incremental construction of coherent unitary chains from unit-vector
// sequences, plus the permutation special case.
//
// A chain is grown one dimension at a time: extend(s, x) multiplies the
// reflection sending e_{n+1} to x against s.u (+) 1.  The resulting tower
// satisfies project(u_{n+1}, n) = u_n, and u_n(e_n) = x_n at every level.
// States are immutable values; independent chains may run in parallel.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "viso/linalg.hpp"

namespace viso {

struct VirtualIsometryState {
  int n = 0;
  CMatrix u;                // current unitary, dim n
  std::vector<CVector> xs;  // generating vectors x_1..x_n, x_k of dim k
};

inline VirtualIsometryState init(const CVector& x1) {
  if (x1.size() != 1) throw std::invalid_argument("init: starting vector must have dimension 1");
  if (!is_unit(x1)) throw std::invalid_argument("init: starting vector must be unit");
  VirtualIsometryState s;
  s.n = 1;
  s.u = CMatrix(1);
  s.u(0, 0) = x1[0];
  s.xs.push_back(x1);
  return s;
}

inline VirtualIsometryState extend(const VirtualIsometryState& s, const CVector& x) {
  if (static_cast<int>(x.size()) != s.n + 1)
    throw std::invalid_argument("extend: vector must have dimension n+1");
  if (!is_unit(x)) throw std::invalid_argument("extend: vector must be unit");
  VirtualIsometryState t;
  t.n = s.n + 1;
  t.u = direct_sum_identity(s.u, 1);
  apply_reflection_left(x, t.u);  // no-op on the x = e_{n+1} branch
  t.xs = s.xs;
  t.xs.push_back(x);
  return t;
}

// ---- permutations via the restaurant process ----
// sigma is stored as a 1-based image array: sigma[k-1] is the image of k.

struct VirtualPermutationState {
  int n = 0;
  std::vector<int> sigma;
};

inline VirtualPermutationState perm_init() {
  VirtualPermutationState s;
  s.n = 1;
  s.sigma = {1};
  return s;
}

// Seat n+1: i = n+1 opens a new cycle (fixed point); i <= n inserts n+1
// into i's cycle just before i, i.e. sigma' = tau_{n+1,i} sigma.
inline VirtualPermutationState crp_extend(const VirtualPermutationState& s, int i) {
  if (i < 1 || i > s.n + 1) throw std::out_of_range("crp_extend: index out of range");
  VirtualPermutationState t;
  t.n = s.n + 1;
  t.sigma = s.sigma;
  t.sigma.push_back(t.n);
  if (i <= s.n) {
    for (int k = 0; k < t.n; k++) {
      if (t.sigma[k] == i)
        t.sigma[k] = t.n;
      else if (t.sigma[k] == t.n)
        t.sigma[k] = i;
    }
  }
  return t;
}

// Cycle decomposition, longest cycle first; ties broken by smallest element.
// Each cycle is listed in orbit order starting from its smallest element.
inline std::vector<std::vector<int>> cycles(const VirtualPermutationState& s) {
  std::vector<std::vector<int>> out;
  std::vector<char> seen(s.n + 1, 0);
  for (int start = 1; start <= s.n; start++) {
    if (seen[start]) continue;
    std::vector<int> c;
    int k = start;
    do {
      seen[k] = 1;
      c.push_back(k);
      k = s.sigma[k - 1];
    } while (k != start);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

// column k holds e_{sigma(k)}; entries exactly 0 or 1
inline CMatrix permutation_matrix(const VirtualPermutationState& s) {
  CMatrix m(s.n);
  for (int k = 1; k <= s.n; k++) m(s.sigma[k - 1] - 1, k - 1) = 1.0;
  return m;
}

}  // namespace viso

// Grows one Ewens virtual permutation, prints its cycle structure and the
// exact rational eigenangles of its matrix at a small dimension.
#include <cstdio>

#include "viso/asymptotics.hpp"
#include "viso/builder.hpp"
#include "viso/constants.hpp"
#include "viso/rng.hpp"

int main() {
  viso::Rng rng(11);
  const double theta = 1.0;

  viso::VirtualPermutationState s = viso::sample_ewens_permutation(12, theta, rng);
  std::printf("Ewens permutation, theta = %.1f, n = %d\n", theta, s.n);
  std::printf("cycles:");
  for (const auto& c : viso::cycles(s)) {
    std::printf(" (");
    for (size_t i = 0; i < c.size(); i++) std::printf(i ? " %d" : "%d", c[i]);
    std::printf(")");
  }
  std::printf("\neigenangles as exact fractions of a full turn:\n ");
  for (const auto& a : viso::permutation_eigenangles(s))
    std::printf(" %lld/%lld", a.num, a.den);
  std::printf("\n\n");

  // the same chain continued: longest-cycle fractions stabilize
  std::printf("growing the chain; top three cycle fractions:\n");
  for (int n = s.n; n < 4000; n++)
    s = viso::crp_extend(s, viso::sample_ewens_index(n + 1, theta, rng));
  const auto f = viso::cycle_fractions(s, 3);
  std::printf("  n = %d: %.4f  %.4f  %.4f\n", s.n, f[0], f[1], f[2]);
  std::printf("for theta = 1 the longest fraction concentrates near 0.624 on average\n");
  return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "viso/builder.hpp"
#include "viso/linalg.hpp"
#include "viso/measures.hpp"
#include "viso/projection.hpp"
#include "viso/rng.hpp"
#include "viso/stats.hpp"

using namespace viso;

TEST_CASE("uniform sphere sampler") {
  Rng rng(201);
  SECTION("output is unit") {
    for (int n : {1, 2, 5, 16}) REQUIRE(std::abs(norm2(sample_sphere(n, rng)) - 1.0) < 1e-12);
  }
  SECTION("dimension 1 is a uniform phase") {
    Accumulator re, im;
    for (int i = 0; i < 10000; i++) {
      CVector x = sample_sphere(1, rng);
      re.add(x[0].real());
      im.add(x[0].imag());
    }
    REQUIRE(std::abs(re.mean()) < 3 * re.stderr_mean());
    REQUIRE(std::abs(im.mean()) < 3 * im.stderr_mean());
  }
  SECTION("last-coordinate mass is 1/n on average") {
    const int n = 4;
    Accumulator acc;
    for (int i = 0; i < 100000; i++) acc.add(std::norm(sample_sphere(n, rng)[n - 1]));
    REQUIRE(std::abs(acc.mean() - 1.0 / n) < 3 * acc.stderr_mean());
  }
  SECTION("last-coordinate mass is uniform on [0,1] in dimension 2") {
    std::vector<double> s(10000);
    for (auto& v : s) v = std::norm(sample_sphere(2, rng)[1]);
    auto r = ks_one_sample(s, [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); });
    REQUIRE(r.p > 0.01);
  }
}

TEST_CASE("tilted sphere sampler") {
  SECTION("zero tilt reproduces the uniform sampler stream for stream") {
    Rng r1(202), r2(202);
    for (int n : {1, 3, 7}) {
      CVector a = sample_hua_pickrell_vector(n, cplx(0, 0), r1);
      CVector b = sample_sphere(n, r2);
      REQUIRE(a == b);
    }
  }
  SECTION("negative real part of the tilt is rejected") {
    Rng rng(203);
    REQUIRE_THROWS_AS(sample_hua_pickrell_vector(2, cplx(-0.25, 0), rng), std::invalid_argument);
  }
  SECTION("acceptance rate at tilt 1, dimension 2") {
    // E[h] = E|1-z|^2 = 1 + E|z|^2 = 3/2 over the uniform sphere; envelope M = 4
    Rng rng(204);
    long long attempts = 0;
    const int accepted = 20000;
    for (int i = 0; i < accepted; i++) {
      long long a = 0;
      sample_hua_pickrell_vector(2, cplx(1, 0), rng, &a);
      attempts += a;
    }
    const double p = 0.375;
    double phat = static_cast<double>(accepted) / static_cast<double>(attempts);
    double se = std::sqrt(p * (1 - p) / static_cast<double>(attempts));
    REQUIRE(std::abs(phat - p) < 3 * se);
  }
  SECTION("tilt pushes the last coordinate away from 1") {
    // E[Re z | accepted] = E[Re z * h]/E[h] = (-1/2)/(3/2) = -1/3 at tilt 1, dim 2
    Rng rng(205);
    Accumulator acc;
    for (int i = 0; i < 10000; i++)
      acc.add(sample_hua_pickrell_vector(2, cplx(1, 0), rng)[1].real());
    REQUIRE(std::abs(acc.mean() + 1.0 / 3.0) < 3 * acc.stderr_mean());
    // and the distribution sits strictly below the untilted one
    Rng r0(206);
    std::vector<double> tilted(4000), flat(4000);
    for (auto& v : tilted) v = sample_hua_pickrell_vector(2, cplx(1, 0), r0)[1].real();
    for (auto& v : flat) v = sample_sphere(2, r0)[1].real();
    Accumulator mt, mf;
    for (double v : tilted) mt.add(v);
    for (double v : flat) mf.add(v);
    REQUIRE(mt.mean() < mf.mean());
  }
  SECTION("imaginary tilt works under the enlarged envelope") {
    Rng rng(207);
    CVector x = sample_hua_pickrell_vector(3, cplx(0.5, 1.25), rng);
    REQUIRE(std::abs(norm2(x) - 1.0) < 1e-12);
  }
}

TEST_CASE("restaurant index sampler") {
  Rng rng(208);
  SECTION("dimension 1 is constant") {
    for (int i = 0; i < 50; i++) REQUIRE(sample_ewens_index(1, 0.7, rng) == 1);
  }
  SECTION("frequencies match the two-parameter rule") {
    // theta = 1, n = 2: P[2] = 1/2;  theta = 2, n = 3: P[3] = 1/2, P[1] = P[2] = 1/4
    int c2 = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; i++) c2 += sample_ewens_index(2, 1.0, rng) == 2;
    double se = std::sqrt(0.25 / trials);
    REQUIRE(std::abs(c2 / static_cast<double>(trials) - 0.5) < 3 * se);

    int cnt[4] = {0, 0, 0, 0};
    for (int i = 0; i < trials; i++) cnt[sample_ewens_index(3, 2.0, rng)]++;
    REQUIRE(std::abs(cnt[3] / static_cast<double>(trials) - 0.5) <
            3 * std::sqrt(0.25 / trials));
    REQUIRE(std::abs(cnt[1] / static_cast<double>(trials) - 0.25) <
            3 * std::sqrt(0.1875 / trials));
    REQUIRE(std::abs(cnt[2] / static_cast<double>(trials) - 0.25) <
            3 * std::sqrt(0.1875 / trials));
  }
  SECTION("parameter validation") {
    REQUIRE_THROWS_AS(sample_ewens_index(2, 0.0, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(sample_ewens_index(0, 1.0, rng), std::invalid_argument);
  }
}

TEST_CASE("measure-driven chains") {
  SECTION("spec validation") {
    REQUIRE_THROWS_AS(MeasureSpec::hua_pickrell(cplx(-0.1, 0), 1), std::invalid_argument);
    REQUIRE_THROWS_AS(MeasureSpec::ewens(0.0, 1), std::invalid_argument);
  }
  SECTION("deterministic seeding gives identical generating vectors") {
    auto spec = MeasureSpec::hua_pickrell(cplx(0.5, 0.5), 42);
    Rng r1(spec.seed), r2(spec.seed);
    auto a = sample_virtual_isometry(spec, 6, r1);
    auto b = sample_virtual_isometry(spec, 6, r2);
    for (int k = 0; k < 6; k++) REQUIRE(a.xs[k] == b.xs[k]);
  }
  SECTION("chains are unitary and coherent for every measure") {
    Rng rng(209);
    for (auto spec : {MeasureSpec::haar(1), MeasureSpec::hua_pickrell(cplx(1, 0.5), 2),
                      MeasureSpec::ewens(1.5, 3)}) {
      auto s = sample_virtual_isometry(spec, 7, rng);
      REQUIRE(s.n == 7);
      REQUIRE(unitarity_error(s.u) < 7e-12);
      // determinant identity holds pathwise
      cplx prod = 1;
      for (int k = 0; k < 7; k++) prod *= 1.0 - s.xs[k][k];
      REQUIRE(std::abs(det(sub(identity(7), s.u)) - prod) <= 1e-8 * std::max(1.0, std::abs(prod)));
    }
  }
  SECTION("ewens chains are exact permutation matrices") {
    Rng rng(210);
    auto s = sample_virtual_isometry(MeasureSpec::ewens(1.0, 4), 20, rng);
    for (const auto& e : s.u.a) REQUIRE((e == cplx(0, 0) || e == cplx(1, 0)));
    for (int j = 0; j < 20; j++) {
      int ones = 0;
      for (int i = 0; i < 20; i++) ones += s.u(i, j) == cplx(1, 0);
      REQUIRE(ones == 1);
    }
  }
  SECTION("cycle count matches the harmonic series") {
    const double theta = 1.0;
    const int n = 50, reps = 2000;
    double h50 = 0;
    for (int k = 1; k <= n; k++) h50 += 1.0 / k;
    Rng rng(211);
    Accumulator acc;
    for (int r = 0; r < reps; r++) {
      auto p = perm_init();
      for (int k = 2; k <= n; k++) p = crp_extend(p, sample_ewens_index(k, theta, rng));
      acc.add(static_cast<double>(cycles(p).size()));
    }
    REQUIRE(std::abs(acc.mean() - h50) < 3 * acc.stderr_mean());
  }
  SECTION("projecting a Haar chain at 4 down to 2 looks Haar at 2") {
    Rng rng(212);
    const int reps = 10000;
    std::vector<double> projected(reps), direct(reps);
    for (int r = 0; r < reps; r++) {
      auto s4 = sample_virtual_isometry(MeasureSpec::haar(0), 4, rng);
      projected[r] = trace(project(s4.u, 2)).real();
      auto s2 = sample_virtual_isometry(MeasureSpec::haar(0), 2, rng);
      direct[r] = trace(s2.u).real();
    }
    REQUIRE(ks_two_sample(projected, direct).p > 0.01);
  }
}

TEST_CASE("capacity") {
  SECTION("deterministic chain to -Id gives n log 2 exactly") {
    const int n = 9;
    std::vector<CVector> xs;
    for (int k = 1; k <= n; k++) {
      CVector x(k, cplx(0, 0));
      x[k - 1] = -1.0;
      xs.push_back(x);
    }
    // the chain really builds -Id
    auto s = init(xs[0]);
    for (int k = 1; k < n; k++) s = extend(s, xs[k]);
    REQUIRE(norm_max_diff(s.u, CMatrix(n)) == 1.0);  // all entries 0 or -1
    for (int i = 0; i < n; i++) REQUIRE(s.u(i, i) == cplx(-1, 0));
    cplx ld = log_det_id_minus(xs);
    REQUIRE(std::abs(ld.real() - n * std::log(2.0)) < 1e-12);
    REQUIRE(ld.imag() == 0.0);
  }
  SECTION("log form agrees with the matrix determinant") {
    Rng rng(213);
    for (int rep = 0; rep < 10; rep++) {
      auto s = sample_virtual_isometry(MeasureSpec::haar(0), 6, rng);
      cplx viaLog = std::exp(log_det_id_minus(s.xs));
      cplx direct = det(sub(identity(6), s.u));
      REQUIRE(std::abs(viaLog - direct) <= 1e-8 * std::max(1.0, std::abs(direct)));
    }
  }
  SECTION("Haar capacity vanishes") {
    Rng rng(214);
    auto e1 = capacity_estimate(MeasureSpec::haar(0), 1, 20000, rng);
    REQUIRE(std::abs(e1.mean.real()) < 3 * e1.se_re);
    REQUIRE(std::abs(e1.mean.imag()) < 3 * e1.se_im);
    auto e8 = capacity_estimate(MeasureSpec::haar(0), 8, 10000, rng);
    REQUIRE(std::abs(e8.mean.real()) < 3 * e8.se_re);
    REQUIRE(std::abs(e8.mean.imag()) < 3 * e8.se_im);
  }
  SECTION("permutation measures concentrate on singular Id - u") {
    Rng rng(215);
    REQUIRE_THROWS_AS(capacity_estimate(MeasureSpec::ewens(1.0, 0), 3, 10, rng),
                      std::runtime_error);
  }
}

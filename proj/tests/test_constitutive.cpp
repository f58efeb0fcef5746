#include <doctest.h>

#include <cmath>
#include <random>

#include "pns/constitutive.hpp"
#include "test_support.hpp"

using namespace pns;

namespace {

double phi_integrand(const StressParams& sp, double s) {
  if (s == 0.0) return 0.0;  // limit for p > 1; pow(0, p-2) overflows for p < 2
  return std::pow(sp.delta + s, sp.p - 2.0) * s;
}

}  // namespace

TEST_CASE("phi_value examples") {
  CHECK(phi_value({2.0, 0.7, 1.0}, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(phi_value({3.0, 0.0, 1.0}, 2.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));

  const StressParams sp{1.5, 1e-5, 1.0};
  const double oracle =
      testsup::integrate_1d([&](double s) { return phi_integrand(sp, s); }, 0.0, 1.0, 1e-13);
  CHECK(phi_value(sp, 1.0) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(phi_value(sp, 0.0) == 0.0);
  CHECK_THROWS_AS(phi_value(sp, -1.0), std::domain_error);
}

TEST_CASE("phi_value matches the quadrature oracle over the parameter sweep") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> td(1e-3, 8.0);
  for (double p : {4.0 / 3.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double delta : {0.0, 1e-5, 1.0}) {
      const StressParams sp{p, delta, 1.0};
      for (int i = 0; i < 10; ++i) {
        const double t = td(rng);
        const double oracle =
            testsup::integrate_1d([&](double s) { return phi_integrand(sp, s); }, 0.0, t, 1e-13);
        CHECK(phi_value(sp, t) == doctest::Approx(oracle).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("phi_prime examples") {
  CHECK(phi_prime({2.0, 0.3, 1.0}, 3.7) == doctest::Approx(3.7).epsilon(1e-15));
  CHECK(phi_prime({3.0, 1.0, 1.0}, 2.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(phi_prime({1.5, 0.0, 1.0}, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(phi_prime({2.0, 0.0, 1.0}, -0.1), std::domain_error);
}

TEST_CASE("phi_shifted reduces correctly and matches quadrature") {
  const StressParams sp{2.5, 1e-5, 1.0};
  CHECK(phi_shifted(sp, 0.0, 1.3) == doctest::Approx(phi_value(sp, 1.3)).epsilon(1e-14));
  CHECK(phi_shifted(sp, 2.0, 0.0) == 0.0);
  CHECK(phi_shifted({2.0, 0.0, 1.0}, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));

  // Independent of the closed form: integrate phi'(a+s) s/(a+s) directly.
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> dist(1e-3, 5.0);
  for (double p : {4.0 / 3.0, 1.5, 2.0, 2.5, 3.0}) {
    const StressParams q{p, 1e-5, 1.0};
    for (int i = 0; i < 6; ++i) {
      const double a = dist(rng), t = dist(rng);
      const double oracle = testsup::integrate_1d(
          [&](double s) { return s == 0.0 ? 0.0 : phi_prime(q, a + s) * s / (a + s); }, 0.0, t,
          1e-13);
      CHECK(phi_shifted(q, a, t) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("phi_conjugate examples and Young equality") {
  CHECK(phi_conjugate({2.0, 0.0, 1.0}, 3.0) == doctest::Approx(4.5).epsilon(1e-13));
  CHECK(phi_conjugate({2.7, 0.4, 1.0}, 0.0) == 0.0);

  // Young equality phi(t) + phi*(phi'(t)) = t phi'(t).
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> td(1e-3, 10.0);
  for (double p : {4.0 / 3.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double delta : {0.0, 1e-5, 1.0}) {
      const StressParams sp{p, delta, 1.0};
      for (int i = 0; i < 70; ++i) {
        const double t = td(rng);
        const double lhs = phi_value(sp, t) + phi_conjugate(sp, phi_prime(sp, t));
        const double rhs = t * phi_prime(sp, t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("phi_shifted_conjugate examples") {
  const StressParams sp{3.0, 1e-5, 1.0};
  CHECK(phi_shifted_conjugate(sp, 0.0, 1.7) ==
        doctest::Approx(phi_conjugate(sp, 1.7)).epsilon(1e-12));
  CHECK(phi_shifted_conjugate(sp, 2.0, 0.0) == 0.0);
  CHECK(phi_shifted_conjugate({2.0, 0.0, 1.0}, 5.0, 2.0) == doctest::Approx(2.0).epsilon(1e-12));

  // Young equality for the shifted function.
  const StressParams q{2.5, 1e-5, 1.0};
  for (double a : {0.1, 1.0, 4.0}) {
    for (double t : {0.2, 1.1, 3.0}) {
      const double tp = phi_prime({q.p, q.delta + a, q.nu}, t) ;
      const double lhs = phi_shifted(q, a, t) + phi_shifted_conjugate(q, a, tp);
      CHECK(lhs == doctest::Approx(t * tp).epsilon(1e-9));
    }
  }
}

TEST_CASE("Delta_2 bound and convexity of phi") {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> td(1e-4, 20.0);
  for (double p : {4.0 / 3.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double delta : {0.0, 1e-5, 1.0}) {
      const StressParams sp{p, delta, 1.0};
      const double bound = std::pow(2.0, std::max(2.0, p) + 2.0);
      for (int i = 0; i < 40; ++i) {
        const double t = td(rng);
        CHECK(phi_value(sp, 2.0 * t) <= bound * phi_value(sp, t));
        const double s = td(rng);
        const double mid = phi_value(sp, 0.5 * (s + t));
        const double avg = 0.5 * (phi_value(sp, s) + phi_value(sp, t));
        CHECK(mid <= avg + 1e-12 * std::max(1.0, avg));
      }
    }
  }
}

TEST_CASE("F_of examples") {
  const Eigen::Matrix2d a = (Eigen::Matrix2d() << 1.0, 2.0, 0.5, -0.7).finished();
  const SymTensor2 fa = F_of({2.0, 0.3, 1.0}, a);
  const SymTensor2 as = SymTensor2::sym_part(a);
  CHECK(fa.a11 == doctest::Approx(as.a11).epsilon(1e-15));
  CHECK(fa.a12 == doctest::Approx(as.a12).epsilon(1e-15));
  CHECK(fa.a22 == doctest::Approx(as.a22).epsilon(1e-15));

  Eigen::Matrix2d anti;
  anti << 0.0, 1.0, -1.0, 0.0;
  CHECK(F_of({1.5, 0.0, 1.0}, anti).norm() == 0.0);

  Eigen::Matrix2d diag;
  diag << 2.0, 0.0, 0.0, 0.0;
  const SymTensor2 f = F_of({3.0, 0.0, 1.0}, diag);
  CHECK(f.a11 == doctest::Approx(std::sqrt(2.0) * 2.0).epsilon(1e-14));
  CHECK(f.a22 == 0.0);
}

TEST_CASE("S_of examples") {
  std::mt19937 rng(5);
  const Eigen::Matrix2d a = testsup::random_matrix(rng);
  const SymTensor2 s2 = S_of({2.0, 0.77, 0.1}, a);
  const SymTensor2 as = SymTensor2::sym_part(a);
  CHECK(s2.a11 == doctest::Approx(0.1 * as.a11).epsilon(1e-14));
  CHECK(s2.a12 == doctest::Approx(0.1 * as.a12).epsilon(1e-14));

  Eigen::Matrix2d anti;
  anti << 0.0, -3.0, 3.0, 0.0;
  CHECK(S_of({2.5, 1e-5, 0.1}, anti).norm() == 0.0);

  const SymTensor2 si = S_of({3.0, 1e-5, 0.1}, Eigen::Matrix2d::Identity());
  CHECK(si.a11 == doctest::Approx(0.1 * (1e-5 + std::sqrt(2.0))).epsilon(1e-14));
  CHECK(si.a12 == 0.0);
}

TEST_CASE("S monotonicity on the full sample") {
  std::mt19937 rng(101);
  for (double p : {4.0 / 3.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double delta : {0.0, 1e-5, 1.0}) {
      const StressParams sp{p, delta, 1.0};
      for (int i = 0; i < 700; ++i) {
        const Eigen::Matrix2d a = testsup::random_matrix(rng);
        const Eigen::Matrix2d b = testsup::random_matrix(rng);
        const SymTensor2 ds = S_of(sp, a) - S_of(sp, b);
        const double prod = ds.dot(Eigen::Matrix2d(a - b));
        CHECK(prod >= 0.0);
      }
    }
  }
}

TEST_CASE("S_jacobian structure and finite differences") {
  SUBCASE("p = 2 is state independent") {
    std::mt19937 rng(7);
    const StressParams sp{2.0, 0.2, 0.7};
    const StressJacobian j0 = S_jacobian(sp, Eigen::Matrix2d::Zero());
    const StressJacobian j1 = S_jacobian(sp, testsup::random_matrix(rng));
    CHECK((j0.matrix() - j1.matrix()).norm() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(j0.matrix().isApprox(0.7 * Eigen::Matrix3d::Identity(), 1e-14));
  }
  SUBCASE("A = 0 with delta > 0") {
    const StressParams sp{2.5, 0.3, 2.0};
    const StressJacobian j = S_jacobian(sp, Eigen::Matrix2d::Zero());
    CHECK(j.matrix().isApprox(2.0 * std::pow(0.3, 0.5) * Eigen::Matrix3d::Identity(), 1e-14));
  }
  SUBCASE("singularity guard") {
    CHECK_THROWS_AS(S_jacobian({1.5, 0.0, 1.0}, Eigen::Matrix2d::Zero()), std::domain_error);
  }
  SUBCASE("matrix is exactly symmetric") {
    std::mt19937 rng(8);
    for (int i = 0; i < 50; ++i) {
      const StressJacobian j = S_jacobian({2.5, 1e-5, 0.1}, testsup::random_matrix(rng));
      const Eigen::Matrix3d m = j.matrix();
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("central finite differences, all benchmark p") {
    std::mt19937 rng(9);
    const double eps = 1e-6;
    for (double p : {4.0 / 3.0, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0}) {
      const StressParams sp{p, 1e-5, 0.1};
      for (int i = 0; i < 30; ++i) {
        const Eigen::Matrix2d a = testsup::random_matrix(rng);
        const Eigen::Matrix2d h = testsup::random_matrix(rng, -1.0, 1.0);
        const SymTensor2 jh = S_jacobian(sp, a).apply(h);
        const SymTensor2 fd = (S_of(sp, a + eps * h) - S_of(sp, a - eps * h)) * (0.5 / eps);
        const double scale = std::max(1e-12, fd.norm());
        CHECK((jh - fd).norm() / scale < 1e-5);
      }
    }
  }
}

TEST_CASE("stress equivalence ratios stay within the frozen bounds") {
  // Bounds calibrated once with a brute-force sampling run (3x10^4 pairs per
  // (p, delta), seed 2024), then widened by a 1.35 safety factor.
  struct Band {
    double p, lo, hi;
  };
  const Band bands[] = {
      {4.0 / 3.0, 0.46, 11.03},
      {1.5, 0.66, 5.74},
      {2.0, 0.74, 2.70},
      {2.5, 0.71, 4.00},
      {3.0, 0.61, 5.28},
  };
  std::mt19937 rng(2024);
  for (const Band& band : bands) {
    for (double delta : {0.0, 1e-5, 1.0}) {
      const StressParams sp{band.p, delta, 1.0};
      int used = 0;
      for (int i = 0; i < 10000 && used < 800; ++i) {
        const Eigen::Matrix2d a = testsup::random_matrix(rng);
        const Eigen::Matrix2d b = testsup::random_matrix(rng);
        const SymTensor2 as = SymTensor2::sym_part(a);
        const SymTensor2 bs = SymTensor2::sym_part(b);
        const double dist = (as - bs).norm();
        if (dist < 1e-8) continue;
        ++used;
        const SymTensor2 ds = S_of(sp, a) - S_of(sp, b);
        const double num = ds.dot(Eigen::Matrix2d(a - b));
        const SymTensor2 df = F_of(sp, a) - F_of(sp, b);
        const double r1 = num / df.dot(df);
        const double r2 = num / phi_shifted(sp, as.norm(), dist);
        const double r3 = num / phi_shifted_conjugate(sp, as.norm(), ds.norm() / sp.nu);
        for (double r : {r1, r2, r3}) {
          CHECK(std::isfinite(r));
          CHECK(r >= band.lo);
          CHECK(r <= band.hi);
        }
      }
      CHECK(used > 0);
    }
  }
}

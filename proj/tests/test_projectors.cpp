#include <doctest.h>

#include <cmath>

#include "nashflow/projectors.hpp"
#include "test_util.hpp"

using namespace nashflow;
using namespace nftest;

TEST_CASE("low pass leaves constants alone") {
  SpectralField f = fill_scalar(16, [](double, double, double) { return 3.25; });
  SpectralField g = project_low(f, 4.0);
  g -= f;
  CHECK(g.max_abs() < 1e-14);
}

TEST_CASE("low pass below the plateau is the identity") {
  const int n = 32;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::cos(3.0 * x); });
  SpectralField g = project_low(f, 8.0);
  g -= f;
  CHECK(g.max_abs() < 1e-14);
}

TEST_CASE("transition band scales by the multiplier value") {
  const int n = 64;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::cos(12.0 * x); });
  SpectralField g = project_low(f, 8.0);  // I = 3, 2^I = 8, m(12/8)
  const CutoffMultiplier m;
  const double want = m(1.5);
  SpectralField scaled = f;
  scaled *= want;
  g -= scaled;
  CHECK(g.max_abs() < 1e-13);
}

TEST_CASE("multiplier shape constraints") {
  const CutoffMultiplier m;
  CHECK(m(0.0) == 1.0);
  CHECK(m(1.0) == 1.0);
  CHECK(m(2.0) == 0.0);
  CHECK(m(2.7) == 0.0);
  double prev = 1.0;
  for (double r = 1.0; r <= 2.0; r += 0.01) {
    const double v = m(r);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
}

TEST_CASE("idempotence on the plateau, square in the transition band") {
  const int n = 64;
  SpectralField f = random_scalar(n, 20, 17);
  SpectralField once = project_low(f, 10.0);
  SpectralField twice = project_low(once, 10.0);
  // twice = multiply coefficients by m^2; check band by band
  const CutoffMultiplier m;
  f.ensure_spectrum();
  const int nh = n / 2 + 1;
  double worst = 0.0;
  std::size_t s = 0;
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      for (int kx = 0; kx < nh; ++kx, ++s) {
        const double r = std::sqrt(double(kx) * kx + double(ky) * ky + double(kz) * kz) / 8.0;
        const auto want = f.spec_comp(0)[s] * m(r) * m(r);
        worst = std::max(worst, std::abs(twice.spec_comp(0)[s] - want));
      }
    }
  }
  CHECK(worst < 1e-14 * std::max(1.0, f.max_abs()));
}

TEST_CASE("P_low + P_high = Id exactly") {
  SpectralField f = random_scalar(32, 15, 23);
  SpectralField s = project_low(f, 6.0);
  s += project_high(f, 6.0);
  s -= f;
  CHECK(s.max_abs() < 1e-15 * std::max(1.0, f.max_abs()));
}

TEST_CASE("mollify_tuple basics") {
  const int n = 32;
  std::vector<double> times{0.0, 0.1, 0.2, 0.3, 0.4};
  TimeSampledField zero = TimeSampledField::generate(
      times, [&](double) { return SpectralField(n, Rank::vector); });
  SpectralField rho0 = fill_scalar(n, [](double, double, double z) { return 1.0 + std::cos(z); });
  TimeSampledField rho = TimeSampledField::generate(times, [&](double) { return rho0; });
  TimeSampledField p = TimeSampledField::generate(
      times, [&](double) { return SpectralField(n, Rank::scalar); });
  auto mt = mollify_tuple(rho, zero, p, 0.25);  // 1/ell = 4 >= 2
  CHECK(mt.u.max_abs() == 0.0);
  SpectralField diff = mt.rho.frame(2);
  diff -= rho0;
  CHECK(diff.max_abs() < 1e-14);
}

TEST_CASE("Bernstein-type mollification bound, measured") {
  const int n = 64;
  for (unsigned seed = 1; seed <= 3; ++seed) {
    SpectralField rho = random_scalar(n, 20, seed * 31);
    const double ell = 1.0 / 10.0;
    SpectralField diff = rho;
    diff -= project_low(rho, 1.0 / ell);
    const double lhs = diff.max_abs();
    const double hess = rho.c_norm(2);
    // ||rho - rho_l||_0 <= C ell^2 ||grad^2 rho||_0 with a moderate constant
    CHECK(lhs <= 8.0 * ell * ell * hess);
  }
}

TEST_CASE("quadratic commutator vanishes for constant density") {
  const int n = 32;
  SpectralField rho = fill_scalar(n, [](double, double, double) { return 2.0; });
  SpectralField u = random_solenoidal(n, 8, 5);
  SpectralField q = quadratic_commutator(rho, u, 0.2);
  CHECK(q.max_abs() < 1e-11 * std::max(1.0, u.max_abs()));
}

TEST_CASE("quadratic commutator vanishes for zero velocity") {
  const int n = 32;
  SpectralField rho = random_scalar(n, 8, 6);
  SpectralField u(n, Rank::vector);
  SpectralField q = quadratic_commutator(rho, u, 0.2);
  CHECK(q.max_abs() == 0.0);
}

TEST_CASE("quadratic commutator rejects non-solenoidal velocity") {
  const int n = 16;
  SpectralField rho = random_scalar(n, 4, 6);
  SpectralField u = fill_vector(n, [](double x, double, double) {
    return std::array<double, 3>{std::sin(x), 0.0, 0.0};
  });
  CHECK_THROWS(quadratic_commutator(rho, u, 0.3));
}

TEST_CASE("quadratic commutator: two independent routes agree") {
  const int n = 48;
  SpectralField rho = fill_scalar(n, [](double x, double, double) { return std::cos(2.0 * x); });
  SpectralField u = random_solenoidal(n, 14, 77);
  const double ell = 1.0 / 6.0;
  SpectralField a = quadratic_commutator(rho, u, ell);
  SpectralField b = quadratic_commutator_decomposed(rho, u, ell);
  const double scale = std::max(1.0, u.c_norm(1) * rho.c_norm(1));
  SpectralField d = a;
  d -= b;
  CHECK(d.max_abs() < 1e-10 * scale);
}

TEST_CASE("quadratic commutator has zero mean") {
  const int n = 32;
  SpectralField rho = random_scalar(n, 10, 8, false);
  SpectralField u = random_solenoidal(n, 10, 9);
  SpectralField q = quadratic_commutator(rho, u, 0.15);
  CHECK(std::abs(q.mean_scalar()) < 1e-13 * std::max(1.0, q.max_abs()));
}

TEST_CASE("advective commutator vanishes with zero velocity") {
  const int n = 16;
  SpectralField H = random_scalar(n, 5, 3);
  SpectralField u(n, Rank::vector);
  CHECK(advective_commutator(u, H, 4.0).max_abs() == 0.0);
}

TEST_CASE("advective commutator vanishes when everything stays below the cutoff") {
  const int n = 64;
  // u and H below K/2 and the product still below the plateau of m
  SpectralField u = random_solenoidal(n, 2, 12);
  SpectralField H = random_scalar(n, 2, 13);
  SpectralField c = advective_commutator(u, H, 16.0);  // plateau covers |k| <= 16
  CHECK(c.max_abs() < 1e-12 * std::max(1.0, u.max_abs() * H.c_norm(1)));
}

TEST_CASE("advective commutator equals minus the high-pass commutator") {
  const int n = 48;
  SpectralField u = random_solenoidal(n, 10, 21);
  SpectralField H = random_scalar(n, 14, 22);
  const double K = 6.0;
  SpectralField a = advective_commutator(u, H, K);
  // [u.grad, P_>K] H
  SpectralField b = advect(u, project_high(H, K));
  b -= project_high(advect(u, H), K);
  SpectralField s = a;
  s += b;
  CHECK(s.max_abs() < 1e-11 * std::max(1.0, u.max_abs() * H.c_norm(1)));
}

TEST_CASE("commutator scaling law stays bounded, reported") {
  const int n = 64;
  double worst_ratio = 0.0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    SpectralField g = random_scalar(n, 18, 500 + seed);
    SpectralField h = random_scalar(n, 18, 600 + seed);
    const double ell = 1.0 / 8.0;
    SpectralField lhs = multiply(project_low(g, 1 / ell), project_low(h, 1 / ell));
    lhs -= project_low(multiply(g, h), 1 / ell);
    const double ratio = lhs.max_abs() / (ell * ell * g.c_norm(1) * h.c_norm(1));
    worst_ratio = std::max(worst_ratio, ratio);
  }
  MESSAGE("commutator scaling constant (measured): ", worst_ratio);
  CHECK(worst_ratio < 50.0);
}

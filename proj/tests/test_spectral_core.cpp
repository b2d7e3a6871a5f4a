#include <doctest.h>

#include <cmath>

#include "nashflow/spectral_field.hpp"
#include "nashflow/time_field.hpp"
#include "test_util.hpp"

using namespace nashflow;
using namespace nftest;

TEST_CASE("grid <-> Fourier round trip") {
  SpectralField f = random_scalar(32, 10, 11, false);
  std::vector<double> before(f.comp(0), f.comp(0) + f.points());
  f.ensure_spectrum();
  // force resynthesis
  SpectralField g(32, Rank::scalar);
  std::copy(f.spec_comp(0), f.spec_comp(0) + Fft::spec_size(32), g.spec_comp(0));
  g.mark_spec_dirty();
  double worst = 0.0;
  const double scale = f.max_abs();
  for (std::size_t p = 0; p < f.points(); ++p)
    worst = std::max(worst, std::abs(g.comp(0)[p] - before[p]));
  CHECK(worst / scale < 1e-12);
}

TEST_CASE("Parseval consistency") {
  SpectralField f = random_scalar(32, 9, 5, false);
  CHECK(std::abs(f.l2() - f.l2_spectral()) < 1e-12 * std::max(1.0, f.l2()));
}

TEST_CASE("single mode derivative: d/dx sin x = cos x") {
  const int n = 32;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  SpectralField d = f.derivative({1, 0, 0});
  SpectralField want = fill_scalar(n, [](double x, double, double) { return std::cos(x); });
  d -= want;
  CHECK(d.max_abs() < 1e-13);
}

TEST_CASE("derivative of a constant vanishes") {
  SpectralField f = fill_scalar(16, [](double, double, double) { return 2.5; });
  CHECK(f.derivative({1, 0, 0}).max_abs() < 1e-14);
  CHECK(f.derivative({0, 2, 1}).max_abs() < 1e-14);
}

TEST_CASE("second derivative against centered finite differences") {
  const int n = 64;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::sin(3.0 * x); });
  SpectralField d2 = f.derivative({2, 0, 0});
  // independent oracle: 4th-order centered finite differences on a fine grid
  const double h = 2.0 * kPi / n;
  double worst = 0.0;
  for (int ix = 0; ix < n; ++ix) {
    auto s = [&](int i) { return std::sin(3.0 * (2.0 * kPi * ((ix + i + 4 * n) % n) / n)); };
    const double fd =
        (-s(2) + 16.0 * s(1) - 30.0 * s(0) + 16.0 * s(-1) - s(-2)) / (12.0 * h * h);
    worst = std::max(worst, std::abs(d2.value(0, ix, 3, 7) - fd));
  }
  CHECK(worst < 1e-3);  // stencil error dominates
  // exact value check
  SpectralField want =
      fill_scalar(n, [](double x, double, double) { return -9.0 * std::sin(3.0 * x); });
  d2 -= want;
  CHECK(d2.max_abs() < 1e-8);
}

TEST_CASE("derivatives commute exactly in Fourier space") {
  SpectralField f = random_scalar(32, 8, 3);
  SpectralField a = f.derivative({1, 0, 0}).derivative({0, 1, 0});
  SpectralField b = f.derivative({0, 1, 0}).derivative({1, 0, 0});
  a -= b;
  CHECK(a.max_abs() < 1e-12 * std::max(1.0, f.c_norm(2)));
}

TEST_CASE("derivative order guard") {
  SpectralField f = random_scalar(16, 4, 9);
  CHECK_THROWS(f.derivative({9, 0, 0}));
}

TEST_CASE("band-limited fields have exactly zero coefficients beyond the band") {
  SpectralField f = random_scalar(32, 5, 21);
  f.ensure_spectrum();
  const int n = f.n();
  const int nh = n / 2 + 1;
  const auto* sp = f.spec_comp(0);
  double worst = 0.0;
  std::size_t s = 0;
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      for (int kx = 0; kx < nh; ++kx, ++s)
        if (std::max({std::abs(kx), std::abs(ky), std::abs(kz)}) > 5)
          worst = std::max(worst, std::abs(sp[s]));
    }
  }
  CHECK(worst == 0.0);
  CHECK(f.band_limit() == 5);
}

TEST_CASE("c_norm: max convention over derivative orders") {
  const int n = 32;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  CHECK(rel_err(f.c_norm(0), 1.0) < 1e-12);
  SpectralField g = fill_scalar(n, [](double x, double, double) { return std::sin(3.0 * x); });
  CHECK(rel_err(g.c_norm(1), 3.0) < 1e-10);
  SpectralField z(n, Rank::scalar);
  CHECK(z.c_norm(2) == 0.0);
}

TEST_CASE("c_norm monotone and sub-additive on random pairs") {
  for (unsigned seed = 0; seed < 4; ++seed) {
    SpectralField f = random_scalar(24, 6, 100 + seed);
    SpectralField g = random_scalar(24, 6, 200 + seed);
    CHECK(f.c_norm(0) <= f.c_norm(1) + 1e-15);
    CHECK(f.c_norm(1) <= f.c_norm(2) + 1e-15);
    SpectralField s = f;
    s += g;
    const double lhs = s.c_norm(1);
    const double rhs = f.c_norm(1) + g.c_norm(1);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("mean: zeroth coefficient") {
  const int n = 32;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  CHECK(std::abs(f.mean_scalar()) < 1e-15);
  SpectralField g = fill_scalar(n, [](double, double y, double) { return 1.0 + std::cos(y); });
  CHECK(std::abs(g.mean_scalar() - 1.0) < 1e-14);
  SpectralField r = random_scalar(n, 9, 42, false);
  double grid_avg = 0.0;
  for (std::size_t p = 0; p < r.points(); ++p) grid_avg += r.comp(0)[p];
  grid_avg /= double(r.points());
  CHECK(std::abs(r.mean_scalar() - grid_avg) < 1e-13 * std::max(1.0, r.max_abs()));
}

TEST_CASE("symmetric tensor storage exposes 6 components and reconstructs") {
  SpectralField t(8, Rank::sym_tensor);
  CHECK(t.comps() == 6);
  for (int c = 0; c < 6; ++c) t.comp(c)[5] = double(c + 1);
  t.mark_grid_dirty();
  const auto m = t.matrix_at(5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(m[ten_index(i, j)] == m[ten_index(j, i)]);
  CHECK(m[ten_index(0, 1)] == 2.0);
  CHECK(m[ten_index(1, 0)] == 2.0);
}

TEST_CASE("de-aliased product is exact for resolved factors and bilinear") {
  const int n = 48;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::sin(3.0 * x); });
  SpectralField g = fill_scalar(n, [](double x, double y, double) { return std::cos(2.0 * x) + std::sin(y); });
  SpectralField fg = multiply(f, g);
  SpectralField want = fill_scalar(n, [](double x, double y, double) {
    return std::sin(3.0 * x) * (std::cos(2.0 * x) + std::sin(y));
  });
  fg -= want;
  CHECK(fg.max_abs() < 1e-12);

  // bilinearity (the telescoping property the error assembly relies on)
  SpectralField a = random_scalar(n, 14, 7);
  SpectralField b = random_scalar(n, 14, 8);
  SpectralField c = random_scalar(n, 14, 9);
  SpectralField ab = a;
  ab += b;
  SpectralField lhs = multiply(ab, c);
  SpectralField rhs = multiply(a, c);
  rhs += multiply(b, c);
  lhs -= rhs;
  CHECK(lhs.max_abs() < 1e-12 * std::max(1.0, a.max_abs() * c.max_abs()));
}

TEST_CASE("de-aliased product satisfies the Leibniz rule exactly") {
  const int n = 32;
  SpectralField f = random_scalar(n, 10, 31);
  SpectralField g = random_scalar(n, 10, 32);
  SpectralField lhs = multiply(f, g).dx(0);
  SpectralField rhs = multiply(f.dx(0), g);
  rhs += multiply(f, g.dx(0));
  lhs -= rhs;
  CHECK(lhs.max_abs() < 1e-12 * f.c_norm(1) * g.c_norm(1));
}

TEST_CASE("material derivative: static field with zero velocity") {
  const int n = 16;
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back(0.1 * i);
  SpectralField f0 = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  TimeSampledField f = TimeSampledField::generate(times, [&](double) { return f0; });
  TimeSampledField u = TimeSampledField::generate(
      times, [&](double) { return SpectralField(n, Rank::vector); });
  TimeSampledField d = material_derivative(f, u);
  CHECK(d.max_abs() < 1e-12);
}

TEST_CASE("material derivative: linear-in-time factor is exact") {
  const int n = 16;
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back(0.05 * i);
  TimeSampledField f = TimeSampledField::generate(times, [&](double t) {
    return fill_scalar(n, [t](double x, double, double) { return t * std::sin(x); });
  });
  TimeSampledField u = TimeSampledField::generate(
      times, [&](double) { return SpectralField(n, Rank::vector); });
  TimeSampledField d = material_derivative(f, u);
  SpectralField want = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  for (int i = 0; i < d.samples(); ++i) {
    SpectralField diff = d.frame(i);
    diff -= want;
    CHECK(diff.max_abs() < 1e-11);
  }
}

TEST_CASE("material derivative: constant advection of a single mode") {
  const int n = 16;
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back(0.05 * i);
  SpectralField f0 = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  TimeSampledField f = TimeSampledField::generate(times, [&](double) { return f0; });
  TimeSampledField u = TimeSampledField::generate(times, [&](double) {
    return fill_vector(n, [](double, double, double) { return std::array<double, 3>{1.0, 0.0, 0.0}; });
  });
  TimeSampledField d = material_derivative(f, u);
  SpectralField want = fill_scalar(n, [](double x, double, double) { return std::cos(x); });
  SpectralField diff = d.frame(3);
  diff -= want;
  CHECK(diff.max_abs() < 1e-11);
}

TEST_CASE("material derivative rejects too few samples") {
  const int n = 8;
  std::vector<double> times{0.0, 0.1, 0.2};
  SpectralField f0(n, Rank::scalar);
  TimeSampledField f = TimeSampledField::generate(times, [&](double) { return f0; }, 4);
  TimeSampledField u =
      TimeSampledField::generate(times, [&](double) { return SpectralField(n, Rank::vector); }, 4);
  CHECK_THROWS(material_derivative(f, u));
}

TEST_CASE("material derivative rejects non-solenoidal velocity") {
  const int n = 16;
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back(0.05 * i);
  SpectralField f0 = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  TimeSampledField f = TimeSampledField::generate(times, [&](double) { return f0; });
  TimeSampledField u = TimeSampledField::generate(times, [&](double) {
    return fill_vector(n, [](double x, double, double) {
      return std::array<double, 3>{std::sin(x), 0.0, 0.0};
    });
  });
  CHECK_THROWS(material_derivative(f, u));
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "nashflow/cutoffs.hpp"
#include "nashflow/schedule.hpp"

using namespace nashflow;

TEST_CASE("schedule arithmetic examples") {
  ParameterSchedule s;
  s.lambda0 = 4.0;
  s.b = 2.0;
  s.beta = 0.125;
  CHECK(s.lambda(1) == 16.0);
  CHECK(s.delta(1) == doctest::Approx(0.5).epsilon(1e-14));  // 16^{-1/4}

  ParameterSchedule s2;
  s2.b = 1.5;
  CHECK(s2.gamma() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("schedule invariants: mu divisibility, tau decreasing, amplitude product increasing") {
  ParameterSchedule s;
  s.lambda0 = 5.0;
  s.b = 1.5;
  s.beta = 0.1;
  s.eta = 0.3;
  s.validate();
  for (int q = 0; q < 3; ++q) {
    CHECK(s.mu_inv(q) % 3 == 0);
    CHECK(s.tau(q + 1) < s.tau(q));
    CHECK(std::sqrt(s.delta(q + 1)) * s.lambda(q + 1) > std::sqrt(s.delta(q)) * s.lambda(q));
  }
}

TEST_CASE("schedule rejects out-of-range parameters by name") {
  ParameterSchedule s;
  s.beta = 0.2;  // >= 1/7
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("beta"), std::invalid_argument);
  ParameterSchedule s2;
  s2.b = 0.9;
  CHECK_THROWS_WITH_AS(s2.validate(), doctest::Contains("b must"), std::invalid_argument);
}

TEST_CASE("temporal partition: plateau, support, sextic sum") {
  TemporalPartition tp;
  CHECK(tp.theta_p(0, 0.5) == 1.0);
  CHECK(tp.theta_p(0, 0.125) == 1.0);
  CHECK(tp.theta_p(0, 0.875) == 1.0);
  CHECK(tp.theta_p(0, -0.125) == 0.0);
  CHECK(tp.theta_p(0, 1.125) == 0.0);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = uni(rng);
    worst = std::max(worst, std::abs(tp.sextic_sum(t) - 1.0));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("temporal partition: adjacent-only overlap") {
  TemporalPartition tp;
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uni(-2.0, 4.0);
  for (int i = 0; i < 300; ++i) {
    const double t = uni(rng);
    CHECK(tp.theta_p(0, t) * tp.theta_p(2, t) == 0.0);
    CHECK(tp.theta_p(-1, t) * tp.theta_p(1, t) == 0.0);
  }
}

TEST_CASE("temporal partition derivative matches finite differences") {
  TemporalPartition tp;
  const double h = 1e-6;
  for (double t : {0.05, 0.3, 0.93, 1.04, -0.07}) {
    const double fd = (tp.theta_p(0, t + h) - tp.theta_p(0, t - h)) / (2.0 * h);
    CHECK(std::abs(tp.theta_p_prime(0, t) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("theta_I powers per family kind") {
  TemporalPartition tp;
  const double tau = 0.25;
  const double t = 0.25 * 0.4;  // inside the overlap region
  const double base = tp.theta_p(0, t / tau);
  CHECK(tp.theta_I(FamilyKind::R, 0, t, tau) == doctest::Approx(std::pow(base, 3)));
  CHECK(tp.theta_I(FamilyKind::S, 0, t, tau) == doctest::Approx(std::pow(base, 3)));
  CHECK(tp.theta_I(FamilyKind::Phi, 0, t, tau) == doctest::Approx(std::pow(base, 2)));
}

TEST_CASE("spatial partition: plateau, support, sextic sum") {
  SpatialPartition sp;
  const double pi = std::numbers::pi;
  CHECK(sp.axis_chi(0, 0.0) == 1.0);
  CHECK(sp.axis_chi(0, 7.0 * pi / 8.0) == 1.0);
  CHECK(sp.axis_chi(0, -7.0 * pi / 8.0) == 1.0);
  CHECK(sp.axis_chi(0, 9.0 * pi / 8.0) == 0.0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::array<double, 3> y{uni(rng), uni(rng), uni(rng)};
    worst = std::max(worst, std::abs(sp.sextic_sum(y) - 1.0));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("spatial partition gradient matches finite differences") {
  SpatialPartition sp;
  const std::array<long, 3> k{0, 1, -1};
  const std::array<double, 3> y{2.9, 7.1, -6.0};
  const auto g = sp.chi_I_grad(FamilyKind::R, k, y);
  const double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    auto yp = y, ym = y;
    yp[a] += h;
    ym[a] -= h;
    const double fd = (sp.chi_I(FamilyKind::R, k, yp) - sp.chi_I(FamilyKind::R, k, ym)) / (2 * h);
    CHECK(std::abs(g[a] - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("cell classes partition the lattice mod 3") {
  std::set<IntVec> classes;
  for (long kx = -4; kx <= 4; ++kx)
    for (long ky = -4; ky <= 4; ++ky)
      for (long kz = -4; kz <= 4; ++kz) {
        const IntVec c = cell_class({kx, ky, kz});
        for (int a = 0; a < 3; ++a) {
          CHECK(c[a] >= 0);
          CHECK(c[a] < 3);
        }
        classes.insert(c);
        // equivalence: shifting by 3 does not change the class
        CHECK(cell_class({kx + 3, ky - 3, kz + 6}) == c);
      }
  CHECK(classes.size() == 27);
}

TEST_CASE("active cells per axis: at most two, correct support") {
  SpatialPartition sp;
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> uni(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const double s = uni(rng);
    long cells[2];
    int count = 0;
    SpatialPartition::active_cells(s, cells, count);
    CHECK(count >= 1);
    CHECK(count <= 2);
    double total = 0.0;
    for (int c = 0; c < count; ++c) total += std::pow(sp.axis_chi(cells[c], s), 6);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

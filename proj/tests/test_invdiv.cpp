#include <doctest.h>

#include <cmath>

#include "nashflow/invdiv.hpp"
#include "nashflow/local_invdiv.hpp"
#include "test_util.hpp"

using namespace nashflow;
using namespace nftest;

namespace {

double div_contract_residual(const SpectralField& R, const SpectralField& g) {
  SpectralField d = R.divergence();
  SpectralField want = g;
  const auto m = g.mean();
  for (int c = 0; c < want.comps(); ++c) {
    double* dst = want.comp(c);
    for (std::size_t p = 0; p < want.points(); ++p) dst[p] -= m[c];
  }
  want.mark_grid_dirty();
  d -= want;
  return d.max_abs() / std::max(1e-300, g.max_abs());
}

double trace_max(const SpectralField& R) {
  double worst = 0.0;
  for (std::size_t p = 0; p < R.points(); ++p) {
    const auto m = R.matrix_at(p);
    worst = std::max(worst, std::abs(m[0] + m[4] + m[8]));
  }
  return worst;
}

}  // namespace

TEST_CASE("inverse divergence of a constant vector vanishes") {
  SpectralField g = fill_vector(16, [](double, double, double) {
    return std::array<double, 3>{1.0, -2.0, 0.5};
  });
  CHECK(inv_div_vector(g).max_abs() < 1e-14);
}

TEST_CASE("inverse divergence of a single mode, hand-checked entry") {
  const int n = 32;
  SpectralField g = fill_vector(n, [](double x, double, double) {
    return std::array<double, 3>{0.0, std::cos(x), 0.0};
  });
  SpectralField R = inv_div_vector(g);
  // only nonzero entries are (1,2) = (2,1) proportional to sin x1 with
  // div R = g
  SpectralField want = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  SpectralField r01 = R.component(sym_index(0, 1));
  r01 -= want;
  CHECK(r01.max_abs() < 1e-13);
  CHECK(div_contract_residual(R, g) < 1e-12);
}

TEST_CASE("inverse divergence contract on random band-limited fields") {
  const int n = 32;
  for (unsigned seed = 0; seed < 20; ++seed) {
    SpectralField g = random_vector(n, 10, 1000 + seed);
    SpectralField R = inv_div_vector(g);
    CHECK(div_contract_residual(R, g) < 1e-10);
    CHECK(trace_max(R) < 1e-13 * std::max(1.0, R.max_abs()));
    // exact symmetry is structural (6-component storage)
    CHECK(R.rank() == Rank::sym_tensor);
  }
}

TEST_CASE("scalar inverse divergence single modes") {
  const int n = 32;
  SpectralField f = fill_scalar(n, [](double x, double, double) { return std::cos(x); });
  SpectralField v = inv_div_scalar(f);
  SpectralField want0 = fill_scalar(n, [](double x, double, double) { return std::sin(x); });
  SpectralField d = v.component(0);
  d -= want0;
  CHECK(d.max_abs() < 1e-13);
  CHECK(v.component(1).max_abs() < 1e-14);
  CHECK(v.component(2).max_abs() < 1e-14);

  SpectralField f2 = fill_scalar(n, [](double, double y, double) { return std::cos(y); });
  SpectralField v2 = inv_div_scalar(f2);
  SpectralField want1 = fill_scalar(n, [](double, double y, double) { return std::sin(y); });
  SpectralField d2 = v2.component(1);
  d2 -= want1;
  CHECK(d2.max_abs() < 1e-13);

  SpectralField c = fill_scalar(n, [](double, double, double) { return 4.0; });
  CHECK(inv_div_scalar(c).max_abs() < 1e-14);

  // div contract
  SpectralField r = random_scalar(n, 9, 77, false);
  SpectralField vr = inv_div_scalar(r);
  SpectralField dv = vr.divergence();
  SpectralField want = r;
  want.remove_mean();
  dv -= want;
  CHECK(dv.max_abs() < 1e-12 * std::max(1.0, r.max_abs()));
}

TEST_CASE("tensor potential: one mode at order 2") {
  const int n = 32;
  SpectralField z = fill_scalar(n, [](double x, double, double) { return std::cos(x); });
  TensorPotential tp = TensorPotential::build(z, 2);
  SpectralField t11 = tp.component({0, 0});
  SpectralField want = fill_scalar(n, [](double x, double, double) { return -std::cos(x); });
  t11 -= want;
  CHECK(t11.max_abs() < 1e-13);
  CHECK(tp.component({0, 1}).max_abs() < 1e-14);
  CHECK(tp.component({1, 1}).max_abs() < 1e-14);
  SpectralField rec = tp.recompose();
  rec -= z;
  CHECK(rec.max_abs() < 1e-12);
}

TEST_CASE("tensor potential: zero input, permutation invariance, mean guard") {
  const int n = 16;
  SpectralField zero(n, Rank::scalar);
  TensorPotential tp = TensorPotential::build(zero, 2);
  CHECK(tp.recompose().max_abs() == 0.0);
  SpectralField z = random_scalar(n, 4, 3);
  TensorPotential tp4 = TensorPotential::build(z, 4);
  // storage is by sorted multi-index: permuted lookups alias the same field
  const SpectralField& a = tp4.component({0, 1, 2, 2});
  const SpectralField& b = tp4.component({2, 0, 2, 1});
  SpectralField d = a;
  d -= b;
  CHECK(d.max_abs() == 0.0);
  SpectralField with_mean = fill_scalar(n, [](double x, double, double) { return 1.0 + std::cos(x); });
  CHECK_THROWS(TensorPotential::build(with_mean, 2));
}

TEST_CASE("tensor potential: order 4 recomposition on random data") {
  const int n = 32;
  SpectralField z = random_scalar(n, 8, 55);
  TensorPotential tp = TensorPotential::build(z, 4);
  SpectralField rec = tp.recompose();
  rec -= z;
  CHECK(rec.max_abs() < 1e-10 * std::max(1.0, z.max_abs()));
}

TEST_CASE("local step: zero input gives zero output") {
  const int n = 16;
  LocalTerm t;
  t.G = SpectralField(n, Rank::vector);
  t.zeta = DerivedScalar::from_field(
      fill_scalar(n, [](double x, double, double) { return std::cos(4.0 * x); }));
  auto r = local_inv_div_step(t, FlowSlice::make_identity(n));
  CHECK(r.R.max_abs() < 1e-14);
  CHECK(r.E.max_abs() < 1e-14);
}

TEST_CASE("local step: constant G and identity flow leave no error term") {
  const int n = 32;
  SpectralField G = fill_vector(n, [](double, double, double) {
    return std::array<double, 3>{1.0, 0.5, -0.25};
  });
  SpectralField zeta = fill_scalar(n, [](double x, double y, double) {
    return std::cos(5.0 * x) + std::sin(4.0 * y);
  });
  LocalTerm t{G, DerivedScalar::from_field(zeta)};
  auto r = local_inv_div_step(t, FlowSlice::make_identity(n));
  CHECK(r.E.max_abs() < 1e-12);
  // div R = G zeta exactly
  SpectralField d = r.R.divergence();
  SpectralField want = multiply(zeta, G);
  d -= want;
  CHECK(d.max_abs() < 1e-11 * std::max(1.0, want.max_abs()));
}

TEST_CASE("local step: identity div R + E = G zeta for curved flows") {
  const int n = 32;
  SpectralField G = fill_vector(n, [](double x, double, double z) {
    return std::array<double, 3>{std::cos(x), 0.2 * std::sin(z), 0.1};
  });
  SpectralField zeta = fill_scalar(n, [](double x, double y, double) {
    return std::cos(7.0 * x) * std::cos(3.0 * y);
  });
  // exactly volume-preserving map: composition of two shears (each det = 1)
  SpectralField disp = fill_vector(n, [](double x, double y, double z) {
    const double y1 = x + 0.05 * std::sin(y + z);
    const double y2 = y + 0.04 * std::cos(y1 - z);
    return std::array<double, 3>{y1 - x, y2 - y, 0.0};
  });
  FlowSlice xi = FlowSlice::from_displacement(disp);
  LocalTerm t{G, DerivedScalar::from_field(zeta)};
  auto r = local_inv_div_step(t, xi);
  SpectralField lhs = r.R.divergence();
  lhs += r.E;
  SpectralField want = multiply(compose_with_flow(t.zeta, xi, n), G);
  lhs -= want;
  // limited only by the spectral tails of the composed factors
  CHECK(lhs.max_abs() < 1e-6 * std::max(1.0, want.max_abs()));
  CHECK(r.R.rank() == Rank::sym_tensor);
}

TEST_CASE("local step: frequency gain ratio") {
  const int n = 64;
  SpectralField G = fill_vector(n, [](double x, double, double) {
    return std::array<double, 3>{std::cos(x), 0.0, 0.0};
  });
  SpectralField zeta = fill_scalar(n, [](double x, double, double) { return std::cos(16.0 * x); });
  LocalTerm t{G, DerivedScalar::from_field(zeta)};
  auto r = local_inv_div_step(t, FlowSlice::make_identity(n));
  SpectralField gz = multiply(zeta, G);
  const double ratio = r.E.max_abs() / gz.max_abs();
  MESSAGE("one-step gain ratio at frequency 16: ", ratio);
  CHECK(ratio < 4.0 / 16.0);  // ~ low/high frequency
}

TEST_CASE("local step rejects flows violating the Jacobian bound") {
  const int n = 16;
  SpectralField G = fill_vector(n, [](double, double, double) {
    return std::array<double, 3>{1.0, 0.0, 0.0};
  });
  SpectralField A = fill_vector(n, [](double x, double y, double) {
    return std::array<double, 3>{0.0, 0.0, 0.9 * std::sin(x + y)};
  });
  FlowSlice xi = FlowSlice::from_displacement(A.curl());
  LocalTerm t{G, DerivedScalar::from_field(random_scalar(n, 3, 4))};
  CHECK_THROWS(local_inv_div_step(t, xi));
}

TEST_CASE("iterated local inverse divergence: split contract and decay") {
  const int n = 48;
  SpectralField G = fill_vector(n, [](double x, double y, double) {
    return std::array<double, 3>{std::cos(x), std::sin(y), 0.25};
  });
  SpectralField zeta = fill_scalar(n, [](double x, double y, double) {
    return std::cos(12.0 * x) * std::cos(6.0 * y);
  });
  LocalInvDivConfig cfg;
  cfg.d = 4;
  auto r = local_inv_div(G, zeta, FlowSlice::make_identity(n), cfg);
  // exact split: div(R_local + R_nonlocal) = target - <target>
  SpectralField total = r.R_local;
  total += r.R_nonlocal;
  SpectralField target = multiply(zeta, G);
  CHECK(div_contract_residual(total, target) < 1e-8);
  REQUIRE(r.error_history.size() == 3);
  MESSAGE("error history: ", r.error_history[0], " ", r.error_history[1], " ",
          r.error_history[2]);
  CHECK(r.error_history[1] < 0.25 * r.error_history[0]);
  CHECK(r.error_history[2] < 0.25 * r.error_history[1]);
  CHECK(r.decreasing);
}

TEST_CASE("iterated local inverse divergence: d = 2 with constant G") {
  const int n = 32;
  SpectralField G = fill_vector(n, [](double, double, double) {
    return std::array<double, 3>{2.0, -1.0, 0.0};
  });
  SpectralField zeta = fill_scalar(n, [](double x, double, double) { return std::cos(8.0 * x); });
  LocalInvDivConfig cfg;
  cfg.d = 2;
  auto r = local_inv_div(G, zeta, FlowSlice::make_identity(n), cfg);
  CHECK(r.R_nonlocal.max_abs() < 1e-11);
}

#include "nashflow/cutoffs.hpp"

#include <cmath>
#include <numbers>

namespace nashflow {

namespace {
constexpr double kPi = std::numbers::pi;

double g_exp(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
double g_exp_prime(double u) {
  if (u <= 0.0) return 0.0;
  const double e = std::exp(-1.0 / u);
  return e / (u * u);
}
}  // namespace

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = g_exp(u), b = g_exp(1.0 - u);
  return a / (a + b);
}

double smooth_step_prime(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = g_exp(u), b = g_exp(1.0 - u);
  const double ap = g_exp_prime(u), bp = g_exp_prime(1.0 - u);
  const double den = a + b;
  return (ap * b + a * bp) / (den * den);
}

// ---------------------------------------------------------------------------
// temporal partition
// ---------------------------------------------------------------------------

double TemporalPartition::bump(double t) {
  // 1 on [1/8, 7/8], 0 outside (-1/8, 9/8), transitions of width 1/4
  return smooth_step((t + 0.125) * 4.0) * smooth_step((1.125 - t) * 4.0);
}

double TemporalPartition::bump_prime(double t) {
  const double a = smooth_step((t + 0.125) * 4.0);
  const double b = smooth_step((1.125 - t) * 4.0);
  const double ap = smooth_step_prime((t + 0.125) * 4.0) * 4.0;
  const double bp = -smooth_step_prime((1.125 - t) * 4.0) * 4.0;
  return ap * b + a * bp;
}

double TemporalPartition::normalizer(double t) const {
  // bump(t - j) != 0 needs t - j in (-1/8, 9/8), i.e. j in (t - 9/8, t + 1/8)
  const long jlo = long(std::ceil(t - 1.125));
  const long jhi = long(std::floor(t + 0.125));
  double s = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const double v = bump(t - double(j));
    s += std::pow(v, 6);
  }
  return std::pow(s, 1.0 / 6.0);
}

double TemporalPartition::normalizer_prime(double t) const {
  const long jlo = long(std::ceil(t - 1.125));
  const long jhi = long(std::floor(t + 0.125));
  double s = 0.0, sp = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const double v = bump(t - double(j));
    const double vp = bump_prime(t - double(j));
    s += std::pow(v, 6);
    sp += 6.0 * std::pow(v, 5) * vp;
  }
  return std::pow(s, 1.0 / 6.0 - 1.0) * sp / 6.0;
}

double TemporalPartition::theta_p(int p, double t) const {
  const double v = bump(t - double(p));
  if (v == 0.0) return 0.0;
  return v / normalizer(t);
}

double TemporalPartition::theta_p_prime(int p, double t) const {
  const double v = bump(t - double(p));
  if (v == 0.0) return 0.0;
  const double vp = bump_prime(t - double(p));
  const double nz = normalizer(t);
  const double nzp = normalizer_prime(t);
  return vp / nz - v * nzp / (nz * nz);
}

double TemporalPartition::sextic_sum(double t) const {
  const long jlo = long(std::ceil(t - 1.125));
  const long jhi = long(std::floor(t + 0.125));
  double s = 0.0;
  for (long j = jlo; j <= jhi; ++j) s += std::pow(theta_p(int(j), t), 6);
  return s;
}

double TemporalPartition::theta_I(FamilyKind k, int p, double t, double tau) const {
  return std::pow(theta_p(p, t / tau), power(k));
}

double TemporalPartition::theta_I_prime(FamilyKind k, int p, double t, double tau) const {
  const int pw = power(k);
  const double v = theta_p(p, t / tau);
  if (v == 0.0) return 0.0;
  return pw * std::pow(v, pw - 1) * theta_p_prime(p, t / tau) / tau;
}

// ---------------------------------------------------------------------------
// spatial partition
// ---------------------------------------------------------------------------

double SpatialPartition::bump(double s) {
  // 1 on [-7 pi/8, 7 pi/8], 0 outside (-9 pi/8, 9 pi/8), transitions pi/4
  const double w = 4.0 / kPi;
  return smooth_step((s + 1.125 * kPi) * w) * smooth_step((1.125 * kPi - s) * w);
}

double SpatialPartition::bump_prime(double s) {
  const double w = 4.0 / kPi;
  const double a = smooth_step((s + 1.125 * kPi) * w);
  const double b = smooth_step((1.125 * kPi - s) * w);
  const double ap = smooth_step_prime((s + 1.125 * kPi) * w) * w;
  const double bp = -smooth_step_prime((1.125 * kPi - s) * w) * w;
  return ap * b + a * bp;
}

double SpatialPartition::normalizer(double s) const {
  const double c = s / (2.0 * kPi);
  const long jlo = long(std::ceil(c - 9.0 / 16.0));
  const long jhi = long(std::floor(c + 9.0 / 16.0));
  double acc = 0.0;
  for (long j = jlo; j <= jhi; ++j) acc += std::pow(bump(s - 2.0 * kPi * double(j)), 6);
  return std::pow(acc, 1.0 / 6.0);
}

double SpatialPartition::normalizer_prime(double s) const {
  const double c = s / (2.0 * kPi);
  const long jlo = long(std::ceil(c - 9.0 / 16.0));
  const long jhi = long(std::floor(c + 9.0 / 16.0));
  double acc = 0.0, accp = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const double v = bump(s - 2.0 * kPi * double(j));
    acc += std::pow(v, 6);
    accp += 6.0 * std::pow(v, 5) * bump_prime(s - 2.0 * kPi * double(j));
  }
  return std::pow(acc, 1.0 / 6.0 - 1.0) * accp / 6.0;
}

double SpatialPartition::axis_chi(long j, double s) const {
  const double v = bump(s - 2.0 * kPi * double(j));
  if (v == 0.0) return 0.0;
  return v / normalizer(s);
}

double SpatialPartition::axis_chi_prime(long j, double s) const {
  const double v = bump(s - 2.0 * kPi * double(j));
  if (v == 0.0) return 0.0;
  const double vp = bump_prime(s - 2.0 * kPi * double(j));
  const double nz = normalizer(s);
  const double nzp = normalizer_prime(s);
  return vp / nz - v * nzp / (nz * nz);
}

double SpatialPartition::chi_k(const std::array<long, 3>& k,
                               const std::array<double, 3>& y) const {
  double v = 1.0;
  for (int a = 0; a < 3 && v != 0.0; ++a) v *= axis_chi(k[a], y[a]);
  return v;
}

double SpatialPartition::chi_I(FamilyKind kind, const std::array<long, 3>& k,
                               const std::array<double, 3>& y) const {
  const double v = chi_k(k, y);
  return v == 0.0 ? 0.0 : std::pow(v, TemporalPartition::power(kind));
}

std::array<double, 3> SpatialPartition::chi_I_grad(FamilyKind kind,
                                                   const std::array<long, 3>& k,
                                                   const std::array<double, 3>& y) const {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  const double f[3] = {axis_chi(k[0], y[0]), axis_chi(k[1], y[1]), axis_chi(k[2], y[2])};
  const double v = f[0] * f[1] * f[2];
  if (v == 0.0) return g;
  const int pw = TemporalPartition::power(kind);
  const double outer = pw * std::pow(v, pw - 1);
  for (int a = 0; a < 3; ++a) {
    const double fp = axis_chi_prime(k[a], y[a]);
    double rest = 1.0;
    for (int b = 0; b < 3; ++b)
      if (b != a) rest *= f[b];
    g[a] = outer * fp * rest;
  }
  return g;
}

double SpatialPartition::sextic_sum(const std::array<double, 3>& y) const {
  double prod = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double c = y[a] / (2.0 * kPi);
    const long jlo = long(std::ceil(c - 9.0 / 16.0));
    const long jhi = long(std::floor(c + 9.0 / 16.0));
    double s = 0.0;
    for (long j = jlo; j <= jhi; ++j) s += std::pow(axis_chi(j, y[a]), 6);
    prod *= s;
  }
  return prod;
}

void SpatialPartition::active_cells(double s, long out[2], int& count) {
  const double c = s / (2.0 * kPi);
  const long jlo = long(std::ceil(c - 9.0 / 16.0));
  const long jhi = long(std::floor(c + 9.0 / 16.0));
  count = 0;
  for (long j = jlo; j <= jhi && count < 2; ++j)
    if (bump(s - 2.0 * kPi * double(j)) != 0.0) out[count++] = j;
}

IntVec cell_class(const std::array<long, 3>& k) {
  IntVec c;
  for (int a = 0; a < 3; ++a) {
    long m = k[a] % 3;
    if (m < 0) m += 3;
    c[a] = int(m);
  }
  return c;
}

}  // namespace nashflow

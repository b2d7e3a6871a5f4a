#pragma once

#include <array>

#include "nashflow/geometry.hpp"
#include "nashflow/schedule.hpp"

namespace nashflow {

// Smooth transition: 0 for u <= 0, 1 for u >= 1, C-infinity in between.
double smooth_step(double u);
double smooth_step_prime(double u);

// Generator of the sextic temporal partition: plateau exactly 1 on [1/8,7/8],
// support in (-1/8, 9/8), and sum_p theta_p^6(t) = 1 with theta_p(t) =
// theta0(t - p). Built by sextic normalization of a raw bump.
class TemporalPartition {
 public:
  double theta_p(int p, double t) const;        // theta0(t - p)
  double theta_p_prime(int p, double t) const;  // d/dt
  double sextic_sum(double t) const;            // = 1 up to rounding

  // theta_I(t) = theta_p(t / tau)^pow with pow = 3 (R,S) or 2 (Phi).
  static int power(FamilyKind k) { return k == FamilyKind::Phi ? 2 : 3; }
  double theta_I(FamilyKind k, int p, double t, double tau) const;
  double theta_I_prime(FamilyKind k, int p, double t, double tau) const;

  // Raw bump and normalizer, exposed for tests.
  static double bump(double t);
  static double bump_prime(double t);

 private:
  double normalizer(double t) const;        // (sum_j bump^6(t - j))^(1/6)
  double normalizer_prime(double t) const;
};

// Per-axis generator of the spatial sextic partition on 2*pi cells:
// plateau 1 on [-7*pi/8, 7*pi/8], support in (-9*pi/8, 9*pi/8),
// sum_j chi^6(s - 2*pi*j) = 1. The 3-D generator is the product over axes.
class SpatialPartition {
 public:
  double axis_chi(long j, double s) const;  // normalized per-axis factor
  double axis_chi_prime(long j, double s) const;

  // chi_k(y) = prod_a axis_chi(k_a, y_a); evaluated at y = x / mu.
  double chi_k(const std::array<long, 3>& k, const std::array<double, 3>& y) const;
  // chi_I = chi_k(y)^pow, pow = 3 (R,S) or 2 (Phi).
  double chi_I(FamilyKind kind, const std::array<long, 3>& k,
               const std::array<double, 3>& y) const;
  // Gradient of chi_I with respect to y.
  std::array<double, 3> chi_I_grad(FamilyKind kind, const std::array<long, 3>& k,
                                   const std::array<double, 3>& y) const;

  double sextic_sum(const std::array<double, 3>& y) const;  // = 1 up to rounding

  // Cells whose support contains y (at most 2 per axis).
  static void active_cells(double s, long out[2], int& count);

  static double bump(double s);
  static double bump_prime(double s);

 private:
  double normalizer(double s) const;
  double normalizer_prime(double s) const;
};

// Class of a cell: componentwise k mod 3 in {0,1,2}.
IntVec cell_class(const std::array<long, 3>& k);

}  // namespace nashflow

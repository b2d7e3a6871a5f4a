#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nashflow/geometry.hpp"

namespace nashflow {

// Geometry of the periodized line {sigma h + 2 pi m} on the torus and of its
// cross-section plane. Directions are reduced to primitive integer vectors;
// scaled family members share the same line geometry.
struct TubeGeometry {
  IntVec h_primitive{0, 0, 1};
  double h_norm = 1.0;                 // |h_primitive|
  Eigen::Vector3d axis;                // h / |h|
  Eigen::Vector3d e1, e2;              // orthonormal basis of the cross-section
  Eigen::Matrix2d lattice;             // columns: reduced basis of the projected lattice
  double cell_area = 0.0;              // (2 pi)^2 / |h|

  static TubeGeometry make(const IntVec& h);

  // Cross-section coordinates of x - shift, reduced to the nearest lattice
  // representative. Returns the 2-vector offset from the tube axis.
  Eigen::Vector2d offset(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const;
  double distance(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const;

  // Distance between two periodized lines with directions g (this) and
  // other, carrying shifts s1, s2. For parallel lines this is the lattice
  // distance of the cross-section offsets; for transversal pairs the minimum
  // runs over the compact family of crossings.
  static double line_distance(const TubeGeometry& a, const Eigen::Vector3d& sa,
                              const TubeGeometry& b, const Eigen::Vector3d& sb);
};

// Smooth radial bump basis on [0,1]: nested plateaus, exactly zero outside.
double radial_bump(double rho, int which);

// A Mikado profile pair (psi, phi) on one tube line: compactly supported in
// the tube of the given radius, constant along the direction, and satisfying
// the moment conditions of its kind:
//   R:   <psi> = <phi> = 0, <psi phi> = 1, <psi^2 phi> = 0
//   S:   <psi> = 0, <psi^2> = 1 (phi unused, identically zero)
//   Phi: <psi> = <phi> = 0, <psi phi> = 0, <psi^2 phi> = 1
// Means are taken over the torus; for tube-supported functions they reduce
// to cross-section integrals (2 pi / cell_area) * int f(rho) rho d rho.
class MikadoProfile {
 public:
  struct Config {
    double support_radius = 0.05;  // in absolute units, must be <= eta/10
    double psi2_target = 1.0;      // <psi^2> normalization for R/Phi kinds
    int basis_size = 4;            // radial basis functions for the moment solve
    double quad_tol = 1e-12;
  };

  MikadoProfile() = default;
  MikadoProfile(const IntVec& direction, FamilyKind kind, const Config& cfg);

  const TubeGeometry& geometry() const { return geom_; }
  FamilyKind kind() const { return kind_; }
  const IntVec& direction() const { return dir_; }
  double support_radius() const { return cfg_.support_radius; }

  // Radial profiles (exactly zero for rho >= support_radius).
  double psi_radial(double rho) const;
  double phi_radial(double rho) const;
  double psi_radial_prime(double rho) const;
  double phi_radial_prime(double rho) const;

  // Point evaluation on the torus, tube shifted by `shift`.
  double psi(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const;
  double phi(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const;
  // Full gradient of psi/phi at x (lies in the cross-section plane, so the
  // directional derivative along h vanishes identically).
  Eigen::Vector3d psi_grad(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const;

  // Torus means computed by radial quadrature.
  double mean_psi() const { return m_psi_; }
  double mean_phi() const { return m_phi_; }
  double mean_psi2() const { return m_psi2_; }
  double mean_psiphi() const { return m_psiphi_; }
  double mean_psi2phi() const { return m_psi2phi_; }

  // Radial Fourier transforms: coefficient of e^{i m.y} for a cross-section
  // lattice mode m is coeff_*(|m|). Zero mode equals the mean.
  double psi_hat(double mnorm) const;
  double phi_hat(double mnorm) const;
  double psi2_hat(double mnorm) const;
  double psiphi_hat(double mnorm) const;
  double psi2phi_hat(double mnorm) const;

  // Lattice modes m with m . h = 0 and |m| <= mmax.
  std::vector<IntVec> cross_modes(double mmax) const;

  // Smallest M such that the omitted tail of every table is below tol
  // (relative to the largest coefficient).
  double table_extent(double tol = 1e-8) const;

  // Decay report: sum over |m| <= mmax of |m|^(n0+2) |coeff| per table.
  std::array<double, 5> decay_sums(int n0, double mmax) const;

 private:
  double hankel(const std::vector<double>& vals, double mnorm) const;

  IntVec dir_{0, 0, 1};
  FamilyKind kind_ = FamilyKind::S;
  Config cfg_;
  TubeGeometry geom_;
  std::vector<double> psi_coef_, phi_coef_;  // radial basis coefficients
  double m_psi_ = 0, m_phi_ = 0, m_psi2_ = 0, m_psiphi_ = 0, m_psi2phi_ = 0;
  // quadrature nodes/values cached for the Hankel transforms
  std::vector<double> qr_, qw_;
  std::vector<double> v_psi_, v_phi_, v_psi2_, v_psiphi_, v_psi2phi_;
};

}  // namespace nashflow

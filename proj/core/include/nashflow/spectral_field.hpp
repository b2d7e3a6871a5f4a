#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nashflow/fft.hpp"

namespace nashflow {

// Tensor rank of a field on the torus. Symmetric 3x3 tensors store the six
// independent components; general tensors store all nine (row-major).
enum class Rank : std::uint32_t { scalar = 0, vector = 1, sym_tensor = 2, tensor = 3 };

int component_count(Rank rank);

// Index maps for tensor components.
//   sym:    (0,0)->0 (0,1)->1 (0,2)->2 (1,1)->3 (1,2)->4 (2,2)->5
//   tensor: (i,j) -> 3*i + j
int sym_index(int i, int j);
inline int ten_index(int i, int j) { return 3 * i + j; }

// Real field sampled on the uniform n^3 collocation grid of [-pi,pi)^3
// (stored as x_j = 2*pi*j/n, j = 0..n-1, same torus), with a lazily
// maintained half-complex spectrum per component. The spectrum holds the
// coefficients of f(x) = sum_k c_k exp(i k.x).
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(int n, Rank rank);

  int n() const { return n_; }
  Rank rank() const { return rank_; }
  int comps() const { return comps_; }
  std::size_t points() const { return Fft::grid_size(n_); }
  bool empty() const { return n_ == 0; }

  double grid_coord(int i) const;  // coordinate of grid index i on one axis

  // --- grid data -----------------------------------------------------------
  double* comp(int c);
  const double* comp(int c) const;
  double& at(int c, int ix, int iy, int iz);
  double value(int c, int ix, int iy, int iz) const;

  // Call after writing grid values directly.
  void mark_grid_dirty();

  // --- spectral data -------------------------------------------------------
  std::complex<double>* spec_comp(int c);
  const std::complex<double>* spec_comp(int c) const;
  void mark_spec_dirty();  // after writing spectral values directly

  void ensure_spectrum() const;
  void ensure_grid() const;

  // --- basic algebra (component-wise, ranks must match) ---------------------
  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  // --- calculus (exact on the spectrum) --------------------------------------
  // Mixed partial derivative d^alpha, alpha = (ax, ay, az) per axis.
  // Odd derivative orders at the Nyquist mode are taken as zero.
  SpectralField derivative(const std::array<int, 3>& alpha, int max_order = 8) const;
  SpectralField dx(int axis) const { return derivative(axis_alpha(axis)); }

  // Divergence: vector -> scalar, sym_tensor/tensor -> vector (d_j T_ij).
  SpectralField divergence() const;
  // Gradient: scalar -> vector.
  SpectralField gradient() const;
  // Curl: vector -> vector.
  SpectralField curl() const;
  // Inverse Laplacian with zero mean (scalar or component-wise).
  SpectralField inv_laplacian() const;

  // Mean (zero mode) per component.
  std::vector<double> mean() const;
  double mean_scalar() const;
  SpectralField& remove_mean();

  // Max over components and grid points of |f|.
  double max_abs() const;
  // L2 norm on the grid: sqrt(avg |f|^2) summed over components.
  double l2() const;
  // Spectral L2 via Parseval (for consistency checks).
  double l2_spectral() const;

  // C^m norm: max over all spatial derivatives of order <= m of the grid max.
  double c_norm(int m, int max_order = 8) const;

  // Symmetric tensor <-> full matrix helpers.
  std::array<double, 9> matrix_at(std::size_t p) const;  // sym_tensor or tensor
  static SpectralField symmetrize(const SpectralField& t);  // tensor -> sym_tensor
  SpectralField to_full_tensor() const;                     // sym_tensor -> tensor
  SpectralField transpose() const;                          // tensor -> tensor

  // Band limit check: largest |k|_inf with coefficient magnitude > tol.
  int band_limit(double tol = 1e-13) const;

  // Extract one component as a scalar field.
  SpectralField component(int c) const;
  void set_component(int c, const SpectralField& scalar);

 private:
  static std::array<int, 3> axis_alpha(int axis);

  int n_ = 0;
  Rank rank_ = Rank::scalar;
  int comps_ = 0;
  mutable std::vector<std::vector<double>> grid_;
  mutable std::vector<std::vector<std::complex<double>>> spec_;
  mutable bool grid_valid_ = false;
  mutable bool spec_valid_ = false;
};

// ---------------------------------------------------------------------------
// Products. Every product is formed with 2/3-rule de-aliasing by zero padding
// to a 3n/2 grid, so the result is the exact Galerkin truncation of the true
// product of the two trigonometric interpolants (Nyquist modes dropped).
// All product helpers below share that kernel, so products are bilinear to
// roundoff and consistent between assembly code and verification code.
// ---------------------------------------------------------------------------

// c-th output accumulates coeff * a_comp(ca) * b_comp(cb).
struct ProductTerm {
  int ca;
  int cb;
  int cout;
  double coeff;
};

SpectralField product(const SpectralField& a, const SpectralField& b, Rank out_rank,
                      const std::vector<ProductTerm>& terms);

SpectralField multiply(const SpectralField& a, const SpectralField& b);  // scalar*any
SpectralField dot(const SpectralField& a, const SpectralField& b);       // vec.vec
SpectralField outer(const SpectralField& a, const SpectralField& b);     // vec(x)vec -> tensor
SpectralField outer_sym(const SpectralField& a);                          // vec(x)vec -> sym
SpectralField matvec(const SpectralField& m, const SpectralField& v);    // (sym|ten).vec
SpectralField advect(const SpectralField& u, const SpectralField& f);    // (u.grad) f

}  // namespace nashflow

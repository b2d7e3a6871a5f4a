#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace nashflow {

// Shared FFTW plans for N^3 real <-> half-complex transforms, keyed by N.
// Plans use FFTW_ESTIMATE so repeated runs produce bit-identical output.
//
// Layout conventions (fixed across the project):
//   real grid:  index = ix + n*(iy + n*iz), x fastest, spacing 2*pi/n
//   spectrum:   index = kxh + (n/2+1)*(iy + n*iz), kxh in [0, n/2],
//               ky/kz stored in FFTW order (iy <= n/2 means ky = iy,
//               otherwise ky = iy - n)
// Stored coefficients are normalized so that
//   f(x) = sum_k c_k exp(i k . x).
class Fft {
 public:
  static void forward(int n, const double* grid, std::complex<double>* spec);
  static void inverse(int n, const std::complex<double>* spec, double* grid);

  static std::size_t grid_size(int n) { return std::size_t(n) * n * n; }
  static std::size_t spec_size(int n) { return std::size_t(n) * n * (n / 2 + 1); }

  // Wavenumber on one axis for storage slot i (i in [0, n)).
  static int wavenumber(int n, int i) { return i <= n / 2 ? i : i - n; }
};

}  // namespace nashflow

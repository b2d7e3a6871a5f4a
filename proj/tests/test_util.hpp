#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "nashflow/spectral_field.hpp"
#include "nashflow/time_field.hpp"

namespace nftest {

using nashflow::Rank;
using nashflow::SpectralField;

constexpr double kPi = std::numbers::pi;

inline SpectralField fill_scalar(int n, const std::function<double(double, double, double)>& f) {
  SpectralField out(n, Rank::scalar);
  double* dst = out.comp(0);
  std::size_t p = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix, ++p)
        dst[p] = f(out.grid_coord(ix), out.grid_coord(iy), out.grid_coord(iz));
  out.mark_grid_dirty();
  return out;
}

inline SpectralField fill_vector(int n,
                                 const std::function<std::array<double, 3>(double, double, double)>& f) {
  SpectralField out(n, Rank::vector);
  double* d0 = out.comp(0);
  double* d1 = out.comp(1);
  double* d2 = out.comp(2);
  std::size_t p = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix, ++p) {
        const auto v = f(out.grid_coord(ix), out.grid_coord(iy), out.grid_coord(iz));
        d0[p] = v[0];
        d1[p] = v[1];
        d2[p] = v[2];
      }
  out.mark_grid_dirty();
  return out;
}

// Random band-limited mean-zero scalar with |k|_inf <= kmax. The kx = 0
// plane is filled Hermitian-symmetrically so the spectrum is exactly real
// and exactly supported in the band.
inline SpectralField random_scalar(int n, int kmax, unsigned seed, bool zero_mean = true) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SpectralField out(n, Rank::scalar);
  auto* sp = out.spec_comp(0);
  const int nh = n / 2 + 1;
  auto slot = [&](int kx, int ky, int kz) {
    const int iy = ky >= 0 ? ky : ky + n;
    const int iz = kz >= 0 ? kz : kz + n;
    return std::size_t(kx) + std::size_t(nh) * (iy + std::size_t(n) * iz);
  };
  const int kcap = std::min(kmax, n / 2 - 1);
  for (int kz = -kcap; kz <= kcap; ++kz)
    for (int ky = -kcap; ky <= kcap; ++ky)
      for (int kx = 0; kx <= kcap; ++kx) {
        const std::complex<double> c(uni(rng), uni(rng));
        if (kx == 0) {
          if (ky < 0 || (ky == 0 && kz < 0)) continue;  // conjugate partner fills it
          sp[slot(0, ky, kz)] = c;
          sp[slot(0, -ky, -kz)] = std::conj(c);
        } else {
          sp[slot(kx, ky, kz)] = c;
        }
      }
  sp[0] = zero_mean ? std::complex<double>(0.0, 0.0) : std::complex<double>(uni(rng), 0.0);
  out.mark_spec_dirty();
  out.ensure_grid();
  return out;
}

inline SpectralField random_vector(int n, int kmax, unsigned seed, bool zero_mean = true) {
  SpectralField out(n, Rank::vector);
  for (int c = 0; c < 3; ++c) {
    SpectralField s = random_scalar(n, kmax, seed + 101 * c, zero_mean);
    out.set_component(c, s);
  }
  return out;
}

// Random band-limited divergence-free vector (projected).
inline SpectralField random_solenoidal(int n, int kmax, unsigned seed) {
  SpectralField v = random_vector(n, kmax, seed);
  // Leray projection: v - grad lap^{-1} div v
  SpectralField p = v.divergence().inv_laplacian();
  v -= p.gradient();
  return v;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace nftest

#include "nashflow/projectors.hpp"

#include <cmath>
#include <stdexcept>

namespace nashflow {

double CutoffMultiplier::operator()(double r) const {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double s = r - 1.0;
  const double d = 1.0 - s * s;
  return std::exp(1.0 - 1.0 / d);
}

namespace {

SpectralField apply_radial_multiplier(const SpectralField& f, double scale) {
  const CutoffMultiplier m;
  f.ensure_spectrum();
  const int n = f.n();
  const int nh = n / 2 + 1;
  SpectralField out(n, f.rank());
  for (int c = 0; c < f.comps(); ++c) {
    const std::complex<double>* src = f.spec_comp(c);
    std::complex<double>* dst = out.spec_comp(c);
    std::size_t s = 0;
    for (int iz = 0; iz < n; ++iz) {
      const int kz = Fft::wavenumber(n, iz);
      for (int iy = 0; iy < n; ++iy) {
        const int ky = Fft::wavenumber(n, iy);
        for (int kx = 0; kx < nh; ++kx, ++s) {
          const double kk = std::sqrt(double(kx) * kx + double(ky) * ky + double(kz) * kz);
          dst[s] = src[s] * m(kk * scale);
        }
      }
    }
  }
  out.mark_spec_dirty();
  return out;
}

}  // namespace

SpectralField project_low(const SpectralField& f, double K) {
  if (K < 1.0) throw std::invalid_argument("project_low: K must be >= 1");
  const double I = std::floor(std::log2(K));
  const double two_i = std::pow(2.0, I);
  return apply_radial_multiplier(f, 1.0 / two_i);
}

SpectralField project_high(const SpectralField& f, double K) {
  SpectralField out = f;
  out -= project_low(f, K);
  return out;
}

TimeSampledField project_low(const TimeSampledField& f, double K) {
  return f.map([K](const SpectralField& fr) { return project_low(fr, K); });
}

MollifiedTuple mollify_tuple(const TimeSampledField& rho, const TimeSampledField& u,
                             const TimeSampledField& p, double ell) {
  const double K = 1.0 / ell;
  return MollifiedTuple{project_low(rho, K), project_low(u, K), project_low(p, K)};
}

SpectralField quadratic_commutator(const SpectralField& rho, const SpectralField& u, double ell,
                                   double div_tol) {
  if (u.rank() != Rank::vector || rho.rank() != Rank::scalar)
    throw std::invalid_argument("quadratic_commutator needs (scalar, vector)");
  const double d = u.divergence().max_abs();
  if (d > div_tol * std::max(1.0, u.max_abs()))
    throw std::invalid_argument("quadratic_commutator: u is not solenoidal");
  const double K = 1.0 / ell;
  SpectralField rho_l = project_low(rho, K);
  SpectralField u_l = project_low(u, K);
  SpectralField flux = multiply(rho_l, u_l);
  flux -= project_low(multiply(rho, u), K);
  return flux.divergence();
}

SpectralField quadratic_commutator_decomposed(const SpectralField& rho, const SpectralField& u,
                                              double ell) {
  const double K = 1.0 / ell;
  SpectralField rho_l = project_low(rho, K);
  SpectralField du = project_low(u, K);
  du -= u;  // u_l - u
  SpectralField out = dot(du, rho_l.gradient());
  out += advective_commutator(u, rho, K);
  return out;
}

SpectralField advective_commutator(const SpectralField& u, const SpectralField& H, double K) {
  SpectralField a = advect(u, project_low(H, K));
  SpectralField b = project_low(advect(u, H), K);
  a -= b;
  return a;
}

}  // namespace nashflow

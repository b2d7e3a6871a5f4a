#pragma once

#include "nashflow/spectral_field.hpp"
#include "nashflow/time_field.hpp"

namespace nashflow {

// Radial low-pass symbol: identically 1 on [0,1], identically 0 on [2,inf),
// smooth monotone transition in between.
class CutoffMultiplier {
 public:
  double operator()(double r) const;
};

// P_{<=K} f = multiplier m(|k| / 2^I) with I = floor(log2 K), the largest
// integer with 2^I <= K. Requires K >= 1.
SpectralField project_low(const SpectralField& f, double K);
SpectralField project_high(const SpectralField& f, double K);
TimeSampledField project_low(const TimeSampledField& f, double K);

// Coarse-scale tuple: each component low-passed at 1/ell.
struct MollifiedTuple {
  TimeSampledField rho;
  TimeSampledField u;
  TimeSampledField p;
};
MollifiedTuple mollify_tuple(const TimeSampledField& rho, const TimeSampledField& u,
                             const TimeSampledField& p, double ell);

// Low-pass commutator entering the mollified continuity equation:
//   Q(rho, u) = div(rho_l u_l - (rho u)_l),   rho_l = P_{<=1/ell} rho.
// u must be divergence-free to tolerance. The result has zero mean.
SpectralField quadratic_commutator(const SpectralField& rho, const SpectralField& u, double ell,
                                   double div_tol = 1e-10);

// Same quantity via the decomposition (u_l - u).grad rho_l + [u.grad, P_{<=1/ell}] rho,
// used as the independent cross-check.
SpectralField quadratic_commutator_decomposed(const SpectralField& rho, const SpectralField& u,
                                              double ell);

// [u.grad, P_{<=K}] H = u.grad(P_{<=K} H) - P_{<=K}(u.grad H).
SpectralField advective_commutator(const SpectralField& u, const SpectralField& H, double K);

}  // namespace nashflow

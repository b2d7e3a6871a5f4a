#pragma once

#include <functional>
#include <memory>

#include "nashflow/invdiv.hpp"
#include "nashflow/spectral_field.hpp"

namespace nashflow {

// One time slice of a volume-preserving flow map xi(x) = x + displacement(x),
// with its Jacobian and inverse Jacobian. identity == true means xi = x and
// the gradient fields may be empty.
struct FlowSlice {
  bool identity = true;
  SpectralField displacement;  // vector (periodic part)
  SpectralField grad;          // tensor, d_j xi^i at ten_index(i,j)
  SpectralField grad_inv;      // tensor, A with A[i][l] = ((grad xi)^{-1})_{il}

  static FlowSlice make_identity(int n);
  static FlowSlice from_displacement(const SpectralField& disp);
};

// A scalar derived from a band-limited base scalar by a Fourier multiplier:
//   f(y) = sum over base modes of Re-synthesis of  mult(k) c_k e^{i k.y}.
// Evaluating f composed with a flow map needs only the mode list, so chains of
// inverse Laplacians and derivatives stay exact.
struct DerivedScalar {
  std::shared_ptr<const ModeList> base;
  std::function<std::complex<double>(const std::array<int, 3>&)> mult;

  static DerivedScalar from_field(const SpectralField& zeta, double tol = 1e-13);
  DerivedScalar apply(const std::function<std::complex<double>(const std::array<int, 3>&)>& m) const;
};

// Synthesize f(xi(x)) on the grid (exact up to pointwise rounding).
SpectralField compose_with_flow(const DerivedScalar& f, const FlowSlice& xi, int n);

struct LocalInvDivConfig {
  int d = 4;  // iteration depth, even
  // Recorded for the diagnostic report only.
  double lambda = 0, lambda_prime = 0, mu = 0, upsilon = 0, upsilon_prime = 0, Lambda = 0,
         nu = 0, nu_prime = 0;
  double jacobian_tol = 0.5;  // |grad xi - Id|_inf allowed on supp G
};

// One inverse-divergence iteration step for a term G * (zeta o xi):
//   G^k (zeta o xi) = d_l R^{kl} + E^k,
// R symmetric, E again a finite sum of terms G' * (zeta' o xi).
struct LocalTerm {
  SpectralField G;      // vector amplitude (low frequency factor)
  DerivedScalar zeta;   // high frequency scalar factor
};

struct LocalStepResult {
  SpectralField R;                // sym_tensor
  std::vector<LocalTerm> error_terms;
  SpectralField E;                // materialized error field (vector)
};

LocalStepResult local_inv_div_step(const LocalTerm& term, const FlowSlice& xi,
                                   double jacobian_tol = 0.5);

// Spec-level overload taking an order-2 tensor potential of the scalar.
LocalStepResult local_inv_div_step(const SpectralField& G, const TensorPotential& theta2,
                                   const FlowSlice& xi, double jacobian_tol = 0.5);

// Iterated operator: d/2 steps, then the nonlocal operator on the remaining
// error. Satisfies  G zeta o xi - <G zeta o xi> = div(R_local + R_nonlocal).
struct LocalInvDivResult {
  SpectralField R_local;           // H(G zeta o xi)
  SpectralField R_nonlocal;        // R*(G zeta o xi)
  std::vector<double> error_history;  // max |E| after each step
  bool decreasing = true;          // error decreased at every step
};

LocalInvDivResult local_inv_div(const SpectralField& G, const SpectralField& zeta,
                                const FlowSlice& xi, const LocalInvDivConfig& cfg);

// Multi-term variant used by the error assembly (shares the iteration).
LocalInvDivResult local_inv_div_terms(std::vector<LocalTerm> terms, const FlowSlice& xi,
                                      const LocalInvDivConfig& cfg);

}  // namespace nashflow

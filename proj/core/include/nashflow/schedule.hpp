#pragma once

#include <string>

namespace nashflow {

// Iteration parameters. Frequencies/amplitudes follow
//   lambda_q = ceil(lambda0^(b^q)),  delta_q = lambda_q^(-2 beta),
// and the derived cutoff/mollification scales
//   tau_q^-1  = 40 pi M / eta * lambda_q^(1/2) lambda_{q+1}^(1/2) (delta_q delta_{q+1})^(1/4)
//   mu_q^-1   = 3 ceil( lambda_q^(1/2) lambda_{q+1}^(1/2) delta_q^(1/4) delta_{q+1}^(-1/4) / 3 )
//   ell       = lambda_q^(-3/4) lambda_{q+1}^(-1/4) (delta_{q+1}/delta_q)^(3/8)
//   ell_t     = lambda_q^(-(1/2 - 3 gamma)) lambda_{q+1}^(-1/2) (delta_q delta_{q+1})^(-1/4)
// with gamma = (b-1)^2.
struct ParameterSchedule {
  // inputs
  double lambda0 = 3100.0;
  double b = 1.5;
  double beta = 0.1;
  double T = 0.0;      // 0 means "derived": a few tau_q0 windows
  double M = 2.0;
  double eta = 0.35;   // Mikado support constant (frozen by the packing search)
  double alpha = 0.05; // Hoelder target used only in n0

  double lambda(int q) const;
  double delta(int q) const;
  double gamma() const { return (b - 1.0) * (b - 1.0); }
  double tau(int q) const;
  long mu_inv(int q) const;  // positive integer divisible by 3
  double ell(int q) const;
  double ell_t(int q) const;
  int n0() const;

  // Throws with the violated range named.
  void validate() const;

  std::string describe(int q) const;
};

}  // namespace nashflow

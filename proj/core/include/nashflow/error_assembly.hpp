#pragma once

#include "nashflow/perturbation.hpp"

namespace nashflow {

// Assembly of the next-stage errors. Every part is either an explicitly
// assembled tensor (entering through its divergence) or the nonlocal inverse
// divergence of an explicitly assembled integrand, so the corrected tuple
// satisfies its system up to (i) the inverse-divergence grid contract,
// (ii) the spatial mean balance, handled exactly by the x-constant correction
// Y(t) added to the flux error. Mean bookkeeping:
//   Y(t) = -<Gamma_0>(t) accumulated from 0, where Gamma_0 is the momentum
//   residual before the correction; it telescopes to frame-level means, no
//   time quadrature enters.
class ErrorAssembler : public std::enable_shared_from_this<ErrorAssembler> {
 public:
  explicit ErrorAssembler(std::shared_ptr<Stage> stage);

  struct Parts {
    double t = 0.0;
    // continuity side (R_pre = R_O + R_T + R_N + R_M with this orientation)
    SpectralField R_O, R_T, R_N, R_M;  // vectors
    SpectralField R_pre, dR_pre;       // value and exact time derivative
    // current side
    SpectralField phiT, phiO, phiR, phiH1, phiH2, phiM1, phiM2;  // tensors
    SpectralField Phi_next;                                      // sum
    // quadratic side (pieces of rho' S'_pre)
    SpectralField SO, SM, ST1, ST2, SN;  // tensors
    SpectralField rhoS_pre;              // sum
    // integrand means at this time
    Eigen::Vector3d ups_dot[7];
    Eigen::Vector3d Ydot = Eigen::Vector3d::Zero();  // <closure integrand>
    // how closely the closure matches the transported-combination integrand
    double transport_attribution = 0.0;
    // identity diagnostics (relative): mass and momentum telescopes
    double mass_identity = 0.0;
    double momentum_identity = 0.0;
  };

  const Parts& parts(double t) const;

  // Mean correction of the flux error: Y(t) = -<Gamma_0> integrated from 0,
  // evaluated by telescoping of the d/dt-form means.
  Eigen::Vector3d Y(double t) const;
  Eigen::Vector3d Y_dot(double t) const;

  // Upsilon_i(t) by composite Simpson of the recorded integrand means
  // (reported; the equations use Y only).
  std::array<Eigen::Vector3d, 7> upsilon(double t, int per_tau = 24) const;

  // The corrected tuple as an evaluator state on [0, T] + tau_q. The
  // evaluators share ownership of this assembler and its stage.
  EulerReynoldsState output();

  const Stage& stage() const { return *stage_; }

 private:
  SpectralField w_times(const Stage::Frame& f, const SpectralField& s) const;
  Eigen::Vector3d momentum_mean(double t) const;  // <rho' u'> + <R_pre>

  std::shared_ptr<Stage> stage_;
  mutable std::map<double, std::shared_ptr<Parts>> cache_;
  mutable std::map<double, Eigen::Vector3d> mom_mean_cache_;
  Eigen::Vector3d mom_mean0_ = Eigen::Vector3d::Zero();
  int parts_cache_ = 10;
};

}  // namespace nashflow

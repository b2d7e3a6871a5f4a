#pragma once

#include <Eigen/Dense>

#include "nashflow/geometry.hpp"

namespace nashflow {

// Pointwise weight values (and their time derivatives) for one family at one
// space-time point. All three solvers follow the same pattern: map the local
// data into the geometric-lemma argument, solve, and postprocess into the
// amplitude pair (a_I, b_I).
//
// Conformal families use the coefficient solve  sum_h c_h (h x h) = A  with
// c_h = Gamma_h^2 > 0; amplitudes are
//   Phi kind:  a = b = delta^(1/2) c^(1/3),  A = Id + delta^(-3/2) M,
//              M = delta^(3/2) (J J^T - Id) - J sym(Phi_l) J^T
//   S kind:    a = delta^(1/2) c^(1/2), b = 0, A = Id + delta^(-1) N,
//              N = delta (J J^T - Id) - J S_l J^T - J W J^T,
//              W = accumulated R/Phi wave tensor  sum theta^2 chi^2 a^2 <psi^2> (ht x ht)
// The orthogonal family uses the affine solve  sum Gamma_h h = w  with
//   R kind:    a = b = lambda_q^(-gamma) delta^(1/2) Gamma^(1/2),
//              w = lambda_q^(2 gamma) delta^(-1) J R_l.
struct WeightJet {
  double a = 0.0, b = 0.0;
  double da = 0.0, db = 0.0;  // time derivatives
};

class CubicWeightSolver {  // Phi kind
 public:
  CubicWeightSolver(const std::vector<IntVec>& family, double delta_next);
  // J = grad xi (row-major 3x3), returns per-h weights
  std::array<WeightJet, 6> solve(const Eigen::Matrix3d& J, const Eigen::Matrix3d& dJ,
                                 const Eigen::Matrix3d& Phi_l, const Eigen::Matrix3d& dPhi_l) const;
  const ConformalFrameSolver& frame() const { return frame_; }

 private:
  ConformalFrameSolver frame_;
  double delta_ = 0.0;
};

class QuadraticWeightSolver {  // S kind
 public:
  QuadraticWeightSolver(const std::vector<IntVec>& family, double delta_next);
  std::array<WeightJet, 6> solve(const Eigen::Matrix3d& J, const Eigen::Matrix3d& dJ,
                                 const Eigen::Matrix3d& S_l, const Eigen::Matrix3d& dS_l,
                                 const Eigen::Matrix3d& prior, const Eigen::Matrix3d& dprior) const;
  const ConformalFrameSolver& frame() const { return frame_; }

 private:
  ConformalFrameSolver frame_;
  double delta_ = 0.0;
};

class TransportWeightSolver {  // R kind
 public:
  TransportWeightSolver(const std::vector<IntVec>& family, double lambda_q_gamma,
                        double delta_next, double n0_ball);
  std::array<WeightJet, 4> solve(const Eigen::Matrix3d& J, const Eigen::Matrix3d& dJ,
                                 const Eigen::Vector3d& R_l, const Eigen::Vector3d& dR_l) const;
  const OrthogonalFrameSolver& frame() const { return frame_; }
  double arg_scale() const { return scale_; }  // lambda^(2 gamma) / delta

 private:
  OrthogonalFrameSolver frame_;
  double lam_gamma_ = 1.0;  // lambda_q^gamma
  double delta_ = 0.0;
  double scale_ = 0.0;
};

}  // namespace nashflow

#include "nashflow/weights.hpp"

#include <cmath>

namespace nashflow {

namespace {
Eigen::Matrix3d sym_part(const Eigen::Matrix3d& m) { return 0.5 * (m + m.transpose()); }
}

CubicWeightSolver::CubicWeightSolver(const std::vector<IntVec>& family, double delta_next)
    : frame_(family), delta_(delta_next) {}

std::array<WeightJet, 6> CubicWeightSolver::solve(const Eigen::Matrix3d& J,
                                                  const Eigen::Matrix3d& dJ,
                                                  const Eigen::Matrix3d& Phi_l,
                                                  const Eigen::Matrix3d& dPhi_l) const {
  const double d32 = std::pow(delta_, 1.5);
  const Eigen::Matrix3d M = d32 * (J * J.transpose() - Eigen::Matrix3d::Identity()) -
                            J * sym_part(Phi_l) * J.transpose();
  const Eigen::Matrix3d A = Eigen::Matrix3d::Identity() + M / d32;
  const Eigen::Matrix3d dM = d32 * (dJ * J.transpose() + J * dJ.transpose()) -
                             dJ * sym_part(Phi_l) * J.transpose() -
                             J * sym_part(dPhi_l) * J.transpose() -
                             J * sym_part(Phi_l) * dJ.transpose();
  const auto c = frame_.coefficients(sym_part(A));
  // dc solves the same linear system with the derivative right-hand side
  Eigen::Matrix<double, 6, 6> basis;
  for (int i = 0; i < 6; ++i) {
    const auto& h = frame_.family()[i];
    const Eigen::Vector3d hv(h[0], h[1], h[2]);
    const Eigen::Matrix3d hh = hv * hv.transpose();
    basis.col(i) << hh(0, 0), hh(0, 1), hh(0, 2), hh(1, 1), hh(1, 2), hh(2, 2);
  }
  const Eigen::Matrix3d dA = sym_part(dM) / d32;
  Eigen::Matrix<double, 6, 1> rhs;
  rhs << dA(0, 0), dA(0, 1), dA(0, 2), dA(1, 1), dA(1, 2), dA(2, 2);
  const Eigen::Matrix<double, 6, 1> dc = basis.fullPivLu().solve(rhs);

  std::array<WeightJet, 6> out;
  const double sd = std::sqrt(delta_);
  for (int i = 0; i < 6; ++i) {
    const double amp = sd * std::cbrt(c[i]);
    const double damp = sd * (1.0 / 3.0) * std::pow(c[i], -2.0 / 3.0) * dc(i);
    out[i] = WeightJet{amp, amp, damp, damp};
  }
  return out;
}

QuadraticWeightSolver::QuadraticWeightSolver(const std::vector<IntVec>& family, double delta_next)
    : frame_(family), delta_(delta_next) {}

std::array<WeightJet, 6> QuadraticWeightSolver::solve(const Eigen::Matrix3d& J,
                                                      const Eigen::Matrix3d& dJ,
                                                      const Eigen::Matrix3d& S_l,
                                                      const Eigen::Matrix3d& dS_l,
                                                      const Eigen::Matrix3d& prior,
                                                      const Eigen::Matrix3d& dprior) const {
  const Eigen::Matrix3d N = delta_ * (J * J.transpose() - Eigen::Matrix3d::Identity()) -
                            J * S_l * J.transpose() - J * prior * J.transpose();
  const Eigen::Matrix3d dN = delta_ * (dJ * J.transpose() + J * dJ.transpose()) -
                             dJ * S_l * J.transpose() - J * dS_l * J.transpose() -
                             J * S_l * dJ.transpose() - dJ * prior * J.transpose() -
                             J * dprior * J.transpose() - J * prior * dJ.transpose();
  const Eigen::Matrix3d A = Eigen::Matrix3d::Identity() + N / delta_;
  const auto c = frame_.coefficients(sym_part(A));
  Eigen::Matrix<double, 6, 6> basis;
  for (int i = 0; i < 6; ++i) {
    const auto& h = frame_.family()[i];
    const Eigen::Vector3d hv(h[0], h[1], h[2]);
    const Eigen::Matrix3d hh = hv * hv.transpose();
    basis.col(i) << hh(0, 0), hh(0, 1), hh(0, 2), hh(1, 1), hh(1, 2), hh(2, 2);
  }
  const Eigen::Matrix3d dA = sym_part(dN) / delta_;
  Eigen::Matrix<double, 6, 1> rhs;
  rhs << dA(0, 0), dA(0, 1), dA(0, 2), dA(1, 1), dA(1, 2), dA(2, 2);
  const Eigen::Matrix<double, 6, 1> dc = basis.fullPivLu().solve(rhs);

  std::array<WeightJet, 6> out;
  const double sd = std::sqrt(delta_);
  for (int i = 0; i < 6; ++i) {
    const double amp = sd * std::sqrt(c[i]);
    const double damp = sd * 0.5 / std::sqrt(c[i]) * dc(i);
    out[i] = WeightJet{amp, 0.0, damp, 0.0};
  }
  return out;
}

TransportWeightSolver::TransportWeightSolver(const std::vector<IntVec>& family,
                                             double lambda_q_gamma, double delta_next,
                                             double n0_ball)
    : frame_(family, n0_ball), lam_gamma_(lambda_q_gamma), delta_(delta_next) {
  scale_ = lam_gamma_ * lam_gamma_ / delta_;
}

std::array<WeightJet, 4> TransportWeightSolver::solve(const Eigen::Matrix3d& J,
                                                      const Eigen::Matrix3d& dJ,
                                                      const Eigen::Vector3d& R_l,
                                                      const Eigen::Vector3d& dR_l) const {
  const Eigen::Vector3d w = scale_ * (J * R_l);
  const Eigen::Vector3d dw = scale_ * (dJ * R_l + J * dR_l);
  const auto g = frame_.gammas(w);
  std::array<WeightJet, 4> out;
  const double pref = std::sqrt(delta_) / lam_gamma_;
  for (int i = 0; i < 4; ++i) {
    // affine solve: dGamma = dw . h / |h|^2 for i < 3, 0 for the closing vector
    double dg = 0.0;
    if (i < 3) {
      const auto& h = frame_.family()[i];
      const Eigen::Vector3d hv(h[0], h[1], h[2]);
      dg = dw.dot(hv) / hv.squaredNorm();
    }
    const double amp = pref * std::sqrt(g[i]);
    const double damp = pref * 0.5 / std::sqrt(g[i]) * dg;
    out[i] = WeightJet{amp, amp, damp, damp};
  }
  return out;
}

}  // namespace nashflow

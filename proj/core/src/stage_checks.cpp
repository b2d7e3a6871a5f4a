#include <cmath>
#include <numbers>

#include "nashflow/perturbation.hpp"

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

FamilyKind kind_of_line(int line) {
  return line < 4 ? FamilyKind::R : (line < 10 ? FamilyKind::Phi : FamilyKind::S);
}
int idx_of_line(int line) { return line < 4 ? line : (line < 10 ? line - 4 : line - 10); }

std::size_t grid_index_near(int n, const Eigen::Vector3d& x) {
  auto wrap = [n](double v) {
    long i = std::lround(v / kTwoPi * n);
    i %= n;
    if (i < 0) i += n;
    return std::size_t(i);
  };
  return wrap(x.x()) + std::size_t(n) * (wrap(x.y()) + std::size_t(n) * wrap(x.z()));
}

}  // namespace

// The three low-frequency cancellation identities at one sample point: the
// cutoff-partition-weighted sums of the solved weights must reproduce the
// regularized errors exactly.
Stage::CancellationSample Stage::check_cancellations(double t, const Eigen::Vector3d& x) const {
  const Frame& f = frame(t);
  const std::size_t pIdx = grid_index_near(in_.n, x);
  std::vector<SpectralField> keepalive;
  const auto slabs = active_slabs(t, f, keepalive);

  Eigen::Matrix3d cubic_sum = Eigen::Matrix3d::Zero();
  Eigen::Vector3d trans_sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d quad_sum = Eigen::Matrix3d::Zero();
  double theta6_chi6 = 0.0;

  for (const auto& slab : slabs) {
    LocalData L = local_data(slab, pIdx, x, f);
    const Eigen::Vector3d ysv = double(mu_inv_) * L.y;
    const std::array<double, 3> ys{ysv.x(), ysv.y(), ysv.z()};
    long cx[2], cy[2], cz[2];
    int ncx, ncy, ncz;
    SpatialPartition::active_cells(ys[0], cx, ncx);
    SpatialPartition::active_cells(ys[1], cy, ncy);
    SpatialPartition::active_cells(ys[2], cz, ncz);
    Eigen::Matrix3d W, dW;
    bool have_prior = false;
    const Eigen::Matrix3d Jinv = L.J.inverse();
    for (int a = 0; a < ncx; ++a)
      for (int b = 0; b < ncy; ++b)
        for (int c = 0; c < ncz; ++c) {
          const std::array<long, 3> cell{cx[a], cy[b], cz[c]};
          const IntVec klass = cell_class(cell);
          // Phi family: theta_I^3 chi_I^3 a^2 b <psi^2 phi> (ht x ht)
          {
            const double thI = slab.theta_Phi;
            if (thI != 0.0) {
              const double chiI = spatial_.chi_I(FamilyKind::Phi, cell, ys);
              if (chiI != 0.0) {
                for (int idx = 0; idx < 6; ++idx) {
                  const WaveAmp amp = wave_amp(slab, L, klass, FamilyKind::Phi, idx);
                  const IntVec& h = mikado_->direction(klass, FamilyKind::Phi, idx);
                  const Eigen::Vector3d ht = Jinv * Eigen::Vector3d(h[0], h[1], h[2]);
                  const double m = mikado_->profile(FamilyKind::Phi, idx).mean_psi2phi();
                  cubic_sum += std::pow(thI, 3) * std::pow(chiI, 3) * amp.a * amp.a * amp.b *
                               m * (ht * ht.transpose());
                }
              }
            }
          }
          // R family: theta_I^2 chi_I^2 a b <psi phi> ht
          {
            const double thI = slab.theta_R;
            if (thI != 0.0) {
              const double chiI = spatial_.chi_I(FamilyKind::R, cell, ys);
              if (chiI != 0.0) {
                for (int idx = 0; idx < 4; ++idx) {
                  const WaveAmp amp = wave_amp(slab, L, klass, FamilyKind::R, idx);
                  const IntVec& h = mikado_->direction(klass, FamilyKind::R, idx);
                  const Eigen::Vector3d ht = Jinv * Eigen::Vector3d(h[0], h[1], h[2]);
                  const double m = mikado_->profile(FamilyKind::R, idx).mean_psiphi();
                  trans_sum += thI * thI * chiI * chiI * amp.a * amp.b * m * ht;
                }
              }
            }
          }
          // all families: theta_I^2 chi_I^2 a^2 <psi^2> (ht x ht)
          for (int line = 0; line < 16; ++line) {
            const FamilyKind kind = kind_of_line(line);
            const int idx = idx_of_line(line);
            const double thI = kind == FamilyKind::Phi ? slab.theta_Phi : slab.theta_R;
            if (thI == 0.0) continue;
            const double chiI = spatial_.chi_I(kind, cell, ys);
            if (chiI == 0.0) continue;
            LocalData LS = L;
            if (kind == FamilyKind::S) {
              if (!have_prior) {
                prior_tensor(slabs, pIdx, x, f, W, dW);
                have_prior = true;
              }
              LS.prior = W;
              LS.dprior = dW;
            }
            const WaveAmp amp = wave_amp(slab, LS, klass, kind, idx);
            const IntVec& h = mikado_->direction(klass, kind, idx);
            const Eigen::Vector3d ht = Jinv * Eigen::Vector3d(h[0], h[1], h[2]);
            const double m = mikado_->profile(kind, idx).mean_psi2();
            quad_sum += thI * thI * chiI * chiI * amp.a * amp.a * m * (ht * ht.transpose());
          }
          // partition weight (for reference)
          double chiprod = 1.0;
          for (int ax = 0; ax < 3; ++ax) chiprod *= spatial_.axis_chi(cell[ax], ys[ax]);
          theta6_chi6 += std::pow(spatial_.chi_k(cell, ys), 6) *
                         std::pow(tempo_.theta_p(slab.p, t / tau_), 6);
          (void)chiprod;
        }
  }

  const double delta = delta_next_;
  const Eigen::Matrix3d Phil = 0.5 * (mat_at_sample(f.Phi_l.v, pIdx) +
                                      mat_at_sample(f.Phi_l.v, pIdx).transpose());
  const Eigen::Matrix3d Sl = mat_at_sample(f.S_l.v, pIdx);
  const Eigen::Vector3d Rl(f.R_l.v.comp(0)[pIdx], f.R_l.v.comp(1)[pIdx], f.R_l.v.comp(2)[pIdx]);

  CancellationSample out;
  const Eigen::Matrix3d cubic_rhs =
      std::pow(delta, 1.5) * Eigen::Matrix3d::Identity() - Phil;
  const Eigen::Matrix3d quad_rhs = delta * Eigen::Matrix3d::Identity() - Sl;
  out.cubic = (cubic_sum - cubic_rhs).cwiseAbs().maxCoeff() /
              std::max(1e-300, cubic_rhs.cwiseAbs().maxCoeff());
  out.transport =
      (trans_sum - Rl).cwiseAbs().maxCoeff() / std::max(1e-300, std::max(1.0e-12, Rl.norm()));
  out.quadratic = (quad_sum - quad_rhs).cwiseAbs().maxCoeff() /
                  std::max(1e-300, quad_rhs.cwiseAbs().maxCoeff());
  return out;
}

Eigen::Matrix3d Stage::mat_at_sample(const SpectralField& f, std::size_t p) {
  Eigen::Matrix3d m;
  if (f.rank() == Rank::tensor) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = f.comp(ten_index(i, j))[p];
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = f.comp(sym_index(i, j))[p];
  }
  return m;
}

// Representation of the assembled fields through the profile coefficient
// tables truncated at |m| <= mmax, at one sample point.
Stage::RepresentationSample Stage::check_representation(double t, const Eigen::Vector3d& x,
                                                        double mmax) const {
  const Frame& f = frame(t);
  const std::size_t pIdx = grid_index_near(in_.n, x);
  std::vector<SpectralField> keepalive;
  const auto slabs = active_slabs(t, f, keepalive);

  // assembled pointwise values
  const double th0 = f.theta0.v.comp(0)[pIdx];
  const Eigen::Vector3d w0(f.w0.v.comp(0)[pIdx], f.w0.v.comp(1)[pIdx], f.w0.v.comp(2)[pIdx]);

  // coefficient-synthesis side
  double th_syn = 0.0;
  Eigen::Vector3d w_syn = Eigen::Vector3d::Zero();
  Eigen::Matrix3d quad_syn = Eigen::Matrix3d::Zero();
  Eigen::Vector3d trans_syn = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cubic_syn = Eigen::Matrix3d::Zero();

  for (const auto& slab : slabs) {
    LocalData L = local_data(slab, pIdx, x, f);
    const Eigen::Vector3d ysv = double(mu_inv_) * L.y;
    const std::array<double, 3> ys{ysv.x(), ysv.y(), ysv.z()};
    long cx[2], cy[2], cz[2];
    int ncx, ncy, ncz;
    SpatialPartition::active_cells(ys[0], cx, ncx);
    SpatialPartition::active_cells(ys[1], cy, ncy);
    SpatialPartition::active_cells(ys[2], cz, ncz);
    Eigen::Matrix3d W, dW;
    bool have_prior = false;
    const Eigen::Matrix3d Jinv = L.J.inverse();
    for (int a = 0; a < ncx; ++a)
      for (int b = 0; b < ncy; ++b)
        for (int c = 0; c < ncz; ++c) {
          const std::array<long, 3> cell{cx[a], cy[b], cz[c]};
          const IntVec klass = cell_class(cell);
          for (int line = 0; line < 16; ++line) {
            const FamilyKind kind = kind_of_line(line);
            const int idx = idx_of_line(line);
            const double thI = kind == FamilyKind::Phi ? slab.theta_Phi : slab.theta_R;
            if (thI == 0.0) continue;
            const double chiI = spatial_.chi_I(kind, cell, ys);
            if (chiI == 0.0) continue;
            LocalData LS = L;
            if (kind == FamilyKind::S) {
              if (!have_prior) {
                prior_tensor(slabs, pIdx, x, f, W, dW);
                have_prior = true;
              }
              LS.prior = W;
              LS.dprior = dW;
            }
            const WaveAmp amp = wave_amp(slab, LS, klass, kind, idx);
            const MikadoProfile& prof = mikado_->profile(kind, idx);
            const TubeGeometry& geom = mikado_->instance_geometry(klass, kind, idx);
            const IntVec& h = mikado_->direction(klass, kind, idx);
            const Eigen::Vector3d ht = Jinv * Eigen::Vector3d(h[0], h[1], h[2]);
            const Eigen::Vector3d arg = lambda_next_ * (L.y - mikado_->shift(klass, kind, idx));
            // truncated synthesis of the periodic profiles at the argument
            double syn_psi = 0.0, syn_phi = 0.0, syn_psi2 = prof.mean_psi2(),
                   syn_psiphi = prof.mean_psiphi(), syn_psi2phi = prof.mean_psi2phi();
            for (const auto& m : prof.cross_modes(mmax)) {
              const Eigen::Vector3d mv(m[0], m[1], m[2]);
              const double mn = mv.norm();
              const double ph = std::cos(mv.dot(arg));
              syn_psi += prof.psi_hat(mn) * ph;
              syn_phi += prof.phi_hat(mn) * ph;
              syn_psi2 += prof.psi2_hat(mn) * ph;
              syn_psiphi += prof.psiphi_hat(mn) * ph;
              syn_psi2phi += prof.psi2phi_hat(mn) * ph;
            }
            w_syn += thI * chiI * amp.a * syn_psi * ht;
            if (amp.b != 0.0) th_syn += thI * chiI * amp.b * syn_phi;
            quad_syn += thI * thI * chiI * chiI * amp.a * amp.a * syn_psi2 * (ht * ht.transpose());
            trans_syn += thI * thI * chiI * chiI * amp.a * amp.b * syn_psiphi * ht;
            cubic_syn += std::pow(thI, 3) * std::pow(chiI, 3) * amp.a * amp.a * amp.b *
                         syn_psi2phi * (ht * ht.transpose());
          }
        }
  }

  // low-frequency references
  const double delta = delta_next_;
  const Eigen::Matrix3d Phil = 0.5 * (mat_at_sample(f.Phi_l.v, pIdx) +
                                      mat_at_sample(f.Phi_l.v, pIdx).transpose());
  const Eigen::Matrix3d Sl = mat_at_sample(f.S_l.v, pIdx);
  const Eigen::Vector3d Rl(f.R_l.v.comp(0)[pIdx], f.R_l.v.comp(1)[pIdx], f.R_l.v.comp(2)[pIdx]);

  RepresentationSample out;
  out.theta = std::abs(th0 - th_syn) / std::max(1.0, std::abs(th0));
  out.w = (w0 - w_syn).norm() / std::max(1.0, w0.norm());
  // products against their low + oscillatory representations
  const Eigen::Matrix3d quad_lhs = w0 * w0.transpose();
  const Eigen::Matrix3d quad_rhs = delta * Eigen::Matrix3d::Identity() - Sl +
                                   (quad_syn - (delta * Eigen::Matrix3d::Identity() - Sl));
  (void)quad_rhs;
  out.quad = (quad_lhs - quad_syn).cwiseAbs().maxCoeff() /
             std::max(1.0, quad_lhs.cwiseAbs().maxCoeff());
  const Eigen::Vector3d trans_lhs = th0 * w0;
  out.trans = (trans_lhs - trans_syn).norm() / std::max(1.0, trans_lhs.norm());
  const Eigen::Matrix3d cubic_lhs = th0 * (w0 * w0.transpose());
  out.cubic = (cubic_lhs - cubic_syn).cwiseAbs().maxCoeff() /
              std::max(1.0, cubic_lhs.cwiseAbs().maxCoeff());
  (void)Rl;
  (void)Phil;
  return out;
}

// Max over grid points of products of distinct instance supports (including
// the cutoff factor): zero when the placement keeps co-active tubes disjoint.
double Stage::support_product_max(int grid_n) const {
  double worst = 0.0;
#pragma omp parallel for schedule(dynamic, 2) reduction(max : worst)
  for (int iz = 0; iz < grid_n; ++iz) {
    for (int iy = 0; iy < grid_n; ++iy)
      for (int ix = 0; ix < grid_n; ++ix) {
        const Eigen::Vector3d x(kTwoPi * ix / grid_n, kTwoPi * iy / grid_n,
                                kTwoPi * iz / grid_n);
        const Eigen::Vector3d ysv = double(mu_inv_) * x;
        const std::array<double, 3> ys{ysv.x(), ysv.y(), ysv.z()};
        long cx[2], cy[2], cz[2];
        int ncx, ncy, ncz;
        SpatialPartition::active_cells(ys[0], cx, ncx);
        SpatialPartition::active_cells(ys[1], cy, ncy);
        SpatialPartition::active_cells(ys[2], cz, ncz);
        double best1 = 0.0, best2 = 0.0;  // two largest |psi or phi| * chi
        bool class_seen[27] = {};
        for (int a = 0; a < ncx; ++a)
          for (int b = 0; b < ncy; ++b)
            for (int c = 0; c < ncz; ++c) {
              const std::array<long, 3> cell{cx[a], cy[b], cz[c]};
              const IntVec klass = cell_class(cell);
              const int ci = class_index(klass);
              if (class_seen[ci]) continue;
              class_seen[ci] = true;
              for (int line = 0; line < 16; ++line) {
                const FamilyKind kind = kind_of_line(line);
                const int idx = idx_of_line(line);
                const MikadoProfile& prof = mikado_->profile(kind, idx);
                const TubeGeometry& geom = mikado_->instance_geometry(klass, kind, idx);
                const Eigen::Vector3d z = mikado_->shift(klass, kind, idx);
                const double rho =
                    geom.distance(lambda_next_ * (x - z), Eigen::Vector3d::Zero());
                if (rho >= prof.support_radius()) continue;
                const double chiI = spatial_.chi_I(kind, cell, ys);
                const double v =
                    chiI * std::max(std::abs(prof.psi_radial(rho)), std::abs(prof.phi_radial(rho)));
                if (v > best1) {
                  best2 = best1;
                  best1 = v;
                } else if (v > best2) {
                  best2 = v;
                }
              }
            }
        worst = std::max(worst, best1 * best2);
      }
  }
  return worst;
}

}  // namespace nashflow

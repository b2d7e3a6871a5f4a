#include "nashflow/perturbation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nashflow/invdiv.hpp"
#include "nashflow/projectors.hpp"

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void gauss_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

Eigen::Matrix3d mat_at(const SpectralField& f, std::size_t p) {
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

Eigen::Vector3d vec_at(const SpectralField& f, std::size_t p) {
  return Eigen::Vector3d(f.comp(0)[p], f.comp(1)[p], f.comp(2)[p]);
}

FamilyKind kind_of_line(int line) {
  return line < 4 ? FamilyKind::R : (line < 10 ? FamilyKind::Phi : FamilyKind::S);
}
int idx_of_line(int line) { return line < 4 ? line : (line < 10 ? line - 4 : line - 10); }

}  // namespace

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

Stage::Stage(const EulerReynoldsState& in, const StageConfig& cfg) : in_(in), cfg_(cfg) {
  in_.schedule.validate();
  const int q = in_.q;
  tau_ = in_.schedule.tau(q);
  mu_inv_ = in_.schedule.mu_inv(q);
  lambda_next_ = in_.schedule.lambda(q + 1);
  delta_next_ = in_.schedule.delta(q + 1);
  ell_ = in_.schedule.ell(q);
  ell_t_ = in_.schedule.ell_t(q);

  families_ = direction_families(cfg_.family_style);
  MikadoSet::Config mcfg = cfg_.mikado;
  mcfg.eta = in_.schedule.eta;
  mikado_ = std::make_unique<MikadoSet>(families_, mcfg);

  // active slabs: supports of theta_p(t/tau) meeting [-tau, T+tau]
  p_lo_ = int(std::ceil(-1.0 - 9.0 / 8.0 + 1e-9));
  p_hi_ = int(std::floor(in_.T / tau_ + 1.0 + 1.0 / 8.0 - 1e-9));

  const double K = 1.0 / ell_;
  rho_ell_f_ =
      TimeField::apply_linear(in_.rho, [K](const SpectralField& f) { return project_low(f, K); });
  u_ell_f_ =
      TimeField::apply_linear(in_.u, [K](const SpectralField& f) { return project_low(f, K); });
  p_ell_f_ =
      TimeField::apply_linear(in_.p, [K](const SpectralField& f) { return project_low(f, K); });

  // frozen-velocity detection (stage 0 has u = 0 identically)
  frozen_ = true;
  for (double t : {in_.t_lo(), 0.5 * (in_.t_lo() + in_.t_hi()), in_.t_hi()})
    if (in_.u.value(t).max_abs() != 0.0) frozen_ = false;

  const int n = in_.n;
  if (frozen_) {
    for (int p = p_lo_; p <= p_hi_; ++p)
      flows_.emplace(p, FlowMap::identity(n, p * tau_, (p - 0.5) * tau_, (p + 1.5) * tau_, 5));
  } else {
    std::vector<double> times;
    const double dt = tau_ / 16.0;
    for (double t = in_.t_lo(); t <= in_.t_hi() + 0.5 * dt; t += dt) times.push_back(t);
    TimeSampledField usamp =
        TimeSampledField::generate(times, [&](double t) { return u_ell_f_.value(t); });
    for (int p = p_lo_; p <= p_hi_; ++p) {
      const double t_p = p * tau_;
      const double lo = std::max(in_.t_lo(), (p - 0.5) * tau_);
      const double hi = std::min(in_.t_hi(), (p + 1.5) * tau_);
      flows_.emplace(p, FlowMap::solve(usamp, std::clamp(t_p, lo, hi), lo, hi));
    }
  }

  // regularized errors: low-pass then mollify along the flow
  {
    std::vector<double> gx, gw;
    gauss_nodes(cfg_.moll_quad_nodes, gx, gw);
    std::vector<double> wn(gx.size());
    double total = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      wn[i] = gw[i] * mollifier_weight(gx[i]);
      total += wn[i];
    }
    for (double& w : wn) w /= total;

    auto make_moll = [&](const TimeField& src) {
      TimeField low =
          TimeField::apply_linear(src, [K](const SpectralField& f) { return project_low(f, K); });
      if (frozen_) {
        const double del = ell_t_;
        auto gxc = gx;
        auto wnc = wn;
        return TimeField::analytic(
            [low, gxc, wnc, del](double t) {
              SpectralField acc = low.value(t + del * gxc[0]);
              acc *= wnc[0];
              for (std::size_t i = 1; i < gxc.size(); ++i) {
                SpectralField term = low.value(t + del * gxc[i]);
                term *= wnc[i];
                acc += term;
              }
              return acc;
            },
            [low, gxc, wnc, del](double t) {
              SpectralField acc = low.ddt(t + del * gxc[0]);
              acc *= wnc[0];
              for (std::size_t i = 1; i < gxc.size(); ++i) {
                SpectralField term = low.ddt(t + del * gxc[i]);
                term *= wnc[i];
                acc += term;
              }
              return acc;
            });
      }
      std::vector<double> out_times, stimes;
      const double dt = tau_ / 16.0;
      for (double t = in_.t_lo() + ell_t_; t <= in_.t_hi() - ell_t_ + 0.5 * dt; t += dt)
        out_times.push_back(t);
      for (double t = in_.t_lo(); t <= in_.t_hi() + 0.5 * dt; t += dt) stimes.push_back(t);
      TimeSampledField lowsamp =
          TimeSampledField::generate(stimes, [&](double t) { return low.value(t); });
      TimeSampledField usamp =
          TimeSampledField::generate(stimes, [&](double t) { return u_ell_f_.value(t); });
      return TimeField::sampled(
          flow_mollify(lowsamp, usamp, ell_t_, out_times, cfg_.moll_quad_nodes));
    };
    R_ell_f_ = make_moll(in_.R);
    Phi_ell_f_ = make_moll(in_.Phi);
    S_ell_f_ = make_moll(in_.S);
  }

  build_weights();
  if (frozen_) build_hits();
}

void Stage::build_weights() {
  double n0 = cfg_.n0_ball;
  const double scale =
      std::pow(in_.schedule.lambda(in_.q), 2.0 * in_.schedule.gamma()) / delta_next_;
  if (n0 <= 0.0) {
    double sup = 0.0;
    for (int i = 0; i <= 8; ++i) {
      const double t = in_.t_lo() + (in_.t_hi() - in_.t_lo()) * i / 8.0;
      sup = std::max(sup, R_ell_f_.value(t).max_abs());
    }
    n0 = 1.10 * scale * sup * 1.25 + 1e-12;  // Jacobian headroom
  }
  n0_ball_ = n0;

  const double lamg = std::pow(in_.schedule.lambda(in_.q), in_.schedule.gamma());
  for (int c = 0; c < 27; ++c) {
    const IntVec klass{c % 3, (c / 3) % 3, c / 9};
    const DirectionFamily& fam = family_for_class(families_, klass);
    cubic_.emplace_back(fam.phi, delta_next_);
    quadratic_.emplace_back(fam.s, delta_next_);
    transport_.emplace_back(fam.r, lamg, delta_next_, n0_ball_);
  }
}

// Static tube membership for frozen flows: per grid point, the instances whose
// scaled tube contains it and whose class owns an active cutoff cell there.
void Stage::build_hits() {
  const int n = in_.n;
  const std::size_t np = std::size_t(n) * n * n;
  const double lam = lambda_next_;
  hit_offset_.assign(np + 1, 0);
  std::vector<std::vector<Hit>> rows(np);

#pragma omp parallel for schedule(dynamic, 2)
  for (int iz = 0; iz < n; ++iz) {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const std::size_t pIdx = std::size_t(ix) + std::size_t(n) * (iy + std::size_t(n) * iz);
        const Eigen::Vector3d x(kTwoPi * ix / n, kTwoPi * iy / n, kTwoPi * iz / n);
        const Eigen::Vector3d ys = double(mu_inv_) * x;
        long cx[2], cy[2], cz[2];
        int ncx, ncy, ncz;
        SpatialPartition::active_cells(ys.x(), cx, ncx);
        SpatialPartition::active_cells(ys.y(), cy, ncy);
        SpatialPartition::active_cells(ys.z(), cz, ncz);
        bool class_seen[27] = {};
        for (int a = 0; a < ncx; ++a)
          for (int b = 0; b < ncy; ++b)
            for (int c = 0; c < ncz; ++c) {
              const IntVec klass = cell_class({cx[a], cy[b], cz[c]});
              const int ci = class_index(klass);
              if (class_seen[ci]) continue;
              class_seen[ci] = true;
              for (int line = 0; line < 16; ++line) {
                const FamilyKind kind = kind_of_line(line);
                const int idx = idx_of_line(line);
                const MikadoProfile& prof = mikado_->profile(kind, idx);
                const TubeGeometry& geom = mikado_->instance_geometry(klass, kind, idx);
                const Eigen::Vector3d z = mikado_->shift(klass, kind, idx);
                const double rho = geom.distance(lam * (x - z), Eigen::Vector3d::Zero());
                if (rho < prof.support_radius())
                  rows[pIdx].push_back(Hit{16 * ci + line, rho});
              }
            }
      }
  }
  std::size_t total = 0;
  for (std::size_t p = 0; p < np; ++p) {
    hit_offset_[p] = total;
    total += rows[p].size();
  }
  hit_offset_[np] = total;
  hits_.resize(total);
  for (std::size_t p = 0; p < np; ++p)
    std::copy(rows[p].begin(), rows[p].end(), hits_.begin() + hit_offset_[p]);
}

const FlowMap& Stage::flow(int p) const {
  auto it = flows_.find(p);
  if (it == flows_.end()) throw std::out_of_range("no flow map for slab");
  return it->second;
}

// ---------------------------------------------------------------------------
// pointwise weight evaluation
// ---------------------------------------------------------------------------

// Wave amplitude (and derivative) of one instance at one point. `prior` is
// filled lazily for S-kind solves.
Stage::WaveAmp Stage::wave_amp(const SlabData& slab, const LocalData& L, const IntVec& klass,
                               FamilyKind kind, int idx) const {
  const int ci = class_index(klass);
  WaveAmp out;
  WeightJet wj;
  if (kind == FamilyKind::R) {
    wj = transport_[ci].solve(L.J, L.dJ, L.Rl, L.dRl)[idx];
  } else if (kind == FamilyKind::Phi) {
    wj = cubic_[ci].solve(L.J, L.dJ, L.Phil, L.dPhil)[idx];
  } else {
    wj = quadratic_[ci].solve(L.J, L.dJ, L.Sl, L.dSl, L.prior, L.dprior)[idx];
    if (slab.p == cfg_.flip_p0) {
      wj.a = -wj.a;
      wj.da = -wj.da;
    }
  }
  out.a = wj.a;
  out.da = wj.da;
  out.b = wj.b;
  out.db = wj.db;
  return out;
}

// Accumulated R/Phi wave tensor sum_J theta_J^2 chi_J^2 a_J^2 <psi_J^2>
// (htilde x htilde) at one point, over the active slabs and cells.
void Stage::prior_tensor(const std::vector<SlabData>& slabs, std::size_t pIdx,
                         const Eigen::Vector3d& x, const Frame& f, Eigen::Matrix3d& W,
                         Eigen::Matrix3d& dW) const {
  W.setZero();
  dW.setZero();
  for (const auto& s2 : slabs) {
    LocalData L2 = local_data(s2, pIdx, x, f);
    const Eigen::Vector3d ys2 = double(mu_inv_) * L2.y;
    long dx2[2], dy2[2], dz2[2];
    int nx2, ny2, nz2;
    SpatialPartition::active_cells(ys2.x(), dx2, nx2);
    SpatialPartition::active_cells(ys2.y(), dy2, ny2);
    SpatialPartition::active_cells(ys2.z(), dz2, nz2);
    const Eigen::Matrix3d J2inv = L2.J.inverse();
    const Eigen::Matrix3d dJ2inv = -J2inv * L2.dJ * J2inv;
    for (int a2 = 0; a2 < nx2; ++a2)
      for (int b2 = 0; b2 < ny2; ++b2)
        for (int c2 = 0; c2 < nz2; ++c2) {
          const std::array<long, 3> cell2{dx2[a2], dy2[b2], dz2[c2]};
          const IntVec kl2 = cell_class(cell2);
          const int ci2 = class_index(kl2);
          const std::array<double, 3> ya2{ys2.x(), ys2.y(), ys2.z()};
          for (int k2 = 0; k2 < 2; ++k2) {
            const FamilyKind kind2 = k2 == 0 ? FamilyKind::R : FamilyKind::Phi;
            const double th2 = kind2 == FamilyKind::Phi ? s2.theta_Phi : s2.theta_R;
            if (th2 == 0.0) continue;
            const double dth2 = kind2 == FamilyKind::Phi ? s2.dtheta_Phi : s2.dtheta_R;
            const double chi2 = spatial_.chi_I(kind2, cell2, ya2);
            if (chi2 == 0.0) continue;
            double dchi2 = 0.0;
            if (!s2.identity) {
              const auto g2 = spatial_.chi_I_grad(kind2, cell2, ya2);
              const Eigen::Vector3d xidot = -(L2.J * L2.ul);
              dchi2 = double(mu_inv_) *
                      (g2[0] * xidot.x() + g2[1] * xidot.y() + g2[2] * xidot.z());
            }
            const int cnt2 = MikadoSet::kind_count(kind2);
            std::array<WeightJet, 6> ws2{};
            if (kind2 == FamilyKind::R) {
              const auto wr = transport_[ci2].solve(L2.J, L2.dJ, L2.Rl, L2.dRl);
              for (int i2 = 0; i2 < 4; ++i2) ws2[i2] = wr[i2];
            } else {
              const auto wp = cubic_[ci2].solve(L2.J, L2.dJ, L2.Phil, L2.dPhil);
              for (int i2 = 0; i2 < 6; ++i2) ws2[i2] = wp[i2];
            }
            for (int i2 = 0; i2 < cnt2; ++i2) {
              const IntVec& h2 = mikado_->direction(kl2, kind2, i2);
              const Eigen::Vector3d hv2(h2[0], h2[1], h2[2]);
              const Eigen::Vector3d ht2 = J2inv * hv2;
              const Eigen::Vector3d dht2 = dJ2inv * hv2;
              const double psi2m = mikado_->profile(kind2, i2).mean_psi2();
              const double fac = th2 * th2 * chi2 * chi2 * ws2[i2].a * ws2[i2].a * psi2m;
              const double dfac =
                  psi2m * (2.0 * th2 * dth2 * chi2 * chi2 * ws2[i2].a * ws2[i2].a +
                           2.0 * th2 * th2 * chi2 * dchi2 * ws2[i2].a * ws2[i2].a +
                           2.0 * th2 * th2 * chi2 * chi2 * ws2[i2].a * ws2[i2].da);
              const Eigen::Matrix3d hh = ht2 * ht2.transpose();
              const Eigen::Matrix3d dhh = dht2 * ht2.transpose() + ht2 * dht2.transpose();
              W += fac * hh;
              dW += dfac * hh + fac * dhh;
            }
          }
        }
  }
}

Stage::LocalData Stage::local_data(const SlabData& slab, std::size_t pIdx,
                                   const Eigen::Vector3d& x, const Frame& f) const {
  LocalData L;
  if (slab.identity) {
    L.y = x;
    L.J = Eigen::Matrix3d::Identity();
    L.dJ = Eigen::Matrix3d::Zero();
  } else {
    L.y = x + vec_at(*slab.disp, pIdx);
    L.J = mat_at(*slab.grad, pIdx);
    L.dJ = mat_at(*slab.grad_dot, pIdx);
    L.ul = vec_at(f.u_l.v, pIdx);
  }
  L.Rl = vec_at(f.R_l.v, pIdx);
  L.dRl = vec_at(f.R_l.d, pIdx);
  const Eigen::Matrix3d P = mat_at(f.Phi_l.v, pIdx);
  const Eigen::Matrix3d dP = mat_at(f.Phi_l.d, pIdx);
  L.Phil = 0.5 * (P + P.transpose());
  L.dPhil = 0.5 * (dP + dP.transpose());
  L.Sl = mat_at(f.S_l.v, pIdx);
  L.dSl = mat_at(f.S_l.d, pIdx);
  return L;
}

// ---------------------------------------------------------------------------
// frame assembly
// ---------------------------------------------------------------------------

const Stage::Frame& Stage::frame(double t) const {
  auto it = frames_.find(t);
  if (it != frames_.end()) return *it->second;
  auto f = std::make_shared<Frame>();
  f->t = t;
  assemble(*f);
  if (int(frames_.size()) >= cfg_.frame_cache) frames_.erase(frames_.begin());
  frames_.emplace(t, f);
  return *f;
}

std::vector<Stage::SlabData> Stage::active_slabs(double t, const Frame& f,
                                                 std::vector<SpectralField>& keepalive) const {
  std::vector<SlabData> slabs;
  for (int p = p_lo_; p <= p_hi_; ++p) {
    const double thR = tempo_.theta_I(FamilyKind::R, p, t, tau_);
    const double thP = tempo_.theta_I(FamilyKind::Phi, p, t, tau_);
    if (thR == 0.0 && thP == 0.0) continue;
    SlabData s;
    s.p = p;
    s.theta_R = thR;
    s.dtheta_R = tempo_.theta_I_prime(FamilyKind::R, p, t, tau_);
    s.theta_Phi = thP;
    s.dtheta_Phi = tempo_.theta_I_prime(FamilyKind::Phi, p, t, tau_);
    const FlowMap& fm = flow(p);
    s.identity = fm.is_identity();
    if (!s.identity) {
      keepalive.push_back(fm.displacement_at(t));
      s.disp = &keepalive.back();
      FlowSlice slice = FlowSlice::from_displacement(keepalive.back());
      keepalive.push_back(slice.grad);
      s.grad = &keepalive.back();
      const double hdt = tau_ / 256.0;
      SpectralField dplus = fm.displacement_at(t + hdt);
      SpectralField dminus = fm.displacement_at(t - hdt);
      dplus -= dminus;
      dplus *= 1.0 / (2.0 * hdt);
      FlowSlice dsl = FlowSlice::from_displacement(dplus);
      SpectralField gdot = dsl.grad;
      for (int i = 0; i < 3; ++i) {
        double* c = gdot.comp(ten_index(i, i));
        for (std::size_t pp = 0; pp < gdot.points(); ++pp) c[pp] -= 1.0;
      }
      gdot.mark_grid_dirty();
      keepalive.push_back(gdot);
      s.grad_dot = &keepalive.back();
    }
    slabs.push_back(s);
  }
  return slabs;
}

void Stage::assemble(Frame& f) const {
  const int n = in_.n;
  const double t = f.t;

  f.rho_l = Jet{rho_ell_f_.value(t), rho_ell_f_.ddt(t)};
  f.u_l = Jet{u_ell_f_.value(t), u_ell_f_.ddt(t)};
  f.R_l = Jet{R_ell_f_.value(t), R_ell_f_.ddt(t)};
  f.Phi_l = Jet{Phi_ell_f_.value(t), Phi_ell_f_.ddt(t)};
  f.S_l = Jet{S_ell_f_.value(t), S_ell_f_.ddt(t)};
  for (Jet* j : {&f.R_l, &f.Phi_l, &f.S_l, &f.u_l, &f.rho_l}) {
    j->v.ensure_grid();
    j->d.ensure_grid();
  }

  f.theta0 = Jet(n, Rank::scalar);
  f.w0 = Jet(n, Rank::vector);

  std::vector<SpectralField> keepalive;
  keepalive.reserve(3 * (p_hi_ - p_lo_ + 1) + 4);
  const std::vector<SlabData> slabs = active_slabs(t, f, keepalive);

  double* th_v = f.theta0.v.comp(0);
  double* th_d = f.theta0.d.comp(0);
  double* w_v[3] = {f.w0.v.comp(0), f.w0.v.comp(1), f.w0.v.comp(2)};
  double* w_d[3] = {f.w0.d.comp(0), f.w0.d.comp(1), f.w0.d.comp(2)};
  const std::size_t np = std::size_t(n) * n * n;
  std::fill(th_v, th_v + np, 0.0);
  std::fill(th_d, th_d + np, 0.0);
  for (int c = 0; c < 3; ++c) {
    std::fill(w_v[c], w_v[c] + np, 0.0);
    std::fill(w_d[c], w_d[c] + np, 0.0);
  }

  const bool fast = frozen_ && !hits_.empty();

  if (fast) {
#pragma omp parallel for schedule(dynamic, 1024)
    for (long pi = 0; pi < long(np); ++pi) {
      const std::size_t pIdx = std::size_t(pi);
      const std::size_t h0 = hit_offset_[pIdx];
      const std::size_t h1 = hit_offset_[pIdx + 1];
      if (h0 == h1) continue;
      const int ix = int(pIdx % n);
      const int iy = int((pIdx / n) % n);
      const int iz = int(pIdx / (std::size_t(n) * n));
      const Eigen::Vector3d x(kTwoPi * ix / n, kTwoPi * iy / n, kTwoPi * iz / n);
      const std::array<double, 3> ys{double(mu_inv_) * x.x(), double(mu_inv_) * x.y(),
                                     double(mu_inv_) * x.z()};
      long cax[2], cay[2], caz[2];
      int nax, nay, naz;
      SpatialPartition::active_cells(ys[0], cax, nax);
      SpatialPartition::active_cells(ys[1], cay, nay);
      SpatialPartition::active_cells(ys[2], caz, naz);

      double acc_th = 0.0, acc_dth = 0.0;
      Eigen::Vector3d acc_w = Eigen::Vector3d::Zero(), acc_dw = Eigen::Vector3d::Zero();
      bool have_prior = false;
      Eigen::Matrix3d W, dW;
      for (const auto& slab : slabs) {
        LocalData L = local_data(slab, pIdx, x, f);
        for (std::size_t h = h0; h < h1; ++h) {
          const Hit& hit = hits_[h];
          const int ci = hit.inst / 16;
          const int line = hit.inst % 16;
          const FamilyKind kind = kind_of_line(line);
          const int idx = idx_of_line(line);
          const IntVec klass{ci % 3, (ci / 3) % 3, ci / 9};
          const double th = kind == FamilyKind::Phi ? slab.theta_Phi : slab.theta_R;
          if (th == 0.0) continue;
          const double dth = kind == FamilyKind::Phi ? slab.dtheta_Phi : slab.dtheta_R;
          // the active cell of this class at the point (at most one)
          double chi = 0.0;
          std::array<long, 3> cell{};
          for (int a = 0; a < nax && chi == 0.0; ++a)
            for (int b = 0; b < nay && chi == 0.0; ++b)
              for (int c = 0; c < naz; ++c) {
                const std::array<long, 3> cand{cax[a], cay[b], caz[c]};
                if (class_index(cell_class(cand)) != ci) continue;
                chi = spatial_.chi_I(kind, cand, ys);
                cell = cand;
                break;
              }
          if (chi == 0.0) continue;
          const MikadoProfile& prof = mikado_->profile(kind, idx);
          const double psi = prof.psi_radial(hit.rho);
          const double phi = prof.phi_radial(hit.rho);
          if (psi == 0.0 && phi == 0.0) continue;
          if (kind == FamilyKind::S && !have_prior) {
            prior_tensor(slabs, pIdx, x, f, W, dW);
            have_prior = true;
          }
          if (kind == FamilyKind::S) {
            L.prior = W;
            L.dprior = dW;
          }
          const WaveAmp amp = wave_amp(slab, L, klass, kind, idx);
          const IntVec& hvec = mikado_->direction(klass, kind, idx);
          const Eigen::Vector3d hv(hvec[0], hvec[1], hvec[2]);
          // identity flow: htilde = h, no flow time-dependence
          const double aw = th * chi * amp.a * psi;
          const double daw = dth * chi * amp.a * psi + th * chi * amp.da * psi;
          acc_w += aw * hv;
          acc_dw += daw * hv;
          if (amp.b != 0.0 && phi != 0.0) {
            acc_th += th * chi * amp.b * phi;
            acc_dth += dth * chi * amp.b * phi + th * chi * amp.db * phi;
          }
        }
      }
      th_v[pIdx] = acc_th;
      th_d[pIdx] = acc_dth;
      for (int c = 0; c < 3; ++c) {
        w_v[c][pIdx] = acc_w[c];
        w_d[c][pIdx] = acc_dw[c];
      }
    }
  } else {
    // moving flows: full scan with per-slab composed positions
#pragma omp parallel for schedule(dynamic, 2)
    for (int iz = 0; iz < n; ++iz) {
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
          const std::size_t pIdx = std::size_t(ix) + std::size_t(n) * (iy + std::size_t(n) * iz);
          const Eigen::Vector3d x(kTwoPi * ix / n, kTwoPi * iy / n, kTwoPi * iz / n);
          double acc_th = 0.0, acc_dth = 0.0;
          Eigen::Vector3d acc_w = Eigen::Vector3d::Zero(), acc_dw = Eigen::Vector3d::Zero();
          for (const auto& slab : slabs) {
            LocalData L = local_data(slab, pIdx, x, f);
            const Eigen::Vector3d ysv = double(mu_inv_) * L.y;
            const std::array<double, 3> ys{ysv.x(), ysv.y(), ysv.z()};
            long cax[2], cay[2], caz[2];
            int nax, nay, naz;
            SpatialPartition::active_cells(ys[0], cax, nax);
            SpatialPartition::active_cells(ys[1], cay, nay);
            SpatialPartition::active_cells(ys[2], caz, naz);
            bool have_prior = false;
            Eigen::Matrix3d W, dW;
            bool class_seen[27] = {};
            for (int a = 0; a < nax; ++a)
              for (int b = 0; b < nay; ++b)
                for (int c = 0; c < naz; ++c) {
                  const std::array<long, 3> cell{cax[a], cay[b], caz[c]};
                  const IntVec klass = cell_class(cell);
                  const int ci = class_index(klass);
                  if (class_seen[ci]) continue;
                  class_seen[ci] = true;
                  for (int line = 0; line < 16; ++line) {
                    const FamilyKind kind = kind_of_line(line);
                    const int idx = idx_of_line(line);
                    const double th = kind == FamilyKind::Phi ? slab.theta_Phi : slab.theta_R;
                    if (th == 0.0) continue;
                    const double dth =
                        kind == FamilyKind::Phi ? slab.dtheta_Phi : slab.dtheta_R;
                    const MikadoProfile& prof = mikado_->profile(kind, idx);
                    const TubeGeometry& geom = mikado_->instance_geometry(klass, kind, idx);
                    const Eigen::Vector3d z = mikado_->shift(klass, kind, idx);
                    const Eigen::Vector3d arg = lambda_next_ * (L.y - z);
                    const Eigen::Vector2d off = geom.offset(arg, Eigen::Vector3d::Zero());
                    const double rho = off.norm();
                    if (rho >= prof.support_radius()) continue;
                    const double psi = prof.psi_radial(rho);
                    const double phi = prof.phi_radial(rho);
                    if (psi == 0.0 && phi == 0.0) continue;
                    const double chi = spatial_.chi_I(kind, cell, ys);
                    if (chi == 0.0) continue;
                    double dchi = 0.0;
                    {
                      const auto g = spatial_.chi_I_grad(kind, cell, ys);
                      const Eigen::Vector3d xidot = -(L.J * L.ul);
                      dchi = double(mu_inv_) *
                             (g[0] * xidot.x() + g[1] * xidot.y() + g[2] * xidot.z());
                    }
                    if (kind == FamilyKind::S && !have_prior) {
                      prior_tensor(slabs, pIdx, x, f, W, dW);
                      have_prior = true;
                    }
                    LocalData LS = L;
                    if (kind == FamilyKind::S) {
                      LS.prior = W;
                      LS.dprior = dW;
                    }
                    const WaveAmp amp = wave_amp(slab, LS, klass, kind, idx);
                    const IntVec& hvec = mikado_->direction(klass, kind, idx);
                    const Eigen::Vector3d hv(hvec[0], hvec[1], hvec[2]);
                    const Eigen::Matrix3d Jinv = L.J.inverse();
                    const Eigen::Vector3d ht = Jinv * hv;
                    const Eigen::Vector3d dht = (-Jinv * L.dJ * Jinv) * hv;
                    // profile derivatives along the moving flow
                    double dpsi = 0.0, dphi = 0.0;
                    if (rho > 0.0) {
                      const Eigen::Vector2d dir = off / rho;
                      const Eigen::Vector3d dir3 = dir.x() * geom.e1 + dir.y() * geom.e2;
                      const Eigen::Vector3d argdot = lambda_next_ * (-(L.J * L.ul));
                      const double proj = dir3.dot(argdot);
                      dpsi = prof.psi_radial_prime(rho) * proj;
                      dphi = prof.phi_radial_prime(rho) * proj;
                    }
                    const double aw = th * chi * amp.a * psi;
                    const double daw = dth * chi * amp.a * psi + th * dchi * amp.a * psi +
                                       th * chi * amp.da * psi + th * chi * amp.a * dpsi;
                    acc_w += aw * ht;
                    acc_dw += daw * ht + aw * dht;
                    if (amp.b != 0.0) {
                      acc_th += th * chi * amp.b * phi;
                      acc_dth += dth * chi * amp.b * phi + th * dchi * amp.b * phi +
                                 th * chi * amp.db * phi + th * chi * amp.b * dphi;
                    }
                  }
                }
          }
          th_v[pIdx] = acc_th;
          th_d[pIdx] = acc_dth;
          for (int c = 0; c < 3; ++c) {
            w_v[c][pIdx] = acc_w[c];
            w_d[c][pIdx] = acc_dw[c];
          }
        }
    }
  }

  f.theta0.v.mark_grid_dirty();
  f.theta0.d.mark_grid_dirty();
  f.w0.v.mark_grid_dirty();
  f.w0.d.mark_grid_dirty();

  // solenoidal projection through a curl potential, then mean removal:
  // wA = -lap^{-1} curl w0, w = curl wA = w0 - grad lap^{-1} div w0 - <w0>
  f.wA = Jet{f.w0.v.curl().inv_laplacian(), f.w0.d.curl().inv_laplacian()};
  f.wA.v *= -1.0;
  f.wA.d *= -1.0;
  f.w = Jet{f.wA.v.curl(), f.wA.d.curl()};
  f.wc = Jet{f.w.v, f.w.d};
  f.wc.v -= f.w0.v;
  f.wc.d -= f.w0.d;
  f.theta_c = -f.theta0.v.mean_scalar();
  f.dtheta_c = -f.theta0.d.mean_scalar();
  f.theta = Jet{f.theta0.v, f.theta0.d};
  f.theta.v.ensure_spectrum();
  f.theta.v.spec_comp(0)[0] = {0.0, 0.0};
  f.theta.v.mark_spec_dirty();
  f.theta.d.ensure_spectrum();
  f.theta.d.spec_comp(0)[0] = {0.0, 0.0};
  f.theta.d.mark_spec_dirty();
}

}  // namespace nashflow

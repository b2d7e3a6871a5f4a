#include "nashflow/mikado.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "nashflow/cutoffs.hpp"

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

long gcd3(long a, long b, long c) {
  return std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c));
}

Eigen::Vector3d to_v(const IntVec& h) { return Eigen::Vector3d(h[0], h[1], h[2]); }

// Complete a primitive integer vector h to a unimodular basis [h u v].
void unimodular_completion(const IntVec& h, IntVec& u, IntVec& v) {
  auto cross = [](const IntVec& a, const IntVec& b) {
    return IntVec{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                  a[0] * b[1] - a[1] * b[0]};
  };
  for (int r = 1; r <= 6; ++r) {
    for (int ux = -r; ux <= r; ++ux)
      for (int uy = -r; uy <= r; ++uy)
        for (int uz = -r; uz <= r; ++uz) {
          u = {ux, uy, uz};
          const IntVec c = cross(h, u);
          const long g = gcd3(c[0], c[1], c[2]);
          if (g != 1) continue;
          // need v with c . v = +-1; search small v
          for (int vx = -r; vx <= r; ++vx)
            for (int vy = -r; vy <= r; ++vy)
              for (int vz = -r; vz <= r; ++vz) {
                const long d = long(c[0]) * vx + long(c[1]) * vy + long(c[2]) * vz;
                if (d == 1 || d == -1) {
                  v = {vx, vy, vz};
                  return;
                }
              }
        }
  }
  throw std::logic_error("unimodular completion failed");
}

// Lagrange (Gauss) reduction of a 2D lattice basis.
void reduce_basis(Eigen::Vector2d& b1, Eigen::Vector2d& b2) {
  for (int it = 0; it < 64; ++it) {
    if (b1.squaredNorm() > b2.squaredNorm()) std::swap(b1, b2);
    const double mu = std::round(b2.dot(b1) / b1.squaredNorm());
    if (mu == 0.0) break;
    b2 -= mu * b1;
  }
  if (b1.squaredNorm() > b2.squaredNorm()) std::swap(b1, b2);
}

}  // namespace

TubeGeometry TubeGeometry::make(const IntVec& h) {
  const long g = gcd3(h[0], h[1], h[2]);
  if (g == 0) throw std::invalid_argument("null direction");
  TubeGeometry t;
  t.h_primitive = {int(h[0] / g), int(h[1] / g), int(h[2] / g)};
  // canonical sign: first nonzero entry positive
  for (int a = 0; a < 3; ++a) {
    if (t.h_primitive[a] == 0) continue;
    if (t.h_primitive[a] < 0)
      for (int b = 0; b < 3; ++b) t.h_primitive[b] = -t.h_primitive[b];
    break;
  }
  const Eigen::Vector3d hv = to_v(t.h_primitive);
  t.h_norm = hv.norm();
  t.axis = hv / t.h_norm;
  // orthonormal cross-section basis
  Eigen::Vector3d seed = std::abs(t.axis.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                    : Eigen::Vector3d::UnitY();
  t.e1 = (seed - seed.dot(t.axis) * t.axis).normalized();
  t.e2 = t.axis.cross(t.e1);
  // projected lattice basis from a unimodular completion
  IntVec u, v;
  unimodular_completion(t.h_primitive, u, v);
  auto project = [&](const IntVec& m) {
    const Eigen::Vector3d p = kTwoPi * (to_v(m) - to_v(m).dot(t.axis) * t.axis);
    return Eigen::Vector2d(p.dot(t.e1), p.dot(t.e2));
  };
  Eigen::Vector2d b1 = project(u), b2 = project(v);
  reduce_basis(b1, b2);
  t.lattice.col(0) = b1;
  t.lattice.col(1) = b2;
  t.cell_area = std::abs(b1.x() * b2.y() - b1.y() * b2.x());
  return t;
}

Eigen::Vector2d TubeGeometry::offset(const Eigen::Vector3d& x,
                                     const Eigen::Vector3d& shift) const {
  const Eigen::Vector3d d = x - shift;
  Eigen::Vector2d y(d.dot(e1), d.dot(e2));
  // reduce modulo the projected lattice (nearest representative)
  const Eigen::Vector2d c = lattice.inverse() * y;
  const double c0 = std::round(c.x()), c1 = std::round(c.y());
  Eigen::Vector2d best = y - lattice * Eigen::Vector2d(c0, c1);
  double bn = best.squaredNorm();
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      const Eigen::Vector2d cand = y - lattice * Eigen::Vector2d(c0 + di, c1 + dj);
      const double cn = cand.squaredNorm();
      if (cn < bn) {
        bn = cn;
        best = cand;
      }
    }
  return best;
}

double TubeGeometry::distance(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const {
  return offset(x, shift).norm();
}

double TubeGeometry::line_distance(const TubeGeometry& a, const Eigen::Vector3d& sa,
                                   const TubeGeometry& b, const Eigen::Vector3d& sb) {
  const Eigen::Vector3d ha = to_v(a.h_primitive), hb = to_v(b.h_primitive);
  const Eigen::Vector3d c = ha.cross(hb);
  if (c.norm() < 1e-12) {
    return a.offset(sb, sa).norm();
  }
  // skew pair: distances |(ds + 2 pi m) . n| over the integer lattice form an
  // arithmetic progression with gap 2 pi gcd(c)/|c|
  const Eigen::Vector3d n = c / c.norm();
  const long g = gcd3(long(std::llround(c.x())), long(std::llround(c.y())),
                      long(std::llround(c.z())));
  const double period = kTwoPi * double(g) / c.norm();
  double d = std::fmod((sb - sa).dot(n), period);
  if (d < 0) d += period;
  return std::min(d, period - d);
}

// ---------------------------------------------------------------------------
// radial basis
// ---------------------------------------------------------------------------

double radial_bump(double rho, int which) {
  if (rho >= 1.0 || rho < 0.0) return 0.0;
  const double master = smooth_step(2.0 * (1.0 - rho));  // plateau on [0, 1/2]
  return master * std::cos(double(which) * std::numbers::pi * rho);
}

namespace {

double radial_bump_prime(double rho, int which) {
  if (rho >= 1.0 || rho < 0.0) return 0.0;
  const double m = smooth_step(2.0 * (1.0 - rho));
  const double mp = -2.0 * smooth_step_prime(2.0 * (1.0 - rho));
  const double w = double(which) * std::numbers::pi;
  return mp * std::cos(w * rho) - m * w * std::sin(w * rho);
}

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration from Chebyshev guess, nodes on [-1,1]
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
    x[i] = 0.5 * (t + 1.0);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

MikadoProfile::MikadoProfile(const IntVec& direction, FamilyKind kind, const Config& cfg)
    : dir_(direction), kind_(kind), cfg_(cfg), geom_(TubeGeometry::make(direction)) {
  const int nb = cfg.basis_size;
  const int nq = 320;
  gauss_legendre_01(nq, qr_, qw_);
  const double R = cfg.support_radius;
  // torus-mean factor for tube-supported radial functions:
  //   <f> = (2 pi / cell_area) R^2 int_0^1 f(r) r dr
  const double mean_factor = kTwoPi * R * R / geom_.cell_area;

  auto basis_moment = [&](int j) {
    double acc = 0.0;
    for (int q = 0; q < nq; ++q) acc += qw_[q] * radial_bump(qr_[q], j) * qr_[q];
    return acc * mean_factor;
  };
  auto pair_moment = [&](const std::vector<double>& a, const std::vector<double>& b, int pow_a) {
    double acc = 0.0;
    for (int q = 0; q < nq; ++q) {
      double va = 0.0, vb = 0.0;
      for (int j = 0; j < nb; ++j) {
        va += a[j] * radial_bump(qr_[q], j);
        vb += b[j] * radial_bump(qr_[q], j);
      }
      double f = vb;
      for (int p = 0; p < pow_a; ++p) f *= va;
      acc += qw_[q] * f * qr_[q];
    }
    return acc * mean_factor;
  };

  // psi: mean-zero combination, normalized to <psi^2> = target (or 1 for S)
  Eigen::VectorXd mom(nb);
  for (int j = 0; j < nb; ++j) mom(j) = basis_moment(j);
  Eigen::VectorXd seed = Eigen::VectorXd::Zero(nb);
  seed(0) = 1.0;
  if (nb > 1) seed(1) = -0.3;
  Eigen::VectorXd apsi = seed - mom * (mom.dot(seed) / mom.squaredNorm());
  psi_coef_.assign(apsi.data(), apsi.data() + nb);
  const double target = kind == FamilyKind::S ? 1.0 : cfg.psi2_target;
  {
    std::vector<double> zero(nb, 0.0);
    const double p2 = pair_moment(psi_coef_, psi_coef_, 1);
    const double scale = std::sqrt(target / p2);
    for (double& c : psi_coef_) c *= scale;
  }

  phi_coef_.assign(nb, 0.0);
  if (kind != FamilyKind::S) {
    // linear system in the phi coefficients:
    //   <phi> = 0, <psi phi> = a, <psi^2 phi> = b
    Eigen::MatrixXd A(3, nb);
    for (int j = 0; j < nb; ++j) {
      std::vector<double> ej(nb, 0.0);
      ej[j] = 1.0;
      A(0, j) = basis_moment(j);
      A(1, j) = pair_moment(psi_coef_, ej, 1);
      A(2, j) = pair_moment(psi_coef_, ej, 2);
    }
    Eigen::Vector3d rhs = kind == FamilyKind::R ? Eigen::Vector3d(0.0, 1.0, 0.0)
                                                : Eigen::Vector3d(0.0, 0.0, 1.0);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() < 3)
      throw std::runtime_error("mikado moment system is rank-deficient at this basis size");
    Eigen::VectorXd aphi = cod.solve(rhs);  // minimum-norm solution
    phi_coef_.assign(aphi.data(), aphi.data() + nb);
  }

  // cache values at quadrature nodes for the Hankel transforms
  v_psi_.resize(nq);
  v_phi_.resize(nq);
  v_psi2_.resize(nq);
  v_psiphi_.resize(nq);
  v_psi2phi_.resize(nq);
  for (int q = 0; q < nq; ++q) {
    const double ps = psi_radial(qr_[q] * R);
    const double ph = phi_radial(qr_[q] * R);
    v_psi_[q] = ps;
    v_phi_[q] = ph;
    v_psi2_[q] = ps * ps;
    v_psiphi_[q] = ps * ph;
    v_psi2phi_[q] = ps * ps * ph;
  }
  auto mean_of = [&](const std::vector<double>& v) {
    double acc = 0.0;
    for (int q = 0; q < nq; ++q) acc += qw_[q] * v[q] * qr_[q];
    return acc * mean_factor;
  };
  m_psi_ = mean_of(v_psi_);
  m_phi_ = mean_of(v_phi_);
  m_psi2_ = mean_of(v_psi2_);
  m_psiphi_ = mean_of(v_psiphi_);
  m_psi2phi_ = mean_of(v_psi2phi_);
}

double MikadoProfile::psi_radial(double rho) const {
  const double r = rho / cfg_.support_radius;
  if (r >= 1.0) return 0.0;
  double v = 0.0;
  for (std::size_t j = 0; j < psi_coef_.size(); ++j) v += psi_coef_[j] * radial_bump(r, int(j));
  return v;
}

double MikadoProfile::phi_radial(double rho) const {
  const double r = rho / cfg_.support_radius;
  if (r >= 1.0) return 0.0;
  double v = 0.0;
  for (std::size_t j = 0; j < phi_coef_.size(); ++j) v += phi_coef_[j] * radial_bump(r, int(j));
  return v;
}

double MikadoProfile::psi_radial_prime(double rho) const {
  const double r = rho / cfg_.support_radius;
  if (r >= 1.0) return 0.0;
  double v = 0.0;
  for (std::size_t j = 0; j < psi_coef_.size(); ++j)
    v += psi_coef_[j] * radial_bump_prime(r, int(j));
  return v / cfg_.support_radius;
}

double MikadoProfile::phi_radial_prime(double rho) const {
  const double r = rho / cfg_.support_radius;
  if (r >= 1.0) return 0.0;
  double v = 0.0;
  for (std::size_t j = 0; j < phi_coef_.size(); ++j)
    v += phi_coef_[j] * radial_bump_prime(r, int(j));
  return v / cfg_.support_radius;
}

double MikadoProfile::psi(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const {
  return psi_radial(geom_.distance(x, shift));
}

double MikadoProfile::phi(const Eigen::Vector3d& x, const Eigen::Vector3d& shift) const {
  return phi_radial(geom_.distance(x, shift));
}

Eigen::Vector3d MikadoProfile::psi_grad(const Eigen::Vector3d& x,
                                        const Eigen::Vector3d& shift) const {
  const Eigen::Vector2d off = geom_.offset(x, shift);
  const double rho = off.norm();
  if (rho == 0.0 || rho >= cfg_.support_radius) return Eigen::Vector3d::Zero();
  const double dp = psi_radial_prime(rho);
  const Eigen::Vector2d dir = off / rho;
  return dp * (dir.x() * geom_.e1 + dir.y() * geom_.e2);
}

double MikadoProfile::hankel(const std::vector<double>& vals, double mnorm) const {
  const double R = cfg_.support_radius;
  double acc = 0.0;
  for (std::size_t q = 0; q < qr_.size(); ++q)
    acc += qw_[q] * vals[q] * std::cyl_bessel_j(0, mnorm * qr_[q] * R) * qr_[q];
  return acc * kTwoPi * R * R / geom_.cell_area;
}

double MikadoProfile::psi_hat(double m) const { return hankel(v_psi_, m); }
double MikadoProfile::phi_hat(double m) const { return hankel(v_phi_, m); }
double MikadoProfile::psi2_hat(double m) const { return hankel(v_psi2_, m); }
double MikadoProfile::psiphi_hat(double m) const { return hankel(v_psiphi_, m); }
double MikadoProfile::psi2phi_hat(double m) const { return hankel(v_psi2phi_, m); }

std::vector<IntVec> MikadoProfile::cross_modes(double mmax) const {
  // integer basis of {m : m . h = 0}: rows 2,3 of the inverse of the
  // unimodular completion [h u v]
  IntVec u, v;
  unimodular_completion(geom_.h_primitive, u, v);
  Eigen::Matrix3d B;
  B.col(0) = to_v(geom_.h_primitive);
  B.col(1) = to_v(u);
  B.col(2) = to_v(v);
  const Eigen::Matrix3d Binv = B.inverse();
  IntVec r2{int(std::llround(Binv(1, 0))), int(std::llround(Binv(1, 1))),
            int(std::llround(Binv(1, 2)))};
  IntVec r3{int(std::llround(Binv(2, 0))), int(std::llround(Binv(2, 1))),
            int(std::llround(Binv(2, 2)))};
  std::vector<IntVec> out;
  const double n2 = to_v(r2).norm(), n3 = to_v(r3).norm();
  const int imax = int(mmax / std::max(1e-9, n2 * (1.0 - 0.99))) + int(2 * mmax) + 2;
  (void)n3;
  const int bound = int(2.0 * mmax) + 2;
  (void)imax;
  for (int i = -bound; i <= bound; ++i)
    for (int j = -bound; j <= bound; ++j) {
      if (i == 0 && j == 0) continue;
      const IntVec m{i * r2[0] + j * r3[0], i * r2[1] + j * r3[1], i * r2[2] + j * r3[2]};
      if (to_v(m).norm() <= mmax) out.push_back(m);
    }
  return out;
}

double MikadoProfile::table_extent(double tol) const {
  double peak = 0.0;
  for (double m = 0.0; m <= 40.0 / cfg_.support_radius; m += 0.5)
    peak = std::max({peak, std::abs(psi_hat(m)), std::abs(psiphi_hat(m))});
  double extent = 0.0;
  for (double m = 40.0 / cfg_.support_radius; m >= 0.0; m -= 0.5) {
    const double mag = std::max({std::abs(psi_hat(m)), std::abs(phi_hat(m)),
                                 std::abs(psi2_hat(m)), std::abs(psiphi_hat(m)),
                                 std::abs(psi2phi_hat(m))});
    if (mag > tol * peak) {
      extent = m;
      break;
    }
  }
  return extent;
}

std::array<double, 5> MikadoProfile::decay_sums(int n0, double mmax) const {
  std::array<double, 5> sums{0, 0, 0, 0, 0};
  for (const auto& m : cross_modes(mmax)) {
    const double mn = to_v(m).norm();
    const double w = std::pow(mn, n0 + 2);
    sums[0] += w * std::abs(psi_hat(mn));
    sums[1] += w * std::abs(phi_hat(mn));
    sums[2] += w * std::abs(psi2_hat(mn));
    sums[3] += w * std::abs(psiphi_hat(mn));
    sums[4] += w * std::abs(psi2phi_hat(mn));
  }
  return sums;
}

}  // namespace nashflow

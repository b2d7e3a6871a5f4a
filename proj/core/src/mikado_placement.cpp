#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nashflow/mikado_set.hpp"

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Signed clearance and the direction (applied to the second shift) that
// increases it fastest. Closed form for both parallel and skew line pairs.
double pair_clearance_grad(const TubeGeometry& ga, const Eigen::Vector3d& sa, double ra,
                           const TubeGeometry& gb, const Eigen::Vector3d& sb, double rb,
                           Eigen::Vector3d* grad_b) {
  const Eigen::Vector3d ha(ga.h_primitive[0], ga.h_primitive[1], ga.h_primitive[2]);
  const Eigen::Vector3d hb(gb.h_primitive[0], gb.h_primitive[1], gb.h_primitive[2]);
  const Eigen::Vector3d c = ha.cross(hb);
  if (c.norm() < 1e-12) {
    const Eigen::Vector2d off = ga.offset(sb, sa);
    const double d = off.norm();
    if (grad_b) {
      if (d < 1e-12)
        *grad_b = ga.e1;
      else
        *grad_b = (off.x() * ga.e1 + off.y() * ga.e2) / d;
    }
    return d - ra - rb;
  }
  const Eigen::Vector3d n = c / c.norm();
  const long g = std::gcd(std::gcd(std::labs(std::lround(c.x())), std::labs(std::lround(c.y()))),
                          std::labs(std::lround(c.z())));
  const double period = kTwoPi * double(g) / c.norm();
  double d = std::fmod((sb - sa).dot(n), period);
  if (d < 0) d += period;
  if (d <= 0.5 * period) {
    if (grad_b) *grad_b = n;
    return d - ra - rb;
  }
  if (grad_b) *grad_b = -n;
  return (period - d) - ra - rb;
}

}  // namespace

int class_index(const IntVec& klass) { return klass[0] + 3 * klass[1] + 9 * klass[2]; }

MikadoSet::MikadoSet(const std::vector<DirectionFamily>& families, const Config& cfg)
    : cfg_(cfg), families_(families) {
  if (families_.size() != 27) throw std::invalid_argument("MikadoSet needs the 27 families");
  const DirectionFamily& base = family_for_class(families_, {0, 0, 0});

  MikadoProfile::Config pr;
  pr.basis_size = cfg_.basis_size;
  pr.psi2_target = cfg_.psi2_target;
  pr.support_radius = radius(FamilyKind::R);
  for (const auto& h : base.r) profiles_.emplace_back(h, FamilyKind::R, pr);
  pr.support_radius = radius(FamilyKind::Phi);
  for (const auto& h : base.phi) profiles_.emplace_back(h, FamilyKind::Phi, pr);
  pr.support_radius = radius(FamilyKind::S);
  for (const auto& h : base.s) profiles_.emplace_back(h, FamilyKind::S, pr);

  geoms_.resize(27 * 16);
  radii_.resize(27 * 16);
  for (int c = 0; c < 27; ++c) {
    const IntVec klass{c % 3, (c / 3) % 3, c / 9};
    const DirectionFamily& fam = family_for_class(families_, klass);
    int l = 0;
    for (const auto* sub : {&fam.r, &fam.phi, &fam.s})
      for (const auto& h : *sub) {
        geoms_[16 * c + l] = TubeGeometry::make(h);
        radii_[16 * c + l] = profiles_[l].support_radius();
        ++l;
      }
  }
  shifts_.assign(27 * 16, Eigen::Vector3d::Zero());
  structured_init();
  if (min_clearance() < cfg_.clearance_gap && cfg_.optimize_if_needed)
    optimize_shifts(cfg_.relax_iters);
  if (min_clearance() < cfg_.clearance_gap && !cfg_.allow_overlap) {
    double worst = 1e300;
    int wa = 0, wb = 0;
    const int ni = 27 * 16;
    for (int a = 0; a < ni; ++a)
      for (int b = a + 1; b < ni; ++b) {
        const double d = pair_clearance_grad(geoms_[a], shifts_[a], radii_[a], geoms_[b],
                                             shifts_[b], radii_[b], nullptr);
        if (d < worst) {
          worst = d;
          wa = a;
          wb = b;
        }
      }
    throw std::runtime_error(
        "mikado placement: no disjoint placement at eta = " + std::to_string(cfg_.eta) +
        " (colliding instances " + std::to_string(wa) + " and " + std::to_string(wb) +
        ", clearance " + std::to_string(worst) + "); eta too large for the family count");
  }
}

void MikadoSet::structured_init() {
  // deterministic low-discrepancy spread of all 432 shifts
  const double g1 = 0.8191725133961645, g2 = 0.6710436067037893, g3 = 0.5497004779019703;
  for (int i = 0; i < 27 * 16; ++i) {
    shifts_[i] = kTwoPi * Eigen::Vector3d(std::fmod(g1 * (i + 1), 1.0),
                                          std::fmod(g2 * (i + 1), 1.0),
                                          std::fmod(g3 * (i + 1), 1.0));
  }
}

double MikadoSet::radius(FamilyKind kind) const {
  const double r_full = cfg_.eta / 10.0;
  return kind == FamilyKind::R ? r_full : r_full * cfg_.thin_ratio;
}

int MikadoSet::line_index(FamilyKind kind, int idx) const {
  switch (kind) {
    case FamilyKind::R: return idx;
    case FamilyKind::Phi: return 4 + idx;
    case FamilyKind::S: return 10 + idx;
  }
  throw std::logic_error("bad kind");
}

const MikadoProfile& MikadoSet::profile(FamilyKind kind, int idx) const {
  return profiles_[line_index(kind, idx)];
}

const IntVec& MikadoSet::direction(const IntVec& klass, FamilyKind kind, int idx) const {
  return family_for_class(families_, klass).subfamily(kind)[idx];
}

const TubeGeometry& MikadoSet::instance_geometry(const IntVec& klass, FamilyKind kind,
                                                 int idx) const {
  return geoms_[16 * class_index(klass) + line_index(kind, idx)];
}

Eigen::Vector3d MikadoSet::shift(const IntVec& klass, FamilyKind kind, int idx) const {
  return shifts_[16 * class_index(klass) + line_index(kind, idx)];
}

double MikadoSet::psi_at(const IntVec& klass, FamilyKind kind, int idx,
                         const Eigen::Vector3d& x) const {
  const TubeGeometry& g = instance_geometry(klass, kind, idx);
  return profile(kind, idx).psi_radial(g.distance(x, shift(klass, kind, idx)));
}

double MikadoSet::phi_at(const IntVec& klass, FamilyKind kind, int idx,
                         const Eigen::Vector3d& x) const {
  const TubeGeometry& g = instance_geometry(klass, kind, idx);
  return profile(kind, idx).phi_radial(g.distance(x, shift(klass, kind, idx)));
}

double MikadoSet::min_clearance() const {
  const int ni = 27 * 16;
  double worst = 1e300;
#pragma omp parallel for schedule(dynamic, 8) reduction(min : worst)
  for (int a = 0; a < ni; ++a)
    for (int b = a + 1; b < ni; ++b)
      worst = std::min(worst, pair_clearance_grad(geoms_[a], shifts_[a], radii_[a], geoms_[b],
                                                  shifts_[b], radii_[b], nullptr));
  return worst;
}

double MikadoSet::optimize_shifts(int iters) {
  std::mt19937 rng(cfg_.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  const int ni = 27 * 16;
  const double slack =
      cfg_.clearance_gap + 0.15 * (radius(FamilyKind::R) + radius(FamilyKind::Phi));

  std::vector<Eigen::Vector3d> best_shifts = shifts_;
  double best = min_clearance();
  std::vector<int> stuck(ni, 0);
  for (int iter = 0; iter < iters; ++iter) {
    // collect violated pairs (clearance below the slack target)
    std::vector<std::pair<int, int>> bad;
    for (int a = 0; a < ni; ++a)
      for (int b = a + 1; b < ni; ++b) {
        const double cl = pair_clearance_grad(geoms_[a], shifts_[a], radii_[a], geoms_[b],
                                              shifts_[b], radii_[b], nullptr);
        if (cl < slack) bad.emplace_back(a, b);
      }
    if (bad.empty()) break;
    std::shuffle(bad.begin(), bad.end(), rng);
    // sequential projection: separate each violated pair in turn
    for (const auto& [a, b] : bad) {
      Eigen::Vector3d dir;
      const double cl = pair_clearance_grad(geoms_[a], shifts_[a], radii_[a], geoms_[b],
                                            shifts_[b], radii_[b], &dir);
      if (cl >= slack) continue;
      const double move = 0.6 * (slack - cl) + 1e-4;
      Eigen::Vector3d jitter(gauss(rng), gauss(rng), gauss(rng));
      shifts_[b] += move * dir + 0.05 * move * jitter;
      shifts_[a] -= move * dir + 0.05 * move * jitter;
      ++stuck[a];
      ++stuck[b];
    }
    // teleport chronically stuck instances
    if (iter % 25 == 24) {
      for (int i = 0; i < ni; ++i) {
        if (stuck[i] > 120) {
          shifts_[i] = Eigen::Vector3d(uni(rng), uni(rng), uni(rng));
          stuck[i] = 0;
        }
      }
    }
    const double cur = min_clearance();
    if (cur > best) {
      best = cur;
      best_shifts = shifts_;
      if (best >= cfg_.clearance_gap + 0.5 * slack) break;
    }
  }
  shifts_ = best_shifts;
  return best;
}

double MikadoSet::bisect_eta(const std::vector<DirectionFamily>& families, Config cfg, double lo,
                             double hi, int iters) {
  auto feasible = [&](double eta) {
    Config c = cfg;
    c.eta = eta;
    try {
      MikadoSet set(families, c);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };
  if (!feasible(lo)) return 0.0;
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace nashflow

#include "nashflow/geometry.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace nashflow {

namespace {

Eigen::Vector3d to_vec(const IntVec& h) { return Eigen::Vector3d(h[0], h[1], h[2]); }

Eigen::Matrix<double, 6, 1> vec6(const Eigen::Matrix3d& m) {
  Eigen::Matrix<double, 6, 1> v;
  v << m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2);
  return v;
}

Eigen::Matrix3d outer3(const IntVec& h) {
  const Eigen::Vector3d v = to_vec(h);
  return v * v.transpose();
}

IntVec scale(const IntVec& h, int s) { return IntVec{s * h[0], s * h[1], s * h[2]}; }

}  // namespace

const std::vector<IntVec>& DirectionFamily::subfamily(FamilyKind k) const {
  switch (k) {
    case FamilyKind::R: return r;
    case FamilyKind::Phi: return phi;
    case FamilyKind::S: return s;
  }
  throw std::logic_error("bad family kind");
}

FamilyReport verify_family(const DirectionFamily& f) {
  FamilyReport rep;
  auto conformal = [](const std::vector<IntVec>& fam, double& constant, bool& basis_ok,
                      double& cond) {
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 6, 6> basis;
    for (int i = 0; i < 6; ++i) {
      const Eigen::Matrix3d hh = outer3(fam[i]);
      sum += hh;
      basis.col(i) = vec6(hh);
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(basis);
    const double smin = svd.singularValues()(5);
    const double smax = svd.singularValues()(0);
    basis_ok = smin > 1e-9 * smax;
    cond = basis_ok ? smax / smin : std::numeric_limits<double>::infinity();
    constant = sum(0, 0);
    const Eigen::Matrix3d dev = sum - constant * Eigen::Matrix3d::Identity();
    return constant > 0 && dev.cwiseAbs().maxCoeff() < 1e-12 * constant;
  };
  if (f.phi.size() == 6)
    rep.phi_conformal = conformal(f.phi, rep.phi_constant, rep.phi_basis, rep.phi_condition);
  if (f.s.size() == 6)
    rep.s_conformal = conformal(f.s, rep.s_constant, rep.s_basis, rep.s_condition);
  if (f.r.size() == 4) {
    const Eigen::Vector3d h1 = to_vec(f.r[0]), h2 = to_vec(f.r[1]), h3 = to_vec(f.r[2]),
                          h4 = to_vec(f.r[3]);
    rep.r_orthogonal =
        h1.dot(h2) == 0.0 && h1.dot(h3) == 0.0 && h2.dot(h3) == 0.0 &&
        h1.norm() > 0 && h2.norm() > 0 && h3.norm() > 0;
    rep.r_frame_sum = (h4 + h1 + h2 + h3).norm() == 0.0;
  }
  return rep;
}

namespace {

DirectionFamily base_family() {
  DirectionFamily base;
  base.phi = {{1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}};
  base.r = {{1, 2, 0}, {-2, 1, 0}, {0, 0, 1}, {1, -3, -1}};
  // The S subfamily reuses the conformal pattern at twice the scale; its tube
  // lines are parallel to the Phi lines and get distinct cross-section shifts.
  for (const auto& h : base.phi) base.s.push_back(scale(h, 2));
  return base;
}

IntVec apply_signed_perm(const std::array<int, 3>& perm, const std::array<int, 3>& sign,
                         const IntVec& h) {
  IntVec out;
  for (int a = 0; a < 3; ++a) out[a] = sign[a] * h[perm[a]];
  return out;
}

}  // namespace

std::vector<DirectionFamily> direction_families(FamilyStyle style) {
  const DirectionFamily base = base_family();
  std::vector<DirectionFamily> fams;
  std::set<IntVec> seen;

  auto try_add = [&](const IntVec& klass, const DirectionFamily& cand) {
    for (const auto* sub : {&cand.r, &cand.phi, &cand.s})
      for (const auto& h : *sub)
        if (seen.count(h)) return false;
    DirectionFamily f = cand;
    f.klass = klass;
    if (!verify_family(f).pass())
      throw std::logic_error("direction family construction failed verification");
    for (const auto* sub : {&f.r, &f.phi, &f.s})
      for (const auto& h : *sub) seen.insert(h);
    fams.push_back(std::move(f));
    return true;
  };

  int count = 0;
  // enumeration of candidate transforms
  std::vector<std::pair<std::array<int, 3>, std::array<int, 3>>> rotations;
  const std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {1, 0, 2}, {2, 1, 0}}};
  for (const auto& p : perms)
    for (int s0 : {1, -1})
      for (int s1 : {1, -1})
        for (int s2 : {1, -1}) rotations.push_back({p, {s0, s1, s2}});

  for (int c0 = 0; c0 < 3; ++c0)
    for (int c1 = 0; c1 < 3; ++c1)
      for (int c2 = 0; c2 < 3; ++c2) {
        const IntVec klass{c0, c1, c2};
        if (count == 0) {
          // the printed family, verbatim, for class (0,0,0)
          try_add(klass, base);
          ++count;
          continue;
        }
        bool placed = false;
        if (style == FamilyStyle::rotated) {
          // walk the signed permutations (and small rescalings of them) until
          // one is disjoint from everything placed so far
          for (int sigma = 1; sigma <= 59 && !placed; sigma += 2) {
            for (const auto& [perm, sign] : rotations) {
              DirectionFamily cand;
              for (const auto& h : base.r)
                cand.r.push_back(scale(apply_signed_perm(perm, sign, h), sigma));
              for (const auto& h : base.phi)
                cand.phi.push_back(scale(apply_signed_perm(perm, sign, h), sigma));
              for (const auto& h : base.s)
                cand.s.push_back(scale(apply_signed_perm(perm, sign, h), sigma));
              if (try_add(klass, cand)) {
                placed = true;
                break;
              }
            }
          }
        } else {
          const int sigma = 2 * count + 1;  // odd multiples stay disjoint
          DirectionFamily cand;
          for (const auto& h : base.r) cand.r.push_back(scale(h, sigma));
          for (const auto& h : base.phi) cand.phi.push_back(scale(h, sigma));
          for (const auto& h : base.s) cand.s.push_back(scale(h, sigma));
          placed = try_add(klass, cand);
        }
        if (!placed) throw std::logic_error("could not place a disjoint family");
        ++count;
      }

  if (fams.size() != 27) throw std::logic_error("family construction incomplete");
  return fams;
}

std::vector<DirectionFamily> default_direction_families() {
  return direction_families(FamilyStyle::rotated);
}

const DirectionFamily& family_for_class(const std::vector<DirectionFamily>& fams,
                                        const IntVec& klass) {
  for (const auto& f : fams)
    if (f.klass == klass) return f;
  throw std::out_of_range("no family for class");
}

ConformalFrameSolver::ConformalFrameSolver(const std::vector<IntVec>& family6)
    : family_(family6) {
  if (family_.size() != 6) throw std::invalid_argument("conformal frame needs 6 vectors");
  for (int i = 0; i < 6; ++i) basis_.col(i) = vec6(outer3(family_[i]));
  lu_.compute(basis_);
  if (!lu_.isInvertible()) throw std::invalid_argument("family {h(x)h} is not a basis");
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(basis_);
  condition_ = svd.singularValues()(0) / svd.singularValues()(5);
}

std::array<double, 6> ConformalFrameSolver::coefficients(const Eigen::Matrix3d& A) const {
  const Eigen::Matrix<double, 6, 1> c = lu_.solve(vec6(A));
  std::array<double, 6> out;
  for (int i = 0; i < 6; ++i) {
    if (!(c(i) > 0.0))
      throw std::domain_error("matrix outside the positivity domain of the frame (coefficient " +
                              std::to_string(i) + " = " + std::to_string(c(i)) + ")");
    out[i] = c(i);
  }
  return out;
}

std::array<double, 6> ConformalFrameSolver::gammas(const Eigen::Matrix3d& A) const {
  std::array<double, 6> c = coefficients(A);
  for (double& v : c) v = std::sqrt(v);
  return c;
}

double ConformalFrameSolver::positivity_radius(int samples, unsigned seed) const {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double lo = 0.0, hi = 2.0;
  auto ok_at = [&](double r) {
    std::mt19937 local(seed);
    for (int s = 0; s < samples; ++s) {
      Eigen::Matrix3d K;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          const double v = uni(local) * r;
          K(i, j) = v;
          K(j, i) = v;
        }
      try {
        coefficients(Eigen::Matrix3d::Identity() - K);
      } catch (const std::domain_error&) {
        return false;
      }
    }
    return true;
  };
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

OrthogonalFrameSolver::OrthogonalFrameSolver(const std::vector<IntVec>& family4, double n0)
    : family_(family4), n0_(n0) {
  if (family_.size() != 4) throw std::invalid_argument("orthogonal frame needs 4 vectors");
  const Eigen::Vector3d sum =
      to_vec(family_[0]) + to_vec(family_[1]) + to_vec(family_[2]) + to_vec(family_[3]);
  if (sum.norm() != 0.0) throw std::invalid_argument("frame does not sum to zero");
  double inv_min = 0.0;
  for (int i = 0; i < 3; ++i) inv_min = std::max(inv_min, 1.0 / to_vec(family_[i]).norm());
  c0_ = n0 * (1.0 + inv_min);
}

std::array<double, 4> OrthogonalFrameSolver::gammas(const Eigen::Vector3d& w) const {
  if (w.norm() > n0_ * (1.0 + 1e-12))
    throw std::domain_error("vector outside the ball |w| <= N0 (|w| = " +
                            std::to_string(w.norm()) + ", N0 = " + std::to_string(n0_) + ")");
  std::array<double, 4> g;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d h = to_vec(family_[i]);
    g[i] = c0_ + w.dot(h) / h.squaredNorm();
  }
  g[3] = c0_;
  return g;
}

std::string families_to_json(const std::vector<DirectionFamily>& fams) {
  nlohmann::json root = nlohmann::json::array();
  for (const auto& f : fams) {
    nlohmann::json jf;
    jf["class"] = f.klass;
    auto dump = [](const std::vector<IntVec>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& h : v) a.push_back(h);
      return a;
    };
    jf["R"] = dump(f.r);
    jf["Phi"] = dump(f.phi);
    jf["S"] = dump(f.s);
    root.push_back(jf);
  }
  return root.dump(2);
}

}  // namespace nashflow

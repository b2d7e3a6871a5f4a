#pragma once

#include <optional>

#include "nashflow/mikado.hpp"

namespace nashflow {

// The full building-block inventory for one stage: radial profile data shared
// per (kind, index) across the 27 families (signed permutations and integer
// rescalings preserve the cross-section geometry invariants), per-instance
// tube geometry, and per-instance shifts. The shift of I = (p, k, h) is
// z_I = z(class of k, line of h); it does not depend on p or on k within its
// class, so the torus-periodicity constraint on the shifts holds exactly.
class MikadoSet {
 public:
  struct Config {
    double eta = 0.6;            // tube support scale; radii are eta/10 and thin_ratio*eta/10
    double thin_ratio = 0.5;     // Phi/S tubes relative to R tubes
    double psi2_target = 1.0;    // <psi^2> normalization for R and Phi kinds
    int basis_size = 4;
    double clearance_gap = 0.0;  // extra separation demanded beyond r_i + r_j
    bool optimize_if_needed = true;
    bool allow_overlap = false;  // tooling only
    int relax_iters = 1500;
    unsigned seed = 2026;
  };

  MikadoSet(const std::vector<DirectionFamily>& families, const Config& cfg);

  static int kind_count(FamilyKind k) { return k == FamilyKind::R ? 4 : 6; }
  int line_index(FamilyKind kind, int idx) const;
  int line_count() const { return 16; }

  const MikadoProfile& profile(FamilyKind kind, int idx) const;
  const IntVec& direction(const IntVec& klass, FamilyKind kind, int idx) const;
  const TubeGeometry& instance_geometry(const IntVec& klass, FamilyKind kind, int idx) const;
  Eigen::Vector3d shift(const IntVec& klass, FamilyKind kind, int idx) const;
  double radius(FamilyKind kind) const;
  double eta() const { return cfg_.eta; }
  const Config& config() const { return cfg_; }

  // profile evaluation for an instance
  double psi_at(const IntVec& klass, FamilyKind kind, int idx, const Eigen::Vector3d& x) const;
  double phi_at(const IntVec& klass, FamilyKind kind, int idx, const Eigen::Vector3d& x) const;

  // Minimum clearance (distance minus radii sum) over all distinct instance
  // tube pairs across all 27 classes.
  double min_clearance() const;
  bool disjoint(double gap = 0.0) const { return min_clearance() >= gap; }

  // Largest eta (bisection) for which a disjoint placement is found.
  static double bisect_eta(const std::vector<DirectionFamily>& families, Config cfg,
                           double lo = 0.05, double hi = 2.0, int iters = 20);

  // Repulsion relaxation over the per-instance shifts (deterministic seed).
  double optimize_shifts(int iters);

 private:
  void structured_init();
  Config cfg_;
  std::vector<DirectionFamily> families_;
  std::vector<MikadoProfile> profiles_;  // 16: [0..3]=R, [4..9]=Phi, [10..15]=S
  std::vector<TubeGeometry> geoms_;      // 27*16, index 16*class + line
  std::vector<Eigen::Vector3d> shifts_;  // 27*16
  std::vector<double> radii_;            // 27*16
};

int class_index(const IntVec& klass);

}  // namespace nashflow

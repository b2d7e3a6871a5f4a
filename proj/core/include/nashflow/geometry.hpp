#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nashflow {

using IntVec = std::array<int, 3>;

enum class FamilyKind { R, Phi, S };

// One of the 27 direction families, indexed by a class in Z_3^3. The Phi and
// S subfamilies carry conformal frames (sum h (x) h = C Id, {h (x) h} a basis
// of the symmetric matrices); the R subfamily is an orthogonal triple plus
// h4 = -(h1+h2+h3).
struct DirectionFamily {
  IntVec klass{0, 0, 0};
  std::vector<IntVec> r;    // 4 vectors
  std::vector<IntVec> phi;  // 6 vectors
  std::vector<IntVec> s;    // 6 vectors

  const std::vector<IntVec>& subfamily(FamilyKind k) const;
};

struct FamilyReport {
  bool phi_conformal = false, s_conformal = false;
  bool phi_basis = false, s_basis = false;
  bool r_orthogonal = false, r_frame_sum = false;
  double phi_constant = 0.0, s_constant = 0.0;
  double phi_condition = 0.0, s_condition = 0.0;  // 6x6 basis condition numbers
  bool pass() const {
    return phi_conformal && s_conformal && phi_basis && s_basis && r_orthogonal && r_frame_sum;
  }
};

FamilyReport verify_family(const DirectionFamily& f);

// The 27 families: the printed base family for class (0,0,0), the other 26
// generated either by signed-permutation rotations (default; distinct tube
// directions pack far better) or by odd integer rescalings. All conditions
// are invariant under both transforms; vector sets are pairwise disjoint.
// Construction aborts if any family fails verification.
enum class FamilyStyle { rotated, rescaled };
std::vector<DirectionFamily> direction_families(FamilyStyle style);
std::vector<DirectionFamily> default_direction_families();

const DirectionFamily& family_for_class(const std::vector<DirectionFamily>& fams,
                                        const IntVec& klass);

// Solver data for a 6-vector conformal family: writes A in the basis
// {h (x) h}. gamma(h) = sqrt(c_h) where sum_h c_h (h (x) h) = A.
class ConformalFrameSolver {
 public:
  explicit ConformalFrameSolver(const std::vector<IntVec>& family6);

  // Solve for the coefficients c_h of a symmetric matrix A. Throws if any
  // c_h <= 0 ("outside the positivity domain").
  std::array<double, 6> coefficients(const Eigen::Matrix3d& A) const;
  std::array<double, 6> gammas(const Eigen::Matrix3d& A) const;  // sqrt(c_h)

  // Positivity radius estimate: largest r with all c_h > 0 for |K|_inf <= r,
  // measured by sampled search (reported, not exact).
  double positivity_radius(int samples = 200, unsigned seed = 7) const;

  double condition_number() const { return condition_; }
  const std::vector<IntVec>& family() const { return family_; }

 private:
  std::vector<IntVec> family_;
  Eigen::Matrix<double, 6, 6> basis_;      // columns: vec6(h (x) h)
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu_;
  double condition_ = 0.0;
};

// Affine solver for an orthogonal frame {h1,h2,h3, h4=-(h1+h2+h3)}:
//   gamma_i(w) = c0 + w.h_i/|h_i|^2 (i = 1..3), gamma_4(w) = c0,
// with c0 = N0 (1 + max_i 1/|h_i|) so min gamma >= N0 on |w| <= N0, and
//   sum_i gamma_i(w) h_i = w exactly.
class OrthogonalFrameSolver {
 public:
  OrthogonalFrameSolver(const std::vector<IntVec>& family4, double n0);

  std::array<double, 4> gammas(const Eigen::Vector3d& w) const;  // throws if |w| > N0
  double offset() const { return c0_; }
  double n0() const { return n0_; }
  const std::vector<IntVec>& family() const { return family_; }

 private:
  std::vector<IntVec> family_;
  double n0_ = 0.0;
  double c0_ = 0.0;
};

// JSON serialization of the family table (vectors as integer triples).
std::string families_to_json(const std::vector<DirectionFamily>& fams);

}  // namespace nashflow

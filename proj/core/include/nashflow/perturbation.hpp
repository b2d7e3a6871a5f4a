#pragma once

#include <climits>
#include <map>
#include <memory>
#include <optional>

#include "nashflow/cutoffs.hpp"
#include "nashflow/flows.hpp"
#include "nashflow/mikado_set.hpp"
#include "nashflow/state.hpp"
#include "nashflow/weights.hpp"

namespace nashflow {

// A field together with its time derivative at one instant.
struct Jet {
  SpectralField v, d;
  Jet() = default;
  Jet(int n, Rank r) : v(n, r), d(n, r) {}
  Jet(SpectralField value, SpectralField dot) : v(std::move(value)), d(std::move(dot)) {}
};

struct StageConfig {
  FamilyStyle family_style = FamilyStyle::rotated;
  MikadoSet::Config mikado;
  double n0_ball = 0.0;          // R-family ball radius; 0 -> calibrated from the data
  int moll_quad_nodes = 14;      // trajectory mollifier quadrature
  int upsilon_per_tau = 48;      // Upsilon cumulative sampling density
  double residual_dt_factor = 1.0 / 128.0;
  int residual_order = 4;
  bool enforce_density_floor = true;
  int flip_p0 = INT_MIN;         // bifurcation: negate S-kind amplitudes on this slab
  int corrector_spline_n = 384;  // cross-section grid for the corrector potential
  int frame_cache = 6;
};

// One construction stage: everything from the coarse tuple through the
// corrected perturbation, evaluated lazily per time instant with exact time
// derivatives wherever the inputs provide them.
class Stage {
 public:
  Stage(const EulerReynoldsState& in, const StageConfig& cfg);

  const EulerReynoldsState& input() const { return in_; }
  const StageConfig& config() const { return cfg_; }
  const MikadoSet& mikado() const { return *mikado_; }
  const std::vector<DirectionFamily>& families() const { return families_; }

  double tau() const { return tau_; }
  long mu_inv() const { return mu_inv_; }
  double lambda_next() const { return lambda_next_; }
  double delta_next() const { return delta_next_; }
  double ell() const { return ell_; }
  double ell_t() const { return ell_t_; }
  double n0_ball() const { return n0_ball_; }
  int p_lo() const { return p_lo_; }
  int p_hi() const { return p_hi_; }

  const TimeField& u_ell() const { return u_ell_f_; }
  const TimeField& rho_ell() const { return rho_ell_f_; }
  const TimeField& R_ell() const { return R_ell_f_; }
  const TimeField& Phi_ell() const { return Phi_ell_f_; }
  const TimeField& S_ell() const { return S_ell_f_; }
  const FlowMap& flow(int p) const;

  struct Frame {
    double t = 0.0;
    Jet rho_l, u_l;      // coarse fields
    Jet R_l, Phi_l, S_l; // regularized errors
    Jet theta0;          // principal density perturbation
    Jet w0;              // principal velocity perturbation
    Jet wA;              // curl potential
    Jet w;               // full velocity perturbation, w = curl wA
    Jet wc;              // corrector w - w0
    Jet theta;           // mean-zero density perturbation
    double theta_c = 0.0, dtheta_c = 0.0;
  };
  const Frame& frame(double t) const;

  // Pointwise diagnostics -----------------------------------------------------

  // The three low-frequency cancellation identities at one sample point,
  // relative residuals.
  struct CancellationSample {
    double cubic = 0.0, transport = 0.0, quadratic = 0.0;
  };
  CancellationSample check_cancellations(double t, const Eigen::Vector3d& x) const;

  // Representation-by-coefficient-tables at one sample point with the table
  // truncated at |m| <= mmax: residuals of the five identities.
  struct RepresentationSample {
    double theta = 0.0, w = 0.0, quad = 0.0, trans = 0.0, cubic = 0.0;
  };
  RepresentationSample check_representation(double t, const Eigen::Vector3d& x,
                                            double mmax) const;

  // support disjointness spot check: max over instance pairs of the product
  // of supports at the given grid resolution (0 when the placement is valid)
  double support_product_max(int grid_n) const;

  // internals shared with the error assembly
  struct SlabData {
    int p = 0;
    double theta_R = 0, dtheta_R = 0;
    double theta_Phi = 0, dtheta_Phi = 0;
    bool identity = true;
    const SpectralField* disp = nullptr;
    const SpectralField* grad = nullptr;
    const SpectralField* grad_dot = nullptr;
  };
  struct LocalData {
    Eigen::Vector3d y = Eigen::Vector3d::Zero();   // xi_p(t, x)
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d dJ = Eigen::Matrix3d::Zero();
    Eigen::Vector3d ul = Eigen::Vector3d::Zero();
    Eigen::Vector3d Rl = Eigen::Vector3d::Zero(), dRl = Eigen::Vector3d::Zero();
    Eigen::Matrix3d Phil = Eigen::Matrix3d::Zero(), dPhil = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d Sl = Eigen::Matrix3d::Zero(), dSl = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d prior = Eigen::Matrix3d::Zero(), dprior = Eigen::Matrix3d::Zero();
  };
  struct WaveAmp {
    double a = 0, da = 0, b = 0, db = 0;
  };
  std::vector<SlabData> active_slabs(double t, const Frame& f,
                                     std::vector<SpectralField>& keepalive) const;
  LocalData local_data(const SlabData& slab, std::size_t pIdx, const Eigen::Vector3d& x,
                       const Frame& f) const;
  WaveAmp wave_amp(const SlabData& slab, const LocalData& L, const IntVec& klass,
                   FamilyKind kind, int idx) const;
  void prior_tensor(const std::vector<SlabData>& slabs, std::size_t pIdx,
                    const Eigen::Vector3d& x, const Frame& f, Eigen::Matrix3d& W,
                    Eigen::Matrix3d& dW) const;

 private:
  void build_weights();
  void build_hits();
  void assemble(Frame& f) const;

  EulerReynoldsState in_;
  StageConfig cfg_;
  std::vector<DirectionFamily> families_;
  std::unique_ptr<MikadoSet> mikado_;
  bool frozen_ = false;

  double tau_ = 0, lambda_next_ = 0, delta_next_ = 0, ell_ = 0, ell_t_ = 0, n0_ball_ = 0;
  long mu_inv_ = 0;
  int p_lo_ = 0, p_hi_ = 0;

  TimeField rho_ell_f_, u_ell_f_, p_ell_f_;
  TimeField R_ell_f_, Phi_ell_f_, S_ell_f_;
  std::map<int, FlowMap> flows_;

  TemporalPartition tempo_;
  SpatialPartition spatial_;

  std::vector<CubicWeightSolver> cubic_;          // 27
  std::vector<QuadraticWeightSolver> quadratic_;  // 27
  std::vector<TransportWeightSolver> transport_;  // 27

  // static tube membership for frozen flows (CSR over grid points)
  struct Hit {
    int inst;    // 16 * class + line
    double rho;  // cross-section distance at the scaled argument
  };
  std::vector<Hit> hits_;
  std::vector<std::size_t> hit_offset_;

  mutable std::map<double, std::shared_ptr<Frame>> frames_;
  friend class ErrorAssembler;
};

}  // namespace nashflow

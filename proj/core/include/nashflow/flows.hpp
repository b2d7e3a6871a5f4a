#pragma once

#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "nashflow/local_invdiv.hpp"
#include "nashflow/time_field.hpp"

namespace nashflow {

// Band-limited space-time velocity with pointwise evaluation: per-frame mode
// lists plus Lagrange interpolation of the coefficients in time. Exact (up to
// rounding) wherever the field is band-limited, which P_{<= 1/ell} guarantees.
class ModeSynth {
 public:
  ModeSynth() = default;
  explicit ModeSynth(const TimeSampledField& f, double tol = 1e-14);

  bool zero() const { return zero_; }
  int comps() const { return comps_; }

  // value of component c at (t, x)
  double eval(int c, double t, const Eigen::Vector3d& x) const;
  Eigen::Vector3d eval_vector(double t, const Eigen::Vector3d& x) const;

 private:
  struct Mode {
    std::array<int, 3> k;
    std::vector<std::vector<std::complex<double>>> coeff;  // [comp][frame]
  };
  std::vector<Mode> modes_;
  std::vector<double> times_;
  int order_ = 4;
  int comps_ = 0;
  bool zero_ = true;
};

// Backward flow map of the coarse velocity on one anchor window:
//   d_t xi + (u_l . grad) xi = 0, xi(t_p, x) = x,
// solved for the periodic displacement xi - x by spectral transport in space
// and classical RK4 in time, marching both directions from the anchor.
class FlowMap {
 public:
  struct Config {
    int substeps = 16;        // RK4 steps per unit tau (each direction scales)
    double jac_bound = 0.2;   // hard bound on |Id - grad xi|
    double det_tol = 1e-6;    // |det grad xi - 1| allowed
    double cfl_limit = 0.5;
  };

  // window [t_lo, t_hi] must contain the anchor t_p.
  static FlowMap solve(const TimeSampledField& u_ell, double t_p, double t_lo, double t_hi,
                       const Config& cfg);
  static FlowMap solve(const TimeSampledField& u_ell, double t_p, double t_lo, double t_hi) {
    return solve(u_ell, t_p, t_lo, t_hi, Config{});
  }
  static FlowMap identity(int n, double t_p, double t_lo, double t_hi, int samples);

  double anchor() const { return t_p_; }
  bool is_identity() const { return identity_; }
  int n() const { return n_; }
  const TimeSampledField& displacement() const { return disp_; }

  // Flow data interpolated to time t.
  FlowSlice slice(double t) const;
  SpectralField displacement_at(double t) const;

  // xi(t, x) for a single point (displacement interpolated spectrally).
  Eigen::Vector3d xi(double t, const Eigen::Vector3d& x) const;

  // diagnostics
  double max_jacobian_deviation() const;  // sup |Id - grad xi|
  double max_det_deviation() const;       // sup |det grad xi - 1|

 private:
  bool identity_ = true;
  int n_ = 0;
  double t_p_ = 0.0;
  TimeSampledField disp_;
  mutable std::unique_ptr<ModeSynth> disp_synth_;
};

// Forward flow Xi(tau, x; t0) by RK4 particle tracing with band-limited
// velocity evaluation.
class ForwardFlow {
 public:
  ForwardFlow(const TimeSampledField& u_ell, double cfl = 0.25);

  Eigen::Vector3d trace(double t0, double t1, const Eigen::Vector3d& x, int steps) const;
  // default step count from the window length and the configured resolution
  Eigen::Vector3d operator()(double t1, const Eigen::Vector3d& x, double t0) const;

  const ModeSynth& velocity() const { return synth_; }

 private:
  ModeSynth synth_;
  double dt_hint_;
};

// Normalized mollifier on (-1, 1).
double mollifier_weight(double s);

// Mollification along the trajectories of u_ell:
//   (omega_delta * F)(t, x) = int F(t + s, Xi(t + s, x; t)) omega_delta(s) ds.
// F must be band-limited (it is applied after a low-pass in this project) and
// defined on a window exceeding [t0 - delta, t1 + delta]. The discrete
// quadrature weights are normalized to unit mass so constants are preserved
// exactly. Output sampled on the requested time grid.
TimeSampledField flow_mollify(const TimeSampledField& F, const TimeSampledField& u_ell,
                              double delta, const std::vector<double>& out_times,
                              int quad_nodes = 20, int trace_steps = 24);

// Regularized errors: low-pass at 1/ell, then mollify along the flow with
// width ell_t.
struct MollifiedErrors {
  TimeSampledField R;    // vector
  TimeSampledField Phi;  // tensor
  TimeSampledField S;    // sym_tensor
};
MollifiedErrors mollify_errors(const TimeSampledField& R, const TimeSampledField& Phi,
                               const TimeSampledField& S, double ell, double ell_t,
                               const TimeSampledField& u_ell,
                               const std::vector<double>& out_times);

}  // namespace nashflow

#pragma once

#include <functional>
#include <map>
#include <memory>

#include "nashflow/schedule.hpp"
#include "nashflow/spectral_field.hpp"
#include "nashflow/time_field.hpp"

namespace nashflow {

// A field over continuous time with a value evaluator and a time-derivative
// evaluator. Analytic backends give exact derivatives (all stage-0 objects
// have closed forms in t); sampled backends differentiate by stencils.
// Evaluations are memoized, keyed by the exact time value.
class TimeField {
 public:
  using Fn = std::function<SpectralField(double)>;

  TimeField() = default;
  static TimeField analytic(Fn value, Fn ddt);
  static TimeField constant(const SpectralField& f);
  static TimeField sampled(TimeSampledField data);

  bool empty() const { return !impl_; }
  bool analytic_dt() const;

  SpectralField operator()(double t) const { return value(t); }
  SpectralField value(double t) const;
  SpectralField ddt(double t) const;

  // linear combinators (preserve exact derivatives)
  static TimeField add(const TimeField& a, const TimeField& b);
  static TimeField sub(const TimeField& a, const TimeField& b);
  static TimeField scale(const TimeField& a, double s);
  static TimeField apply_linear(const TimeField& a,
                                std::function<SpectralField(const SpectralField&)> op);

  void clear_cache() const;

 private:
  struct Impl {
    Fn value;
    Fn ddt;  // empty -> stencil over value
    bool analytic = false;
    double stencil_dt = 1e-6;
    mutable std::map<double, SpectralField> cache_v;
    mutable std::map<double, SpectralField> cache_d;
  };
  std::shared_ptr<Impl> impl_;
};

// The Euler-Reynolds tuple of one stage, as evaluators on its time window.
struct EulerReynoldsState {
  int q = 0;
  int n = 0;            // grid resolution
  double T = 0.0;       // nominal interval [0, T]
  double window = 0.0;  // defined on [0,T] + window
  double eps0 = 1e-3;   // density floor
  ParameterSchedule schedule;

  TimeField rho;  // scalar
  TimeField u;    // vector
  TimeField p;    // scalar
  TimeField R;    // vector (continuity flux error)
  TimeField Phi;  // tensor (momentum current error)
  TimeField S;    // sym_tensor (quadratic stress error)

  double t_lo() const { return -window; }
  double t_hi() const { return T + window; }
};

// Stage-0 tuple per the closed-form construction: the density blends the
// homogeneous state and a single-mode stripe through a smooth time profile,
// with the flux error and quadratic stress chosen so the system is satisfied
// identically. Preconditions validated with named errors:
//   - profile domain: 2 sqrt(delta_0) + delta_1 < 1 (else the square root
//     in the time profile leaves the real line),
//   - integer lambda_bar inside [C lambda_0^{2 gamma} sqrt(delta_0),
//     lambda_0 sqrt(delta_0)] and resolvable on the grid.
struct InitialTupleParams {
  int lambda_bar = 0;       // 0 -> choose automatically
  double window_factor = 2.0;
  double compat_C = 1.0;    // constant in the lower compatibility bound
  double T = 0.0;           // 0 -> 3 tau_0
  int n = 64;
  double eps0 = 1e-3;
};

EulerReynoldsState initial_tuple(const ParameterSchedule& schedule, const InitialTupleParams& p);

// Closed-form ingredients of the stage-0 tuple, exposed for tests.
struct InitialProfile {
  double delta0, delta1;
  double chi(double t) const;        // mixing profile in [0, 1]
  double chi_dot(double t) const;
  double chi_ddot(double t) const;
  double e(double t) const;
  double e_dot(double t) const;
};
InitialProfile initial_profile(const ParameterSchedule& schedule);

}  // namespace nashflow

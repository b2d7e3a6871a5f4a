#pragma once

#include <functional>
#include <vector>

#include "nashflow/spectral_field.hpp"

namespace nashflow {

// Finite-difference weights for the m-th derivative at x0 from nodes x
// (Fornberg's algorithm).
std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m);

// A field sampled at strictly increasing instants. Frames share rank and
// resolution. Time differentiation uses a centered stencil of the configured
// order where possible and one-sided stencils at the ends.
class TimeSampledField {
 public:
  TimeSampledField() = default;
  TimeSampledField(std::vector<double> times, std::vector<SpectralField> frames,
                   int interp_order = 4);

  // Uniform-in-time constructor from a generator.
  static TimeSampledField generate(const std::vector<double>& times,
                                   const std::function<SpectralField(double)>& make,
                                   int interp_order = 4);

  bool empty() const { return frames_.empty(); }
  int samples() const { return int(frames_.size()); }
  const std::vector<double>& times() const { return times_; }
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  int interp_order() const { return interp_order_; }

  const SpectralField& frame(int i) const { return frames_[i]; }
  SpectralField& frame(int i) { return frames_[i]; }
  Rank rank() const { return frames_.front().rank(); }
  int n() const { return frames_.front().n(); }

  // Nearest sample index, and the index set of a centered interpolation
  // stencil of size m around time t.
  int nearest(double t) const;
  std::vector<int> stencil(double t, int size) const;

  // Time derivative at every sample (order = interp_order accuracy).
  TimeSampledField time_derivative() const;
  // Time derivative at one sample index.
  SpectralField time_derivative_at(int i) const;

  // Polynomial interpolation in time (Lagrange, local stencil).
  SpectralField interpolate(double t) const;

  // Map a SpectralField function over all frames.
  TimeSampledField map(const std::function<SpectralField(const SpectralField&)>& f) const;
  // Combine two time fields sample-by-sample (times must match).
  static TimeSampledField zip(const TimeSampledField& a, const TimeSampledField& b,
                              const std::function<SpectralField(const SpectralField&,
                                                                const SpectralField&)>& f);

  TimeSampledField& operator+=(const TimeSampledField& o);
  TimeSampledField& operator-=(const TimeSampledField& o);
  TimeSampledField& operator*=(double s);
  friend TimeSampledField operator+(TimeSampledField a, const TimeSampledField& b) { return a += b; }
  friend TimeSampledField operator-(TimeSampledField a, const TimeSampledField& b) { return a -= b; }

  // Sup over samples of the spatial C^m norm.
  double c_norm(int m, int max_order = 8) const;
  double max_abs() const;

  void check_same_grid(const TimeSampledField& o) const;

 private:
  std::vector<double> times_;
  std::vector<SpectralField> frames_;
  int interp_order_ = 4;
};

// Material derivative d_t f + (u . grad) f, sample-by-sample.
// u and f must share the time grid; u must be divergence-free to tolerance.
TimeSampledField material_derivative(const TimeSampledField& f, const TimeSampledField& u,
                                     double div_tol = 1e-8);

// C^0_t C^m_x norm of a time-sampled field (max convention over derivative
// orders <= m, consistent with SpectralField::c_norm).
double c_norm(const TimeSampledField& f, int m);

}  // namespace nashflow

#include "nashflow/time_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nashflow {

std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
  // B. Fornberg, "Generation of finite difference formulas on arbitrarily
  // spaced grids", Math. Comp. 51 (1988).
  const int n = int(x.size()) - 1;
  if (n < m) throw std::invalid_argument("fd_weights: not enough nodes");
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

TimeSampledField::TimeSampledField(std::vector<double> times, std::vector<SpectralField> frames,
                                   int interp_order)
    : times_(std::move(times)), frames_(std::move(frames)), interp_order_(interp_order) {
  if (times_.size() != frames_.size()) throw std::invalid_argument("times/frames size mismatch");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (times_[i] <= times_[i - 1]) throw std::invalid_argument("times must strictly increase");
  for (std::size_t i = 1; i < frames_.size(); ++i)
    if (frames_[i].rank() != frames_[0].rank() || frames_[i].n() != frames_[0].n())
      throw std::invalid_argument("frames must share rank and resolution");
  if (interp_order_ < 3) throw std::invalid_argument("interpolation order must be >= 3");
}

TimeSampledField TimeSampledField::generate(const std::vector<double>& times,
                                            const std::function<SpectralField(double)>& make,
                                            int interp_order) {
  std::vector<SpectralField> frames;
  frames.reserve(times.size());
  for (double t : times) frames.push_back(make(t));
  return TimeSampledField(times, std::move(frames), interp_order);
}

int TimeSampledField::nearest(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  if (it == times_.end()) return samples() - 1;
  const int hi = int(it - times_.begin());
  return (t - times_[hi - 1] <= times_[hi] - t) ? hi - 1 : hi;
}

std::vector<int> TimeSampledField::stencil(double t, int size) const {
  size = std::min(size, samples());
  int lo = nearest(t) - size / 2;
  lo = std::clamp(lo, 0, samples() - size);
  std::vector<int> idx(size);
  for (int i = 0; i < size; ++i) idx[i] = lo + i;
  return idx;
}

SpectralField TimeSampledField::time_derivative_at(int i) const {
  const int width = interp_order_ + 1;
  if (samples() < width)
    throw std::invalid_argument("not enough time samples for the configured stencil order");
  int lo = std::clamp(i - width / 2, 0, samples() - width);
  std::vector<double> nodes(times_.begin() + lo, times_.begin() + lo + width);
  std::vector<double> w = fd_weights(times_[i], nodes, 1);
  SpectralField acc(n(), rank());
  for (int j = 0; j < width; ++j) {
    SpectralField term = frames_[lo + j];
    term *= w[j];
    acc += term;
  }
  return acc;
}

TimeSampledField TimeSampledField::time_derivative() const {
  std::vector<SpectralField> out;
  out.reserve(frames_.size());
  for (int i = 0; i < samples(); ++i) out.push_back(time_derivative_at(i));
  return TimeSampledField(times_, std::move(out), interp_order_);
}

SpectralField TimeSampledField::interpolate(double t) const {
  const int width = std::min(interp_order_ + 1, samples());
  std::vector<int> idx = stencil(t, width);
  // Lagrange weights = fd_weights for derivative order 0.
  std::vector<double> nodes(width);
  for (int i = 0; i < width; ++i) nodes[i] = times_[idx[i]];
  std::vector<double> w = fd_weights(t, nodes, 0);
  SpectralField acc(n(), rank());
  for (int i = 0; i < width; ++i) {
    SpectralField term = frames_[idx[i]];
    term *= w[i];
    acc += term;
  }
  return acc;
}

TimeSampledField TimeSampledField::map(
    const std::function<SpectralField(const SpectralField&)>& f) const {
  std::vector<SpectralField> out;
  out.reserve(frames_.size());
  for (const auto& fr : frames_) out.push_back(f(fr));
  return TimeSampledField(times_, std::move(out), interp_order_);
}

TimeSampledField TimeSampledField::zip(
    const TimeSampledField& a, const TimeSampledField& b,
    const std::function<SpectralField(const SpectralField&, const SpectralField&)>& f) {
  if (a.samples() != b.samples()) throw std::invalid_argument("zip: sample count mismatch");
  for (int i = 0; i < a.samples(); ++i)
    if (a.times_[i] != b.times_[i]) throw std::invalid_argument("zip: time grids differ");
  std::vector<SpectralField> out;
  out.reserve(a.frames_.size());
  for (int i = 0; i < a.samples(); ++i) out.push_back(f(a.frames_[i], b.frames_[i]));
  return TimeSampledField(a.times_, std::move(out), a.interp_order_);
}

TimeSampledField& TimeSampledField::operator+=(const TimeSampledField& o) {
  check_same_grid(o);
  for (int i = 0; i < samples(); ++i) frames_[i] += o.frames_[i];
  return *this;
}

TimeSampledField& TimeSampledField::operator-=(const TimeSampledField& o) {
  check_same_grid(o);
  for (int i = 0; i < samples(); ++i) frames_[i] -= o.frames_[i];
  return *this;
}

TimeSampledField& TimeSampledField::operator*=(double s) {
  for (auto& f : frames_) f *= s;
  return *this;
}

double TimeSampledField::c_norm(int m, int max_order) const {
  double best = 0.0;
  for (const auto& f : frames_) best = std::max(best, f.c_norm(m, max_order));
  return best;
}

double TimeSampledField::max_abs() const {
  double best = 0.0;
  for (const auto& f : frames_) best = std::max(best, f.max_abs());
  return best;
}

void TimeSampledField::check_same_grid(const TimeSampledField& o) const {
  if (samples() != o.samples()) throw std::invalid_argument("sample count mismatch");
  for (int i = 0; i < samples(); ++i)
    if (times_[i] != o.times_[i]) throw std::invalid_argument("time grids differ");
}

TimeSampledField material_derivative(const TimeSampledField& f, const TimeSampledField& u,
                                     double div_tol) {
  f.check_same_grid(u);
  for (int i = 0; i < u.samples(); ++i) {
    const double d = u.frame(i).divergence().max_abs();
    const double scale = std::max(1.0, u.frame(i).max_abs());
    if (d > div_tol * scale)
      throw std::invalid_argument("material_derivative: velocity not divergence-free");
  }
  TimeSampledField ddt = f.time_derivative();
  for (int i = 0; i < f.samples(); ++i) ddt.frame(i) += advect(u.frame(i), f.frame(i));
  return ddt;
}

double c_norm(const TimeSampledField& f, int m) { return f.c_norm(m); }

}  // namespace nashflow

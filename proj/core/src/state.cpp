#include "nashflow/state.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nashflow/invdiv.hpp"

namespace nashflow {

TimeField TimeField::analytic(Fn value, Fn ddt) {
  TimeField f;
  f.impl_ = std::make_shared<Impl>();
  f.impl_->value = std::move(value);
  f.impl_->ddt = std::move(ddt);
  f.impl_->analytic = true;
  return f;
}

TimeField TimeField::constant(const SpectralField& c) {
  SpectralField zero(c.n(), c.rank());
  return analytic([c](double) { return c; }, [zero](double) { return zero; });
}

TimeField TimeField::sampled(TimeSampledField data) {
  auto holder = std::make_shared<TimeSampledField>(std::move(data));
  TimeField f;
  f.impl_ = std::make_shared<Impl>();
  f.impl_->value = [holder](double t) { return holder->interpolate(t); };
  f.impl_->ddt = [holder](double t) {
    // differentiate the interpolant: stencil over the sample grid
    const int width = std::min(holder->interp_order() + 1, holder->samples());
    std::vector<int> idx = holder->stencil(t, width);
    std::vector<double> nodes(width);
    for (int i = 0; i < width; ++i) nodes[i] = holder->times()[idx[i]];
    std::vector<double> w = fd_weights(t, nodes, 1);
    SpectralField acc(holder->n(), holder->rank());
    for (int i = 0; i < width; ++i) {
      SpectralField term = holder->frame(idx[i]);
      term *= w[i];
      acc += term;
    }
    return acc;
  };
  f.impl_->analytic = false;
  return f;
}

bool TimeField::analytic_dt() const { return impl_ && impl_->analytic; }

SpectralField TimeField::value(double t) const {
  if (!impl_) throw std::logic_error("empty TimeField");
  auto it = impl_->cache_v.find(t);
  if (it != impl_->cache_v.end()) return it->second;
  SpectralField f = impl_->value(t);
  if (impl_->cache_v.size() > 48) impl_->cache_v.clear();
  impl_->cache_v.emplace(t, f);
  return f;
}

SpectralField TimeField::ddt(double t) const {
  if (!impl_) throw std::logic_error("empty TimeField");
  auto it = impl_->cache_d.find(t);
  if (it != impl_->cache_d.end()) return it->second;
  SpectralField f = impl_->ddt(t);
  if (impl_->cache_d.size() > 48) impl_->cache_d.clear();
  impl_->cache_d.emplace(t, f);
  return f;
}

TimeField TimeField::add(const TimeField& a, const TimeField& b) {
  return analytic(
      [a, b](double t) {
        SpectralField f = a.value(t);
        f += b.value(t);
        return f;
      },
      [a, b](double t) {
        SpectralField f = a.ddt(t);
        f += b.ddt(t);
        return f;
      });
}

TimeField TimeField::sub(const TimeField& a, const TimeField& b) {
  return analytic(
      [a, b](double t) {
        SpectralField f = a.value(t);
        f -= b.value(t);
        return f;
      },
      [a, b](double t) {
        SpectralField f = a.ddt(t);
        f -= b.ddt(t);
        return f;
      });
}

TimeField TimeField::scale(const TimeField& a, double s) {
  return analytic(
      [a, s](double t) {
        SpectralField f = a.value(t);
        f *= s;
        return f;
      },
      [a, s](double t) {
        SpectralField f = a.ddt(t);
        f *= s;
        return f;
      });
}

TimeField TimeField::apply_linear(const TimeField& a,
                                  std::function<SpectralField(const SpectralField&)> op) {
  return analytic([a, op](double t) { return op(a.value(t)); },
                  [a, op](double t) { return op(a.ddt(t)); });
}

void TimeField::clear_cache() const {
  if (!impl_) return;
  impl_->cache_v.clear();
  impl_->cache_d.clear();
}

// ---------------------------------------------------------------------------
// stage-0 tuple
// ---------------------------------------------------------------------------

InitialProfile initial_profile(const ParameterSchedule& schedule) {
  InitialProfile p;
  p.delta0 = schedule.delta(0);
  p.delta1 = schedule.delta(1);
  return p;
}

double InitialProfile::e(double t) const {
  return -delta1 * (1.0 - std::exp(-std::sqrt(delta0) * t));
}
double InitialProfile::e_dot(double t) const {
  return -delta1 * std::sqrt(delta0) * std::exp(-std::sqrt(delta0) * t);
}
double InitialProfile::chi(double t) const {
  const double arg = 1.0 - 2.0 * std::sqrt(delta0) + e(t);
  return std::sqrt(arg);
}
double InitialProfile::chi_dot(double t) const { return e_dot(t) / (2.0 * chi(t)); }
double InitialProfile::chi_ddot(double t) const {
  const double c = chi(t);
  const double cd = chi_dot(t);
  const double edd = delta1 * delta0 * std::exp(-std::sqrt(delta0) * t);
  return (edd - 2.0 * cd * cd) / (2.0 * c);
}

EulerReynoldsState initial_tuple(const ParameterSchedule& schedule, const InitialTupleParams& prm) {
  schedule.validate();
  const double d0 = schedule.delta(0);
  const double d1 = schedule.delta(1);
  const double head = 1.0 - 2.0 * std::sqrt(d0) - d1;
  if (head <= 0.0)
    throw std::invalid_argument(
        "initial tuple: 2 sqrt(delta_0) + delta_1 = " + std::to_string(1.0 - head) +
        " >= 1, the time profile is not real; lambda_0 too small for the stage-0 formula");

  const double lo = prm.compat_C * std::pow(schedule.lambda0, 2.0 * schedule.gamma()) *
                    std::sqrt(d0);
  const double hi = schedule.lambda0 * std::sqrt(d0);
  if (std::ceil(lo) > std::floor(hi))
    throw std::invalid_argument("initial tuple: empty compatibility window [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "] for lambda_bar");
  int lb = prm.lambda_bar;
  const int nyq = prm.n / 2 - 1;
  if (lb == 0) lb = std::min(int(std::floor(hi)), nyq);
  if (lb < lo || lb > hi)
    throw std::invalid_argument("initial tuple: lambda_bar = " + std::to_string(lb) +
                                " outside the compatibility window [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  if (lb > nyq)
    throw std::invalid_argument("initial tuple: lambda_bar = " + std::to_string(lb) +
                                " is not resolvable on a " + std::to_string(prm.n) + "^3 grid");

  const InitialProfile prof = initial_profile(schedule);
  const int n = prm.n;
  const double T = prm.T > 0 ? prm.T : 3.0 * schedule.tau(0);

  // static single-mode building blocks
  SpectralField cosz(n, Rank::scalar), sinz(n, Rank::scalar), one(n, Rank::scalar);
  {
    double* c = cosz.comp(0);
    double* s = sinz.comp(0);
    double* o = one.comp(0);
    std::size_t idx = 0;
    for (int iz = 0; iz < n; ++iz) {
      const double z = 2.0 * std::numbers::pi * iz / n;
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix, ++idx) {
          c[idx] = std::cos(lb * z);
          s[idx] = std::sin(lb * z);
          o[idx] = 1.0;
        }
    }
    cosz.mark_grid_dirty();
    sinz.mark_grid_dirty();
    one.mark_grid_dirty();
  }

  EulerReynoldsState st;
  st.q = 0;
  st.n = n;
  st.T = T;
  st.window = prm.window_factor * schedule.tau(0) + 2.0 * schedule.tau(0);
  st.eps0 = prm.eps0;
  st.schedule = schedule;

  // rho_0(t,x) = chi(t) + (1 + cos(lb z)/4)(1 - chi(t)) = 1 + (1 - chi) cos/4
  st.rho = TimeField::analytic(
      [prof, cosz, one](double t) {
        SpectralField f = cosz;
        f *= 0.25 * (1.0 - prof.chi(t));
        f += one;
        return f;
      },
      [prof, cosz](double t) {
        SpectralField f = cosz;
        f *= -0.25 * prof.chi_dot(t);
        return f;
      });

  st.u = TimeField::constant(SpectralField(n, Rank::vector));
  st.p = TimeField::constant(SpectralField(n, Rank::scalar));
  st.Phi = TimeField::constant(SpectralField(n, Rank::tensor));

  // R_0 = chi'(t) sin(lb z)/(4 lb) e_z, so that div R_0 = chi' cos(lb z)/4 = -d_t rho_0
  st.R = TimeField::analytic(
      [prof, sinz, lb, n](double t) {
        SpectralField f(n, Rank::vector);
        SpectralField sz = sinz;
        sz *= prof.chi_dot(t) / (4.0 * lb);
        f.set_component(2, sz);
        return f;
      },
      [prof, sinz, lb, n](double t) {
        SpectralField f(n, Rank::vector);
        SpectralField sz = sinz;
        sz *= prof.chi_ddot(t) / (4.0 * lb);
        f.set_component(2, sz);
        return f;
      });

  // rho_0 S_0 = R(-d_t R_0) (inverse divergence), S_0 = (rho_0 S_0)/rho_0 pointwise.
  auto s_val = [prof, sinz, lb, n, st](double t) {
    SpectralField g(n, Rank::vector);
    SpectralField sz = sinz;
    sz *= -prof.chi_ddot(t) / (4.0 * lb);
    g.set_component(2, sz);
    SpectralField rs = inv_div_vector(g);
    // divide by rho_0 pointwise
    SpectralField rho = st.rho.value(t);
    const double* r = rho.comp(0);
    for (int c = 0; c < rs.comps(); ++c) {
      double* d = rs.comp(c);
      for (std::size_t p = 0; p < rs.points(); ++p) d[p] /= r[p];
    }
    rs.mark_grid_dirty();
    return rs;
  };
  st.S = TimeField::analytic(s_val, [s_val](double t) {
    // d_t via a fine centered stencil on the closed form (third derivative of
    // chi appears; the value itself is what enters the equations)
    const double h = 1e-6;
    SpectralField a = s_val(t + h);
    SpectralField b = s_val(t - h);
    a -= b;
    a *= 1.0 / (2.0 * h);
    return a;
  });
  return st;
}

}  // namespace nashflow

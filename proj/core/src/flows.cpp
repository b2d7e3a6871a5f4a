#include "nashflow/flows.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "nashflow/projectors.hpp"

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ModeSynth::ModeSynth(const TimeSampledField& f, double tol) {
  if (f.empty()) return;
  comps_ = component_count(f.rank());
  times_ = f.times();
  order_ = f.interp_order();
  // collect the union of active modes over frames and components
  std::map<std::array<int, 3>, int> index;
  for (int i = 0; i < f.samples(); ++i) {
    for (int c = 0; c < comps_; ++c) {
      SpectralField comp = f.frame(i).component(c);
      ModeList ml = active_modes(comp, tol);
      for (const auto& k : ml.wavevectors)
        if (!index.count(k)) {
          index.emplace(k, int(modes_.size()));
          Mode m;
          m.k = k;
          m.coeff.assign(comps_, std::vector<std::complex<double>>(f.samples(), {0.0, 0.0}));
          modes_.push_back(std::move(m));
        }
    }
  }
  if (modes_.empty()) {
    zero_ = true;
    return;
  }
  zero_ = false;
  // fill coefficients
  const int n = f.n();
  const int nh = n / 2 + 1;
  for (int i = 0; i < f.samples(); ++i) {
    f.frame(i).ensure_spectrum();
    for (int c = 0; c < comps_; ++c) {
      const std::complex<double>* sp = f.frame(i).spec_comp(c);
      for (auto& m : modes_) {
        const int kx = m.k[0];
        const int iy = m.k[1] >= 0 ? m.k[1] : m.k[1] + n;
        const int iz = m.k[2] >= 0 ? m.k[2] : m.k[2] + n;
        m.coeff[c][i] = sp[kx + std::size_t(nh) * (iy + std::size_t(n) * iz)];
      }
    }
  }
}

double ModeSynth::eval(int c, double t, const Eigen::Vector3d& x) const {
  if (zero_) return 0.0;
  // Lagrange weights over the local stencil
  const int width = std::min(order_ + 1, int(times_.size()));
  // nearest index
  int lo = 0;
  {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    int near = 0;
    if (it == times_.begin())
      near = 0;
    else if (it == times_.end())
      near = int(times_.size()) - 1;
    else {
      const int hi = int(it - times_.begin());
      near = (t - times_[hi - 1] <= times_[hi] - t) ? hi - 1 : hi;
    }
    lo = std::clamp(near - width / 2, 0, int(times_.size()) - width);
  }
  std::vector<double> nodes(times_.begin() + lo, times_.begin() + lo + width);
  std::vector<double> w = fd_weights(t, nodes, 0);
  double acc = 0.0;
  for (const auto& m : modes_) {
    std::complex<double> coef(0.0, 0.0);
    for (int j = 0; j < width; ++j) coef += w[j] * m.coeff[c][lo + j];
    if (coef == std::complex<double>(0.0, 0.0)) continue;
    const double phase = m.k[0] * x.x() + m.k[1] * x.y() + m.k[2] * x.z();
    const bool self = (m.k[0] == 0 && m.k[1] == 0 && m.k[2] == 0);
    const double wgt = self ? 1.0 : 2.0;
    acc += wgt * (coef.real() * std::cos(phase) - coef.imag() * std::sin(phase));
  }
  return acc;
}

Eigen::Vector3d ModeSynth::eval_vector(double t, const Eigen::Vector3d& x) const {
  return Eigen::Vector3d(eval(0, t, x), eval(1, t, x), eval(2, t, x));
}

// ---------------------------------------------------------------------------
// backward flow
// ---------------------------------------------------------------------------

FlowMap FlowMap::identity(int n, double t_p, double t_lo, double t_hi, int samples) {
  FlowMap fm;
  fm.identity_ = true;
  fm.n_ = n;
  fm.t_p_ = t_p;
  std::vector<double> times(samples);
  for (int i = 0; i < samples; ++i)
    times[i] = t_lo + (t_hi - t_lo) * double(i) / double(samples - 1);
  std::vector<SpectralField> frames(samples, SpectralField(n, Rank::vector));
  fm.disp_ = TimeSampledField(times, std::move(frames));
  return fm;
}

FlowMap FlowMap::solve(const TimeSampledField& u_ell, double t_p, double t_lo, double t_hi,
                       const Config& cfg) {
  if (u_ell.empty()) throw std::invalid_argument("flow: empty velocity");
  const int n = u_ell.n();
  if (t_p < t_lo || t_p > t_hi) throw std::invalid_argument("flow: anchor outside window");
  const double umax = u_ell.max_abs();
  if (umax == 0.0) {
    const int samples = std::max(5, cfg.substeps + 1);
    return identity(n, t_p, t_lo, t_hi, samples);
  }
  // divergence-free check (relative)
  for (int i = 0; i < u_ell.samples(); ++i) {
    const double d = u_ell.frame(i).divergence().max_abs();
    if (d > 1e-10 * std::max(1.0, u_ell.frame(i).c_norm(1)))
      throw std::invalid_argument("flow: velocity is not divergence-free");
  }

  // CFL guard for the spectral transport step
  const double dt = (t_hi - t_lo) / double(cfg.substeps);
  const double kmax = n / 2.0;
  if (umax * dt * kmax > cfg.cfl_limit * kTwoPi) {
    const double suggested = cfg.cfl_limit * kTwoPi / (umax * kmax);
    throw std::invalid_argument("flow: CFL violation, reduce the time step to <= " +
                                std::to_string(suggested));
  }

  // RHS of the displacement transport: d_t d = -(u . grad) d - u
  auto rhs = [&](double t, const SpectralField& d) {
    SpectralField u = u_ell.interpolate(t);
    SpectralField out = advect(u, d);
    out += u;
    out *= -1.0;
    return out;
  };

  // integrate from the anchor in both directions, collecting samples
  std::map<double, SpectralField> frames;
  frames.emplace(t_p, SpectralField(n, Rank::vector));
  auto march = [&](double from, double to) {
    const int steps = std::max(1, int(std::ceil(std::abs(to - from) / dt)));
    const double h = (to - from) / steps;
    SpectralField d = frames.at(from);
    double t = from;
    for (int s = 0; s < steps; ++s) {
      SpectralField k1 = rhs(t, d);
      SpectralField d2 = k1;
      d2 *= 0.5 * h;
      d2 += d;
      SpectralField k2 = rhs(t + 0.5 * h, d2);
      SpectralField d3 = k2;
      d3 *= 0.5 * h;
      d3 += d;
      SpectralField k3 = rhs(t + 0.5 * h, d3);
      SpectralField d4 = k3;
      d4 *= h;
      d4 += d;
      SpectralField k4 = rhs(t + h, d4);
      k2 *= 2.0;
      k3 *= 2.0;
      k1 += k2;
      k1 += k3;
      k1 += k4;
      k1 *= h / 6.0;
      d += k1;
      t = from + (s + 1) * h;
      frames.emplace(t, d);
    }
  };
  march(t_p, t_hi);
  march(t_p, t_lo);

  std::vector<double> times;
  std::vector<SpectralField> fr;
  for (auto& [t, f] : frames) {
    times.push_back(t);
    fr.push_back(std::move(f));
  }
  FlowMap fm;
  fm.identity_ = false;
  fm.n_ = n;
  fm.t_p_ = t_p;
  fm.disp_ = TimeSampledField(times, std::move(fr), u_ell.interp_order());

  const double jdev = fm.max_jacobian_deviation();
  if (jdev > cfg.jac_bound)
    throw std::runtime_error("flow: |Id - grad xi| = " + std::to_string(jdev) +
                             " exceeds the admissible bound (tau too large)");
  const double ddev = fm.max_det_deviation();
  if (ddev > cfg.det_tol)
    throw std::runtime_error("flow: |det grad xi - 1| = " + std::to_string(ddev) +
                             " exceeds tolerance (refine the time step)");
  return fm;
}

SpectralField FlowMap::displacement_at(double t) const {
  if (identity_) return SpectralField(n_, Rank::vector);
  return disp_.interpolate(t);
}

FlowSlice FlowMap::slice(double t) const {
  if (identity_) return FlowSlice::make_identity(n_);
  return FlowSlice::from_displacement(displacement_at(t));
}

Eigen::Vector3d FlowMap::xi(double t, const Eigen::Vector3d& x) const {
  if (identity_) return x;
  if (!disp_synth_) disp_synth_ = std::make_unique<ModeSynth>(disp_);
  return x + disp_synth_->eval_vector(t, x);
}

double FlowMap::max_jacobian_deviation() const {
  if (identity_) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < disp_.samples(); ++i) {
    const SpectralField& d = disp_.frame(i);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) worst = std::max(worst, d.component(a).dx(b).max_abs());
  }
  return worst;
}

double FlowMap::max_det_deviation() const {
  if (identity_) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < disp_.samples(); ++i) {
    const FlowSlice s = FlowSlice::from_displacement(disp_.frame(i));
    const double* g[9];
    for (int c = 0; c < 9; ++c) g[c] = s.grad.comp(c);
    for (std::size_t p = 0; p < s.grad.points(); ++p) {
      const double det = g[0][p] * (g[4][p] * g[8][p] - g[5][p] * g[7][p]) -
                         g[1][p] * (g[3][p] * g[8][p] - g[5][p] * g[6][p]) +
                         g[2][p] * (g[3][p] * g[7][p] - g[4][p] * g[6][p]);
      worst = std::max(worst, std::abs(det - 1.0));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// forward flow
// ---------------------------------------------------------------------------

ForwardFlow::ForwardFlow(const TimeSampledField& u_ell, double cfl) : synth_(u_ell) {
  const double umax = u_ell.empty() ? 0.0 : u_ell.max_abs();
  dt_hint_ = umax > 0 ? cfl / (umax * (u_ell.n() / 2.0)) : 1e30;
}

Eigen::Vector3d ForwardFlow::trace(double t0, double t1, const Eigen::Vector3d& x,
                                   int steps) const {
  if (synth_.zero()) return x;
  Eigen::Vector3d y = x;
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int s = 0; s < steps; ++s) {
    const Eigen::Vector3d k1 = synth_.eval_vector(t, y);
    const Eigen::Vector3d k2 = synth_.eval_vector(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::Vector3d k3 = synth_.eval_vector(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::Vector3d k4 = synth_.eval_vector(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

Eigen::Vector3d ForwardFlow::operator()(double t1, const Eigen::Vector3d& x, double t0) const {
  if (synth_.zero()) return x;
  const int steps = std::max(4, int(std::ceil(std::abs(t1 - t0) / dt_hint_)));
  return trace(t0, t1, x, steps);
}

// ---------------------------------------------------------------------------
// mollification along the flow
// ---------------------------------------------------------------------------

double mollifier_weight(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

TimeSampledField flow_mollify(const TimeSampledField& F, const TimeSampledField& u_ell,
                              double delta, const std::vector<double>& out_times, int quad_nodes,
                              int trace_steps) {
  if (F.empty()) throw std::invalid_argument("flow_mollify: empty field");
  for (double t : out_times)
    if (t - delta < F.t0() - 1e-12 || t + delta > F.t1() + 1e-12)
      throw std::invalid_argument(
          "flow_mollify: output window exceeds the domain of the input field");

  // Gauss-Legendre nodes on (-1,1) weighted by the mollifier, discretely
  // normalized to unit mass.
  std::vector<double> gx(quad_nodes), gw(quad_nodes);
  {
    // nodes on [0,1] -> map to [-1,1]
    std::vector<double> x01, w01;
    // reuse the temporal trick: Chebyshev-initialized Newton
    x01.resize(quad_nodes);
    w01.resize(quad_nodes);
    for (int i = 0; i < quad_nodes; ++i) {
      double t = std::cos(std::numbers::pi * (i + 0.75) / (quad_nodes + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= quad_nodes; ++k) {
          const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = quad_nodes * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= quad_nodes; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = quad_nodes * (t * p1 - p0) / (t * t - 1.0);
      gx[i] = t;
      gw[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
  std::vector<double> wn(quad_nodes);
  double total = 0.0;
  for (int i = 0; i < quad_nodes; ++i) {
    wn[i] = gw[i] * mollifier_weight(gx[i]);
    total += wn[i];
  }
  for (double& w : wn) w /= total;

  const bool frozen = u_ell.empty() || u_ell.max_abs() == 0.0;
  const int n = F.n();
  const int comps = component_count(F.rank());

  if (frozen) {
    // pure time mollification
    std::vector<SpectralField> frames;
    frames.reserve(out_times.size());
    for (double t : out_times) {
      SpectralField acc(n, F.rank());
      for (int i = 0; i < quad_nodes; ++i) {
        SpectralField term = F.interpolate(t + delta * gx[i]);
        term *= wn[i];
        acc += term;
      }
      frames.push_back(std::move(acc));
    }
    return TimeSampledField(out_times, std::move(frames), F.interp_order());
  }

  // trajectory-based quadrature: per grid point march along the forward flow
  ModeSynth fsynth(F);
  ForwardFlow flow(u_ell);
  std::vector<SpectralField> frames;
  frames.reserve(out_times.size());
  for (double t : out_times) {
    SpectralField acc(n, F.rank());
    std::vector<double*> dst(comps);
    for (int c = 0; c < comps; ++c) dst[c] = acc.comp(c);
#pragma omp parallel for schedule(dynamic, 8) collapse(2)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          const std::size_t p = std::size_t(ix) + std::size_t(n) * (iy + std::size_t(n) * iz);
          const Eigen::Vector3d x(kTwoPi * ix / n, kTwoPi * iy / n, kTwoPi * iz / n);
          // march through the sorted nodes incrementally
          Eigen::Vector3d y = x;
          double cur = t;
          std::vector<double> acc_c(comps, 0.0);
          for (int i = quad_nodes - 1; i >= 0; --i) {  // gx descending? ensure sorted below
            const double s = delta * gx[i];
            y = flow.trace(cur, t + s, y, std::max(2, trace_steps / quad_nodes + 2));
            cur = t + s;
            for (int c = 0; c < comps; ++c) acc_c[c] += wn[i] * fsynth.eval(c, cur, y);
          }
          for (int c = 0; c < comps; ++c) dst[c][p] = acc_c[c];
        }
      }
    acc.mark_grid_dirty();
    frames.push_back(std::move(acc));
  }
  return TimeSampledField(out_times, std::move(frames), F.interp_order());
}

MollifiedErrors mollify_errors(const TimeSampledField& R, const TimeSampledField& Phi,
                               const TimeSampledField& S, double ell, double ell_t,
                               const TimeSampledField& u_ell,
                               const std::vector<double>& out_times) {
  const double K = 1.0 / ell;
  MollifiedErrors out;
  out.R = flow_mollify(project_low(R, K), u_ell, ell_t, out_times);
  out.Phi = flow_mollify(project_low(Phi, K), u_ell, ell_t, out_times);
  out.S = flow_mollify(project_low(S, K), u_ell, ell_t, out_times);
  return out;
}

}  // namespace nashflow

#include "nashflow/local_invdiv.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

SpectralField identity_matrix_field(int n) {
  // exact spectra (only the zero mode) so products can use the fast path
  SpectralField id(n, Rank::tensor);
  for (int i = 0; i < 3; ++i) id.spec_comp(ten_index(i, i))[0] = {1.0, 0.0};
  id.mark_spec_dirty();
  return id;
}

}  // namespace

FlowSlice FlowSlice::make_identity(int n) {
  FlowSlice s;
  s.identity = true;
  s.grad = identity_matrix_field(n);
  s.grad_inv = identity_matrix_field(n);
  return s;
}

FlowSlice FlowSlice::from_displacement(const SpectralField& disp) {
  if (disp.rank() != Rank::vector)
    throw std::invalid_argument("flow displacement must be a vector field");
  FlowSlice s;
  s.identity = false;
  s.displacement = disp;
  const int n = disp.n();
  s.grad = identity_matrix_field(n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      SpectralField d = disp.component(i).dx(j);
      d.ensure_grid();
      double* dst = s.grad.comp(ten_index(i, j));
      const double* src = d.comp(0);
      for (std::size_t p = 0; p < disp.points(); ++p) dst[p] += src[p];
    }
  s.grad.mark_grid_dirty();
  // pointwise 3x3 inversion
  s.grad_inv = SpectralField(n, Rank::tensor);
  const double* g[9];
  for (int c = 0; c < 9; ++c) g[c] = s.grad.comp(c);
  double* gi[9];
  for (int c = 0; c < 9; ++c) gi[c] = s.grad_inv.comp(c);
  for (std::size_t p = 0; p < disp.points(); ++p) {
    const double a = g[0][p], b = g[1][p], c0 = g[2][p];
    const double d = g[3][p], e = g[4][p], f = g[5][p];
    const double gg = g[6][p], h = g[7][p], i0 = g[8][p];
    const double A = e * i0 - f * h, B = -(d * i0 - f * gg), C = d * h - e * gg;
    const double det = a * A + b * B + c0 * C;
    const double inv = 1.0 / det;
    gi[0][p] = A * inv;
    gi[1][p] = -(b * i0 - c0 * h) * inv;
    gi[2][p] = (b * f - c0 * e) * inv;
    gi[3][p] = B * inv;
    gi[4][p] = (a * i0 - c0 * gg) * inv;
    gi[5][p] = -(a * f - c0 * d) * inv;
    gi[6][p] = C * inv;
    gi[7][p] = -(a * h - b * gg) * inv;
    gi[8][p] = (a * e - b * d) * inv;
  }
  s.grad_inv.mark_grid_dirty();
  return s;
}

DerivedScalar DerivedScalar::from_field(const SpectralField& zeta, double tol) {
  DerivedScalar d;
  d.base = std::make_shared<ModeList>(active_modes(zeta, tol));
  d.mult = [](const std::array<int, 3>&) { return std::complex<double>(1.0, 0.0); };
  return d;
}

DerivedScalar DerivedScalar::apply(
    const std::function<std::complex<double>(const std::array<int, 3>&)>& m) const {
  DerivedScalar d;
  d.base = base;
  auto prev = mult;
  d.mult = [prev, m](const std::array<int, 3>& k) { return prev(k) * m(k); };
  return d;
}

SpectralField compose_with_flow(const DerivedScalar& f, const FlowSlice& xi, int n) {
  SpectralField out(n, Rank::scalar);
  double* dst = out.comp(0);
  const std::size_t pts = out.points();
  std::fill(dst, dst + pts, 0.0);

  // Unit roots for exact e^{i k.x} at collocation points.
  std::vector<std::complex<double>> roots(n);
  for (int t = 0; t < n; ++t) {
    const double a = kTwoPi * double(t) / double(n);
    roots[t] = {std::cos(a), std::sin(a)};
  }
  const double* dx = nullptr;
  const double* dy = nullptr;
  const double* dz = nullptr;
  if (!xi.identity) {
    dx = xi.displacement.comp(0);
    dy = xi.displacement.comp(1);
    dz = xi.displacement.comp(2);
  }

  const auto& ml = *f.base;
  for (std::size_t mi = 0; mi < ml.wavevectors.size(); ++mi) {
    const auto& k = ml.wavevectors[mi];
    const std::complex<double> amp = ml.coeffs[mi] * f.mult(k);
    if (std::abs(amp) == 0.0) continue;
    const bool self_conj = (k[0] == 0 && k[1] == 0 && k[2] == 0);
    const double w = self_conj ? 1.0 : 2.0;
    std::size_t p = 0;
    for (int iz = 0; iz < n; ++iz) {
      const long pz = (long(k[2]) * iz) % n;
      for (int iy = 0; iy < n; ++iy) {
        const long py = (pz + long(k[1]) * iy) % n;
        for (int ix = 0; ix < n; ++ix, ++p) {
          long t = (py + long(k[0]) * ix) % n;
          if (t < 0) t += n;
          std::complex<double> ph = roots[t];
          if (dx) {
            const double extra = k[0] * dx[p] + k[1] * dy[p] + k[2] * dz[p];
            ph *= std::complex<double>(std::cos(extra), std::sin(extra));
          }
          dst[p] += w * (amp.real() * ph.real() - amp.imag() * ph.imag());
        }
      }
    }
  }
  out.mark_grid_dirty();
  return out;
}

namespace {

// Check |grad xi - Id|_inf <= tol on the support of G.
void check_jacobian(const SpectralField& G, const FlowSlice& xi, double tol) {
  if (xi.identity) return;
  double worst = 0.0;
  for (std::size_t p = 0; p < G.points(); ++p) {
    double gmag = 0.0;
    for (int c = 0; c < G.comps(); ++c) gmag = std::max(gmag, std::abs(G.comp(c)[p]));
    if (gmag == 0.0) continue;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double v = xi.grad.comp(ten_index(i, j))[p] - (i == j ? 1.0 : 0.0);
        worst = std::max(worst, std::abs(v));
      }
  }
  if (worst > tol)
    throw std::invalid_argument(
        "local inverse divergence: |grad xi - Id| = " + std::to_string(worst) +
        " exceeds the admissible bound on supp G");
}

std::complex<double> inv_lap_dx(const std::array<int, 3>& k, int i) {
  const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
  if (k2 == 0.0) return {0.0, 0.0};
  return std::complex<double>(0.0, -double(k[i]) / k2);
}

std::complex<double> inv_lap2_dxdxdx(const std::array<int, 3>& k, int i, int j, int m) {
  const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
  if (k2 == 0.0) return {0.0, 0.0};
  return std::complex<double>(0.0, -double(k[i]) * double(k[j]) * double(k[m]) / (k2 * k2));
}

}  // namespace

LocalStepResult local_inv_div_step(const LocalTerm& term, const FlowSlice& xi,
                                   double jacobian_tol) {
  const SpectralField& G = term.G;
  if (G.rank() != Rank::vector) throw std::invalid_argument("local step needs a vector G");
  const int n = G.n();
  check_jacobian(G, xi, jacobian_tol);

  // High-frequency factors composed with the flow:
  //   theta1[i]    = (lap^{-1} d_i zeta) o xi
  //   theta2[(ij)m] = (lap^{-2} d_i d_j d_m zeta) o xi
  std::array<SpectralField, 3> theta1;
  for (int i = 0; i < 3; ++i)
    theta1[i] = compose_with_flow(
        term.zeta.apply([i](const std::array<int, 3>& k) { return inv_lap_dx(k, i); }), xi, n);
  std::array<std::array<SpectralField, 3>, 6> theta2;  // [sym_index(i,j)][m]
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int m = 0; m < 3; ++m)
        theta2[sym_index(i, j)][m] = compose_with_flow(
            term.zeta.apply([i, j, m](const std::array<int, 3>& k) {
              return inv_lap2_dxdxdx(k, i, j, m);
            }),
            xi, n);

  const SpectralField& A = xi.grad_inv;  // A[i][l] at ten_index(i,l)

  // V^l = sum_i A_i^l theta1_i
  SpectralField V(n, Rank::vector);
  for (int l = 0; l < 3; ++l) {
    SpectralField acc(n, Rank::scalar);
    for (int i = 0; i < 3; ++i) acc += multiply(A.component(ten_index(l, i)), theta1[i]);
    V.set_component(l, acc);
  }

  // R = G (x) V + V (x) G - sum_m W^m (A^T Theta_m A), W = (grad xi) G.
  SpectralField R(n, Rank::sym_tensor);
  {
    std::vector<ProductTerm> terms;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        terms.push_back({i, j, sym_index(i, j), 1.0});
        terms.push_back({j, i, sym_index(i, j), 1.0});
      }
    R = product(G, V, Rank::sym_tensor, terms);
  }
  SpectralField W = matvec(xi.grad, G);  // W^m = d_n xi^m G^n
  for (int m = 0; m < 3; ++m) {
    // S_m^{kl} = sum_{ij} A_i^k A_j^l theta2[(ij)][m]
    SpectralField Sm(n, Rank::sym_tensor);
    for (int kk = 0; kk < 3; ++kk)
      for (int ll = kk; ll < 3; ++ll) {
        SpectralField acc(n, Rank::scalar);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            SpectralField aa = multiply(A.component(ten_index(kk, i)), A.component(ten_index(ll, j)));
            acc += multiply(aa, theta2[sym_index(i, j)][m]);
          }
        Sm.set_component(sym_index(kk, ll), acc);
      }
    SpectralField contrib = multiply(W.component(m), Sm);
    R -= contrib;
  }

  // Error terms (inputs to the next iteration):
  //   group 1: zeta'_i = lap^{-1} d_i zeta,
  //            G'_i^k  = -(d_l G^k) A_i^l - d_l(G^l A_i^k)
  //   group 2: zeta'_{(ij)m} = lap^{-2} d_i d_j d_m zeta,
  //            G'^k = d_n(W^m A_i^k) A_j^n   (+ the i<->j partner for i != j)
  LocalStepResult out;
  out.R = R;
  for (int i = 0; i < 3; ++i) {
    SpectralField Gp(n, Rank::vector);
    for (int kk = 0; kk < 3; ++kk) {
      SpectralField acc(n, Rank::scalar);
      for (int l = 0; l < 3; ++l) {
        acc -= multiply(G.component(kk).dx(l), A.component(ten_index(l, i)));
        acc -= multiply(G.component(l), A.component(ten_index(kk, i))).dx(l);
      }
      Gp.set_component(kk, acc);
    }
    LocalTerm t;
    t.G = Gp;
    t.zeta = term.zeta.apply([i](const std::array<int, 3>& k) { return inv_lap_dx(k, i); });
    out.error_terms.push_back(std::move(t));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int m = 0; m < 3; ++m) {
        SpectralField Gp(n, Rank::vector);
        auto add_part = [&](int ii, int jj) {
          for (int kk = 0; kk < 3; ++kk) {
            SpectralField acc = Gp.component(kk);
            for (int nn = 0; nn < 3; ++nn) {
              SpectralField inner = multiply(W.component(m), A.component(ten_index(kk, ii)));
              acc += multiply(inner.dx(nn), A.component(ten_index(nn, jj)));
            }
            Gp.set_component(kk, acc);
          }
        };
        add_part(i, j);
        if (i != j) add_part(j, i);
        LocalTerm t;
        t.G = Gp;
        t.zeta = term.zeta.apply([i, j, m](const std::array<int, 3>& k) {
          return inv_lap2_dxdxdx(k, i, j, m);
        });
        out.error_terms.push_back(std::move(t));
      }

  // Materialize E for diagnostics.
  SpectralField E(n, Rank::vector);
  for (const auto& t : out.error_terms) {
    SpectralField z = compose_with_flow(t.zeta, xi, n);
    E += multiply(z, t.G);
  }
  out.E = E;
  return out;
}

LocalStepResult local_inv_div_step(const SpectralField& G, const TensorPotential& theta2,
                                   const FlowSlice& xi, double jacobian_tol) {
  if (theta2.order() != 2)
    throw std::invalid_argument("local step overload needs an order-2 potential");
  // Recover the scalar and run the generic step.
  SpectralField zeta = theta2.recompose();
  LocalTerm t;
  t.G = G;
  t.zeta = DerivedScalar::from_field(zeta);
  return local_inv_div_step(t, xi, jacobian_tol);
}

LocalInvDivResult local_inv_div_terms(std::vector<LocalTerm> terms, const FlowSlice& xi,
                                      const LocalInvDivConfig& cfg) {
  if (cfg.d < 2 || cfg.d % 2 != 0) throw std::invalid_argument("local inverse divergence: d must be even and >= 2");
  const int n = terms.empty() ? 0 : terms.front().G.n();
  if (n == 0) throw std::invalid_argument("local inverse divergence: empty term list");

  // Target field for the exact split: sum of G (zeta o xi).
  SpectralField target(n, Rank::vector);
  for (const auto& t : terms) {
    SpectralField z = compose_with_flow(t.zeta, xi, n);
    target += multiply(z, t.G);
  }

  LocalInvDivResult out;
  out.R_local = SpectralField(n, Rank::sym_tensor);
  out.error_history.push_back(target.max_abs());

  std::vector<LocalTerm> cur = std::move(terms);
  const int steps = cfg.d / 2;
  for (int s = 0; s < steps; ++s) {
    std::vector<LocalTerm> next;
    SpectralField E_sum(n, Rank::vector);
    for (const auto& t : cur) {
      LocalStepResult r = local_inv_div_step(t, xi, cfg.jacobian_tol);
      out.R_local += r.R;
      E_sum += r.E;
      for (auto& e : r.error_terms) next.push_back(std::move(e));
    }
    out.error_history.push_back(E_sum.max_abs());
    cur = std::move(next);
  }
  for (std::size_t i = 1; i < out.error_history.size(); ++i)
    if (out.error_history[i] >= out.error_history[i - 1]) out.decreasing = false;

  // Nonlocal remainder fixed by the divergence contract:
  // div(R_local + R_nonlocal) = target - <target> exactly on the grid.
  SpectralField rem = target;
  rem -= out.R_local.divergence();
  out.R_nonlocal = inv_div_vector(rem);
  return out;
}

LocalInvDivResult local_inv_div(const SpectralField& G, const SpectralField& zeta,
                                const FlowSlice& xi, const LocalInvDivConfig& cfg) {
  LocalTerm t;
  t.G = G;
  t.zeta = DerivedScalar::from_field(zeta);
  std::vector<LocalTerm> terms;
  terms.push_back(std::move(t));
  return local_inv_div_terms(std::move(terms), xi, cfg);
}

}  // namespace nashflow

#include "nashflow/invdiv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nashflow {

SpectralField inv_div_vector(const SpectralField& g) {
  if (g.rank() != Rank::vector) throw std::invalid_argument("inv_div_vector needs a vector field");
  g.ensure_spectrum();
  const int n = g.n();
  const int nh = n / 2 + 1;
  SpectralField out(n, Rank::sym_tensor);
  const std::complex<double>* gs[3] = {g.spec_comp(0), g.spec_comp(1), g.spec_comp(2)};
  std::complex<double>* os[6];
  for (int c = 0; c < 6; ++c) os[c] = out.spec_comp(c);
  std::size_t s = 0;
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      for (int kx = 0; kx < nh; ++kx, ++s) {
        const double k[3] = {double(kx), double(ky), double(kz)};
        const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if (k2 == 0.0) {
          for (int c = 0; c < 6; ++c) os[c][s] = {0.0, 0.0};
          continue;
        }
        const double kn = std::sqrt(k2);
        const double nu[3] = {k[0] / kn, k[1] / kn, k[2] / kn};
        const std::complex<double> gh[3] = {gs[0][s], gs[1][s], gs[2][s]};
        const std::complex<double> ng = nu[0] * gh[0] + nu[1] * gh[1] + nu[2] * gh[2];
        const std::complex<double> pref(0.0, -1.0 / kn);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            std::complex<double> v = nu[i] * gh[j] + nu[j] * gh[i];
            v -= 0.5 * ng * (nu[i] * nu[j] + (i == j ? 1.0 : 0.0));
            os[sym_index(i, j)][s] = pref * v;
          }
      }
    }
  }
  out.mark_spec_dirty();
  return out;
}

SpectralField inv_div_scalar(const SpectralField& f) {
  if (f.rank() != Rank::scalar) throw std::invalid_argument("inv_div_scalar needs a scalar field");
  SpectralField p = f.inv_laplacian();
  return p.gradient();
}

namespace {

std::vector<std::vector<int>> sorted_multi_indices(int order) {
  // nondecreasing sequences over {0,1,2}
  std::vector<std::vector<int>> out;
  std::vector<int> cur(order, 0);
  while (true) {
    out.push_back(cur);
    int pos = order - 1;
    while (pos >= 0 && cur[pos] == 2) --pos;
    if (pos < 0) break;
    const int v = cur[pos] + 1;
    for (int i = pos; i < order; ++i) cur[i] = v;
  }
  return out;
}

std::size_t multiplicity(const std::vector<int>& idx) {
  // number of distinct orderings = d! / (c0! c1! c2!)
  int c[3] = {0, 0, 0};
  for (int v : idx) ++c[v];
  auto fact = [](int m) {
    std::size_t f = 1;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  return fact(int(idx.size())) / (fact(c[0]) * fact(c[1]) * fact(c[2]));
}

}  // namespace

TensorPotential TensorPotential::build(const SpectralField& zeta, int order, double mean_tol) {
  if (zeta.rank() != Rank::scalar) throw std::invalid_argument("tensor potential needs a scalar");
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("tensor potential order must be even and >= 2");
  if (std::abs(zeta.mean_scalar()) > mean_tol * std::max(1.0, zeta.max_abs()))
    throw std::invalid_argument("tensor potential requires a mean-zero scalar");
  TensorPotential tp;
  tp.order_ = order;
  tp.n_ = zeta.n();
  // theta^(idx) = lap^{-order} d_idx zeta, computed directly in Fourier space
  zeta.ensure_spectrum();
  const int n = zeta.n();
  const int nh = n / 2 + 1;
  for (const auto& idx : sorted_multi_indices(order)) {
    SpectralField comp(n, Rank::scalar);
    const std::complex<double>* src = zeta.spec_comp(0);
    std::complex<double>* dst = comp.spec_comp(0);
    std::size_t s = 0;
    for (int iz = 0; iz < n; ++iz) {
      const int kz = Fft::wavenumber(n, iz);
      for (int iy = 0; iy < n; ++iy) {
        const int ky = Fft::wavenumber(n, iy);
        for (int kx = 0; kx < nh; ++kx, ++s) {
          const double k[3] = {double(kx), double(ky), double(kz)};
          const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
          if (k2 == 0.0) {
            dst[s] = {0.0, 0.0};
            continue;
          }
          std::complex<double> mult(1.0, 0.0);
          for (int v : idx) mult *= std::complex<double>(0.0, k[v]);
          double denom = 1.0;
          for (int r = 0; r < order; ++r) denom *= -k2;
          dst[s] = src[s] * mult / denom;
        }
      }
    }
    comp.mark_spec_dirty();
    tp.comps_.emplace(idx, std::move(comp));
  }
  return tp;
}

const SpectralField& TensorPotential::component(std::vector<int> idx) const {
  std::sort(idx.begin(), idx.end());
  auto it = comps_.find(idx);
  if (it == comps_.end()) throw std::out_of_range("tensor potential component");
  return it->second;
}

SpectralField TensorPotential::recompose() const {
  SpectralField acc(n_, Rank::scalar);
  for (const auto& [idx, comp] : comps_) {
    std::array<int, 3> alpha{0, 0, 0};
    for (int v : idx) ++alpha[v];
    SpectralField d = comp.derivative(alpha, order_);
    d *= double(multiplicity(idx));
    acc += d;
  }
  return acc;
}

ModeList active_modes(const SpectralField& scalar, double tol, std::size_t cap) {
  if (scalar.rank() != Rank::scalar) throw std::invalid_argument("active_modes needs a scalar");
  scalar.ensure_spectrum();
  const int n = scalar.n();
  const int nh = n / 2 + 1;
  const std::complex<double>* src = scalar.spec_comp(0);
  ModeList ml;
  const double scale = std::max(1e-300, scalar.max_abs());
  std::size_t s = 0;
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      for (int kx = 0; kx < nh; ++kx, ++s) {
        if (std::abs(src[s]) <= tol * scale) continue;
        // skip the conjugate duplicates on the kx = 0 plane (keep one rep)
        if (kx == 0) {
          if (ky < 0 || (ky == 0 && kz < 0)) continue;
        }
        ml.wavevectors.push_back({kx, ky, kz});
        ml.coeffs.push_back(src[s]);
        if (ml.wavevectors.size() > cap)
          throw std::invalid_argument("active_modes: field is not band-limited enough");
      }
    }
  }
  return ml;
}

}  // namespace nashflow

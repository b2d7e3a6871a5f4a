#include "nashflow/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nashflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void enumerate_multi_indices(int order, std::vector<std::array<int, 3>>& out) {
  for (int ax = 0; ax <= order; ++ax)
    for (int ay = 0; ay + ax <= order; ++ay) out.push_back({ax, ay, order - ax - ay});
}
}  // namespace

int component_count(Rank rank) {
  switch (rank) {
    case Rank::scalar: return 1;
    case Rank::vector: return 3;
    case Rank::sym_tensor: return 6;
    case Rank::tensor: return 9;
  }
  throw std::logic_error("bad rank");
}

int sym_index(int i, int j) {
  if (i > j) std::swap(i, j);
  // (0,0)(0,1)(0,2)(1,1)(1,2)(2,2)
  static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[i][j];
}

SpectralField::SpectralField(int n, Rank rank)
    : n_(n), rank_(rank), comps_(component_count(rank)) {
  grid_.assign(comps_, std::vector<double>(Fft::grid_size(n), 0.0));
  spec_.assign(comps_, std::vector<std::complex<double>>(Fft::spec_size(n), {0.0, 0.0}));
  grid_valid_ = true;
  spec_valid_ = true;  // all zeros
}

double SpectralField::grid_coord(int i) const { return kTwoPi * double(i) / double(n_); }

double* SpectralField::comp(int c) {
  ensure_grid();
  spec_valid_ = false;  // assume caller writes
  return grid_[c].data();
}

const double* SpectralField::comp(int c) const {
  ensure_grid();
  return grid_[c].data();
}

double& SpectralField::at(int c, int ix, int iy, int iz) {
  ensure_grid();
  spec_valid_ = false;
  return grid_[c][std::size_t(ix) + std::size_t(n_) * (iy + std::size_t(n_) * iz)];
}

double SpectralField::value(int c, int ix, int iy, int iz) const {
  ensure_grid();
  return grid_[c][std::size_t(ix) + std::size_t(n_) * (iy + std::size_t(n_) * iz)];
}

void SpectralField::mark_grid_dirty() {
  grid_valid_ = true;
  spec_valid_ = false;
}

void SpectralField::mark_spec_dirty() {
  spec_valid_ = true;
  grid_valid_ = false;
}

std::complex<double>* SpectralField::spec_comp(int c) {
  ensure_spectrum();
  grid_valid_ = false;  // assume caller writes
  return spec_[c].data();
}

const std::complex<double>* SpectralField::spec_comp(int c) const {
  ensure_spectrum();
  return spec_[c].data();
}

void SpectralField::ensure_spectrum() const {
  if (spec_valid_) return;
  if (!grid_valid_) throw std::logic_error("field has neither grid nor spectrum");
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < comps_; ++c) Fft::forward(n_, grid_[c].data(), spec_[c].data());
  spec_valid_ = true;
}

void SpectralField::ensure_grid() const {
  if (grid_valid_) return;
  if (!spec_valid_) throw std::logic_error("field has neither grid nor spectrum");
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < comps_; ++c) Fft::inverse(n_, spec_[c].data(), grid_[c].data());
  grid_valid_ = true;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (n_ != o.n_ || rank_ != o.rank_) throw std::invalid_argument("field shape mismatch");
  if (spec_valid_ && o.spec_valid_) {
    const bool both_grids = grid_valid_ && o.grid_valid_;
    for (int c = 0; c < comps_; ++c) {
      const auto* src = o.spec_[c].data();
      auto* dst = spec_[c].data();
      for (std::size_t i = 0; i < spec_[c].size(); ++i) dst[i] += src[i];
    }
    if (both_grids) {
      for (int c = 0; c < comps_; ++c) {
        const double* src = o.grid_[c].data();
        double* dst = grid_[c].data();
        for (std::size_t i = 0; i < grid_[c].size(); ++i) dst[i] += src[i];
      }
    } else {
      grid_valid_ = false;
    }
    return *this;
  }
  ensure_grid();
  o.ensure_grid();
  for (int c = 0; c < comps_; ++c) {
    const double* src = o.grid_[c].data();
    double* dst = grid_[c].data();
    for (std::size_t i = 0; i < grid_[c].size(); ++i) dst[i] += src[i];
  }
  spec_valid_ = false;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (n_ != o.n_ || rank_ != o.rank_) throw std::invalid_argument("field shape mismatch");
  if (spec_valid_ && o.spec_valid_) {
    const bool both_grids = grid_valid_ && o.grid_valid_;
    for (int c = 0; c < comps_; ++c) {
      const auto* src = o.spec_[c].data();
      auto* dst = spec_[c].data();
      for (std::size_t i = 0; i < spec_[c].size(); ++i) dst[i] -= src[i];
    }
    if (both_grids) {
      for (int c = 0; c < comps_; ++c) {
        const double* src = o.grid_[c].data();
        double* dst = grid_[c].data();
        for (std::size_t i = 0; i < grid_[c].size(); ++i) dst[i] -= src[i];
      }
    } else {
      grid_valid_ = false;
    }
    return *this;
  }
  ensure_grid();
  o.ensure_grid();
  for (int c = 0; c < comps_; ++c) {
    const double* src = o.grid_[c].data();
    double* dst = grid_[c].data();
    for (std::size_t i = 0; i < grid_[c].size(); ++i) dst[i] -= src[i];
  }
  spec_valid_ = false;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  if (grid_valid_) {
    for (int c = 0; c < comps_; ++c)
      for (double& v : grid_[c]) v *= s;
  }
  if (spec_valid_) {
    for (int c = 0; c < comps_; ++c)
      for (auto& v : spec_[c]) v *= s;
  }
  return *this;
}

std::array<int, 3> SpectralField::axis_alpha(int axis) {
  std::array<int, 3> a{0, 0, 0};
  a[axis] = 1;
  return a;
}

SpectralField SpectralField::derivative(const std::array<int, 3>& alpha, int max_order) const {
  const int total = alpha[0] + alpha[1] + alpha[2];
  if (total > max_order) throw std::invalid_argument("derivative order exceeds configured maximum");
  ensure_spectrum();
  SpectralField out(n_, rank_);
  const int nh = n_ / 2 + 1;
  for (int c = 0; c < comps_; ++c) {
    std::complex<double>* dst = out.spec_[c].data();
    const std::complex<double>* src = spec_[c].data();
    std::size_t s = 0;
    for (int iz = 0; iz < n_; ++iz) {
      const int kz = Fft::wavenumber(n_, iz);
      for (int iy = 0; iy < n_; ++iy) {
        const int ky = Fft::wavenumber(n_, iy);
        for (int kx = 0; kx < nh; ++kx, ++s) {
          const int k[3] = {kx, ky, kz};
          std::complex<double> f(1.0, 0.0);
          bool zero = false;
          for (int ax = 0; ax < 3 && !zero; ++ax) {
            const int m = alpha[ax];
            if (m == 0) continue;
            // Odd derivatives kill the (real, sign-ambiguous) Nyquist mode.
            if (std::abs(k[ax]) == n_ / 2 && (m % 2 != 0)) {
              zero = true;
              continue;
            }
            std::complex<double> ik(0.0, double(k[ax]));
            for (int r = 0; r < m; ++r) f *= ik;
          }
          dst[s] = zero ? std::complex<double>(0.0, 0.0) : f * src[s];
        }
      }
    }
  }
  out.mark_spec_dirty();
  return out;
}

SpectralField SpectralField::component(int c) const {
  SpectralField out(n_, Rank::scalar);
  if (spec_valid_) {
    std::copy(spec_[c].begin(), spec_[c].end(), out.spec_comp(0));
    out.mark_spec_dirty();
    if (grid_valid_) {
      std::copy(grid_[c].begin(), grid_[c].end(), out.grid_[0].begin());
      out.grid_valid_ = true;
    }
  } else {
    ensure_grid();
    std::copy(grid_[c].begin(), grid_[c].end(), out.comp(0));
    out.mark_grid_dirty();
  }
  return out;
}

void SpectralField::set_component(int c, const SpectralField& scalar) {
  if (scalar.rank() != Rank::scalar || scalar.n() != n_)
    throw std::invalid_argument("set_component needs a scalar field on the same grid");
  // stay in spectral space so exact zeros survive
  scalar.ensure_spectrum();
  ensure_spectrum();
  std::copy(scalar.spec_comp(0), scalar.spec_comp(0) + Fft::spec_size(n_), spec_[c].begin());
  mark_spec_dirty();
}

SpectralField SpectralField::divergence() const {
  if (rank_ == Rank::vector) {
    SpectralField acc = component(0).dx(0);
    acc += component(1).dx(1);
    acc += component(2).dx(2);
    return acc;
  }
  if (rank_ == Rank::sym_tensor || rank_ == Rank::tensor) {
    SpectralField out(n_, Rank::vector);
    for (int i = 0; i < 3; ++i) {
      SpectralField acc(n_, Rank::scalar);
      for (int j = 0; j < 3; ++j) {
        const int c = rank_ == Rank::sym_tensor ? sym_index(i, j) : ten_index(i, j);
        acc += component(c).dx(j);
      }
      out.set_component(i, acc);
    }
    return out;
  }
  throw std::invalid_argument("divergence needs vector or tensor field");
}

SpectralField SpectralField::gradient() const {
  if (rank_ != Rank::scalar) throw std::invalid_argument("gradient needs a scalar field");
  SpectralField out(n_, Rank::vector);
  for (int ax = 0; ax < 3; ++ax) out.set_component(ax, dx(ax));
  return out;
}

SpectralField SpectralField::curl() const {
  if (rank_ != Rank::vector) throw std::invalid_argument("curl needs a vector field");
  SpectralField out(n_, Rank::vector);
  // (curl v)_i = eps_ijk d_j v_k
  const int idxs[3][2][2] = {{{1, 2}, {2, 1}}, {{2, 0}, {0, 2}}, {{0, 1}, {1, 0}}};
  for (int i = 0; i < 3; ++i) {
    SpectralField a = component(idxs[i][0][1]).dx(idxs[i][0][0]);
    SpectralField b = component(idxs[i][1][1]).dx(idxs[i][1][0]);
    a -= b;
    out.set_component(i, a);
  }
  return out;
}

SpectralField SpectralField::inv_laplacian() const {
  ensure_spectrum();
  SpectralField out(n_, rank_);
  const int nh = n_ / 2 + 1;
  for (int c = 0; c < comps_; ++c) {
    std::complex<double>* dst = out.spec_[c].data();
    const std::complex<double>* src = spec_[c].data();
    std::size_t s = 0;
    for (int iz = 0; iz < n_; ++iz) {
      const int kz = Fft::wavenumber(n_, iz);
      for (int iy = 0; iy < n_; ++iy) {
        const int ky = Fft::wavenumber(n_, iy);
        for (int kx = 0; kx < nh; ++kx, ++s) {
          const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
          dst[s] = k2 == 0.0 ? std::complex<double>(0.0, 0.0) : src[s] / (-k2);
        }
      }
    }
  }
  out.mark_spec_dirty();
  return out;
}

std::vector<double> SpectralField::mean() const {
  ensure_spectrum();
  std::vector<double> m(comps_);
  for (int c = 0; c < comps_; ++c) m[c] = spec_[c][0].real();
  return m;
}

double SpectralField::mean_scalar() const {
  if (rank_ != Rank::scalar) throw std::invalid_argument("mean_scalar needs a scalar field");
  return mean()[0];
}

SpectralField& SpectralField::remove_mean() {
  ensure_spectrum();
  ensure_grid();
  for (int c = 0; c < comps_; ++c) {
    const double m = spec_[c][0].real();
    for (double& v : grid_[c]) v -= m;
    spec_[c][0] = {0.0, 0.0};
  }
  // both representations updated consistently
  grid_valid_ = true;
  spec_valid_ = false;
  ensure_spectrum();
  return *this;
}

double SpectralField::max_abs() const {
  ensure_grid();
  double m = 0.0;
  for (int c = 0; c < comps_; ++c)
    for (double v : grid_[c]) m = std::max(m, std::abs(v));
  return m;
}

double SpectralField::l2() const {
  ensure_grid();
  double s = 0.0;
  for (int c = 0; c < comps_; ++c)
    for (double v : grid_[c]) s += v * v;
  return std::sqrt(s / double(points()));
}

double SpectralField::l2_spectral() const {
  ensure_spectrum();
  const int nh = n_ / 2 + 1;
  double s = 0.0;
  for (int c = 0; c < comps_; ++c) {
    std::size_t idx = 0;
    for (int iz = 0; iz < n_; ++iz)
      for (int iy = 0; iy < n_; ++iy)
        for (int kx = 0; kx < nh; ++kx, ++idx) {
          // kx 0 and n/2 slots appear once; others represent +-kx
          const double w = (kx == 0 || kx == n_ / 2) ? 1.0 : 2.0;
          s += w * std::norm(spec_[c][idx]);
        }
  }
  return std::sqrt(s);
}

double SpectralField::c_norm(int m, int max_order) const {
  if (m > max_order) throw std::invalid_argument("c_norm order exceeds configured maximum");
  double best = 0.0;
  for (int order = 0; order <= m; ++order) {
    std::vector<std::array<int, 3>> alphas;
    enumerate_multi_indices(order, alphas);
    for (const auto& a : alphas) best = std::max(best, derivative(a, max_order).max_abs());
  }
  return best;
}

std::array<double, 9> SpectralField::matrix_at(std::size_t p) const {
  ensure_grid();
  std::array<double, 9> mat{};
  if (rank_ == Rank::sym_tensor) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mat[ten_index(i, j)] = grid_[sym_index(i, j)][p];
  } else if (rank_ == Rank::tensor) {
    for (int c = 0; c < 9; ++c) mat[c] = grid_[c][p];
  } else {
    throw std::invalid_argument("matrix_at needs a tensor field");
  }
  return mat;
}

SpectralField SpectralField::symmetrize(const SpectralField& t) {
  if (t.rank() == Rank::sym_tensor) return t;
  if (t.rank() != Rank::tensor) throw std::invalid_argument("symmetrize needs a tensor field");
  SpectralField out(t.n(), Rank::sym_tensor);
  t.ensure_grid();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double* a = t.comp(ten_index(i, j));
      const double* b = t.comp(ten_index(j, i));
      double* dst = out.comp(sym_index(i, j));
      for (std::size_t p = 0; p < t.points(); ++p) dst[p] = 0.5 * (a[p] + b[p]);
    }
  out.mark_grid_dirty();
  return out;
}

SpectralField SpectralField::to_full_tensor() const {
  if (rank_ == Rank::tensor) return *this;
  if (rank_ != Rank::sym_tensor) throw std::invalid_argument("to_full_tensor needs sym_tensor");
  SpectralField out(n_, Rank::tensor);
  ensure_grid();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double* src = grid_[sym_index(i, j)].data();
      std::copy(src, src + points(), out.comp(ten_index(i, j)));
    }
  out.mark_grid_dirty();
  return out;
}

SpectralField SpectralField::transpose() const {
  if (rank_ == Rank::sym_tensor) return *this;
  if (rank_ != Rank::tensor) throw std::invalid_argument("transpose needs a tensor field");
  SpectralField out(n_, Rank::tensor);
  ensure_grid();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double* src = grid_[ten_index(i, j)].data();
      std::copy(src, src + points(), out.comp(ten_index(j, i)));
    }
  out.mark_grid_dirty();
  return out;
}

int SpectralField::band_limit(double tol) const {
  ensure_spectrum();
  const int nh = n_ / 2 + 1;
  int band = 0;
  for (int c = 0; c < comps_; ++c) {
    std::size_t s = 0;
    for (int iz = 0; iz < n_; ++iz) {
      const int kz = Fft::wavenumber(n_, iz);
      for (int iy = 0; iy < n_; ++iy) {
        const int ky = Fft::wavenumber(n_, iy);
        for (int kx = 0; kx < nh; ++kx, ++s) {
          if (std::abs(spec_[c][s]) > tol) {
            const int m = std::max({std::abs(kx), std::abs(ky), std::abs(kz)});
            band = std::max(band, m);
          }
        }
      }
    }
  }
  return band;
}

}  // namespace nashflow

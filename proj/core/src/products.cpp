#include <cmath>
#include <stdexcept>

#include "nashflow/spectral_field.hpp"

namespace nashflow {

namespace {

int padded_size(int n) {
  int m = (3 * n) / 2;
  if (m % 2 != 0) ++m;
  return m;
}

// Copy an n-spectrum into an m-spectrum (m > n), dropping the n-grid Nyquist
// modes (their sign is ambiguous in the half-complex layout).
void pad_spectrum(int n, int m, const std::complex<double>* src, std::complex<double>* dst) {
  const int nh = n / 2 + 1;
  const int mh = m / 2 + 1;
  const std::size_t msize = Fft::spec_size(m);
  for (std::size_t i = 0; i < msize; ++i) dst[i] = {0.0, 0.0};
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    if (std::abs(kz) == n / 2) continue;
    const int jz = kz >= 0 ? kz : kz + m;
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      if (std::abs(ky) == n / 2) continue;
      const int jy = ky >= 0 ? ky : ky + m;
      const std::size_t src_row = std::size_t(nh) * (iy + std::size_t(n) * iz);
      const std::size_t dst_row = std::size_t(mh) * (jy + std::size_t(m) * jz);
      for (int kx = 0; kx < n / 2; ++kx)  // kx = n/2 dropped
        dst[dst_row + kx] = src[src_row + kx];
    }
  }
}

// Zero the n-grid Nyquist modes of an n-spectrum (the band kept by products).
void drop_nyquist(int n, const std::complex<double>* src, std::complex<double>* dst) {
  const int nh = n / 2 + 1;
  std::size_t s = 0;
  for (int iz = 0; iz < n; ++iz) {
    const bool zny = std::abs(Fft::wavenumber(n, iz)) == n / 2;
    for (int iy = 0; iy < n; ++iy) {
      const bool yny = std::abs(Fft::wavenumber(n, iy)) == n / 2;
      for (int kx = 0; kx < nh; ++kx, ++s)
        dst[s] = (zny || yny || kx == n / 2) ? std::complex<double>(0.0, 0.0) : src[s];
    }
  }
}

// Restrict an m-spectrum to an n-spectrum, keeping |k| <= n/2 - 1 per axis.
void truncate_spectrum(int m, int n, const std::complex<double>* src, std::complex<double>* dst) {
  const int nh = n / 2 + 1;
  const int mh = m / 2 + 1;
  const std::size_t nsize = Fft::spec_size(n);
  for (std::size_t i = 0; i < nsize; ++i) dst[i] = {0.0, 0.0};
  for (int iz = 0; iz < n; ++iz) {
    const int kz = Fft::wavenumber(n, iz);
    if (std::abs(kz) == n / 2) continue;
    const int jz = kz >= 0 ? kz : kz + m;
    for (int iy = 0; iy < n; ++iy) {
      const int ky = Fft::wavenumber(n, iy);
      if (std::abs(ky) == n / 2) continue;
      const int jy = ky >= 0 ? ky : ky + m;
      const std::size_t src_row = std::size_t(mh) * (jy + std::size_t(m) * jz);
      const std::size_t dst_row = std::size_t(nh) * (iy + std::size_t(n) * iz);
      for (int kx = 0; kx < n / 2; ++kx) dst[dst_row + kx] = src[src_row + kx];
    }
  }
}

}  // namespace

namespace {

// Classify a component from its spectrum: exactly zero, exactly constant
// (only the zero mode populated), or generic. Constants commute with the
// padding, so treating them specially reproduces the padded result exactly
// while skipping transforms.
enum class CompKind { zero, constant, generic };

CompKind classify(const SpectralField& f, int c, double& constval) {
  const std::complex<double>* sp = f.spec_comp(c);
  const std::size_t ss = Fft::spec_size(f.n());
  constval = sp[0].real();
  for (std::size_t i = 1; i < ss; ++i)
    if (sp[i] != std::complex<double>(0.0, 0.0)) return CompKind::generic;
  if (constval == 0.0 && sp[0].imag() == 0.0) return CompKind::zero;
  return CompKind::constant;
}

}  // namespace

SpectralField product(const SpectralField& a, const SpectralField& b, Rank out_rank,
                      const std::vector<ProductTerm>& terms) {
  if (a.n() != b.n()) throw std::invalid_argument("product: grid size mismatch");
  const int n = a.n();
  const int m = padded_size(n);
  const std::size_t mgrid = Fft::grid_size(m);

  a.ensure_spectrum();
  b.ensure_spectrum();

  std::vector<bool> need_a(a.comps(), false), need_b(b.comps(), false);
  for (const auto& t : terms) {
    need_a[t.ca] = true;
    need_b[t.cb] = true;
  }
  std::vector<CompKind> kind_a(a.comps(), CompKind::generic), kind_b(b.comps(), CompKind::generic);
  std::vector<double> const_a(a.comps(), 0.0), const_b(b.comps(), 0.0);
  bool any_generic_pair = false;
  for (int c = 0; c < a.comps(); ++c)
    if (need_a[c]) kind_a[c] = classify(a, c, const_a[c]);
  for (int c = 0; c < b.comps(); ++c)
    if (need_b[c]) kind_b[c] = classify(b, c, const_b[c]);
  for (const auto& t : terms)
    if (kind_a[t.ca] == CompKind::generic && kind_b[t.cb] == CompKind::generic)
      any_generic_pair = true;

  // Lift generic components participating in generic-generic pairs.
  std::vector<std::vector<double>> pa(a.comps()), pb(b.comps());
  std::vector<std::complex<double>> spec_buf;
  if (any_generic_pair) {
    spec_buf.resize(Fft::spec_size(m));
    std::vector<std::pair<const SpectralField*, int>> lifts;
    for (const auto& t : terms) {
      if (kind_a[t.ca] != CompKind::generic || kind_b[t.cb] != CompKind::generic) continue;
      if (pa[t.ca].empty()) {
        pa[t.ca].resize(mgrid);
        lifts.emplace_back(&a, t.ca);
      }
      if (pb[t.cb].empty()) {
        pb[t.cb].resize(mgrid);
        lifts.emplace_back(&b, t.cb);
      }
    }
#pragma omp parallel for schedule(dynamic)
    for (long li = 0; li < long(lifts.size()); ++li) {
      std::vector<std::complex<double>> local(Fft::spec_size(m));
      const auto& [fld, c] = lifts[li];
      pad_spectrum(n, m, fld->spec_comp(c), local.data());
      double* dst = (fld == &a ? pa[c] : pb[c]).data();
      Fft::inverse(m, local.data(), dst);
    }
  }

  SpectralField out(n, out_rank);
  const std::size_t nspec = Fft::spec_size(n);
  std::vector<double> acc(any_generic_pair ? mgrid : 0);
  std::vector<std::complex<double>> out_spec(nspec);
  std::vector<std::complex<double>> trunc_a(nspec), trunc_b(nspec);
  for (int cout = 0; cout < out.comps(); ++cout) {
    bool any_slow = false, any_fast = false;
    std::fill(out_spec.begin(), out_spec.end(), std::complex<double>(0.0, 0.0));
    if (any_generic_pair) std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& t : terms) {
      if (t.cout != cout) continue;
      const CompKind ka = kind_a[t.ca], kb = kind_b[t.cb];
      if (ka == CompKind::zero || kb == CompKind::zero) continue;
      if (ka == CompKind::generic && kb == CompKind::generic) {
        any_slow = true;
        const double* x = pa[t.ca].data();
        const double* y = pb[t.cb].data();
        const double co = t.coeff;
        double* ac = acc.data();
        for (std::size_t i = 0; i < mgrid; ++i) ac[i] += co * x[i] * y[i];
      } else {
        // constant * generic (or constant * constant): same band policy as
        // the padded path (the n-grid Nyquist modes are dropped)
        any_fast = true;
        const double cval = ka == CompKind::generic ? const_b[t.cb] : const_a[t.ca];
        const std::complex<double>* gspec =
            ka == CompKind::generic ? a.spec_comp(t.ca) : b.spec_comp(t.cb);
        std::vector<std::complex<double>>& tb = trunc_a;
        drop_nyquist(n, gspec, tb.data());
        const double co = t.coeff * cval;
        for (std::size_t i = 0; i < nspec; ++i) out_spec[i] += co * tb[i];
      }
    }
    if (!any_slow && !any_fast) continue;
    if (any_slow) {
      Fft::forward(m, acc.data(), spec_buf.data());
      truncate_spectrum(m, n, spec_buf.data(), trunc_b.data());
      for (std::size_t i = 0; i < nspec; ++i) out_spec[i] += trunc_b[i];
    }
    std::copy(out_spec.begin(), out_spec.end(), out.spec_comp(cout));
  }
  out.mark_spec_dirty();
  return out;
}

SpectralField multiply(const SpectralField& a, const SpectralField& b) {
  const SpectralField& s = a.rank() == Rank::scalar ? a : b;
  const SpectralField& f = a.rank() == Rank::scalar ? b : a;
  if (s.rank() != Rank::scalar) throw std::invalid_argument("multiply needs one scalar factor");
  std::vector<ProductTerm> terms;
  for (int c = 0; c < f.comps(); ++c) terms.push_back({0, c, c, 1.0});
  return product(s, f, f.rank(), terms);
}

SpectralField dot(const SpectralField& a, const SpectralField& b) {
  if (a.rank() != Rank::vector || b.rank() != Rank::vector)
    throw std::invalid_argument("dot needs two vector fields");
  std::vector<ProductTerm> terms;
  for (int c = 0; c < 3; ++c) terms.push_back({c, c, 0, 1.0});
  return product(a, b, Rank::scalar, terms);
}

SpectralField outer(const SpectralField& a, const SpectralField& b) {
  if (a.rank() != Rank::vector || b.rank() != Rank::vector)
    throw std::invalid_argument("outer needs two vector fields");
  std::vector<ProductTerm> terms;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) terms.push_back({i, j, ten_index(i, j), 1.0});
  return product(a, b, Rank::tensor, terms);
}

SpectralField outer_sym(const SpectralField& a) {
  if (a.rank() != Rank::vector) throw std::invalid_argument("outer_sym needs a vector field");
  std::vector<ProductTerm> terms;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) terms.push_back({i, j, sym_index(i, j), 1.0});
  return product(a, a, Rank::sym_tensor, terms);
}

SpectralField matvec(const SpectralField& m, const SpectralField& v) {
  if (v.rank() != Rank::vector) throw std::invalid_argument("matvec needs a vector field");
  std::vector<ProductTerm> terms;
  if (m.rank() == Rank::sym_tensor) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) terms.push_back({sym_index(i, j), j, i, 1.0});
  } else if (m.rank() == Rank::tensor) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) terms.push_back({ten_index(i, j), j, i, 1.0});
  } else {
    throw std::invalid_argument("matvec needs a tensor field");
  }
  return product(m, v, Rank::vector, terms);
}

SpectralField advect(const SpectralField& u, const SpectralField& f) {
  if (u.rank() != Rank::vector) throw std::invalid_argument("advect needs a vector velocity");
  SpectralField out(f.n(), f.rank());
  bool first = true;
  for (int ax = 0; ax < 3; ++ax) {
    SpectralField df = f.derivative({ax == 0 ? 1 : 0, ax == 1 ? 1 : 0, ax == 2 ? 1 : 0});
    SpectralField term = multiply(u.component(ax), df);
    if (first) {
      out = term;
      first = false;
    } else {
      out += term;
    }
  }
  return out;
}

}  // namespace nashflow

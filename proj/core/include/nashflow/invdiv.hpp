#pragma once

#include <map>
#include <vector>

#include "nashflow/spectral_field.hpp"

namespace nashflow {

// Nonlocal inverse divergence for vector fields: a symmetric trace-free
// tensor R with div R = g - <g>. The Fourier symbol is the one fixed by
// symmetry, trace-freeness and the divergence contract,
//   R^(k) = -(i/|k|) [ nu (x) g + g (x) nu - 1/2 (nu.g)(nu (x) nu + Id) ],
// nu = k/|k|.
SpectralField inv_div_vector(const SpectralField& g);

// Scalar variant: (R f)_i = lap^{-1} d_i f, div(R f) = f - <f>.
SpectralField inv_div_scalar(const SpectralField& f);

// Order-d adjacent-pairwise symmetric tensor potential of a mean-zero scalar:
//   theta^(i1..id) = lap^{-d} d_{i1} ... d_{id} zeta,
// so that d_{i1} ... d_{id} theta^(i1..id) = zeta. Components are stored once
// per sorted multi-index with multiplicity handled in recomposition.
class TensorPotential {
 public:
  static TensorPotential build(const SpectralField& zeta, int order, double mean_tol = 1e-12);

  int order() const { return order_; }
  int n() const { return n_; }

  // Component for a (not necessarily sorted) multi-index.
  const SpectralField& component(std::vector<int> idx) const;
  const std::map<std::vector<int>, SpectralField>& components() const { return comps_; }

  // Sum over all d-fold derivatives; reproduces the source scalar.
  SpectralField recompose() const;

 private:
  int order_ = 0;
  int n_ = 0;
  std::map<std::vector<int>, SpectralField> comps_;  // key: sorted multi-index
};

// Active Fourier modes of a scalar field (|coeff| > tol), as full-lattice
// wavevectors; conjugate pairs are listed once with kx >= 0 and the
// convention that the field is the real part synthesis.
struct ModeList {
  std::vector<std::array<int, 3>> wavevectors;
  std::vector<std::complex<double>> coeffs;
};
ModeList active_modes(const SpectralField& scalar, double tol = 1e-13, std::size_t cap = 65536);

}  // namespace nashflow

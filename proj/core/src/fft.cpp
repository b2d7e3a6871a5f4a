#include "nashflow/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace nashflow {
namespace {

// Plans are created once per size with FFTW_ESTIMATE | FFTW_UNALIGNED and
// executed through the new-array interface, which is thread-safe for
// distinct arrays. ESTIMATE keeps planning deterministic so repeated runs
// are bit-identical.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

std::mutex g_plan_mutex;

PlanPair plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real_buf(Fft::grid_size(n));
  std::vector<std::complex<double>> cplx_buf(Fft::spec_size(n));
  PlanPair p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.fwd = fftw_plan_dft_r2c_3d(n, n, n, real_buf.data(),
                               reinterpret_cast<fftw_complex*>(cplx_buf.data()), flags);
  p.inv = fftw_plan_dft_c2r_3d(n, n, n, reinterpret_cast<fftw_complex*>(cplx_buf.data()),
                               real_buf.data(), flags);
  if (!p.fwd || !p.inv) throw std::runtime_error("fftw plan creation failed");
  cache.emplace(n, p);
  return p;
}

// Thread-local scratch (the c2r transform destroys its input, and the r2c
// input must stay intact for the caller).
template <typename T>
T* scratch(std::size_t count) {
  thread_local std::vector<T> buf;
  if (buf.size() < count) buf.resize(count);
  return buf.data();
}

}  // namespace

void Fft::forward(int n, const double* grid, std::complex<double>* spec) {
  PlanPair p = plans_for(n);
  const std::size_t gs = grid_size(n);
  const std::size_t ss = spec_size(n);
  double* in = scratch<double>(gs);
  std::memcpy(in, grid, gs * sizeof(double));
  fftw_execute_dft_r2c(p.fwd, in, reinterpret_cast<fftw_complex*>(spec));
  const double scale = 1.0 / double(gs);
  for (std::size_t i = 0; i < ss; ++i) spec[i] *= scale;
}

void Fft::inverse(int n, const std::complex<double>* spec, double* grid) {
  PlanPair p = plans_for(n);
  const std::size_t ss = spec_size(n);
  std::complex<double>* in = scratch<std::complex<double>>(ss);
  std::memcpy(in, spec, ss * sizeof(std::complex<double>));
  fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(in), grid);
}

}  // namespace nashflow

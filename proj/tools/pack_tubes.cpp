// Offline exploration of the tube placement: for a descending ladder of eta
// values, run the repulsion relaxation and report the achieved clearance.

#include <cstdio>
#include <cstdlib>

#include "nashflow/geometry.hpp"
#include "nashflow/mikado_set.hpp"

using namespace nashflow;

int main(int argc, char** argv) {
  const double eta_hi = argc > 1 ? std::atof(argv[1]) : 1.2;
  const double eta_lo = argc > 2 ? std::atof(argv[2]) : 0.2;
  const int iters = argc > 3 ? std::atoi(argv[3]) : 2000;

  auto fams = default_direction_families();
  MikadoSet::Config cfg;
  cfg.optimize_if_needed = false;
  cfg.allow_overlap = true;

  for (double eta = eta_hi; eta >= eta_lo; eta *= 0.92) {
    cfg.eta = eta;
    MikadoSet set(fams, cfg);
    const double before = set.min_clearance();
    const double got = set.optimize_shifts(iters);
    std::printf("eta %.4f  r_R %.4f  r_thin %.4f  clearance %.5f -> %.5f %s\n", eta,
                set.radius(FamilyKind::R), set.radius(FamilyKind::Phi), before, got,
                got > 0 ? "(disjoint)" : "");
    std::fflush(stdout);
    if (got > 0.015) {
      std::printf("feasible at eta = %.4f with margin %.5f\n", eta, got);
      return 0;
    }
  }
  std::printf("no disjoint placement found in the scanned eta range\n");
  return 1;
}

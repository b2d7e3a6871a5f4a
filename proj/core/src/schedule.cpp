#include "nashflow/schedule.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nashflow {

double ParameterSchedule::lambda(int q) const {
  return std::ceil(std::pow(lambda0, std::pow(b, q)));
}

double ParameterSchedule::delta(int q) const { return std::pow(lambda(q), -2.0 * beta); }

double ParameterSchedule::tau(int q) const {
  const double inv = 40.0 * std::numbers::pi * M / eta * std::sqrt(lambda(q) * lambda(q + 1)) *
                     std::pow(delta(q) * delta(q + 1), 0.25);
  return 1.0 / inv;
}

long ParameterSchedule::mu_inv(int q) const {
  const double raw = std::sqrt(lambda(q) * lambda(q + 1)) * std::pow(delta(q), 0.25) *
                     std::pow(delta(q + 1), -0.25);
  return 3L * long(std::ceil(raw / 3.0));
}

double ParameterSchedule::ell(int q) const {
  return std::pow(lambda(q), -0.75) * std::pow(lambda(q + 1), -0.25) *
         std::pow(delta(q + 1) / delta(q), 0.375);
}

double ParameterSchedule::ell_t(int q) const {
  return std::pow(lambda(q), -(0.5 - 3.0 * gamma())) * std::pow(lambda(q + 1), -0.5) *
         std::pow(delta(q) * delta(q + 1), -0.25);
}

int ParameterSchedule::n0() const {
  return int(std::ceil(2.0 * b * (2.0 + alpha) / ((b - 1.0) * (1.0 - alpha))));
}

void ParameterSchedule::validate() const {
  if (!(b > 1.0)) throw std::invalid_argument("schedule: b must exceed 1");
  if (!(beta > 0.0 && beta < 1.0 / 7.0))
    throw std::invalid_argument("schedule: beta must lie in (0, 1/7)");
  if (!(lambda0 > 1.0)) throw std::invalid_argument("schedule: lambda0 must exceed 1");
  if (!(M > 0.0)) throw std::invalid_argument("schedule: M must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("schedule: eta must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("schedule: alpha must lie in (0,1)");
  // monotonicity of the amplitude-frequency product and of tau
  double prev = delta(0), prev_prod = std::sqrt(delta(0)) * lambda(0);
  (void)prev;
  for (int q = 1; q <= 3; ++q) {
    const double prod = std::sqrt(delta(q)) * lambda(q);
    if (!(prod > prev_prod))
      throw std::invalid_argument("schedule: delta_q^(1/2) lambda_q is not increasing");
    prev_prod = prod;
    if (!(tau(q) < tau(q - 1))) throw std::invalid_argument("schedule: tau_q is not decreasing");
  }
}

std::string ParameterSchedule::describe(int q) const {
  std::ostringstream os;
  os << "q=" << q << " lambda=" << lambda(q) << " delta=" << delta(q) << " tau=" << tau(q)
     << " mu_inv=" << mu_inv(q) << " ell=" << ell(q) << " ell_t=" << ell_t(q)
     << " gamma=" << gamma() << " n0=" << n0();
  return os.str();
}

}  // namespace nashflow

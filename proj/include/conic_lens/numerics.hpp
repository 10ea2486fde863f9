#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "conic_lens/core.hpp"

namespace conic {

// eps0 * 2^{-j}, j = 0..count-1
std::vector<double> dyadic(double eps0, int count);

struct Extrapolation {
  double value = 0;
  double error = 0;   // change when the coarsest sample is dropped
  double order = 0;   // observed convergence order of the raw sequence
  std::vector<double> residuals;  // |F(eps_j) - value|
};

// Least-squares fit F(eps) = c0 + c1 eps + ... + c_deg eps^deg; value = c0.
Extrapolation extrapolate(const std::vector<double>& eps, const std::vector<double>& F, int degree = 2);

// Observed order from successive differences of a dyadic sequence (median).
double observed_order(const std::vector<double>& eps, const std::vector<double>& F);

// Composite Gauss-Legendre (20 nodes per panel).
double integrate_gl(const std::function<double(double)>& f, double a, double b, int panels = 16);
// Adaptive Gauss-Kronrod.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

// Deterministic RNG: mt19937_64 with an explicit 53-bit mapping to [0,1)
// so that sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace conic

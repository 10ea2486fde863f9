#pragma once

#include <memory>
#include <string>
#include <vector>

#include "conic_lens/flow.hpp"
#include "conic_lens/metric.hpp"
#include "conic_lens/numerics.hpp"
#include "conic_lens/xray.hpp"

namespace conic {

struct ScatterResult {
  Vec y0, eta0;
  Vec y1, eta1;
  double tau_plus = 0;
  double drift = 0;  // max constraint drift along the trajectory
  TrajStatus status = TrajStatus::Failed;
  bool ok() const { return status == TrajStatus::Exited; }
};

struct LensOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  double tau_max = 1e3;
  // Cut levels eps0 * 2^-j, j < levels; eps0 <= 0 picks min(2e-3, rho_max/100).
  double eps0 = 0;
  int levels = 6;
  int degree = 2;
};

ScatterResult scattering_map(MetricPtr model, const Vec& y0, const Vec& eta0, const LensOptions& opt = {});

enum class LengthMethod { CutExtrapolation, TauSubtraction, Flux };
std::string to_string(LengthMethod m);

struct LensRecord {
  ScatterResult scatter;
  LengthMethod method = LengthMethod::CutExtrapolation;
  double L = 0;
  double L_error = 0;  // extrapolation error estimate
  double order = 0;    // observed order of the raw table
  std::vector<double> eps, table;
  bool ok() const { return scatter.ok(); }
};

// Renormalized length. For the cut method a boundary function a(y) may be
// given to use the defining function rho + a(y) rho^2 for the cuts.
LensRecord renormalized_length(MetricPtr model, const Vec& y0, const Vec& eta0, LengthMethod method,
                               const LensOptions& opt = {}, std::shared_ptr<const BoundaryFunction> bdf_a = nullptr);

struct LargeEtaStudy {
  std::vector<double> eps;
  std::vector<double> gaps;  // |eps.S(y0, eta0/eps) - |eta0|.phi_pi(y0, eta0/|eta0|)|
  double slope = 0;
};
LargeEtaStudy scattering_large_eta(MetricPtr model, const Vec& y0, const Vec& eta0, const std::vector<double>& eps);

// Finite-difference Jacobian determinant of (y0, eta0) -> (y1, eta1).
double scattering_jacobian_det(MetricPtr model, const Vec& y0, const Vec& eta0, double h = 1e-5);

// Distance in T^*N between two points (period-reduced in y).
double phase_distance(const BoundaryManifold& N, const Vec& ya, const Vec& ea, const Vec& yb, const Vec& eb);

struct VariationResult {
  std::vector<double> steps;
  std::vector<double> central;  // central differences of L_{g(s)} per step
  double dLds_raw = 0;          // Richardson-extrapolated derivative
  double boundary_term = 0;     // eta1 . d y1 / ds
  double dLds = 0;              // dLds_raw - boundary_term
  double I2 = 0;                // I_2(q) along the g-geodesic
  double I2_direct = 0;         // int q(gamma', gamma') dt from the bump representation
  double richardson_error = 0;
};

// Family g(s) = g + s q with q given by a tensor bump (at s = 0 the bump
// model reduces to its base).
VariationResult lens_variation(const TensorBump& family, const Vec& y0, const Vec& eta0,
                               const std::vector<double>& steps, const LensOptions& opt = {});

// q as a symmetric 2-tensor field in the scattering frame.
TensorFieldPtr bump_tensor_field(std::shared_ptr<const TensorBump> family);

}  // namespace conic

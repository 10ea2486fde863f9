#pragma once

#include <vector>

#include "conic_lens/flow.hpp"
#include "conic_lens/numerics.hpp"

namespace conic {

struct JacobiOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double t_max = 1e3;
  // Terminal stop when rho decreases through this value (0: none).
  double stop_rho = 0;
};

// Jacobi fields J = sum_i U_i Y_i in a parallel orthonormal frame
// {gamma', Y_1, .., Y_{n-1}} along a unit-speed geodesic, in arclength t.
// U and U' are (n-1) x k matrices (k independent solutions).
struct JacobiSolution {
  MetricPtr model;
  int n = 0, k = 0;
  Solution sol;
  double t_end = 0;
  double frame_drift = 0;    // max |<Y_i, Y_j> - delta_ij|, |<Y_i, gamma'>| over accepted steps
  double speed_drift = 0;    // max ||gamma'|_g - 1|
  bool stopped_at_rho = false;

  PhasePoint point(double t) const;
  MatX U(double t) const;
  MatX V(double t) const;  // U'
  MatX frame(double t) const;       // n x (n-1) coordinate components of Y_i
  Vec velocity(double t) const;     // coordinate components of gamma'
  MatX curvature(double t) const;   // R_ij = Rm(Y_j, gamma', gamma', Y_i)
};

// z0 is a rescaled phase point on the constraint; the geodesic starts there
// with t = 0.
JacobiSolution jacobi_integrate(MetricPtr model, const PhasePoint& z0, const MatX& U0, const MatX& V0,
                                const JacobiOptions& opt = {});

// Max |U'' + R U| at the given times (U'' from the field equations by
// central differences of U').
double jacobi_residual(const JacobiSolution& js, const std::vector<double>& ts, double h = 1e-4);

// Wronskian U1^T V2 - V1^T U2 for columns split at k1.
MatX wronskian(const JacobiSolution& js, double t, int k1);

struct ConjugateScan {
  std::vector<double> times;  // conjugate times measured from the window start
  bool extrapolated = false;  // last time found from the flat exterior continuation (n = 2)
  double t_window = 0;        // arclength spent inside the window
  PhasePoint start;           // window entry point
  double frame_drift = 0;
  bool crossed = false;       // the geodesic reached rho >= rho_w
};

// Window {rho >= rho_w}: J(0) = 0, J'(0) = I at the incoming crossing, scan
// det U until the outgoing crossing. With flat_exterior and n = 2 a zero of
// the affine continuation beyond the window is added.
ConjugateScan conjugate_scan(MetricPtr model, const Vec& y0, const Vec& eta0, double rho_w, bool flat_exterior,
                             const JacobiOptions& opt = {});

struct GrowthReport {
  int samples = 0;
  double C_dot = 0;     // max |J'(t)| / (|J(0)| rho0^3 + |J'(0)|)
  double C_val = 0;     // max (|J(t)| - |J(0)|) / ((|J(0)| rho0^3 + |J'(0)|) t)
  double C_dot_fit = 0, C_val_fit = 0;  // fitted on the first half of the samples
  int violations = 0;   // second-half samples above twice the fitted constants
  double C_curv = 0;    // max ||R(t)|| / rho(t)^4
  double max_frame_drift = 0;
};

// Outgoing samples in {rho <= eps, xi0 <= 0} with random Jacobi data.
GrowthReport jacobi_growth_check(MetricPtr model, int samples, double eps, double t_max, Rng& rng);

}  // namespace conic

#pragma once

#include <functional>
#include <vector>

#include "conic_lens/metric.hpp"
#include "conic_lens/ode.hpp"

namespace conic {

// Linearization of the limiting field X0 = xi0 d_rho - rho |eta|^2 d_xi0 + H0
// along c0(s) = (sin s, cos s, e^{sH0}(y0, eta0)), |eta0| = 1.
// Canonical coordinates (rho, xi0, y, eta), size 2 + 2d.
class LinearizedFlow {
 public:
  LinearizedFlow(BoundaryManifold N, Vec y0, Vec eta0, double s_end = kPi);

  int size() const { return 2 + 2 * N_.dim(); }
  const BoundaryManifold& boundary() const { return N_; }
  VecX baseline(double s) const;
  MatX field_jacobian(double s) const;
  // Fundamental matrix R' = A R, R(0) = I.
  MatX R(double s) const;
  // dE at c0(s) as a row over the canonical coordinates.
  VecX energy_row(double s) const;

 private:
  BoundaryManifold N_;
  Vec y0_, eta0_;
  Solution sol_;
};

// T(y) as a quadratic form on covectors, with first y-derivatives.
using DualTensor = std::function<BoundaryJet(const Vec& y)>;

// X_m - X_m' at c0(s): (0, -(m/2+1) rho^{m+1} T, rho^m (Hamilton field of T/2)).
VecX perturbation_field(const BoundaryManifold& N, const DualTensor& T, int m, const VecX& c0);

struct LinearizedOptions {
  double rtol = 1e-13;
  double atol = 1e-15;
  int panels = 24;
};

// R(s_end) int_0^{s_end} R^{-1} (X_m - X_m') dt.
VecX duhamel(const LinearizedFlow& lf, const DualTensor& T, int m, int panels = 24);

struct LinearizedDifference {
  int m = 0;
  std::vector<double> eps;
  std::vector<VecX> table;  // (c_eps(pi) - c'_eps(pi)) / eps^m
  VecX fd;                  // extrapolated to eps = 0
  VecX duhamel;
  double rel_gap = 0;
  double energy_fd = 0, energy_duhamel = 0;  // dE . e_m(pi)
};

// Jets h_j of g and g' must agree for j < m. T_m = h_m - h_m'.
DualTensor jet_difference(MetricPtr g, MetricPtr gp, int m);

LinearizedDifference linearized_difference(MetricPtr g, MetricPtr gp, int m, const Vec& y0, const Vec& eta0,
                                           const std::vector<double>& eps, const LinearizedOptions& opt = {});

struct PerturbativeQuadratures {
  double energyvar = 0;        // int sin^m H0 T
  double equcos = 0;           // int cos sin^{m+1} T
  double equdirectionH0 = 0;   // int (sin^m - (m/2+1) sin^{m+2}) T
  double rhocm = 0;            // -(m/2+1) int sin^{m+2} T
  double max_killing = 0;      // max |H0 T| on the grid
};

PerturbativeQuadratures perturbative_identities(const BoundaryManifold& N, const DualTensor& T, int m,
                                                const Vec& y0, const Vec& eta0, int panels = 24);

// H0 T at (y, eta) = y' . d_y T(eta, eta) + eta' . 2 T eta.
double h0_derivative(const BoundaryManifold& N, const DualTensor& T, const Vec& y, const Vec& eta);

}  // namespace conic

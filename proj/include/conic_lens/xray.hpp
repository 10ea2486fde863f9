#pragma once

#include <memory>
#include <vector>

#include "conic_lens/flow.hpp"
#include "conic_lens/numerics.hpp"
#include "conic_lens/tensor.hpp"

namespace conic {

struct XrayOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  double tau_max = 1e3;
  // Repeat at 100x looser tolerance and report the change as the error.
  bool estimate_error = false;
};

struct XrayValue {
  Vec y0, eta0;
  double value = 0;
  double error = 0;
  double tau_plus = 0;
  TrajStatus status = TrajStatus::Failed;
};

// I_m f at the entry point (y0, eta0) of the incoming face.
XrayValue xray(MetricPtr model, const SymTensorField& f, const Vec& y0, const Vec& eta0, const XrayOptions& opt = {});
// Several transforms along one trajectory.
std::vector<XrayValue> xray_many(MetricPtr model, const std::vector<TensorFieldPtr>& fs, const Vec& y0,
                                 const Vec& eta0, const XrayOptions& opt = {});

struct ResolventSample {
  PhasePoint z;
  double u_plus = 0, u_minus = 0;
  double tau_plus = 0, tau_minus = 0;
};

// u_+ = int_0^{tau+} rho^-2 pi^*f, u_- = -int_{tau-}^0 rho^-2 pi^*f.
ResolventSample resolvent(MetricPtr model, const SymTensorField& f, const PhasePoint& z, const XrayOptions& opt = {});

struct ResolventDecay {
  std::vector<std::pair<double, double>> table;  // (rho, |u|)
  double slope = 0, ci = 0;
};
// |u_sign| along outgoing (sign +) or incoming (sign -) points at the given
// rho values with fixed y, xi0 and direction psi.
ResolventDecay resolvent_decay(MetricPtr model, const SymTensorField& f, int sign, const Vec& y, double xi0,
                               double psi, const std::vector<double>& rhos);

// Boundary quadrature sum_l C(m,l) int_0^pi sin^{k+m-l-2} cos^l (iota^l f)(alpha', ...) ds
// along the unit-speed h0-geodesic from (y0, eta0). With binomial = false the
// combinatorial factor is dropped (literal reading of the mixed terms).
double boundary_pi_quadrature(const BoundaryManifold& N, const SymTensorField& f, const Vec& y0, const Vec& eta0,
                              double k, bool binomial = true);
// Only the terms with exactly l transversal slots.
double boundary_pi_quadrature_l(const BoundaryManifold& N, const SymTensorField& f, const Vec& y0, const Vec& eta0,
                                double k, int l);

struct LimitStudy {
  std::vector<double> eps;
  std::vector<double> scaled;  // scaled transform per eps
  std::vector<double> gaps;    // |scaled - target|
  Extrapolation ext;
  double target = 0;
  double gap = 0;    // |ext.value - target|
  double slope = 0;  // fitted log-log slope of gaps vs eps
};

// eps^{1-k} int_0^{tau+} rho^{k-2} pi^*f dtau at entries (y0, eta0/eps),
// extrapolated to eps = 0. f is the smooth tensor (prefactor ignored).
LimitStudy boundary_pi_transform(MetricPtr model, const SymTensorField& f, const Vec& y0, const Vec& eta0, double k,
                                 const std::vector<double>& eps);

struct JetProbeRow {
  int j = 0;
  LimitStudy study;
};

// f = rho^2 sum_j fbar_j(y) rho^j. For each order j the jets below j are
// removed and |eta0|^{j+1} I_0 is compared with int_0^pi sin^j fbar_j(alpha) ds.
std::vector<JetProbeRow> i0_jet_probe(MetricPtr model, const std::vector<std::shared_ptr<const BoundaryFunction>>& jets,
                                      const Vec& y0, const Vec& eta_unit, const std::vector<double>& eps);

// int_0^pi sin^j(s) w(alpha(s)) ds.
double boundary_sin_quadrature(const BoundaryManifold& N, const BoundaryFunction& w, const Vec& y0, const Vec& eta0,
                               int j);

}  // namespace conic

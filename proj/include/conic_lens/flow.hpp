#pragma once

#include <functional>
#include <string>
#include <vector>

#include "conic_lens/metric.hpp"
#include "conic_lens/numerics.hpp"
#include "conic_lens/ode.hpp"

namespace conic {

// Rescaled phase-space point (rho, y, xi0bar, eta) on b^*T M.
struct PhasePoint {
  double rho = 0;
  Vec y;
  double xi0 = 0;
  Vec eta;
};

VecX pack(const PhasePoint& z, int extra = 0);
PhasePoint unpack(const VecX& s, int d);

// Incoming boundary point (0, y0, 1, eta0).
PhasePoint incoming(const Vec& y0, const Vec& eta0);
// (rho, y, -xi0, -eta)
PhasePoint time_reversed(const PhasePoint& z);

// Rescaled Hamilton field in tau, H = xi0^2/2 + rho^2 K/2 with
// K = (xi0, eta) M (xi0, eta)^T.
struct FieldEval {
  double K = 0, K_rho = 0, K_xi = 0;
  Vec K_y, K_eta;
  double drho = 0, dxi0 = 0;
  Vec dy, deta;
  // scattering-frame velocity (rho', rho y'): the lift direction xi^sharp
  Vec v;
};

FieldEval rescaled_field(const MetricModel& model, const PhasePoint& z);
double constraint(const MetricModel& model, const PhasePoint& z);
// Integrand of the renormalized length: -1/2 (rho K_rho + xi0 K_xi).
double length_density(const PhasePoint& z, const FieldEval& f);

// tau-integrand accumulated alongside the flow.
using Integrand = std::function<double(const PhasePoint&, const FieldEval&)>;

enum class TimeMode { Tau, T };  // dt = rho^{-2} dtau

enum class TrajStatus { Exited, Trapped, TipGuard, Finished, Failed };
std::string to_string(TrajStatus s);

struct FlowOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  double tau_max = 1e3;
  double drift_per_tau = 1e-9;
  bool stop_at_boundary = true;
  bool keep_dense = true;
  TimeMode mode = TimeMode::Tau;
  std::vector<double> stops;        // exact states recorded at these times
  std::vector<Event> extra_events;  // appended after the boundary event
  // t-mode only: stop once the t-accumulated time reaches this value
  double t_max = 0;
};

struct Trajectory {
  MetricPtr model;
  int d = 0;
  int extras = 0;
  TimeMode mode = TimeMode::Tau;
  Rhs rhs;
  Solution sol;
  TrajStatus status = TrajStatus::Failed;
  double t_start = 0, t_end = 0;
  double max_drift = 0;
  double drift_at_exit = 0;

  bool exited() const { return status == TrajStatus::Exited; }
  double tau_plus() const { return t_end - t_start; }
  PhasePoint end_point() const { return unpack(sol.y_end, d); }
  VecX end_state() const { return sol.y_end; }
  double accumulator(int k) const { return sol.y_end(2 * (d + 1) + k); }

  VecX state_dense(double t) const { return sol.at(t); }
  PhasePoint point(double t) const { return unpack(sol.at(t), d); }
  // Re-stepped from the enclosing step start; one RK step of size <= h.
  VecX state_exact(double t) const;
};

Trajectory integrate(MetricPtr model, const PhasePoint& z0, double t_end, const std::vector<Integrand>& acc,
                     const FlowOptions& opt = {});

// Forward trajectory from the incoming point (0, y0, 1, eta0) to the exit.
Trajectory trace(MetricPtr model, const Vec& y0, const Vec& eta0, const std::vector<Integrand>& acc = {},
                 const FlowOptions& opt = {});

// Closed-form exact-cone solution from (0, y0, 1, eta0).
PhasePoint exact_cone_solution(const BoundaryManifold& N, const Vec& y0, const Vec& eta0, double tau);

// Phase point with |xi0| <= 1 chosen and |eta|_{h_rho} fixed by the constraint.
PhasePoint on_constraint(const MetricModel& model, double rho, const Vec& y, double xi0, double psi);

struct AsymptoticReport {
  int samples = 0;
  int lower_violations = 0;
  double worst_lower_gap = 0;   // min over samples of rho - rho0/(1+rho0 t)
  double C_rho = 0;             // max rho (1 + rho0 t) / rho0
  double C_eta = 0;             // max |log(|eta_h0| / |eta0_h0|)| / rho0
  double C_xi = 0;              // max (1 - xi0^2)(1 + rho0 t)^2 / (1 - xi0(0)^2)
  double tail_slope = 0;        // fitted slope of log(1 - xi0^2) vs log(1 + rho0 t)
  double max_tail_slope = -1e300;
  int redrawn = 0;              // sphere starts whose path would pass a chart pole
};

// Samples in {rho <= eps, xi0 <= 0}; integrates forward in t up to t_max.
// On the round sphere a start is redrawn when its limiting boundary path
// comes within sin(theta) < 0.1 of a pole of the polar chart.
AsymptoticReport asymptotic_bounds_check(MetricPtr model, int samples, double eps, double t_max, Rng& rng);

struct TildeReport {
  std::vector<double> eps;
  std::vector<double> sup_rho_err, sup_xi_err, tau_err;  // per eps
  double slope_rho = 0, slope_xi = 0, slope_tau = 0;
  std::vector<double> eta_tau;    // |eta0| tau_+ per eps
  double C_rho_max = 0;           // max |eta0| sup rho
};

// Large-|eta| comparison with the (sin, cos) limiting dynamic.
TildeReport tilde_dynamic_check(MetricPtr model, const Vec& y0, const Vec& eta_unit, const std::vector<double>& eps);

}  // namespace conic

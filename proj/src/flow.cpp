#include "conic_lens/flow.hpp"

#include <algorithm>
#include <cmath>

#include "conic_lens/curvature.hpp"

namespace conic {

VecX pack(const PhasePoint& z, int extra) {
  int d = static_cast<int>(z.y.size());
  VecX s = VecX::Zero(2 * (d + 1) + extra);
  s(0) = z.rho;
  s.segment(1, d) = z.y;
  s(1 + d) = z.xi0;
  s.segment(2 + d, d) = z.eta;
  return s;
}

PhasePoint unpack(const VecX& s, int d) {
  PhasePoint z;
  z.rho = s(0);
  z.y = s.segment(1, d);
  z.xi0 = s(1 + d);
  z.eta = s.segment(2 + d, d);
  return z;
}

PhasePoint incoming(const Vec& y0, const Vec& eta0) { return {0.0, y0, 1.0, eta0}; }

PhasePoint time_reversed(const PhasePoint& z) { return {z.rho, z.y, -z.xi0, -z.eta}; }

std::string to_string(TrajStatus s) {
  switch (s) {
    case TrajStatus::Exited: return "exited";
    case TrajStatus::Trapped: return "trapped";
    case TrajStatus::TipGuard: return "tip-guard";
    case TrajStatus::Finished: return "finished";
    case TrajStatus::Failed: return "failed";
  }
  return "?";
}

FieldEval rescaled_field(const MetricModel& model, const PhasePoint& z) {
  int d = static_cast<int>(z.y.size()), n = d + 1;
  ReducedInverse R = model.reduced_inverse(z.rho, z.y);
  Vec p(n);
  p(0) = z.xi0;
  p.tail(d) = z.eta;
  Vec Mp = R.M * p;
  FieldEval f;
  f.K = p.dot(Mp);
  f.K_xi = 2.0 * Mp(0);
  f.K_eta = 2.0 * Mp.tail(d);
  f.K_rho = p.dot(R.dM[0] * p);
  f.K_y = Vec(d);
  for (int a = 0; a < d; ++a) f.K_y(a) = p.dot(R.dM[1 + a] * p);
  double r = z.rho, r2 = r * r;
  f.drho = z.xi0 + 0.5 * r2 * f.K_xi;
  f.dy = 0.5 * f.K_eta;
  f.dxi0 = -(r * f.K + 0.5 * r2 * f.K_rho);
  f.deta = -0.5 * f.K_y;
  f.v = Vec(n);
  f.v(0) = f.drho;
  f.v.tail(d) = r * f.dy;
  return f;
}

double constraint(const MetricModel& model, const PhasePoint& z) {
  FieldEval f = rescaled_field(model, z);
  return z.xi0 * z.xi0 + z.rho * z.rho * f.K;
}

double length_density(const PhasePoint& z, const FieldEval& f) { return -0.5 * (z.rho * f.K_rho + z.xi0 * f.K_xi); }

VecX Trajectory::state_exact(double t) const {
  const DenseStep& seg = sol.segment(t);
  Dopri5 rk(rhs, OdeOptions{});
  return rk.exact_step(seg.t0, seg.r1, t - seg.t0);
}

Trajectory integrate(MetricPtr model, const PhasePoint& z0, double t_end, const std::vector<Integrand>& acc,
                     const FlowOptions& opt) {
  Trajectory tr;
  tr.model = model;
  int d = model->boundary().dim();
  int ps = 2 * (d + 1);
  tr.d = d;
  tr.extras = static_cast<int>(acc.size());
  tr.mode = opt.mode;
  const MetricModel* m = model.get();
  TimeMode mode = opt.mode;
  tr.rhs = [m, d, ps, acc, mode](double, const VecX& s, VecX& ds) {
    PhasePoint z = unpack(s, d);
    FieldEval f = rescaled_field(*m, z);
    ds.resize(s.size());
    ds(0) = f.drho;
    ds.segment(1, d) = f.dy;
    ds(1 + d) = f.dxi0;
    ds.segment(2 + d, d) = f.deta;
    for (size_t k = 0; k < acc.size(); ++k) ds(ps + static_cast<Eigen::Index>(k)) = acc[k](z, f);
    if (mode == TimeMode::T) ds *= z.rho * z.rho;
  };

  double dir = t_end >= 0 ? 1.0 : -1.0;
  double limit = mode == TimeMode::Tau ? std::min(std::abs(t_end), opt.tau_max) : std::abs(t_end);
  SolveRequest req;
  req.t0 = 0.0;
  req.y0 = pack(z0, tr.extras);
  req.t_end = dir * limit;
  req.stops = opt.stops;
  req.keep_dense = opt.keep_dense;
  if (opt.stop_at_boundary) {
    Event ev;
    ev.g = [](double, const VecX& s) { return s(0); };
    ev.dg = [](double, const VecX&, const VecX& ds) { return ds(0); };
    ev.direction = -1;
    ev.terminal = true;
    req.events.push_back(ev);
  }
  for (const auto& e : opt.extra_events) req.events.push_back(e);
  double rho_lim = model->rho_limit();
  req.keep_going = [rho_lim](double, const VecX& s) { return s(0) < rho_lim; };
  double C0 = constraint(*m, z0);
  double drift_rate = opt.drift_per_tau;
  req.accept_hook = [m, d, drift_rate, mode](const VecX& a, const VecX& b, double h) {
    PhasePoint za = unpack(a, d), zb = unpack(b, d);
    double dtau = std::abs(h) * (mode == TimeMode::T ? std::max(za.rho * za.rho, zb.rho * zb.rho) : 1.0);
    return std::abs(constraint(*m, zb) - constraint(*m, za)) <= drift_rate * dtau + 1e-14;
  };
  OdeOptions oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  tr.sol = solve(tr.rhs, req, oo);
  tr.t_start = 0.0;
  tr.t_end = tr.sol.t_end;
  switch (tr.sol.status) {
    case SolveStatus::Event:
      tr.status = (opt.stop_at_boundary && tr.sol.hits.back().index == 0) ? TrajStatus::Exited : TrajStatus::Finished;
      break;
    case SolveStatus::Aborted: tr.status = TrajStatus::TipGuard; break;
    case SolveStatus::Finished:
      tr.status = (opt.stop_at_boundary && mode == TimeMode::Tau && limit == opt.tau_max) ? TrajStatus::Trapped
                                                                                         : TrajStatus::Finished;
      break;
    default: tr.status = TrajStatus::Failed; break;
  }
  for (const auto& s : tr.sol.steps) {
    PhasePoint z = unpack(s.r1 + s.r2, d);
    tr.max_drift = std::max(tr.max_drift, std::abs(constraint(*m, z) - C0));
  }
  tr.drift_at_exit = std::abs(constraint(*m, unpack(tr.sol.y_end, d)) - C0);
  return tr;
}

Trajectory trace(MetricPtr model, const Vec& y0, const Vec& eta0, const std::vector<Integrand>& acc,
                 const FlowOptions& opt) {
  return integrate(std::move(model), incoming(y0, eta0), opt.tau_max, acc, opt);
}

PhasePoint exact_cone_solution(const BoundaryManifold& N, const Vec& y0, const Vec& eta0, double tau) {
  double e = N.norm(y0, eta0);
  auto [y, eta] = N.flow(y0, eta0, tau);
  return {std::sin(tau * e) / e, y, std::cos(tau * e), eta};
}

PhasePoint on_constraint(const MetricModel& model, double rho, const Vec& y, double xi0, double psi) {
  CollarData c = model.collar(rho, y);
  int d = static_cast<int>(y.size());
  double mag = std::sqrt(std::max(0.0, 1.0 - xi0 * xi0)) / rho;
  Vec nu(d);
  if (d == 1) {
    nu(0) = (std::cos(psi) >= 0 ? 1.0 : -1.0) * std::sqrt(c.h(0, 0));
  } else {
    Eigen::LLT<Mat> llt(c.h);
    Mat L = llt.matrixL();
    nu = L * vec({std::cos(psi), std::sin(psi)});
  }
  return {rho, y, xi0, mag * nu};
}

namespace {

Vec random_boundary_point(const BoundaryManifold& N, Rng& rng) {
  switch (N.kind()) {
    case BoundaryKind::Circle: return vec({rng.uniform(0, 2 * kPi)});
    case BoundaryKind::RoundSphere: return vec({rng.uniform(kPi / 6, 5 * kPi / 6), rng.uniform(-kPi, kPi)});
    case BoundaryKind::FlatTorus: return vec({rng.uniform(0, N.size()), rng.uniform(0, N.size2())});
  }
  return Vec();
}

// The outgoing path follows e^{sH0} for the remaining arc pi - acos(xi0).
bool near_pole(const BoundaryManifold& N, const PhasePoint& z) {
  double arc = kPi - std::acos(std::clamp(z.xi0, -1.0, 1.0));
  Vec e = z.eta / N.norm(z.y, z.eta);
  for (int k = 0; k <= 64; ++k) {
    Vec y = N.flow(z.y, e, arc * k / 64).first;
    if (std::abs(std::sin(y(0))) < 0.1) return true;
  }
  return false;
}

}  // namespace

AsymptoticReport asymptotic_bounds_check(MetricPtr model, int samples, double eps, double t_max, Rng& rng) {
  AsymptoticReport rep;
  const BoundaryManifold& N = model->boundary();
  int d = N.dim();
  std::vector<double> tail_x, tail_y;
  rep.worst_lower_gap = 1e300;
  for (int i = 0; i < samples; ++i) {
    double rho0 = eps * rng.uniform(0.1, 1.0);
    double xi0 = -rng.uniform(0.0, 0.999);
    Vec y = random_boundary_point(N, rng);
    double psi = rng.uniform(0, 2 * kPi);
    PhasePoint z0 = on_constraint(*model, rho0, y, xi0, psi);
    if (N.kind() == BoundaryKind::RoundSphere && near_pole(N, z0)) {
      ++rep.redrawn;
      --i;
      continue;
    }
    FlowOptions opt;
    opt.mode = TimeMode::T;
    opt.stop_at_boundary = false;
    opt.rtol = 1e-11;
    opt.atol = 1e-14;
    Trajectory tr = integrate(model, z0, t_max, {}, opt);
    if (tr.status == TrajStatus::Failed) fail(ErrorKind::Integration, "asymptotic sample failed to integrate");
    ++rep.samples;
    double eta0 = N.norm(z0.y, z0.eta), w0 = 1.0 - xi0 * xi0;
    std::vector<double> lx, ly;
    for (const auto& s : tr.sol.steps) {
      double t = s.t1();
      PhasePoint z = unpack(s.r1 + s.r2, d);
      double lb = rho0 / (1.0 + rho0 * t);
      double gap = (z.rho - lb) / lb;
      rep.worst_lower_gap = std::min(rep.worst_lower_gap, gap);
      if (gap < -1e-8) ++rep.lower_violations;
      rep.C_rho = std::max(rep.C_rho, z.rho * (1.0 + rho0 * t) / rho0);
      double en = N.norm(z.y, z.eta);
      rep.C_eta = std::max(rep.C_eta, std::abs(std::log(en / eta0)) / rho0);
      double w = 1.0 - z.xi0 * z.xi0;
      rep.C_xi = std::max(rep.C_xi, w * sqr(1.0 + rho0 * t) / w0);
      if (1.0 + rho0 * t >= 10.0 && w > 0) {
        lx.push_back(std::log(1.0 + rho0 * t));
        ly.push_back(std::log(w));
      }
    }
    if (lx.size() >= 3) {
      double s = fit_line(lx, ly).slope;
      rep.max_tail_slope = std::max(rep.max_tail_slope, s);
      tail_x.push_back(s);
    }
  }
  if (!tail_x.empty()) {
    double m = 0;
    for (double s : tail_x) m += s;
    rep.tail_slope = m / tail_x.size();
  }
  return rep;
}

TildeReport tilde_dynamic_check(MetricPtr model, const Vec& y0, const Vec& eta_unit, const std::vector<double>& eps) {
  TildeReport rep;
  rep.eps = eps;
  std::vector<double> le, lr, lx, lt;
  for (double e : eps) {
    Trajectory tr = trace(model, y0, eta_unit / e);
    if (!tr.exited()) fail(ErrorKind::Integration, "large-eta trajectory did not exit");
    double tp = tr.tau_plus();
    double er = 0, ex = 0, sup_rho = 0;
    const int K = 400;
    for (int k = 0; k <= K; ++k) {
      double tau = tp * k / K;
      PhasePoint z = tr.point(std::min(tau, tr.t_end));
      double ph = kPi * tau / tp;
      er = std::max(er, std::abs(z.rho / e - (tp / (e * kPi)) * std::sin(ph)));
      ex = std::max(ex, std::abs(z.xi0 - std::cos(ph)));
      sup_rho = std::max(sup_rho, z.rho);
    }
    rep.sup_rho_err.push_back(er);
    rep.sup_xi_err.push_back(ex);
    rep.tau_err.push_back(std::abs(tp / e - kPi));
    rep.eta_tau.push_back(tp / e);
    rep.C_rho_max = std::max(rep.C_rho_max, sup_rho / e);
    le.push_back(std::log(e));
    lr.push_back(std::log(std::max(er, 1e-300)));
    lx.push_back(std::log(std::max(ex, 1e-300)));
    lt.push_back(std::log(std::max(rep.tau_err.back(), 1e-300)));
  }
  if (eps.size() >= 3) {
    rep.slope_rho = fit_line(le, lr).slope;
    rep.slope_xi = fit_line(le, lx).slope;
    rep.slope_tau = fit_line(le, lt).slope;
  }
  return rep;
}

}  // namespace conic

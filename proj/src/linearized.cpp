#include "conic_lens/linearized.hpp"

#include <cmath>
#include <string>

#include "conic_lens/flow.hpp"
#include "conic_lens/numerics.hpp"

namespace conic {

LinearizedFlow::LinearizedFlow(BoundaryManifold N, Vec y0, Vec eta0, double s_end)
    : N_(N), y0_(std::move(y0)), eta0_(std::move(eta0)) {
  int n = size();
  Rhs rhs = [this, n](double s, const VecX& x, VecX& dx) {
    MatX A = field_jacobian(s);
    dx.resize(x.size());
    Eigen::Map<const MatX> R(x.data(), n, n);
    Eigen::Map<MatX> dR(dx.data(), n, n);
    dR = A * R;
  };
  SolveRequest req;
  req.t0 = 0;
  req.t_end = s_end;
  MatX I = MatX::Identity(n, n);
  req.y0 = Eigen::Map<const VecX>(I.data(), n * n);
  OdeOptions o;
  o.rtol = 1e-13;
  o.atol = 1e-15;
  sol_ = solve(rhs, req, o);
  if (sol_.status != SolveStatus::Finished) fail(ErrorKind::Integration, "fundamental matrix integration failed");
}

VecX LinearizedFlow::baseline(double s) const {
  int d = N_.dim();
  auto [y, eta] = N_.flow(y0_, eta0_, s);
  VecX c(2 + 2 * d);
  c(0) = std::sin(s);
  c(1) = std::cos(s);
  c.segment(2, d) = y;
  c.segment(2 + d, d) = eta;
  return c;
}

MatX LinearizedFlow::field_jacobian(double s) const {
  int d = N_.dim(), n = size();
  VecX c = baseline(s);
  double rho = c(0);
  Vec y = c.segment(2, d), eta = c.segment(2 + d, d);
  BoundaryJet hi = N_.inverse_jet(y);
  double E = eta.dot(hi.v * eta);
  MatX A = MatX::Zero(n, n);
  A(0, 1) = 1.0;
  A(1, 0) = -E;
  for (int a = 0; a < d; ++a) {
    A(1, 2 + a) = -rho * eta.dot(hi.d[a] * eta);
    Vec he = hi.v * eta;
    A(1, 2 + d + a) = -rho * 2.0 * he(a);
    for (int b = 0; b < d; ++b) {
      A(2 + a, 2 + b) = (hi.d[b] * eta)(a);
      A(2 + a, 2 + d + b) = hi.v(a, b);
      A(2 + d + a, 2 + b) = -0.5 * eta.dot(hi.dd[a][b] * eta);
      A(2 + d + a, 2 + d + b) = -(hi.d[a] * eta)(b);
    }
  }
  return A;
}

MatX LinearizedFlow::R(double s) const {
  int n = size();
  VecX x = sol_.at(s);
  return Eigen::Map<const MatX>(x.data(), n, n);
}

VecX LinearizedFlow::energy_row(double s) const {
  int d = N_.dim();
  VecX c = baseline(s);
  Vec y = c.segment(2, d), eta = c.segment(2 + d, d);
  BoundaryJet hi = N_.inverse_jet(y);
  VecX row = VecX::Zero(size());
  for (int a = 0; a < d; ++a) row(2 + a) = eta.dot(hi.d[a] * eta);
  row.segment(2 + d, d) = 2.0 * hi.v * eta;
  return row;
}

VecX perturbation_field(const BoundaryManifold& N, const DualTensor& T, int m, const VecX& c0) {
  int d = N.dim();
  double rho = c0(0);
  Vec y = c0.segment(2, d), eta = c0.segment(2 + d, d);
  BoundaryJet t = T(y);
  VecX out = VecX::Zero(2 + 2 * d);
  double rm = std::pow(rho, m);
  out(1) = -(0.5 * m + 1.0) * rm * rho * eta.dot(t.v * eta);
  out.segment(2, d) = rm * t.v * eta;
  for (int a = 0; a < d; ++a) out(2 + d + a) = -0.5 * rm * eta.dot(t.d[a] * eta);
  return out;
}

VecX duhamel(const LinearizedFlow& lf, const DualTensor& T, int m, int panels) {
  int n = lf.size();
  VecX acc = VecX::Zero(n);
  for (int k = 0; k < n; ++k) {
    acc(k) = integrate_gl(
        [&](double t) {
          VecX w = lf.R(t).partialPivLu().solve(perturbation_field(lf.boundary(), T, m, lf.baseline(t)));
          return w(k);
        },
        0.0, kPi, panels);
  }
  return lf.R(kPi) * acc;
}

DualTensor jet_difference(MetricPtr g, MetricPtr gp, int m) {
  if (m < 1) fail(ErrorKind::Config, "jet difference needs m >= 1");
  if (g->boundary().dim() != gp->boundary().dim()) fail(ErrorKind::Config, "jet difference: boundary dimensions differ");
  int d = g->boundary().dim();
  const double probes[3][2] = {{0.7, 0.3}, {1.5, 2.0}, {2.3, 4.1}};
  for (int j = 0; j < m; ++j) {
    for (const auto& pr : probes) {
      Vec y = d == 1 ? vec({pr[1]}) : vec({pr[0], pr[1]});
      Mat a = g->dual_jet(j, y).v, b = gp->dual_jet(j, y).v;
      if ((a - b).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()))
        fail(ErrorKind::Config, "jet difference: metrics differ at order " + std::to_string(j) + " < m");
    }
  }
  return [g, gp, m](const Vec& y) {
    BoundaryJet a = g->dual_jet(m, y), b = gp->dual_jet(m, y);
    BoundaryJet out = a;
    out.v = a.v - b.v;
    for (size_t k = 0; k < a.d.size(); ++k)
      if (a.d[k].size() > 0 && b.d[k].size() > 0) out.d[k] = a.d[k] - b.d[k];
    return out;
  };
}

namespace {

VecX tilde_state(const PhasePoint& z, double eps, const BoundaryManifold& N, const Vec& y_ref) {
  int d = N.dim();
  VecX c(2 + 2 * d);
  c(0) = z.rho / eps;
  c(1) = z.xi0;
  c.segment(2, d) = y_ref + N.difference(z.y, y_ref);
  c.segment(2 + d, d) = eps * z.eta;
  return c;
}

}  // namespace

LinearizedDifference linearized_difference(MetricPtr g, MetricPtr gp, int m, const Vec& y0, const Vec& eta0,
                                           const std::vector<double>& eps, const LinearizedOptions& opt) {
  const BoundaryManifold& N = g->boundary();
  if (N.name() != gp->boundary().name()) fail(ErrorKind::Config, "models have different boundaries");
  if (m < 1) fail(ErrorKind::Config, "order m must be at least 1");
  if (std::abs(N.norm(y0, eta0) - 1.0) > 1e-12) fail(ErrorKind::Config, "eta0 must have unit h0-norm");
  for (int j = 0; j < m; ++j) {
    Mat a = j == 0 ? N.inverse_metric(y0) : Mat(g->dual_jet(j, y0).v);
    Mat b = j == 0 ? gp->boundary().inverse_metric(y0) : Mat(gp->dual_jet(j, y0).v);
    if ((a - b).cwiseAbs().maxCoeff() > 1e-12) fail(ErrorKind::Config, "boundary jets differ below order m");
  }
  LinearizedDifference r;
  r.m = m;
  r.eps = eps;
  LinearizedFlow lf(N, y0, eta0);
  VecX c0pi = lf.baseline(kPi);
  FlowOptions fo;
  fo.rtol = opt.rtol;
  fo.atol = opt.atol;
  fo.stop_at_boundary = false;
  fo.keep_dense = false;
  for (double e : eps) {
    Trajectory a = integrate(g, incoming(y0, eta0 / e), e * kPi, {}, fo);
    Trajectory b = integrate(gp, incoming(y0, eta0 / e), e * kPi, {}, fo);
    if (a.status == TrajStatus::Failed || b.status == TrajStatus::Failed)
      fail(ErrorKind::Integration, "tilde trajectory failed");
    Vec yref = c0pi.segment(2, N.dim());
    VecX diff = tilde_state(a.end_point(), e, N, yref) - tilde_state(b.end_point(), e, N, yref);
    r.table.push_back(diff / std::pow(e, m));
  }
  int n = lf.size();
  r.fd = VecX(n);
  for (int k = 0; k < n; ++k) {
    std::vector<double> col;
    for (const auto& v : r.table) col.push_back(v(k));
    r.fd(k) = extrapolate(eps, col, std::min<int>(3, static_cast<int>(eps.size()) - 2)).value;
  }
  DualTensor T = jet_difference(g, gp, m);
  r.duhamel = duhamel(lf, T, m, opt.panels);
  r.rel_gap = (r.fd - r.duhamel).norm() / std::max(r.duhamel.norm(), 1e-300);
  VecX dE = lf.energy_row(kPi);
  r.energy_fd = dE.dot(r.fd);
  r.energy_duhamel = dE.dot(r.duhamel);
  return r;
}

double h0_derivative(const BoundaryManifold& N, const DualTensor& T, const Vec& y, const Vec& eta) {
  int d = N.dim();
  BoundaryJet hi = N.inverse_jet(y);
  BoundaryJet t = T(y);
  Vec ydot = hi.v * eta;
  Vec te = t.v * eta;
  double out = 0;
  for (int a = 0; a < d; ++a) {
    double etadot = -0.5 * eta.dot(hi.d[a] * eta);
    out += ydot(a) * eta.dot(t.d[a] * eta) + etadot * 2.0 * te(a);
  }
  return out;
}

PerturbativeQuadratures perturbative_identities(const BoundaryManifold& N, const DualTensor& T, int m,
                                                const Vec& y0, const Vec& eta0, int panels) {
  PerturbativeQuadratures q;
  double c = 0.5 * m + 1.0;
  auto along = [&](double s) { return N.flow(y0, eta0, s); };
  auto Tval = [&](double s) {
    auto [y, eta] = along(s);
    return eta.dot(T(y).v * eta);
  };
  auto H0T = [&](double s) {
    auto [y, eta] = along(s);
    return h0_derivative(N, T, y, eta);
  };
  q.energyvar = integrate_gl([&](double s) { return std::pow(std::sin(s), m) * H0T(s); }, 0, kPi, panels);
  q.equcos = integrate_gl([&](double s) { return std::cos(s) * std::pow(std::sin(s), m + 1) * Tval(s); }, 0, kPi,
                          panels);
  q.equdirectionH0 = integrate_gl(
      [&](double s) {
        double sn = std::sin(s);
        return (std::pow(sn, m) - c * std::pow(sn, m + 2)) * Tval(s);
      },
      0, kPi, panels);
  q.rhocm = -c * integrate_gl([&](double s) { return std::pow(std::sin(s), m + 2) * Tval(s); }, 0, kPi, panels);
  for (int i = 0; i <= 64; ++i) q.max_killing = std::max(q.max_killing, std::abs(H0T(kPi * i / 64.0)));
  return q;
}

}  // namespace conic

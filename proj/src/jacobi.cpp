#include "conic_lens/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include "conic_lens/curvature.hpp"

namespace conic {

namespace {

struct Layout {
  int n, d, k;
  int ps() const { return 2 * n; }
  int fs() const { return ps(); }
  int us() const { return fs() + n * (n - 1); }
  int vs() const { return us() + (n - 1) * k; }
  int total() const { return vs() + (n - 1) * k; }
};

Vec coordinate_velocity(const FieldEval& f, double rho) {
  int n = static_cast<int>(f.dy.size()) + 1;
  Vec x(n);
  x(0) = f.drho;
  x.tail(n - 1) = f.dy;
  return rho * rho * x;
}

MatX curvature_matrix(const Riemann& R, const MatX& Y, const Vec& v) {
  int m = static_cast<int>(Y.cols());
  MatX K(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) K(i, j) = R(Vec(Y.col(j)), v, v, Vec(Y.col(i)));
  return 0.5 * (K + K.transpose());
}

MatX perpendicular_frame(const Mat& g, const Vec& v) {
  int n = static_cast<int>(g.rows());
  std::vector<Vec> basis{v};
  for (int c = 0; c < n && static_cast<int>(basis.size()) < n; ++c) {
    Vec e = Vec::Zero(n);
    e(c) = 1.0;
    for (const auto& b : basis) e -= e.dot(g * b) * b;
    double nn = std::sqrt(e.dot(g * e));
    if (nn > 1e-6) basis.push_back(e / nn);
  }
  MatX Y(n, n - 1);
  for (int i = 1; i < n; ++i) Y.col(i - 1) = basis[i];
  return Y;
}

}  // namespace

PhasePoint JacobiSolution::point(double t) const { return unpack(sol.at(t), n - 1); }

MatX JacobiSolution::U(double t) const {
  Layout L{n, n - 1, k};
  VecX s = sol.at(t);
  return Eigen::Map<const MatX>(s.data() + L.us(), n - 1, k);
}

MatX JacobiSolution::V(double t) const {
  Layout L{n, n - 1, k};
  VecX s = sol.at(t);
  return Eigen::Map<const MatX>(s.data() + L.vs(), n - 1, k);
}

MatX JacobiSolution::frame(double t) const {
  Layout L{n, n - 1, k};
  VecX s = sol.at(t);
  return Eigen::Map<const MatX>(s.data() + L.fs(), n, n - 1);
}

Vec JacobiSolution::velocity(double t) const {
  PhasePoint z = point(t);
  return coordinate_velocity(rescaled_field(*model, z), z.rho);
}

MatX JacobiSolution::curvature(double t) const {
  PhasePoint z = point(t);
  Riemann R = riemann(*model, z.rho, z.y);
  return curvature_matrix(R, frame(t), velocity(t));
}

JacobiSolution jacobi_integrate(MetricPtr model, const PhasePoint& z0, const MatX& U0, const MatX& V0,
                                const JacobiOptions& opt) {
  int n = model->dim(), d = n - 1;
  if (U0.rows() != n - 1 || V0.rows() != n - 1 || U0.cols() != V0.cols())
    fail(ErrorKind::Config, "Jacobi data must be (n-1) x k");
  if (z0.rho <= 0) fail(ErrorKind::Domain, "Jacobi fields are integrated in the interior (rho > 0)");
  int k = static_cast<int>(U0.cols());
  Layout L{n, d, k};
  const MetricModel* m = model.get();

  Rhs rhs = [m, L](double, const VecX& s, VecX& ds) {
    int n = L.n, d = L.d;
    ds.setZero(s.size());
    PhasePoint z = unpack(s.head(L.ps()), d);
    FieldEval f = rescaled_field(*m, z);
    double r2 = z.rho * z.rho;
    ds(0) = r2 * f.drho;
    ds.segment(1, d) = r2 * f.dy;
    ds(1 + d) = r2 * f.dxi0;
    ds.segment(2 + d, d) = r2 * f.deta;
    Vec v = coordinate_velocity(f, z.rho);
    CoordinateJet jet = m->coordinate_jet(z.rho, z.y);
    Riemann R = riemann_from_jet(jet);
    Eigen::Map<const MatX> Y(s.data() + L.fs(), n, n - 1);
    Eigen::Map<MatX> dY(ds.data() + L.fs(), n, n - 1);
    for (int c = 0; c < n - 1; ++c)
      for (int a = 0; a < n; ++a) dY(a, c) = -v.dot(R.gamma[a] * Y.col(c));
    Eigen::Map<const MatX> U(s.data() + L.us(), n - 1, L.k);
    Eigen::Map<const MatX> V(s.data() + L.vs(), n - 1, L.k);
    Eigen::Map<MatX> dU(ds.data() + L.us(), n - 1, L.k);
    Eigen::Map<MatX> dV(ds.data() + L.vs(), n - 1, L.k);
    dU = V;
    dV = -curvature_matrix(R, Y, v) * U;
  };

  FieldEval f0 = rescaled_field(*model, z0);
  Vec v0 = coordinate_velocity(f0, z0.rho);
  Mat g0 = model->coordinate_jet(z0.rho, z0.y).g;
  double speed = std::sqrt(v0.dot(g0 * v0));
  if (std::abs(speed - 1.0) > 1e-8) fail(ErrorKind::Domain, "initial point is not on the unit constraint");
  MatX Y0 = perpendicular_frame(g0, v0 / speed);

  VecX s0(L.total());
  s0.head(L.ps()) = pack(z0);
  Eigen::Map<MatX>(s0.data() + L.fs(), n, n - 1) = Y0;
  Eigen::Map<MatX>(s0.data() + L.us(), n - 1, k) = U0;
  Eigen::Map<MatX>(s0.data() + L.vs(), n - 1, k) = V0;

  JacobiSolution js;
  js.model = model;
  js.n = n;
  js.k = k;
  SolveRequest req;
  req.t0 = 0;
  req.y0 = s0;
  req.t_end = opt.t_max;
  double rho_lim = model->rho_limit();
  double drift = 0, sdrift = 0;
  req.keep_going = [&, L](double, const VecX& s) {
    PhasePoint z = unpack(s.head(L.ps()), L.d);
    if (z.rho <= 0 || z.rho >= rho_lim) return false;
    FieldEval f = rescaled_field(*m, z);
    Vec v = coordinate_velocity(f, z.rho);
    Mat g = m->coordinate_jet(z.rho, z.y).g;
    Eigen::Map<const MatX> Y(s.data() + L.fs(), L.n, L.n - 1);
    MatX G = Y.transpose() * g * Y - MatX::Identity(L.n - 1, L.n - 1);
    VecX c = Y.transpose() * (g * v);
    drift = std::max({drift, G.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
    sdrift = std::max(sdrift, std::abs(std::sqrt(v.dot(g * v)) - 1.0));
    return true;
  };
  if (opt.stop_rho > 0) {
    Event ev;
    double rw = opt.stop_rho;
    ev.g = [rw](double, const VecX& s) { return s(0) - rw; };
    ev.dg = [](double, const VecX&, const VecX& ds) { return ds(0); };
    ev.direction = -1;
    ev.terminal = true;
    req.events.push_back(ev);
  }
  OdeOptions o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  js.sol = solve(rhs, req, o);
  if (js.sol.status != SolveStatus::Finished && js.sol.status != SolveStatus::Event)
    fail(ErrorKind::Integration, "Jacobi integration failed: " + to_string(js.sol.status));
  js.t_end = js.sol.t_end;
  js.stopped_at_rho = js.sol.status == SolveStatus::Event;
  js.frame_drift = drift;
  js.speed_drift = sdrift;
  return js;
}

double jacobi_residual(const JacobiSolution& js, const std::vector<double>& ts, double h) {
  double worst = 0;
  for (double t : ts) {
    if (t - 2 * h < 0 || t + 2 * h > js.t_end) continue;
    MatX acc = (-js.V(t + 2 * h) + 8.0 * js.V(t + h) - 8.0 * js.V(t - h) + js.V(t - 2 * h)) / (12.0 * h);
    MatX res = acc + js.curvature(t) * js.U(t);
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

MatX wronskian(const JacobiSolution& js, double t, int k1) {
  MatX U = js.U(t), V = js.V(t);
  int k2 = js.k - k1;
  return U.leftCols(k1).transpose() * V.rightCols(k2) - V.leftCols(k1).transpose() * U.rightCols(k2);
}

ConjugateScan conjugate_scan(MetricPtr model, const Vec& y0, const Vec& eta0, double rho_w, bool flat_exterior,
                             const JacobiOptions& opt) {
  ConjugateScan cs;
  int n = model->dim(), d = n - 1;
  FlowOptions fo;
  fo.keep_dense = false;
  Event in;
  in.g = [rho_w](double, const VecX& s) { return s(0) - rho_w; };
  in.dg = [](double, const VecX&, const VecX& ds) { return ds(0); };
  in.direction = +1;
  in.terminal = true;
  fo.extra_events = {in};
  Trajectory lead = integrate(model, incoming(y0, eta0), fo.tau_max, {}, fo);
  if (lead.sol.hits.empty() || lead.sol.hits.back().index != 1) return cs;
  cs.crossed = true;
  cs.start = unpack(lead.sol.hits.back().y, d);

  JacobiOptions jo = opt;
  jo.stop_rho = rho_w;
  MatX U0 = MatX::Zero(d, d), V0 = MatX::Identity(d, d);
  JacobiSolution js = jacobi_integrate(model, cs.start, U0, V0, jo);
  cs.frame_drift = js.frame_drift;
  cs.t_window = js.t_end;

  auto det_at = [&](double t) { return js.U(t).determinant(); };
  // Skip the trivial zero at t = 0: scan from the end of the first step.
  const auto& steps = js.sol.steps;
  double prev_t = steps.empty() ? js.t_end : steps.front().t1();
  double prev = det_at(prev_t);
  for (size_t i = 1; i < steps.size(); ++i) {
    double t1 = steps[i].t1();
    double cur = det_at(t1);
    if ((prev > 0 && cur <= 0) || (prev < 0 && cur >= 0)) {
      double a = prev_t, b = t1, fa = prev;
      while (b - a > 1e-12) {
        double c = 0.5 * (a + b), fc = det_at(c);
        if ((fa > 0) == (fc > 0)) {
          a = c;
          fa = fc;
        } else {
          b = c;
        }
      }
      cs.times.push_back(0.5 * (a + b));
    }
    prev_t = t1;
    prev = cur;
  }
  if (flat_exterior && n == 2 && js.stopped_at_rho) {
    double u = js.U(js.t_end)(0, 0), du = js.V(js.t_end)(0, 0);
    if (u * du < 0) {
      cs.times.push_back(js.t_end - u / du);
      cs.extrapolated = true;
    }
  }
  return cs;
}

GrowthReport jacobi_growth_check(MetricPtr model, int samples, double eps, double t_max, Rng& rng) {
  GrowthReport rep;
  const BoundaryManifold& N = model->boundary();
  int d = N.dim();
  struct Row {
    double cd, cv;
  };
  std::vector<Row> rows;
  for (int i = 0; i < samples; ++i) {
    double rho0 = rng.uniform(0.2, 1.0) * eps;
    Vec y(d);
    if (N.kind() == BoundaryKind::RoundSphere)
      y = vec({rng.uniform(kPi / 4, 3 * kPi / 4), rng.uniform(-kPi, kPi)});
    else if (N.kind() == BoundaryKind::Circle)
      y = vec({rng.uniform(0, 2 * kPi)});
    else
      y = vec({rng.uniform(0, N.size()), rng.uniform(0, N.size2())});
    double xi0 = -rng.uniform(0.0, 1.0);
    double psi = rng.uniform(0, 2 * kPi);
    PhasePoint z0 = on_constraint(*model, rho0, y, xi0, psi);
    MatX U0(d, 1), V0(d, 1);
    for (int a = 0; a < d; ++a) {
      U0(a, 0) = rng.uniform(-1, 1);
      V0(a, 0) = rng.uniform(-1, 1);
    }
    JacobiOptions jo;
    jo.t_max = t_max;
    JacobiSolution js = jacobi_integrate(model, z0, U0, V0, jo);
    rep.max_frame_drift = std::max(rep.max_frame_drift, js.frame_drift);
    double j0 = U0.norm(), dj0 = V0.norm();
    double scale = j0 * std::pow(rho0, 3) + dj0;
    Row r{0, 0};
    for (const auto& st : js.sol.steps) {
      double t = st.t1();
      r.cd = std::max(r.cd, js.V(t).norm() / scale);
      if (t > 1e-3) r.cv = std::max(r.cv, (js.U(t).norm() - j0) / (scale * t));
      PhasePoint z = js.point(t);
      rep.C_curv = std::max(rep.C_curv, js.curvature(t).norm() / std::pow(z.rho, 4));
    }
    rows.push_back(r);
  }
  rep.samples = samples;
  size_t half = std::max<size_t>(1, rows.size() / 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    rep.C_dot = std::max(rep.C_dot, rows[i].cd);
    rep.C_val = std::max(rep.C_val, rows[i].cv);
    if (i < half) {
      rep.C_dot_fit = std::max(rep.C_dot_fit, rows[i].cd);
      rep.C_val_fit = std::max(rep.C_val_fit, rows[i].cv);
    }
  }
  for (size_t i = half; i < rows.size(); ++i)
    if (rows[i].cd > 2 * rep.C_dot_fit || rows[i].cv > 2 * std::max(rep.C_val_fit, 1e-12)) ++rep.violations;
  return rep;
}

}  // namespace conic

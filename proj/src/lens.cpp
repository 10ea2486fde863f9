#include "conic_lens/lens.hpp"

#include <algorithm>
#include <cmath>

#include "conic_lens/curvature.hpp"

namespace conic {

std::string to_string(LengthMethod m) {
  switch (m) {
    case LengthMethod::CutExtrapolation: return "cut-extrapolation";
    case LengthMethod::TauSubtraction: return "tau-subtraction";
    case LengthMethod::Flux: return "flux";
  }
  return "?";
}

namespace {

FlowOptions base_options(const LensOptions& o) {
  FlowOptions fo;
  fo.rtol = o.rtol;
  fo.atol = o.atol;
  fo.tau_max = o.tau_max;
  return fo;
}

ScatterResult scatter_from(const Trajectory& tr, const Vec& y0, const Vec& eta0) {
  ScatterResult r;
  r.y0 = y0;
  r.eta0 = eta0;
  r.status = tr.status;
  r.drift = tr.max_drift;
  if (tr.exited()) {
    PhasePoint z = tr.end_point();
    r.y1 = tr.model->boundary().canonical(z.y);
    r.eta1 = z.eta;
    r.tau_plus = tr.tau_plus();
  }
  return r;
}

double rho_max_of(const Trajectory& tr) {
  double m = 0;
  for (const auto& s : tr.sol.steps) {
    m = std::max(m, s.r1(0));
    m = std::max(m, s.eval(s.t0 + 0.5 * s.h)(0));
  }
  return m;
}

Integrand inverse_square() {
  return [](const PhasePoint& z, const FieldEval&) { return 1.0 / (z.rho * z.rho); };
}

}  // namespace

ScatterResult scattering_map(MetricPtr model, const Vec& y0, const Vec& eta0, const LensOptions& opt) {
  FlowOptions fo = base_options(opt);
  fo.keep_dense = false;
  Trajectory tr = trace(model, y0, eta0, {}, fo);
  return scatter_from(tr, y0, eta0);
}

LensRecord renormalized_length(MetricPtr model, const Vec& y0, const Vec& eta0, LengthMethod method,
                               const LensOptions& opt, std::shared_ptr<const BoundaryFunction> bdf_a) {
  LensRecord rec;
  rec.method = method;
  FlowOptions fo = base_options(opt);
  int d = model->boundary().dim();
  int ps = 2 * (d + 1);

  if (method == LengthMethod::Flux) {
    if (bdf_a) fail(ErrorKind::Config, "the flux method measures lengths for the model's own rho only");
    fo.keep_dense = false;
    Integrand acc = [](const PhasePoint& z, const FieldEval& f) { return length_density(z, f); };
    Trajectory tr = trace(model, y0, eta0, {acc}, fo);
    rec.scatter = scatter_from(tr, y0, eta0);
    if (tr.exited()) rec.L = tr.accumulator(0);
    return rec;
  }

  fo.keep_dense = true;
  Trajectory first = trace(model, y0, eta0, {}, fo);
  rec.scatter = scatter_from(first, y0, eta0);
  if (!first.exited()) return rec;
  double tp = first.tau_plus();
  // tau cuts are placed relative to tau+, whose error is amplified by
  // delta^-2; they stay coarser and use a higher fit degree instead.
  bool tau_cuts = method == LengthMethod::TauSubtraction;
  double eps0 = opt.eps0 > 0 ? opt.eps0 : tau_cuts ? 0.02 * tp : std::min(2e-3, 0.01 * rho_max_of(first));
  int degree = tau_cuts ? std::max(opt.degree, 4) : opt.degree;
  rec.eps = dyadic(eps0, opt.levels);
  double emin = rec.eps.back();

  if (tau_cuts) {
    if (bdf_a) fail(ErrorKind::Config, "tau subtraction is tied to the model's own rescaled time");
    if (2 * eps0 >= tp) fail(ErrorKind::Domain, "tau cuts exceed half the arrival time");
    FlowOptions f2 = fo;
    f2.keep_dense = false;
    f2.stop_at_boundary = false;
    Trajectory lead = integrate(model, incoming(y0, eta0), emin, {}, f2);
    PhasePoint z = lead.end_point();
    FlowOptions f3 = f2;
    for (double e : rec.eps) {
      f3.stops.push_back(e - emin);
      f3.stops.push_back(tp - e - emin);
    }
    Trajectory body = integrate(model, z, tp - 2 * emin, {inverse_square()}, f3);
    if (body.status == TrajStatus::Failed) fail(ErrorKind::Integration, "tau-subtraction pass failed");
    auto acc_at = [&](double t) {
      if (t == 0.0) return 0.0;
      for (const auto& [ts, s] : body.sol.stops)
        if (ts == t) return s(ps);
      if (std::abs(t - body.t_end) < 1e-15 * std::max(1.0, tp)) return body.sol.y_end(ps);
      fail(ErrorKind::Integration, "missing stop state in tau-subtraction");
    };
    for (double e : rec.eps) {
      double a = acc_at(e - emin), b = acc_at(tp - e - emin);
      rec.table.push_back(b - a - 2.0 / e);
    }
  } else {
    // Cut levels rho~ = rho (1 + a(y) rho) = eps_j. The correction is clamped
    // to |a rho| <= 1/4 so rho~ stays positive in the interior; all cut
    // levels lie well inside the unclamped collar.
    auto afun = bdf_a;
    auto level = [afun, d](const VecX& s) {
      double r = s(0);
      double a = afun ? afun->eval(s.segment(1, d)).v : 0.0;
      return r * (1.0 + std::clamp(a * r, -0.25, 0.25));
    };
    auto dlevel = [afun, d](const VecX& s, const VecX& ds) {
      double r = s(0);
      if (!afun) return ds(0);
      ScalarJet a = afun->eval(s.segment(1, d));
      if (std::abs(a.v * r) >= 0.25) return ds(0) * (1.0 + std::copysign(0.25, a.v));
      return ds(0) * (1.0 + 2.0 * a.v * r) + r * r * a.g.dot(ds.segment(1, d));
    };
    auto make_event = [&](double e, int dir, bool terminal) {
      Event ev;
      ev.g = [level, e](double, const VecX& s) { return level(s) - e; };
      ev.dg = [dlevel](double, const VecX& s, const VecX& ds) { return dlevel(s, ds); };
      ev.direction = dir;
      ev.terminal = terminal;
      return ev;
    };
    FlowOptions f2 = fo;
    f2.keep_dense = false;
    f2.stop_at_boundary = false;
    f2.extra_events = {make_event(emin, +1, true)};
    Trajectory lead = integrate(model, incoming(y0, eta0), tp, {}, f2);
    if (lead.sol.hits.empty()) fail(ErrorKind::Integration, "innermost cut level not reached");
    PhasePoint z = unpack(lead.sol.hits.back().y, d);
    FlowOptions f3 = f2;
    f3.extra_events.clear();
    f3.extra_events.push_back(make_event(emin, -1, true));
    for (size_t j = 0; j + 1 < rec.eps.size(); ++j) f3.extra_events.push_back(make_event(rec.eps[j], 0, false));
    Trajectory body = integrate(model, z, tp, {inverse_square()}, f3);
    if (body.sol.hits.empty() || body.sol.hits.back().index != 0)
      fail(ErrorKind::Integration, "outgoing innermost cut not reached");
    int levels = static_cast<int>(rec.eps.size());
    std::vector<double> in(levels, NAN), out(levels, NAN);
    in[levels - 1] = 0.0;
    out[levels - 1] = body.sol.hits.back().y(ps);
    for (const auto& h : body.sol.hits) {
      if (h.index == 0) continue;
      int j = h.index - 1;
      double val = h.y(ps);
      // first crossing is incoming, the last outgoing
      if (std::isnan(in[j])) in[j] = val;
      out[j] = val;
    }
    for (int j = 0; j < levels; ++j) {
      if (std::isnan(in[j]) || std::isnan(out[j]) || in[j] == out[j])
        fail(ErrorKind::Integration, "cut level crossing missing");
      rec.table.push_back(out[j] - in[j] - 2.0 / rec.eps[j]);
    }
  }
  Extrapolation ex = extrapolate(rec.eps, rec.table, degree);
  rec.L = ex.value;
  rec.L_error = ex.error;
  rec.order = ex.order;
  return rec;
}

double phase_distance(const BoundaryManifold& N, const Vec& ya, const Vec& ea, const Vec& yb, const Vec& eb) {
  return std::sqrt(N.difference(ya, yb).squaredNorm() + (ea - eb).squaredNorm());
}

LargeEtaStudy scattering_large_eta(MetricPtr model, const Vec& y0, const Vec& eta0, const std::vector<double>& eps) {
  LargeEtaStudy st;
  st.eps = eps;
  const BoundaryManifold& N = model->boundary();
  double e0 = N.norm(y0, eta0);
  auto [yl, el] = N.flow(y0, eta0 / e0, kPi);
  el *= e0;
  std::vector<double> lx, ly;
  for (double e : eps) {
    ScatterResult s = scattering_map(model, y0, eta0 / e);
    if (!s.ok()) fail(ErrorKind::Integration, "large-eta trajectory did not exit");
    double g = phase_distance(N, s.y1, e * s.eta1, yl, el);
    st.gaps.push_back(g);
    if (g > 0) {
      lx.push_back(std::log(e));
      ly.push_back(std::log(g));
    }
  }
  if (lx.size() >= 3) st.slope = fit_line(lx, ly).slope;
  return st;
}

double scattering_jacobian_det(MetricPtr model, const Vec& y0, const Vec& eta0, double h) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim();
  MatX J(2 * d, 2 * d);
  for (int c = 0; c < 2 * d; ++c) {
    Vec yp = y0, ym = y0, ep = eta0, em = eta0;
    if (c < d) {
      yp(c) += h;
      ym(c) -= h;
    } else {
      ep(c - d) += h;
      em(c - d) -= h;
    }
    ScatterResult a = scattering_map(model, yp, ep), b = scattering_map(model, ym, em);
    if (!a.ok() || !b.ok()) fail(ErrorKind::Integration, "Jacobian probe trajectory did not exit");
    J.col(c).head(d) = N.difference(a.y1, b.y1) / (2 * h);
    J.col(c).tail(d) = (a.eta1 - b.eta1) / (2 * h);
  }
  return J.determinant();
}

TensorFieldPtr bump_tensor_field(std::shared_ptr<const TensorBump> family) {
  int n = family->dim();
  auto F = [family, n](double rho, const Vec& y, bool) {
    TensorJet t = TensorJet::zero(n, 2);
    if (rho <= 0) return t;
    Mat q = family->perturbation_frame(rho, y);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t.v[i * n + j] = q(i, j);
    return t;
  };
  auto f = std::make_shared<SymTensorField>(n, 2, 0.0, F, "q");
  f->zero_at_boundary = true;
  return f;
}

VariationResult lens_variation(const TensorBump& family, const Vec& y0, const Vec& eta0,
                               const std::vector<double>& steps, const LensOptions& opt) {
  VariationResult r;
  r.steps = steps;
  auto at = [&](double s) { return std::make_shared<TensorBump>(family.with_scale(s)); };
  auto base = at(0.0);
  const BoundaryManifold& N = base->boundary();
  ScatterResult s0 = scattering_map(base, y0, eta0, opt);
  if (!s0.ok()) fail(ErrorKind::Integration, "lens variation: base geodesic trapped");
  std::vector<double> h2, dy;
  std::vector<Vec> dys;
  for (double h : steps) {
    LensRecord p = renormalized_length(at(h), y0, eta0, LengthMethod::Flux, opt);
    LensRecord m = renormalized_length(at(-h), y0, eta0, LengthMethod::Flux, opt);
    if (!p.ok() || !m.ok()) fail(ErrorKind::Integration, "lens variation: perturbed geodesic trapped");
    r.central.push_back((p.L - m.L) / (2 * h));
    h2.push_back(h * h);
    Vec dyh = N.difference(p.scatter.y1, m.scatter.y1) / (2 * h);
    dy.push_back(s0.eta1.dot(dyh));
  }
  int deg = steps.size() >= 4 ? 2 : 1;
  if (steps.size() < 2) fail(ErrorKind::Config, "lens variation needs at least two steps");
  Extrapolation e = extrapolate(h2, r.central, deg);
  r.dLds_raw = e.value;
  r.richardson_error = e.error;
  r.boundary_term = extrapolate(h2, dy, deg).value;
  r.dLds = r.dLds_raw - r.boundary_term;

  auto q = bump_tensor_field(base);
  XrayValue xv = xray(base, *q, y0, eta0);
  r.I2 = xv.value;

  // Direct route: q(gamma', gamma') dt in chart coordinates from the metric
  // difference g(1) - g(0).
  auto unit = at(1.0);
  Integrand direct = [unit, base](const PhasePoint& z, const FieldEval& fe) {
    if (z.rho <= 0) return 0.0;
    Mat qc = unit->coordinate_jet(z.rho, z.y).g - base->coordinate_jet(z.rho, z.y).g;
    if (qc.isZero(0.0)) return 0.0;
    int n = static_cast<int>(qc.rows());
    Vec v(n);
    v(0) = fe.drho;
    v.tail(n - 1) = fe.dy;
    return z.rho * z.rho * v.dot(qc * v);
  };
  FlowOptions fo;
  fo.keep_dense = false;
  Trajectory tr = trace(base, y0, eta0, {direct}, fo);
  r.I2_direct = tr.accumulator(0);
  return r;
}

}  // namespace conic

#include "conic_lens/xray.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "conic_lens/curvature.hpp"

namespace conic {

namespace {

bool integer_valued(double p) { return p == std::floor(p); }

double binom(int m, int l) {
  double r = 1;
  for (int i = 1; i <= l; ++i) r = r * (m - l + i) / i;
  return r;
}

FlowOptions flow_options(const XrayOptions& o) {
  FlowOptions fo;
  fo.rtol = o.rtol;
  fo.atol = o.atol;
  fo.tau_max = o.tau_max;
  fo.keep_dense = false;
  return fo;
}

// Endpoint contribution int over [a, b] computed from re-stepped states with
// tanh-sinh, for integrands with fractional power behaviour at the ends.
double graded_tail(const Trajectory& tr, const SymTensorField& f, double a, double b) {
  const MetricModel& m = *tr.model;
  auto g = [&](double t) {
    PhasePoint z = unpack(tr.state_exact(t), tr.d);
    FieldEval fe = rescaled_field(m, z);
    return xray_density(f, z, fe);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(g, a, b);
}

std::vector<XrayValue> run_many(MetricPtr model, const std::vector<TensorFieldPtr>& fs, const Vec& y0,
                                const Vec& eta0, const XrayOptions& opt) {
  std::vector<Integrand> acc;
  bool fractional = false;
  for (const auto& f : fs) {
    acc.push_back([f](const PhasePoint& z, const FieldEval& fe) { return xray_density(*f, z, fe); });
    if (!integer_valued(f->prefactor())) fractional = true;
  }
  FlowOptions fo = flow_options(opt);
  std::vector<XrayValue> out(fs.size());
  for (auto& v : out) {
    v.y0 = y0;
    v.eta0 = eta0;
  }
  if (!fractional) {
    Trajectory tr = trace(model, y0, eta0, acc, fo);
    for (size_t i = 0; i < fs.size(); ++i) {
      out[i].status = tr.status;
      out[i].tau_plus = tr.tau_plus();
      out[i].value = tr.exited() ? tr.accumulator(static_cast<int>(i)) : 0.0;
    }
    return out;
  }
  // Fractional endpoint exponents: accumulate on [delta, tau+ - delta] and
  // handle the ends with a graded rule.
  Trajectory probe = trace(model, y0, eta0, {}, fo);
  if (!probe.exited()) {
    for (auto& v : out) v.status = probe.status;
    return out;
  }
  double tp = probe.tau_plus(), delta = 0.05 * tp;
  fo.keep_dense = true;
  fo.stops = {delta, tp - delta};
  Trajectory tr = trace(model, y0, eta0, acc, fo);
  int ps = 2 * (tr.d + 1);
  for (size_t i = 0; i < fs.size(); ++i) {
    out[i].status = tr.status;
    out[i].tau_plus = tr.tau_plus();
    if (!tr.exited() || tr.sol.stops.size() < 2) continue;
    double mid = tr.sol.stops[1].second(ps + i) - tr.sol.stops[0].second(ps + i);
    out[i].value = mid + graded_tail(tr, *fs[i], 0.0, delta) + graded_tail(tr, *fs[i], tr.t_end - delta, tr.t_end);
  }
  return out;
}

}  // namespace

std::vector<XrayValue> xray_many(MetricPtr model, const std::vector<TensorFieldPtr>& fs, const Vec& y0,
                                 const Vec& eta0, const XrayOptions& opt) {
  std::vector<XrayValue> out = run_many(model, fs, y0, eta0, opt);
  if (opt.estimate_error) {
    XrayOptions loose = opt;
    loose.rtol *= 100;
    loose.atol *= 100;
    loose.estimate_error = false;
    std::vector<XrayValue> alt = run_many(model, fs, y0, eta0, loose);
    for (size_t i = 0; i < out.size(); ++i) out[i].error = std::abs(out[i].value - alt[i].value);
  }
  return out;
}

XrayValue xray(MetricPtr model, const SymTensorField& f, const Vec& y0, const Vec& eta0, const XrayOptions& opt) {
  auto alias = std::shared_ptr<const SymTensorField>(std::shared_ptr<const SymTensorField>(), &f);
  return xray_many(std::move(model), {alias}, y0, eta0, opt)[0];
}

ResolventSample resolvent(MetricPtr model, const SymTensorField& f, const PhasePoint& z, const XrayOptions& opt) {
  ResolventSample s;
  s.z = z;
  Integrand acc = [&f](const PhasePoint& p, const FieldEval& fe) { return xray_density(f, p, fe); };
  FlowOptions fo = flow_options(opt);
  // on the boundary faces one of the two ranges is empty
  if (z.rho > 0 || z.xi0 > 0) {
    Trajectory fw = integrate(model, z, opt.tau_max, {acc}, fo);
    if (!fw.exited()) fail(ErrorKind::Integration, "forward resolvent: trajectory did not exit (" + to_string(fw.status) + ")");
    s.u_plus = fw.accumulator(0);
    s.tau_plus = fw.tau_plus();
  }
  if (z.rho > 0 || z.xi0 < 0) {
    Trajectory bw = integrate(model, z, -opt.tau_max, {acc}, fo);
    if (!bw.exited()) fail(ErrorKind::Integration, "backward resolvent: trajectory did not exit (" + to_string(bw.status) + ")");
    // the accumulator holds int_0^{tau-} = -int_{tau-}^0
    s.u_minus = bw.accumulator(0);
    s.tau_minus = bw.t_end;
  }
  return s;
}

ResolventDecay resolvent_decay(MetricPtr model, const SymTensorField& f, int sign, const Vec& y, double xi0,
                               double psi, const std::vector<double>& rhos) {
  ResolventDecay rep;
  std::vector<double> lx, ly;
  for (double r : rhos) {
    PhasePoint z = on_constraint(*model, r, y, xi0, psi);
    ResolventSample s = resolvent(model, f, z);
    double u = std::abs(sign > 0 ? s.u_plus : s.u_minus);
    rep.table.emplace_back(r, u);
    if (u > 0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(u));
    }
  }
  if (lx.size() >= 3) {
    LineFit lf = fit_line(lx, ly);
    rep.slope = lf.slope;
    rep.ci = lf.ci;
  }
  return rep;
}

namespace {

// Contraction of fbar at (0, alpha) with l slots equal to cos s and the
// others sin s * alpha', grouped by l.
std::array<double, 5> boundary_groups(const SymTensorField& f, const Vec& y, const Vec& vdot, double c, double sn) {
  int n = f.dim(), m = f.order();
  TensorJet F = f.reduced(0.0, y, false);
  std::array<double, 5> S{0, 0, 0, 0, 0};
  int N = F.size();
  int idx[4];
  for (int k = 0; k < N; ++k) {
    if (F.v[k] == 0.0) continue;
    int flat = k;
    for (int j = m - 1; j >= 0; --j) {
      idx[j] = flat % n;
      flat /= n;
    }
    double prod = F.v[k];
    int l = 0;
    for (int j = 0; j < m; ++j) {
      if (idx[j] == 0) {
        prod *= c;
        ++l;
      } else {
        prod *= sn * vdot(idx[j] - 1);
      }
    }
    S[l] += prod;
  }
  return S;
}

double pi_quadrature(const BoundaryManifold& N, const SymTensorField& f, const Vec& y0, const Vec& eta0, double k,
                     int only_l, bool binomial) {
  int m = f.order();
  double e = N.norm(y0, eta0);
  Vec eu = eta0 / e;
  auto integrand = [&](double s) {
    auto [y, eta] = N.flow(y0, eu, s);
    Vec vdot = N.inverse_metric(y) * eta;
    double c = std::cos(s), sn = std::sin(s);
    std::array<double, 5> S = boundary_groups(f, y, vdot, c, sn);
    double w = rho_pow(sn, k - 2);
    double total = 0;
    for (int l = 0; l <= m; ++l) {
      if (only_l >= 0 && l != only_l) continue;
      double t = S[l];
      if (!binomial) t /= binom(m, l);
      total += w * t;
    }
    return total;
  };
  if (k - 2 < 1 && !integer_valued(k)) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(integrand, 0.0, kPi);
  }
  return integrate_gl(integrand, 0.0, kPi, 32);
}

}  // namespace

double boundary_pi_quadrature(const BoundaryManifold& N, const SymTensorField& f, const Vec& y0, const Vec& eta0,
                              double k, bool binomial) {
  return pi_quadrature(N, f, y0, eta0, k, -1, binomial);
}

double boundary_pi_quadrature_l(const BoundaryManifold& N, const SymTensorField& f, const Vec& y0, const Vec& eta0,
                                double k, int l) {
  return pi_quadrature(N, f, y0, eta0, k, l, true);
}

namespace {

void finish_study(LimitStudy& st) {
  st.ext = extrapolate(st.eps, st.scaled, 2);
  st.gap = std::abs(st.ext.value - st.target);
  std::vector<double> lx, ly;
  for (size_t i = 0; i < st.eps.size(); ++i) {
    st.gaps.push_back(std::abs(st.scaled[i] - st.target));
    if (st.gaps.back() > 0) {
      lx.push_back(std::log(st.eps[i]));
      ly.push_back(std::log(st.gaps.back()));
    }
  }
  if (lx.size() >= 3) st.slope = fit_line(lx, ly).slope;
}

}  // namespace

LimitStudy boundary_pi_transform(MetricPtr model, const SymTensorField& f, const Vec& y0, const Vec& eta0, double k,
                                 const std::vector<double>& eps) {
  if (k < 2) fail(ErrorKind::Decay, "boundary pi-transform needs weight k >= 2");
  LimitStudy st;
  st.eps = eps;
  st.target = boundary_pi_quadrature(model->boundary(), f, y0, eta0, k, true);
  const SymTensorField* fp = &f;
  // rho^{k-2} pi^* fbar, fbar evaluated without its own prefactor
  auto g = std::make_shared<SymTensorField>(
      fp->dim(), fp->order(), 0.0, [fp](double r, const Vec& y, bool gr) { return fp->reduced(r, y, gr); });
  Integrand acc = [g, k](const PhasePoint& z, const FieldEval& fe) { return lift(*g, z, fe, k - 2); };
  FlowOptions fo;
  fo.keep_dense = false;
  for (double e : eps) {
    Trajectory tr = trace(model, y0, eta0 / e, {acc}, fo);
    if (!tr.exited()) fail(ErrorKind::Integration, "pi-transform trajectory did not exit");
    st.scaled.push_back(std::pow(e, 1.0 - k) * tr.accumulator(0));
  }
  finish_study(st);
  return st;
}

double boundary_sin_quadrature(const BoundaryManifold& N, const BoundaryFunction& w, const Vec& y0, const Vec& eta0,
                               int j) {
  double e = N.norm(y0, eta0);
  Vec eu = eta0 / e;
  auto g = [&](double s) {
    auto [y, eta] = N.flow(y0, eu, s);
    return std::pow(std::sin(s), j) * w.eval(y).v;
  };
  return integrate_gl(g, 0.0, kPi, 32);
}

std::vector<JetProbeRow> i0_jet_probe(MetricPtr model, const std::vector<std::shared_ptr<const BoundaryFunction>>& jets,
                                      const Vec& y0, const Vec& eta_unit, const std::vector<double>& eps) {
  std::vector<JetProbeRow> rows;
  int J = static_cast<int>(jets.size());
  FlowOptions fo;
  fo.keep_dense = false;
  for (int j = 0; j < J; ++j) {
    JetProbeRow row;
    row.j = j;
    row.study.eps = eps;
    row.study.target = boundary_sin_quadrature(model->boundary(), *jets[j], y0, eta_unit, j);
    // rho^{-2} pi^*(rho^2 sum_{i >= j} fbar_i rho^i) = sum_{i >= j} fbar_i rho^i
    Integrand acc = [&jets, j, J](const PhasePoint& z, const FieldEval&) {
      double s = 0;
      for (int i = J - 1; i >= j; --i) s = s * z.rho + jets[i]->eval(z.y).v;
      return s * rho_pow(z.rho, j);
    };
    for (double e : eps) {
      Trajectory tr = trace(model, y0, eta_unit / e, {acc}, fo);
      if (!tr.exited()) fail(ErrorKind::Integration, "jet-probe trajectory did not exit");
      row.study.scaled.push_back(std::pow(e, -(j + 1.0)) * tr.accumulator(0));
    }
    finish_study(row.study);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace conic

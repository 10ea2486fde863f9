#include "conic_lens/ode.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>

namespace conic {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Stages {
  VecX k2, k3, k4, k5, k6, k7, y1, tmp;
};

void run_stages(const Rhs& f, double t, const VecX& y, const VecX& k1, double h, Stages& s) {
  s.tmp = y + h * a21 * k1;
  f(t + c2 * h, s.tmp, s.k2);
  s.tmp = y + h * (a31 * k1 + a32 * s.k2);
  f(t + c3 * h, s.tmp, s.k3);
  s.tmp = y + h * (a41 * k1 + a42 * s.k2 + a43 * s.k3);
  f(t + c4 * h, s.tmp, s.k4);
  s.tmp = y + h * (a51 * k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4);
  f(t + c5 * h, s.tmp, s.k5);
  s.tmp = y + h * (a61 * k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5);
  f(t + h, s.tmp, s.k6);
  s.y1 = y + h * (b1 * k1 + b3 * s.k3 + b4 * s.k4 + b5 * s.k5 + b6 * s.k6);
  f(t + h, s.y1, s.k7);
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Finished: return "finished";
    case SolveStatus::Event: return "event";
    case SolveStatus::Aborted: return "aborted";
    case SolveStatus::StepUnderflow: return "step-underflow";
    case SolveStatus::TooManySteps: return "too-many-steps";
    case SolveStatus::NonFinite: return "non-finite";
  }
  return "?";
}

VecX DenseStep::eval(double t) const {
  double th = (t - t0) / h, th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

bool DenseStep::contains(double t) const {
  double a = std::min(t0, t1()), b = std::max(t0, t1());
  return t >= a && t <= b;
}

Dopri5::Dopri5(Rhs f, OdeOptions opt) : f_(std::move(f)), opt_(std::move(opt)) {}

void Dopri5::reset(double t0, const VecX& y0, double direction) {
  t_ = t0;
  y_ = y0;
  dir_ = direction >= 0 ? 1.0 : -1.0;
  k1_.resize(y0.size());
  f_(t_, y_, k1_);
  h_ = opt_.h_init > 0 ? opt_.h_init : initial_step();
  n_acc_ = n_rej_ = 0;
}

double Dopri5::initial_step() {
  auto sc = [&](Eigen::Index i, double v) {
    double at = opt_.atol_vec.size() ? opt_.atol_vec(i) : opt_.atol;
    return at + opt_.rtol * std::abs(v);
  };
  Eigen::Index n = y_.size();
  double dn0 = 0, dn1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    dn0 += sqr(y_(i) / sc(i, y_(i)));
    dn1 += sqr(k1_(i) / sc(i, y_(i)));
  }
  dn0 = std::sqrt(dn0 / n);
  dn1 = std::sqrt(dn1 / n);
  double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
  h0 = std::min(h0, opt_.h_max);
  VecX y1 = y_ + dir_ * h0 * k1_, k2(n);
  f_(t_ + dir_ * h0, y1, k2);
  double dn2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) dn2 += sqr((k2(i) - k1_(i)) / sc(i, y_(i)));
  dn2 = std::sqrt(dn2 / n) / h0;
  double mx = std::max(dn1, dn2);
  double h1 = mx <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / mx, 0.2);
  return std::min({100 * h0, h1, opt_.h_max});
}

VecX Dopri5::exact_step(double t0, const VecX& y0, double h) const {
  if (h == 0.0) return y0;
  VecX k1(y0.size());
  f_(t0, y0, k1);
  Stages s;
  run_stages(f_, t0, y0, k1, h, s);
  return s.y1;
}

const DenseStep& Dopri5::step(double t_end) {
  Stages s;
  Eigen::Index n = y_.size();
  bool rejected_before = false;
  for (;;) {
    double remaining = std::abs(t_end - t_);
    double habs = std::min({std::abs(h_), opt_.h_max, remaining});
    bool last = habs >= remaining;
    double h = dir_ * habs;
    run_stages(f_, t_, y_, k1_, h, s);
    VecX err = h * (e1 * k1_ + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
    double en = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double at = opt_.atol_vec.size() ? opt_.atol_vec(i) : opt_.atol;
      double sc = at + opt_.rtol * std::max(std::abs(y_(i)), std::abs(s.y1(i)));
      en += sqr(err(i) / sc);
    }
    en = std::sqrt(en / n);
    bool finite = std::isfinite(en) && s.y1.allFinite();
    bool ok = finite && en <= 1.0 && (!accept_hook || accept_hook(y_, s.y1, h));
    if (ok) {
      last_.t0 = t_;
      last_.h = h;
      last_.r1 = y_;
      last_.r2 = s.y1 - y_;
      last_.r3 = h * k1_ - last_.r2;
      last_.r4 = last_.r2 - h * s.k7 - last_.r3;
      last_.r5 = h * (d1 * k1_ + d3 * s.k3 + d4 * s.k4 + d5 * s.k5 + d6 * s.k6 + d7 * s.k7);
      t_ = last ? t_end : t_ + h;
      y_ = s.y1;
      k1_ = s.k7;
      ++n_acc_;
      double fac = en > 0 ? 0.9 * std::pow(en, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, rejected_before ? 1.0 : 5.0);
      // keep the controller step when the step was truncated to hit t_end
      h_ = (last && habs < std::abs(h_)) ? h_ : habs * fac;
      return last_;
    }
    ++n_rej_;
    rejected_before = true;
    double fac = (finite && en > 0) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.2;
    if (finite && en <= 1.0) fac = 0.5;  // rejected by the hook
    h_ = habs * fac;
    if (h_ < opt_.h_min * std::max(1.0, std::abs(t_))) {
      throw Error(finite ? ErrorKind::Integration : ErrorKind::Integration,
                  finite ? "step size underflow" : "non-finite state during integration");
    }
  }
}

EventHit refine_event(const Dopri5& rk, const Event& ev, int index, const DenseStep& seg, double t_guess) {
  double t = t_guess;
  VecX y = rk.exact_step(seg.t0, seg.r1, t - seg.t0), dy(y.size());
  for (int it = 0; it < 8 && ev.dg; ++it) {
    rk.eval_rhs(t, y, dy);
    double der = ev.dg(t, y, dy);
    if (der == 0.0 || !std::isfinite(der)) break;
    double delta = ev.g(t, y) / der;
    t -= delta;
    y = rk.exact_step(seg.t0, seg.r1, t - seg.t0);
    if (std::abs(delta) <= 4e-16 * std::max(1.0, std::abs(t))) break;
  }
  return {index, t, y};
}

const DenseStep& Solution::segment(double t) const {
  if (steps.empty()) fail(ErrorKind::Domain, "no dense output stored");
  bool fwd = steps.front().h > 0;
  auto it = std::lower_bound(steps.begin(), steps.end(), t, [&](const DenseStep& s, double v) {
    return fwd ? s.t1() < v : s.t1() > v;
  });
  if (it == steps.end()) {
    const DenseStep& l = steps.back();
    if (std::abs(t - l.t1()) <= 1e-12 * std::max(1.0, std::abs(t))) return l;
    fail(ErrorKind::Domain, "time outside of the integrated range");
  }
  return *it;
}

VecX Solution::at(double t) const { return segment(t).eval(t); }

Solution solve(const Rhs& f, const SolveRequest& req, const OdeOptions& opt) {
  Solution sol;
  double dir = req.t_end >= req.t0 ? 1.0 : -1.0;
  Dopri5 rk(f, opt);
  rk.accept_hook = req.accept_hook;
  rk.reset(req.t0, req.y0, dir);
  std::vector<double> stops = req.stops;
  std::sort(stops.begin(), stops.end(), [&](double a, double b) { return dir > 0 ? a < b : a > b; });
  size_t next_stop = 0;
  while (next_stop < stops.size() && dir * (stops[next_stop] - req.t0) <= 0) {
    if (stops[next_stop] == req.t0) sol.stops.emplace_back(req.t0, req.y0);
    ++next_stop;
  }
  std::vector<double> g0(req.events.size());
  for (size_t e = 0; e < req.events.size(); ++e) g0[e] = req.events[e].g(req.t0, req.y0);

  long steps = 0;
  for (;;) {
    double target = next_stop < stops.size() ? stops[next_stop] : req.t_end;
    if (dir * (target - req.t_end) > 0) target = req.t_end;
    const DenseStep* seg;
    try {
      seg = &rk.step(target);
    } catch (const Error& e) {
      sol.status = std::string(e.what()).find("non-finite") != std::string::npos ? SolveStatus::NonFinite
                                                                                   : SolveStatus::StepUnderflow;
      break;
    }
    if (req.keep_dense) sol.steps.push_back(*seg);
    ++steps;

    // events
    int term_idx = -1;
    double term_t = 0;
    std::vector<EventHit> soft;
    for (size_t e = 0; e < req.events.size(); ++e) {
      const Event& ev = req.events[e];
      double g1 = ev.g(rk.t(), rk.y());
      double ga = g0[e];
      bool cross = false;
      if (ev.direction <= 0 && ga > 0 && g1 <= 0) cross = true;
      if (ev.direction >= 0 && ga < 0 && g1 >= 0) cross = true;
      g0[e] = g1;
      if (!cross) continue;
      auto gfun = [&](double th) { return ev.g(seg->t0 + th * seg->h, seg->eval(seg->t0 + th * seg->h)); };
      double th;
      double fa = gfun(0.0), fb = gfun(1.0);
      if (fb == 0.0) {
        th = 1.0;
      } else if (fa * fb > 0) {
        th = 1.0;
      } else {
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(gfun, 0.0, 1.0, fa, fb, boost::math::tools::eps_tolerance<double>(50),
                                                   iters);
        th = 0.5 * (r.first + r.second);
      }
      EventHit hit = refine_event(rk, ev, static_cast<int>(e), *seg, seg->t0 + th * seg->h);
      if (ev.terminal) {
        if (term_idx < 0 || dir * (hit.t - term_t) < 0) {
          term_idx = static_cast<int>(e);
          term_t = hit.t;
          soft.insert(soft.begin(), hit);
        }
      } else {
        sol.hits.push_back(hit);
      }
    }
    if (term_idx >= 0) {
      for (const auto& h : soft)
        if (h.index == term_idx) {
          sol.hits.push_back(h);
          sol.t_end = h.t;
          sol.y_end = h.y;
        }
      // drop non-terminal hits past the terminal time
      std::erase_if(sol.hits, [&](const EventHit& h) { return dir * (h.t - sol.t_end) > 0; });
      std::sort(sol.hits.begin(), sol.hits.end(),
                [&](const EventHit& a, const EventHit& b) { return dir * (a.t - b.t) < 0; });
      // stops passed before the event
      while (next_stop < stops.size() && rk.t() == stops[next_stop] && dir * (stops[next_stop] - sol.t_end) <= 0) {
        sol.stops.emplace_back(rk.t(), rk.y());
        ++next_stop;
      }
      sol.status = SolveStatus::Event;
      sol.accepted = rk.accepted();
      sol.rejected = rk.rejected();
      return sol;
    }
    if (next_stop < stops.size() && rk.t() == stops[next_stop]) {
      sol.stops.emplace_back(rk.t(), rk.y());
      ++next_stop;
    }
    if (rk.t() == req.t_end) {
      sol.status = SolveStatus::Finished;
      break;
    }
    if (req.keep_going && !req.keep_going(rk.t(), rk.y())) {
      sol.status = SolveStatus::Aborted;
      break;
    }
    if (steps >= opt.max_steps) {
      sol.status = SolveStatus::TooManySteps;
      break;
    }
  }
  sol.t_end = rk.t();
  sol.y_end = rk.y();
  sol.accepted = rk.accepted();
  sol.rejected = rk.rejected();
  return sol;
}

}  // namespace conic

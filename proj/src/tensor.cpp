#include "conic_lens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conic_lens/curvature.hpp"
#include "conic_lens/ode.hpp"

namespace conic {

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void decode(int flat, int n, int m, int* idx) {
  for (int j = m - 1; j >= 0; --j) {
    idx[j] = flat % n;
    flat /= n;
  }
}

}  // namespace

TensorJet TensorJet::zero(int n, int m) {
  TensorJet t;
  t.n = n;
  t.m = m;
  return t;
}

int TensorJet::size() const { return ipow(n, m); }

int TensorJet::index(int n, const int* idx, int m) {
  int k = 0;
  for (int j = 0; j < m; ++j) k = k * n + idx[j];
  return k;
}

TensorJet symmetrize(const TensorJet& t) {
  TensorJet s = TensorJet::zero(t.n, t.m);
  s.has_grad = t.has_grad;
  int N = t.size();
  std::array<int, 4> perm{0, 1, 2, 3};
  int nperm = 0;
  int idx[4], pidx[4];
  std::array<int, 4> p = perm;
  std::vector<std::array<int, 4>> perms;
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.begin() + t.m));
  nperm = static_cast<int>(perms.size());
  for (int k = 0; k < N; ++k) {
    decode(k, t.n, t.m, idx);
    double acc = 0;
    std::array<double, 3> g{0, 0, 0};
    for (const auto& q : perms) {
      for (int j = 0; j < t.m; ++j) pidx[j] = idx[q[j]];
      int kk = TensorJet::index(t.n, pidx, t.m);
      acc += t.v[kk];
      for (int c = 0; c < 3; ++c) g[c] += t.dv[kk][c];
    }
    s.v[k] = acc / nperm;
    for (int c = 0; c < 3; ++c) s.dv[k][c] = g[c] / nperm;
  }
  return s;
}

SymTensorField::SymTensorField(int n, int m, double p, Eval reduced, std::string name)
    : n_(n), m_(m), p_(p), F_(std::move(reduced)), name_(std::move(name)) {
  if (m < 0 || m > 4 || n < 2 || n > 3) fail(ErrorKind::Config, "tensor order/dimension out of range");
}

TensorJet SymTensorField::eval(double rho, const Vec& y, bool grad) const {
  TensorJet F = F_(rho, y, grad);
  if (p_ == 0.0) return F;
  double P = rho_pow(rho, p_), Pd = p_ * rho_pow(rho, p_ - 1);
  int N = F.size();
  for (int k = 0; k < N; ++k) {
    if (grad) {
      F.dv[k][0] = Pd * F.v[k] + P * F.dv[k][0];
      for (int c = 1; c < n_; ++c) F.dv[k][c] *= P;
    }
    F.v[k] *= P;
  }
  return F;
}

TensorFieldPtr scalar_times_constant(ScalarFieldPtr s, int n, int m, const TensorJet& C, double p, std::string name) {
  TensorJet Cs = symmetrize(C);
  auto F = [s, Cs, n, m](double rho, const Vec& y, bool grad) {
    TensorJet t = TensorJet::zero(n, m);
    ScalarJet j = s->eval(rho, y);
    int N = t.size();
    t.has_grad = grad;
    for (int k = 0; k < N; ++k) {
      t.v[k] = j.v * Cs.v[k];
      if (grad)
        for (int c = 0; c < n; ++c) t.dv[k][c] = j.g(c) * Cs.v[k];
    }
    return t;
  };
  return std::make_shared<SymTensorField>(n, m, p, F, std::move(name));
}

TensorFieldPtr collar_tensor(std::shared_ptr<const BoundaryFunction> w, int n, int m, const TensorJet& C, double p,
                             std::string name) {
  TensorJet Cs = symmetrize(C);
  auto F = [w, Cs, n, m](double, const Vec& y, bool grad) {
    TensorJet t = TensorJet::zero(n, m);
    ScalarJet j = w->eval(y);
    int N = t.size();
    t.has_grad = grad;
    for (int k = 0; k < N; ++k) {
      t.v[k] = j.v * Cs.v[k];
      if (grad)
        for (int c = 1; c < n; ++c) t.dv[k][c] = j.g(c - 1) * Cs.v[k];
    }
    return t;
  };
  return std::make_shared<SymTensorField>(n, m, p, F, std::move(name));
}

TensorFieldPtr combine(double a, TensorFieldPtr f, double b, TensorFieldPtr g) {
  if (f->order() != g->order() || f->dim() != g->dim()) fail(ErrorKind::Config, "combining tensors of different type");
  double p = std::min(f->prefactor(), g->prefactor());
  double pf = f->prefactor() - p, pg = g->prefactor() - p;
  auto F = [a, b, f, g, pf, pg](double rho, const Vec& y, bool grad) {
    TensorJet tf = f->reduced(rho, y, grad), tg = g->reduced(rho, y, grad);
    double Pf = rho_pow(rho, pf), Pg = rho_pow(rho, pg);
    double Pfd = pf != 0 ? pf * rho_pow(rho, pf - 1) : 0.0, Pgd = pg != 0 ? pg * rho_pow(rho, pg - 1) : 0.0;
    TensorJet t = tf;
    int N = t.size();
    for (int k = 0; k < N; ++k) {
      t.v[k] = a * Pf * tf.v[k] + b * Pg * tg.v[k];
      if (grad) {
        t.dv[k][0] = a * (Pfd * tf.v[k] + Pf * tf.dv[k][0]) + b * (Pgd * tg.v[k] + Pg * tg.dv[k][0]);
        for (int c = 1; c < 3; ++c) t.dv[k][c] = a * Pf * tf.dv[k][c] + b * Pg * tg.dv[k][c];
      }
    }
    return t;
  };
  auto out = std::make_shared<SymTensorField>(f->dim(), f->order(), p, F, f->name() + "+" + g->name());
  out->zero_at_boundary = f->zero_at_boundary || g->zero_at_boundary;
  return out;
}

double lift(const SymTensorField& f, const PhasePoint& z, const FieldEval& fe, double shift) {
  int n = f.dim(), m = f.order();
  double rho = z.rho;
  if (f.zero_at_boundary && rho <= 0) return 0.0;
  TensorJet F = f.reduced(rho, z.y, false);
  // v = (v0, rho w): group components by the number l of transversal slots.
  double v0 = fe.drho;
  std::array<double, 5> S{0, 0, 0, 0, 0};
  int N = F.size();
  int idx[4];
  for (int k = 0; k < N; ++k) {
    if (F.v[k] == 0.0) continue;
    decode(k, n, m, idx);
    double prod = F.v[k];
    int l = 0;
    for (int j = 0; j < m; ++j) {
      if (idx[j] == 0) {
        prod *= v0;
        ++l;
      } else {
        prod *= fe.dy(idx[j] - 1);
      }
    }
    S[l] += prod;
  }
  double total = 0;
  for (int l = 0; l <= m; ++l) {
    if (S[l] == 0.0) continue;
    double e = f.prefactor() + (m - l) + shift;
    if (rho > 0) {
      total += S[l] * std::pow(rho, e);
    } else if (e == 0) {
      total += S[l];
    } else if (e < 0 && rho == 0) {
      fail(ErrorKind::Decay, "tensor " + f.name() + " decays too slowly for this lift weight");
    } else if (e < 0) {
      total += S[l] * rho_pow(rho, e);
    } else {
      total += S[l] * rho_pow(rho, e);
    }
  }
  return total;
}

TensorFieldPtr sym_derivative(MetricPtr model, TensorFieldPtr u) {
  int n = u->dim(), q = u->order(), m = q + 1;
  if (m > 4) fail(ErrorKind::Config, "D of a 4-tensor is not supported");
  auto F = [model, u, n, q, m](double rho, const Vec& y, bool grad) {
    if (grad) fail(ErrorKind::Config, "gradients of D u are not available");
    TensorJet out = TensorJet::zero(n, m);
    if (rho <= 0) return out;
    TensorJet U = u->eval(rho, y, true);
    if (!U.has_grad) fail(ErrorKind::Config, "D u needs gradients of u");
    std::array<Mat, 3> G = christoffel(model->coordinate_jet(rho, y));
    auto ex = [](int i) { return i == 0 ? -2.0 : -1.0; };
    int Nq = ipow(n, q);
    // coordinate components u_I = U_I s_I and their derivatives
    std::array<double, 27> uc{};
    std::array<std::array<double, 3>, 27> duc{};
    int idx[4];
    for (int k = 0; k < Nq; ++k) {
      decode(k, n, q, idx);
      double e = 0;
      for (int j = 0; j < q; ++j) e += ex(idx[j]);
      double s = std::pow(rho, e);
      uc[k] = U.v[k] * s;
      for (int c = 0; c < n; ++c) duc[k][c] = U.dv[k][c] * s;
      duc[k][0] += U.v[k] * e * s / rho;
    }
    // nabla_c u_I
    auto nabla = [&](int c, const int* I) {
      int k = TensorJet::index(n, I, q);
      double val = duc[k][c];
      int J[4];
      for (int j = 0; j < q; ++j) {
        std::copy(I, I + q, J);
        for (int l = 0; l < n; ++l) {
          J[j] = l;
          val -= G[l](c, I[j]) * uc[TensorJet::index(n, J, q)];
        }
      }
      return val;
    };
    int Nm = ipow(n, m);
    int full[4], rest[4];
    for (int k = 0; k < Nm; ++k) {
      decode(k, n, m, full);
      double acc = 0;
      for (int p = 0; p < m; ++p) {
        int r = 0;
        for (int j = 0; j < m; ++j)
          if (j != p) rest[r++] = full[j];
        acc += nabla(full[p], rest);
      }
      double e = 0;
      for (int j = 0; j < m; ++j) e += ex(full[j]);
      out.v[k] = acc / m / std::pow(rho, e);
    }
    return out;
  };
  auto out = std::make_shared<SymTensorField>(n, m, 0.0, F, "D(" + u->name() + ")");
  out->zero_at_boundary = true;
  return out;
}

namespace {

// Solves the rho-ODE for the gauge potential at fixed y from 0 to rho.
// State: q0, d_y q0 (d), and for m = 2 also W = rho^2 w (d).
struct GaugeSolver {
  MetricPtr model;
  TensorFieldPtr f;
  int n, d, m;

  VecX rhs_at(double s, const Vec& y, const VecX& st) const {
    VecX ds = VecX::Zero(st.size());
    TensorJet F = f->reduced(s, y, true);
    double p = f->prefactor();
    double w2 = rho_pow(s, p - 2);
    ds(0) = w2 * F.v[0];
    for (int a = 0; a < d; ++a) ds(1 + a) = w2 * F.dv[0][1 + a];
    if (m == 2) {
      CollarData c = model->collar(s, y);
      Mat S = c.hinv * c.h_r;
      Vec W = st.segment(1 + d, d);
      Vec rhs = S.transpose() * W;
      double w1 = rho_pow(s, p - 1);
      for (int a = 0; a < d; ++a) rhs(a) += 2.0 * w1 * F.v[1 + a] - st(1 + a);
      ds.segment(1 + d, d) = rhs;
    }
    return ds;
  }

  VecX solve_to(double rho, const Vec& y) const {
    int size = 1 + d + (m == 2 ? d : 0);
    VecX z = VecX::Zero(size);
    if (rho <= 0) return z;
    Rhs rhs = [this, y](double s, const VecX& st, VecX& ds) { ds = rhs_at(s, y, st); };
    SolveRequest req;
    req.t0 = 0;
    req.y0 = z;
    req.t_end = rho;
    req.keep_dense = false;
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-16;
    Solution s = solve(rhs, req, o);
    if (s.status != SolveStatus::Finished) fail(ErrorKind::Integration, "gauge ODE failed");
    return s.y_end;
  }
};

}  // namespace

GaugeResult gauge_normalize(MetricPtr model, TensorFieldPtr f) {
  int m = f->order(), n = f->dim(), d = n - 1;
  if (m != 1 && m != 2) fail(ErrorKind::Config, "gauge normalization implemented for m = 1, 2");
  if (f->prefactor() < 2) fail(ErrorKind::Decay, "gauge normalization needs f in rho^k C^inf with k >= 2");
  auto solver = std::make_shared<GaugeSolver>(GaugeSolver{model, f, n, d, m});
  GaugeResult res;
  res.m = m;
  auto U = [solver, n, d, m, f](double rho, const Vec& y, bool grad) {
    TensorJet t = TensorJet::zero(n, m - 1);
    t.has_grad = grad;
    if (rho <= 0) return t;
    VecX st = solver->solve_to(rho, y);
    if (m == 1) {
      t.v[0] = st(0);
      if (grad) {
        t.dv[0][0] = solver->rhs_at(rho, y, st)(0);
        for (int a = 0; a < d; ++a) t.dv[0][1 + a] = st(1 + a);
      }
      return t;
    }
    // u = q0 e^0 + sum_a (W_a / rho) e^a
    t.v[0] = st(0);
    for (int a = 0; a < d; ++a) t.v[1 + a] = st(1 + d + a) / rho;
    if (grad) {
      VecX ds = solver->rhs_at(rho, y, st);
      t.dv[0][0] = ds(0);
      for (int a = 0; a < d; ++a) t.dv[0][1 + a] = st(1 + a);
      for (int b = 0; b < d; ++b) t.dv[1 + b][0] = ds(1 + d + b) / rho - st(1 + d + b) / (rho * rho);
      const double h = 1e-5;
      for (int a = 0; a < d; ++a) {
        Vec yp = y, ym = y;
        yp(a) += h;
        ym(a) -= h;
        VecX sp = solver->solve_to(rho, yp), sm = solver->solve_to(rho, ym);
        for (int b = 0; b < d; ++b) t.dv[1 + b][1 + a] = (sp(1 + d + b) - sm(1 + d + b)) / (2 * h * rho);
      }
    }
    return t;
  };
  auto u = std::make_shared<SymTensorField>(n, m - 1, 0.0, U, "gauge(" + f->name() + ")");
  u->zero_at_boundary = true;
  res.potential = u;
  TensorFieldPtr Du = sym_derivative(model, u);
  res.residual = combine(1.0, f, -1.0, Du);
  return res;
}

double GaugeResult::transversal_residual(const std::vector<double>& rhos, const std::vector<Vec>& ys) const {
  double worst = 0;
  for (double r : rhos)
    for (const Vec& y : ys) {
      TensorJet t = residual->eval(r, y, false);
      int n = t.n;
      if (m == 1) {
        worst = std::max(worst, std::abs(t.v[0]));
      } else {
        worst = std::max(worst, std::abs(t.v[0]));
        for (int b = 1; b < n; ++b) worst = std::max(worst, std::abs(t.v[b]));
      }
    }
  return worst;
}

}  // namespace conic

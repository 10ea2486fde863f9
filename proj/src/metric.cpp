#include "conic_lens/metric.hpp"

#include <cmath>

namespace conic {

namespace {

CollarData empty_collar(int d) {
  CollarData c;
  c.h = c.hinv = c.h_r = c.h_rr = Mat::Zero(d, d);
  for (auto& m : c.h_y) m = Mat::Zero(d, d);
  for (auto& m : c.h_ry) m = Mat::Zero(d, d);
  for (auto& r : c.h_yy)
    for (auto& m : r) m = Mat::Zero(d, d);
  return c;
}

CoordinateJet empty_jet(int n) {
  CoordinateJet j;
  j.g = Mat::Zero(n, n);
  for (auto& m : j.dg) m = Mat::Zero(n, n);
  for (auto& r : j.ddg)
    for (auto& m : r) m = Mat::Zero(n, n);
  return j;
}

BoundaryJet empty_bjet(int d) {
  BoundaryJet j;
  j.v = Mat::Zero(d, d);
  for (auto& m : j.d) m = Mat::Zero(d, d);
  for (auto& r : j.dd)
    for (auto& m : r) m = Mat::Zero(d, d);
  return j;
}

}  // namespace

CoordinateJet coordinate_from_collar(double rho, const CollarData& c) {
  int d = static_cast<int>(c.h.rows()), n = d + 1;
  CoordinateJet j = empty_jet(n);
  double r2 = rho * rho, r3 = r2 * rho, r4 = r3 * rho;
  j.g(0, 0) = 1.0 / r4;
  j.g.block(1, 1, d, d) = c.h / r2;
  j.dg[0](0, 0) = -4.0 / (r4 * rho);
  j.dg[0].block(1, 1, d, d) = c.h_r / r2 - 2.0 * c.h / r3;
  j.ddg[0][0](0, 0) = 20.0 / (r4 * r2);
  j.ddg[0][0].block(1, 1, d, d) = c.h_rr / r2 - 4.0 * c.h_r / r3 + 6.0 * c.h / r4;
  for (int a = 0; a < d; ++a) {
    j.dg[1 + a].block(1, 1, d, d) = c.h_y[a] / r2;
    Mat mixed = c.h_ry[a] / r2 - 2.0 * c.h_y[a] / r3;
    j.ddg[0][1 + a].block(1, 1, d, d) = mixed;
    j.ddg[1 + a][0].block(1, 1, d, d) = mixed;
    for (int b = 0; b < d; ++b) j.ddg[1 + a][1 + b].block(1, 1, d, d) = c.h_yy[a][b] / r2;
  }
  return j;
}

ReducedInverse reduced_from_coordinate(double rho, const CoordinateJet& jet) {
  int n = static_cast<int>(jet.g.rows()), d = n - 1;
  Mat Gi = jet.g.inverse();
  ReducedInverse r;
  r.M = Mat::Zero(n, n);
  double r2 = rho * rho, r4 = r2 * r2, r6 = r4 * r2;
  r.M(0, 0) = (Gi(0, 0) - r4) / r6;
  for (int a = 0; a < d; ++a) r.M(0, 1 + a) = r.M(1 + a, 0) = Gi(0, 1 + a) / r4;
  r.M.block(1, 1, d, d) = Gi.block(1, 1, d, d) / r2;
  for (int k = 0; k < n; ++k) {
    Mat dGi = -Gi * jet.dg[k] * Gi;
    Mat& dM = r.dM[k];
    dM = Mat::Zero(n, n);
    dM(0, 0) = dGi(0, 0) / r6;
    for (int a = 0; a < d; ++a) dM(0, 1 + a) = dM(1 + a, 0) = dGi(0, 1 + a) / r4;
    dM.block(1, 1, d, d) = dGi.block(1, 1, d, d) / r2;
    if (k == 0) {
      dM(0, 0) += -4.0 * rho * r2 / r6 - 6.0 * (Gi(0, 0) - r4) / (r6 * rho);
      for (int a = 0; a < d; ++a) {
        double v = -4.0 * Gi(0, 1 + a) / (r4 * rho);
        dM(0, 1 + a) += v;
        dM(1 + a, 0) += v;
      }
      dM.block(1, 1, d, d) += -2.0 * Gi.block(1, 1, d, d) / (r2 * rho);
    }
  }
  for (int k = n; k < 3; ++k) r.dM[k] = Mat::Zero(n, n);
  return r;
}

ReducedInverse MetricModel::reduced_inverse(double rho, const Vec& y) const {
  CollarData c = collar(rho, y);
  int d = N_.dim(), n = d + 1;
  ReducedInverse r;
  r.M = Mat::Zero(n, n);
  r.M.block(1, 1, d, d) = c.hinv;
  for (auto& m : r.dM) m = Mat::Zero(n, n);
  r.dM[0].block(1, 1, d, d) = -c.hinv * c.h_r * c.hinv;
  for (int a = 0; a < d; ++a) r.dM[1 + a].block(1, 1, d, d) = -c.hinv * c.h_y[a] * c.hinv;
  return r;
}

CoordinateJet MetricModel::coordinate_jet(double rho, const Vec& y) const {
  if (!(rho > 0)) fail(ErrorKind::Domain, "coordinate metric needs rho > 0");
  return coordinate_from_collar(rho, collar(rho, y));
}

BoundaryJet MetricModel::dual_jet(int j, const Vec& y) const {
  (void)j;
  (void)y;
  fail(ErrorKind::Config, family() + ": dual jets not available");
}

// --- boundary tensors ---

BoundaryJet ConformalBoundaryTensor::eval(const Vec& y) const {
  BoundaryJet h = N_.metric_jet(y);
  ScalarJet w = w_->eval(y);
  int d = N_.dim();
  BoundaryJet P = empty_bjet(d);
  P.v = w.v * h.v;
  for (int a = 0; a < d; ++a) {
    P.d[a] = w.g(a) * h.v + w.v * h.d[a];
    for (int b = 0; b < d; ++b)
      P.dd[a][b] = w.H(a, b) * h.v + w.g(a) * h.d[b] + w.g(b) * h.d[a] + w.v * h.dd[a][b];
  }
  return P;
}

BoundaryJet ConstantBoundaryTensor::eval(const Vec& y) const {
  ScalarJet w = w_->eval(y);
  int d = static_cast<int>(B_.rows());
  BoundaryJet P = empty_bjet(d);
  P.v = w.v * B_;
  for (int a = 0; a < d; ++a) {
    P.d[a] = w.g(a) * B_;
    for (int b = 0; b < d; ++b) P.dd[a][b] = w.H(a, b) * B_;
  }
  return P;
}

// --- exact cone ---

CollarData ExactCone::collar(double rho, const Vec& y) const {
  (void)rho;
  int d = N_.dim();
  CollarData c = empty_collar(d);
  BoundaryJet h = N_.metric_jet(y);
  c.h = h.v;
  c.hinv = N_.inverse_metric(y);
  for (int a = 0; a < d; ++a) {
    c.h_y[a] = h.d[a];
    for (int b = 0; b < d; ++b) c.h_yy[a][b] = h.dd[a][b];
  }
  return c;
}

BoundaryJet ExactCone::dual_jet(int j, const Vec& y) const {
  if (j == 0) return N_.inverse_jet(y);
  return empty_bjet(N_.dim());
}

// --- warped product ---

WarpedProduct::WarpedProduct(WarpedProfile f, BoundaryManifold base)
    : MetricModel(base.scaled(f.tail_slope())), f_(std::move(f)), base_(base) {}

CollarData WarpedProduct::collar(double rho, const Vec& y) const {
  int d = base_.dim();
  CollarData c = empty_collar(d);
  ProfileJet p = f_.eval_rho(rho);
  BoundaryJet hb = base_.metric_jet(y);
  double ph2 = p.f * p.f;
  c.h = ph2 * hb.v;
  c.hinv = base_.inverse_metric(y) / ph2;
  c.h_r = 2.0 * p.f * p.df * hb.v;
  c.h_rr = 2.0 * (p.df * p.df + p.f * p.d2f) * hb.v;
  for (int a = 0; a < d; ++a) {
    c.h_y[a] = ph2 * hb.d[a];
    c.h_ry[a] = 2.0 * p.f * p.df * hb.d[a];
    for (int b = 0; b < d; ++b) c.h_yy[a][b] = ph2 * hb.dd[a][b];
  }
  return c;
}

BoundaryJet WarpedProduct::dual_jet(int j, const Vec& y) const {
  // 1/(a + b rho)^2 = a^{-2} sum_j (j+1) (-b/a)^j rho^j on the tail.
  double a = f_.tail_slope(), b = f_.tail_intercept();
  double coef = (j + 1) * std::pow(-b / a, j) / (a * a);
  BoundaryJet hb = base_.inverse_jet(y);
  BoundaryJet out = empty_bjet(base_.dim());
  out.v = coef * hb.v;
  for (int k = 0; k < base_.dim(); ++k) out.d[k] = coef * hb.d[k];
  return out;
}

// --- perturbed conic ---

PerturbedConic::PerturbedConic(BoundaryManifold N, int m, std::shared_ptr<const BoundaryTensor> P, double r1, double r2)
    : MetricModel(N), m_(m), P_(std::move(P)), r1_(r1), r2_(r2) {
  if (m < 1) fail(ErrorKind::Config, "perturbation order must be >= 1");
  if (!(r2 > r1 && r1 > 0)) fail(ErrorKind::Config, "perturbation cutoff needs 0 < r1 < r2");
}

CollarData PerturbedConic::collar(double rho, const Vec& y) const {
  int d = N_.dim();
  CollarData c = empty_collar(d);
  BoundaryJet h0 = N_.metric_jet(y);
  Jet1D chi = smooth_cutoff(rho, r1_, r2_);
  double rm = std::pow(rho, m_);
  double rm1 = m_ >= 1 ? m_ * std::pow(rho, m_ - 1) : 0.0;
  double rm2 = m_ >= 2 ? m_ * (m_ - 1) * std::pow(rho, m_ - 2) : 0.0;
  double s = rm * chi.v, sd = rm1 * chi.v + rm * chi.d1, sdd = rm2 * chi.v + 2 * rm1 * chi.d1 + rm * chi.d2;
  BoundaryJet P = P_->eval(y);
  c.h = h0.v + s * P.v;
  c.hinv = c.h.inverse();
  c.h_r = sd * P.v;
  c.h_rr = sdd * P.v;
  for (int a = 0; a < d; ++a) {
    c.h_y[a] = h0.d[a] + s * P.d[a];
    c.h_ry[a] = sd * P.d[a];
    for (int b = 0; b < d; ++b) c.h_yy[a][b] = h0.dd[a][b] + s * P.dd[a][b];
  }
  return c;
}

BoundaryJet PerturbedConic::dual_jet(int j, const Vec& y) const {
  int d = N_.dim();
  BoundaryJet out = empty_bjet(d);
  if (j % m_ != 0) return out;
  int k = j / m_;
  // (h0 + rho^m P)^{-1} = sum_k (-rho^m)^k (h0^{-1} P)^k h0^{-1}
  BoundaryJet hi = N_.inverse_jet(y);
  BoundaryJet P = P_->eval(y);
  Mat Q = hi.v * P.v;
  std::vector<Mat> pw(k + 1);
  pw[0] = Mat::Identity(d, d);
  for (int i = 1; i <= k; ++i) pw[i] = pw[i - 1] * Q;
  double sign = (k % 2 == 0) ? 1.0 : -1.0;
  out.v = sign * pw[k] * hi.v;
  for (int a = 0; a < d; ++a) {
    Mat dQ = hi.d[a] * P.v + hi.v * P.d[a];
    Mat acc = pw[k] * hi.d[a];
    for (int i = 0; i < k; ++i) acc += pw[i] * dQ * pw[k - 1 - i] * hi.v;
    out.d[a] = sign * acc;
  }
  return out;
}

// --- interior decorators ---

bool InteriorDecorator::normal_form_at(double rho, const Vec& y) const {
  return !inside(rho) && base_->normal_form_at(rho, y);
}

CollarData InteriorDecorator::collar(double rho, const Vec& y) const {
  if (inside(rho)) fail(ErrorKind::Domain, family() + ": not in normal form inside the bump support");
  return base_->collar(rho, y);
}

ReducedInverse InteriorDecorator::reduced_inverse(double rho, const Vec& y) const {
  if (!inside(rho)) return base_->reduced_inverse(rho, y);
  return reduced_from_coordinate(rho, coordinate_jet(rho, y));
}

CoordinateJet ConformalBump::coordinate_jet(double rho, const Vec& y) const {
  CoordinateJet b = base_->coordinate_jet(rho, y);
  if (!inside(rho)) return b;
  ScalarJet sg = chi_->eval(rho, y);
  int n = dim();
  double E = std::exp(2.0 * s_ * sg.v);
  Vec ds = s_ * sg.g;
  Mat dds = s_ * sg.H;
  CoordinateJet j;
  j.g = E * b.g;
  for (int k = 0; k < 3; ++k) {
    if (k >= n) {
      j.dg[k] = Mat::Zero(n, n);
      for (auto& m : j.ddg[k]) m = Mat::Zero(n, n);
      continue;
    }
    j.dg[k] = E * (2.0 * ds(k) * b.g + b.dg[k]);
    for (int l = 0; l < 3; ++l) {
      if (l >= n) {
        j.ddg[k][l] = Mat::Zero(n, n);
        continue;
      }
      j.ddg[k][l] = E * ((4.0 * ds(k) * ds(l) + 2.0 * dds(k, l)) * b.g + 2.0 * ds(k) * b.dg[l] +
                         2.0 * ds(l) * b.dg[k] + b.ddg[k][l]);
    }
  }
  return j;
}

CoordinateJet TensorBump::q_jet(double rho, const Vec& y) const {
  int n = dim();
  ScalarJet c = chi_->eval(rho, y);
  CoordinateJet q = empty_jet(n);
  if (mode_ == Mode::Conformal) {
    CoordinateJet b = base_->coordinate_jet(rho, y);
    q.g = c.v * b.g;
    for (int k = 0; k < n; ++k) {
      q.dg[k] = c.g(k) * b.g + c.v * b.dg[k];
      for (int l = 0; l < n; ++l)
        q.ddg[k][l] = c.H(k, l) * b.g + c.g(k) * b.dg[l] + c.g(l) * b.dg[k] + c.v * b.ddg[k][l];
    }
    return q;
  }
  auto ex = [](int i) { return i == 0 ? -2.0 : -1.0; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double e = ex(i) + ex(j);
      double P = std::pow(rho, e), Pd = e * std::pow(rho, e - 1), Pdd = e * (e - 1) * std::pow(rho, e - 2);
      double Qij = Q_(i, j);
      q.g(i, j) = Qij * c.v * P;
      for (int k = 0; k < n; ++k) {
        q.dg[k](i, j) = Qij * (c.g(k) * P + (k == 0 ? c.v * Pd : 0.0));
        for (int l = 0; l < n; ++l) {
          double v = c.H(k, l) * P;
          if (l == 0) v += c.g(k) * Pd;
          if (k == 0) v += c.g(l) * Pd;
          if (k == 0 && l == 0) v += c.v * Pdd;
          q.ddg[k][l](i, j) = Qij * v;
        }
      }
    }
  return q;
}

CoordinateJet TensorBump::coordinate_jet(double rho, const Vec& y) const {
  CoordinateJet b = base_->coordinate_jet(rho, y);
  if (!inside(rho)) return b;
  CoordinateJet q = q_jet(rho, y);
  int n = dim();
  b.g += s_ * q.g;
  for (int k = 0; k < n; ++k) {
    b.dg[k] += s_ * q.dg[k];
    for (int l = 0; l < n; ++l) b.ddg[k][l] += s_ * q.ddg[k][l];
  }
  return b;
}

Mat TensorBump::perturbation_frame(double rho, const Vec& y) const {
  int n = dim();
  if (!inside(rho)) return Mat::Zero(n, n);
  double c = chi_->eval(rho, y).v;
  if (mode_ == Mode::FrameConstant) return c * Q_;
  CoordinateJet b = base_->coordinate_jet(rho, y);
  Mat S = Mat::Zero(n, n);
  S(0, 0) = rho * rho;
  for (int a = 1; a < n; ++a) S(a, a) = rho;
  return c * S * b.g * S;
}

TensorBump TensorBump::with_scale(double s) const {
  TensorBump t = *this;
  t.s_ = s;
  return t;
}

}  // namespace conic

#include "conic_lens/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// omega(y) on the unit circle/sphere with first and second derivatives.
struct Embedding {
  Vec w;
  std::vector<Vec> dw;                // dw[a]
  std::vector<std::vector<Vec>> ddw;  // ddw[a][b]
};

Embedding embed(BoundaryKind kind, const Vec& y) {
  Embedding e;
  if (kind == BoundaryKind::Circle) {
    double c = std::cos(y(0)), s = std::sin(y(0));
    e.w = vec({c, s});
    e.dw = {vec({-s, c})};
    e.ddw = {{vec({-c, -s})}};
    return e;
  }
  if (kind == BoundaryKind::RoundSphere) {
    double st = std::sin(y(0)), ct = std::cos(y(0)), sp = std::sin(y(1)), cp = std::cos(y(1));
    e.w = vec({st * cp, st * sp, ct});
    e.dw = {vec({ct * cp, ct * sp, -st}), vec({-st * sp, st * cp, 0.0})};
    Vec tt = -e.w, tp = vec({-ct * sp, ct * cp, 0.0}), pp = vec({-st * cp, -st * sp, 0.0});
    e.ddw = {{tt, tp}, {tp, pp}};
    return e;
  }
  fail(ErrorKind::Config, "no polar picture for a flat-torus boundary");
}

}  // namespace

Jet1D smooth_cutoff(double rho, double r1, double r2) {
  if (rho <= r1) return {1.0, 0.0, 0.0};
  if (rho >= r2) return {0.0, 0.0, 0.0};
  auto psi = [](double t) -> Jet1D {
    double p = std::exp(-1.0 / t);
    return {p, p / (t * t), p * (1.0 / (t * t * t * t) - 2.0 / (t * t * t))};
  };
  Jet1D pa = psi(r2 - rho), pb = psi(rho - r1);
  double A = pa.v, Ad = -pa.d1, Add = pa.d2;
  double B = pb.v, Bd = pb.d1, Bdd = pb.d2;
  double S = A + B, Sd = Ad + Bd, Sdd = Add + Bdd;
  double num = Ad * S - A * Sd;
  Jet1D j;
  j.v = A / S;
  j.d1 = num / (S * S);
  j.d2 = (Add * S - A * Sdd) / (S * S) - 2.0 * Sd * num / (S * S * S);
  return j;
}

ScalarJet TrigFunction::eval(const Vec& y) const {
  ScalarJet j = ScalarJet::zero(d_);
  j.v = c0_;
  for (const auto& m : modes_) {
    double arg = m.k.dot(y) + m.phase;
    double c = std::cos(arg), s = std::sin(arg);
    j.v += m.amp * c;
    j.g -= m.amp * s * m.k;
    j.H -= m.amp * c * m.k * m.k.transpose();
  }
  return j;
}

ScalarJet SphereQuadratic::eval(const Vec& y) const {
  Embedding e = embed(BoundaryKind::RoundSphere, y);
  Eigen::Vector3d w = e.w;
  ScalarJet j = ScalarJet::zero(2);
  j.v = c0_ + a_.dot(w) + w.dot(B_ * w);
  for (int a = 0; a < 2; ++a) {
    Eigen::Vector3d da = e.dw[a];
    j.g(a) = a_.dot(da) + 2.0 * w.dot(B_ * da);
    for (int b = 0; b < 2; ++b) {
      Eigen::Vector3d db = e.dw[b], dab = e.ddw[a][b];
      j.H(a, b) = a_.dot(dab) + 2.0 * (da.dot(B_ * db) + w.dot(B_ * dab));
    }
  }
  return j;
}

PolarPoint polar_map(BoundaryKind kind, double rho, const Vec& y) {
  Embedding e = embed(kind, y);
  int n = static_cast<int>(e.w.size()), d = n - 1;
  PolarPoint p;
  p.x = e.w / rho;
  p.J = Mat::Zero(n, n);
  p.J.col(0) = -e.w / (rho * rho);
  for (int a = 0; a < d; ++a) p.J.col(1 + a) = e.dw[a] / rho;
  p.Hx.assign(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    Mat& H = p.Hx[i];
    H(0, 0) = 2.0 * e.w(i) / (rho * rho * rho);
    for (int a = 0; a < d; ++a) {
      H(0, 1 + a) = H(1 + a, 0) = -e.dw[a](i) / (rho * rho);
      for (int b = 0; b < d; ++b) H(1 + a, 1 + b) = e.ddw[a][b](i) / rho;
    }
  }
  return p;
}

Vec polar_inverse(BoundaryKind kind, const Vec& x) {
  double r = x.norm();
  if (kind == BoundaryKind::Circle) return vec({1.0 / r, std::atan2(x(1), x(0))});
  if (kind == BoundaryKind::RoundSphere)
    return vec({1.0 / r, std::acos(std::clamp(x(2) / r, -1.0, 1.0)), std::atan2(x(1), x(0))});
  fail(ErrorKind::Config, "no polar picture for a flat-torus boundary");
}

CartesianBump::CartesianBump(BoundaryKind chart, Vec center, double radius, double amplitude, Shape shape)
    : chart_(chart), c_(std::move(center)), R_(radius), A_(amplitude), shape_(shape) {
  int n = chart == BoundaryKind::Circle ? 2 : 3;
  if (chart == BoundaryKind::FlatTorus) fail(ErrorKind::Config, "cartesian bump needs a circle or sphere chart");
  if (c_.size() != n) fail(ErrorKind::Config, "bump center has wrong dimension");
  if (!(R_ > 0)) fail(ErrorKind::Config, "bump radius must be positive");
  if (shape_ == Shape::Compact && c_.norm() <= R_) fail(ErrorKind::Config, "compact bump must avoid the origin");
}

double CartesianBump::support_lo() const {
  double reach = shape_ == Shape::Compact ? R_ : 28.0 * R_;
  return 1.0 / (c_.norm() + reach);
}

double CartesianBump::support_hi() const {
  if (shape_ == Shape::Gaussian) return kInf;
  return 1.0 / (c_.norm() - R_);
}

ScalarJet CartesianBump::eval(double rho, const Vec& y) const {
  int n = static_cast<int>(c_.size());
  ScalarJet out = ScalarJet::zero(n);
  if (rho <= support_lo() || rho >= support_hi()) return out;
  PolarPoint p = polar_map(chart_, rho, y);
  Vec dx = p.x - c_;
  double s = dx.squaredNorm() / (R_ * R_);
  double psi, dpsi, ddpsi;
  if (shape_ == Shape::Compact) {
    if (s >= 1.0) return out;
    double q = 1.0 / (1.0 - s);
    psi = std::exp(1.0 - q);
    dpsi = -q * q * psi;
    ddpsi = psi * (q * q * q * q - 2.0 * q * q * q);
  } else {
    psi = std::exp(-s);
    dpsi = -psi;
    ddpsi = psi;
  }
  Vec gx = A_ * dpsi * 2.0 * dx / (R_ * R_);
  Mat Hx = A_ * (ddpsi * 4.0 * dx * dx.transpose() / (R_ * R_ * R_ * R_) +
                 dpsi * 2.0 * Mat::Identity(n, n) / (R_ * R_));
  out.v = A_ * psi;
  out.g = p.J.transpose() * gx;
  out.H = p.J.transpose() * Hx * p.J;
  for (int i = 0; i < n; ++i) out.H += gx(i) * p.Hx[i];
  return out;
}

CollarScalar::CollarScalar(int n, double k, std::shared_ptr<const BoundaryFunction> w, double r1, double r2)
    : n_(n), k_(k), w_(std::move(w)), r1_(r1), r2_(r2) {
  if (!(r2 > r1 && r1 > 0)) fail(ErrorKind::Config, "collar cutoff needs 0 < r1 < r2");
}

ScalarJet CollarScalar::eval(double rho, const Vec& y) const {
  ScalarJet out = ScalarJet::zero(n_);
  if (rho >= r2_) return out;
  Jet1D chi = smooth_cutoff(rho, r1_, r2_);
  auto pw = [&](double e) { return rho_pow(rho, e); };
  double P = pw(k_) * chi.v;
  double Pd = (k_ != 0 ? k_ * pw(k_ - 1) * chi.v : 0.0) + pw(k_) * chi.d1;
  double Pdd = (k_ * (k_ - 1) != 0 ? k_ * (k_ - 1) * pw(k_ - 2) * chi.v : 0.0) +
               (k_ != 0 ? 2 * k_ * pw(k_ - 1) * chi.d1 : 0.0) + pw(k_) * chi.d2;
  ScalarJet w = w_->eval(y);
  int d = n_ - 1;
  out.v = P * w.v;
  out.g(0) = Pd * w.v;
  out.H(0, 0) = Pdd * w.v;
  for (int a = 0; a < d; ++a) {
    out.g(1 + a) = P * w.g(a);
    out.H(0, 1 + a) = out.H(1 + a, 0) = Pd * w.g(a);
    for (int b = 0; b < d; ++b) out.H(1 + a, 1 + b) = P * w.H(a, b);
  }
  return out;
}

}  // namespace conic

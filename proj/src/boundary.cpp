#include "conic_lens/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace conic {

namespace {

BoundaryJet zero_jet(int d) {
  BoundaryJet j;
  j.v = Mat::Zero(d, d);
  for (auto& m : j.d) m = Mat::Zero(d, d);
  for (auto& r : j.dd)
    for (auto& m : r) m = Mat::Zero(d, d);
  return j;
}

double wrap_period(double x, double period) {
  double r = std::fmod(x + 0.5 * period, period);
  if (r < 0) r += period;
  return r - 0.5 * period;
}

}  // namespace

BoundaryManifold BoundaryManifold::circle(double length) {
  if (!(length > 0)) fail(ErrorKind::Config, "circle length must be positive");
  return {BoundaryKind::Circle, length, 0.0};
}

BoundaryManifold BoundaryManifold::round_sphere(double radius) {
  if (!(radius > 0)) fail(ErrorKind::Config, "sphere radius must be positive");
  return {BoundaryKind::RoundSphere, radius, 0.0};
}

BoundaryManifold BoundaryManifold::flat_torus(double l1, double l2) {
  if (!(l1 > 0 && l2 > 0)) fail(ErrorKind::Config, "torus periods must be positive");
  return {BoundaryKind::FlatTorus, l1, l2};
}

std::string BoundaryManifold::name() const {
  switch (kind_) {
    case BoundaryKind::Circle: return "circle";
    case BoundaryKind::RoundSphere: return "round-sphere";
    case BoundaryKind::FlatTorus: return "flat-torus";
  }
  return "?";
}

BoundaryManifold BoundaryManifold::scaled(double a) const {
  switch (kind_) {
    case BoundaryKind::Circle: return circle(a * s1_);
    case BoundaryKind::RoundSphere: return round_sphere(a * s1_);
    case BoundaryKind::FlatTorus: return flat_torus(a * s1_, a * s2_);
  }
  return *this;
}

BoundaryJet BoundaryManifold::metric_jet(const Vec& y) const {
  BoundaryJet j = zero_jet(dim());
  switch (kind_) {
    case BoundaryKind::Circle: {
      double c = s1_ / (2.0 * kPi);
      j.v(0, 0) = c * c;
      break;
    }
    case BoundaryKind::RoundSphere: {
      double r2 = s1_ * s1_, th = y(0);
      j.v(0, 0) = r2;
      j.v(1, 1) = r2 * sqr(std::sin(th));
      j.d[0](1, 1) = r2 * std::sin(2 * th);
      j.dd[0][0](1, 1) = 2 * r2 * std::cos(2 * th);
      break;
    }
    case BoundaryKind::FlatTorus:
      j.v = Mat::Identity(2, 2);
      break;
  }
  return j;
}

BoundaryJet BoundaryManifold::inverse_jet(const Vec& y) const {
  BoundaryJet j = zero_jet(dim());
  switch (kind_) {
    case BoundaryKind::Circle: {
      double c = s1_ / (2.0 * kPi);
      j.v(0, 0) = 1.0 / (c * c);
      break;
    }
    case BoundaryKind::RoundSphere: {
      double r2 = s1_ * s1_, s = std::sin(y(0)), c = std::cos(y(0));
      j.v(0, 0) = 1.0 / r2;
      j.v(1, 1) = 1.0 / (r2 * s * s);
      j.d[0](1, 1) = -2.0 * c / (r2 * s * s * s);
      j.dd[0][0](1, 1) = (2.0 / (s * s) + 6.0 * c * c / (s * s * s * s)) / r2;
      break;
    }
    case BoundaryKind::FlatTorus:
      j.v = Mat::Identity(2, 2);
      break;
  }
  return j;
}

double BoundaryManifold::norm(const Vec& y, const Vec& eta) const {
  return std::sqrt(eta.dot(inverse_metric(y) * eta));
}

double BoundaryManifold::gauss_curvature() const {
  return kind_ == BoundaryKind::RoundSphere ? 1.0 / (s1_ * s1_) : 0.0;
}

std::pair<Vec, Vec> BoundaryManifold::flow(const Vec& y, const Vec& eta, double s) const {
  switch (kind_) {
    case BoundaryKind::Circle: {
      double c2 = sqr(s1_ / (2.0 * kPi));
      Vec y1(1);
      y1(0) = y(0) + s * eta(0) / c2;
      return {y1, eta};
    }
    case BoundaryKind::FlatTorus:
      return {y + s * eta, eta};
    case BoundaryKind::RoundSphere: {
      // Great circle in the ambient R^3 picture of the sphere of radius R.
      double R = s1_, th = y(0), ph = y(1);
      double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
      Eigen::Vector3d p(R * st * cp, R * st * sp, R * ct);
      Eigen::Vector3d et(ct * cp, ct * sp, -st), ep(-sp, cp, 0.0);
      double thd = eta(0) / (R * R), phd = eta(1) / (R * R * st * st);
      Eigen::Vector3d v = R * (thd * et + st * phd * ep);
      double speed = v.norm();
      Vec y1(2), e1(2);
      if (speed == 0.0) return {y, eta};
      double w = speed / R;
      Eigen::Vector3d p1 = std::cos(w * s) * p + std::sin(w * s) * (v / w);
      Eigen::Vector3d v1 = -w * std::sin(w * s) * p + std::cos(w * s) * v;
      double th1 = std::acos(std::clamp(p1.z() / R, -1.0, 1.0));
      double ph1 = std::atan2(p1.y(), p1.x());
      ph1 = ph + wrap_angle(ph1 - ph);
      double st1 = std::sin(th1), ct1 = std::cos(th1);
      Eigen::Vector3d et1(ct1 * std::cos(ph1), ct1 * std::sin(ph1), -st1);
      Eigen::Vector3d ep1(-std::sin(ph1), std::cos(ph1), 0.0);
      y1 << th1, ph1;
      e1 << R * v1.dot(et1), R * st1 * v1.dot(ep1);
      return {y1, e1};
    }
  }
  return {y, eta};
}

Vec BoundaryManifold::difference(const Vec& y1, const Vec& y0) const {
  Vec d = y1 - y0;
  switch (kind_) {
    case BoundaryKind::Circle: d(0) = wrap_angle(d(0)); break;
    case BoundaryKind::RoundSphere: d(1) = wrap_angle(d(1)); break;
    case BoundaryKind::FlatTorus:
      d(0) = wrap_period(d(0), s1_);
      d(1) = wrap_period(d(1), s2_);
      break;
  }
  return d;
}

Vec BoundaryManifold::canonical(const Vec& y) const {
  Vec c = y;
  switch (kind_) {
    case BoundaryKind::Circle: c(0) = wrap_angle(c(0) - kPi) + kPi; break;
    case BoundaryKind::RoundSphere: c(1) = wrap_angle(c(1)); break;
    case BoundaryKind::FlatTorus:
      c(0) = wrap_period(c(0) - 0.5 * s1_, s1_) + 0.5 * s1_;
      c(1) = wrap_period(c(1) - 0.5 * s2_, s2_) + 0.5 * s2_;
      break;
  }
  return c;
}

Vec BoundaryManifold::unit_covector(const Vec& y, double psi) const {
  Mat h = metric(y);
  if (dim() == 1) {
    Vec e(1);
    e(0) = (std::cos(psi) >= 0 ? 1.0 : -1.0) * std::sqrt(h(0, 0));
    return e;
  }
  // h is diagonal for every supported boundary.
  Vec e(2);
  e << std::cos(psi) * std::sqrt(h(0, 0)), std::sin(psi) * std::sqrt(h(1, 1));
  return e;
}

}  // namespace conic

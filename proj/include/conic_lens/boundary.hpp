#pragma once

#include <array>
#include <string>
#include <utility>

#include "conic_lens/core.hpp"

namespace conic {

enum class BoundaryKind { Circle, RoundSphere, FlatTorus };

// A symmetric (d x d) field on the boundary with coordinate derivatives
// up to second order. d <= 2.
struct BoundaryJet {
  Mat v;
  std::array<Mat, 2> d;
  std::array<std::array<Mat, 2>, 2> dd;
};

// Closed boundary (N, h0) in a fixed coordinate chart.
//   circle:  theta in [0, 2 pi), h0 = (L / 2 pi)^2 dtheta^2
//   sphere:  (theta, phi) polar/azimuth, h0 = R^2 (dtheta^2 + sin^2 theta dphi^2)
//   torus:   (x1, x2) with periods (l1, l2), h0 = dx1^2 + dx2^2
class BoundaryManifold {
 public:
  static BoundaryManifold circle(double length);
  static BoundaryManifold round_sphere(double radius);
  static BoundaryManifold flat_torus(double l1, double l2);

  BoundaryKind kind() const { return kind_; }
  int dim() const { return kind_ == BoundaryKind::Circle ? 1 : 2; }
  std::string name() const;

  // Same manifold with metric a^2 h0.
  BoundaryManifold scaled(double a) const;

  // Circle length, sphere radius, or first torus period.
  double size() const { return s1_; }
  double size2() const { return s2_; }

  BoundaryJet metric_jet(const Vec& y) const;
  BoundaryJet inverse_jet(const Vec& y) const;
  Mat metric(const Vec& y) const { return metric_jet(y).v; }
  Mat inverse_metric(const Vec& y) const { return inverse_jet(y).v; }

  double norm(const Vec& y, const Vec& eta) const;
  // Gaussian curvature of h0 (0 for d = 1 by convention).
  double gauss_curvature() const;

  // Exact cogeodesic flow e^{s H0}(y, eta) with H0 = |eta|^2 / 2.
  std::pair<Vec, Vec> flow(const Vec& y, const Vec& eta, double s) const;

  // Coordinate difference y1 - y0 reduced by the periods.
  Vec difference(const Vec& y1, const Vec& y0) const;
  Vec canonical(const Vec& y) const;

  // Covector of h0-norm 1 pointing along the direction angle psi,
  // measured in an h0-orthonormal frame at y.
  Vec unit_covector(const Vec& y, double psi) const;

 private:
  BoundaryManifold(BoundaryKind k, double s1, double s2) : kind_(k), s1_(s1), s2_(s2) {}
  BoundaryKind kind_;
  double s1_;
  double s2_;
};

}  // namespace conic

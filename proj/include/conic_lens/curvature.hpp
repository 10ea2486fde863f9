#pragma once

#include <array>
#include <string>
#include <vector>

#include "conic_lens/metric.hpp"

namespace conic {

// Christoffel symbols and the fully covariant Riemann tensor of a
// coordinate metric jet. Convention: K(u, v) = Rm(u, v, v, u) / |u ^ v|^2.
struct Riemann {
  int n = 0;
  Mat g, ginv;
  std::array<Mat, 3> gamma;  // gamma[k](i, j) = Gamma^k_ij
  double R[3][3][3][3] = {};

  double operator()(const Vec& X, const Vec& Y, const Vec& Z, const Vec& W) const;
  double sectional(const Vec& U, const Vec& V) const;
};

Riemann riemann_from_jet(const CoordinateJet& jet);
// gamma[k](i, j) = Gamma^k_ij only.
std::array<Mat, 3> christoffel(const CoordinateJet& jet);
Riemann riemann(const MetricModel& model, double rho, const Vec& y);

// Gaussian curvature of h_rho at fixed rho (d = 2).
double slice_gauss_curvature(const CollarData& c);

// Closed-form collar expressions for unit V = rho Vbar, W = rho Wbar with
// Vbar, Wbar h-orthonormal and Z = rho^2 d_rho.
double slice_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& Vbar, const Vec& Wbar);
double mixed_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& Vbar);

// h-orthonormal basis of the tangent space of the level set (Gram-Schmidt
// on coordinate vectors).
std::vector<Vec> slice_frame(const Mat& h);

struct SectionalResult {
  double value;
  std::string route;  // "slice", "mixed" or "riemann"
};
// Sectional curvature of span{U, W} (coordinate components).
SectionalResult sectional_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& U, const Vec& W);

struct DecayFit {
  std::string quantity;
  bool available = true;
  bool identically_zero = false;
  double slope = 0, ci = 0;
  std::vector<std::pair<double, double>> table;  // (rho, max |value|)
};

struct DecayReport {
  std::vector<DecayFit> fits;
  const DecayFit& get(const std::string& q) const;
};

// Log-log slope of K(V,W), K(Z,V) and R(V,W,W,Z) against rho.
DecayReport curvature_decay_rates(const MetricModel& model, const std::vector<Vec>& ys, const std::vector<double>& rhos);

struct LineFit {
  double slope, intercept, slope_se, ci;
};
// Least squares line with a 95% Student-t interval on the slope.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace conic

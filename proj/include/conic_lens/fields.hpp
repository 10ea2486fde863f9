#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "conic_lens/boundary.hpp"
#include "conic_lens/core.hpp"

namespace conic {

struct Jet1D {
  double v = 0, d1 = 0, d2 = 0;
};

// Value, gradient and Hessian with respect to chart coordinates.
struct ScalarJet {
  double v = 0;
  Vec g;
  Mat H;
  static ScalarJet zero(int n) {
    ScalarJet j;
    j.g = Vec::Zero(n);
    j.H = Mat::Zero(n, n);
    return j;
  }
};

// Smooth step: 1 for rho <= r1, 0 for rho >= r2.
Jet1D smooth_cutoff(double rho, double r1, double r2);

// Functions on the boundary, in boundary coordinates.
class BoundaryFunction {
 public:
  virtual ~BoundaryFunction() = default;
  virtual ScalarJet eval(const Vec& y) const = 0;
};

// c0 + sum_j A_j cos(k_j . y + phase_j)
class TrigFunction : public BoundaryFunction {
 public:
  struct Mode {
    Vec k;
    double amp, phase;
  };
  TrigFunction(int d, double c0, std::vector<Mode> modes) : d_(d), c0_(c0), modes_(std::move(modes)) {}
  ScalarJet eval(const Vec& y) const override;

 private:
  int d_;
  double c0_;
  std::vector<Mode> modes_;
};

// c0 + a . x + x^T B x restricted to the unit sphere x(theta, phi).
class SphereQuadratic : public BoundaryFunction {
 public:
  SphereQuadratic(double c0, Eigen::Vector3d a, Eigen::Matrix3d B) : c0_(c0), a_(a), B_(B) {}
  ScalarJet eval(const Vec& y) const override;

 private:
  double c0_;
  Eigen::Vector3d a_;
  Eigen::Matrix3d B_;
};

// Chart (rho, y) -> Cartesian x = (1/rho) * omega(y), with omega the unit
// circle/sphere embedding of the boundary coordinates.
struct PolarPoint {
  Vec x;                  // n
  Mat J;                  // dx/du, n x n
  std::vector<Mat> Hx;    // Hx[i] = d^2 x_i / du du
};
PolarPoint polar_map(BoundaryKind kind, double rho, const Vec& y);
// Inverse: Cartesian -> (rho, y).
Vec polar_inverse(BoundaryKind kind, const Vec& x);

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual ScalarJet eval(double rho, const Vec& y) const = 0;
  // rho-interval outside of which the field vanishes identically
  // (support_lo = 0 / support_hi = inf when not compact).
  virtual double support_lo() const { return 0.0; }
  virtual double support_hi() const { return std::numeric_limits<double>::infinity(); }
};

using ScalarFieldPtr = std::shared_ptr<const ScalarField>;

// amplitude * exp(1 - 1/(1 - |x-c|^2/R^2)) on |x-c| < R (compact), or
// amplitude * exp(-|x-c|^2/R^2) (gaussian), in the polar picture.
class CartesianBump : public ScalarField {
 public:
  enum class Shape { Compact, Gaussian };
  CartesianBump(BoundaryKind chart, Vec center, double radius, double amplitude, Shape shape = Shape::Compact);
  ScalarJet eval(double rho, const Vec& y) const override;
  double support_lo() const override;
  double support_hi() const override;

 private:
  BoundaryKind chart_;
  Vec c_;
  double R_, A_;
  Shape shape_;
};

// rho^k * chi(rho) * w(y) with chi a smooth cutoff (chi = 1 for rho <= r1).
class CollarScalar : public ScalarField {
 public:
  CollarScalar(int n, double k, std::shared_ptr<const BoundaryFunction> w, double r1, double r2);
  ScalarJet eval(double rho, const Vec& y) const override;
  double support_hi() const override { return r2_; }

 private:
  int n_;
  double k_;
  std::shared_ptr<const BoundaryFunction> w_;
  double r1_, r2_;
};

}  // namespace conic

#pragma once

#include <array>
#include <memory>
#include <string>

#include "conic_lens/boundary.hpp"
#include "conic_lens/fields.hpp"
#include "conic_lens/profile.hpp"

namespace conic {

// Tangential metric h_rho(y) of g = drho^2/rho^4 + h_rho/rho^2 with jets.
struct CollarData {
  Mat h, hinv;
  Mat h_r, h_rr;
  std::array<Mat, 2> h_y, h_ry;
  std::array<std::array<Mat, 2>, 2> h_yy;
};

// Coordinate metric g_ij in (rho, y) with first and second derivatives.
struct CoordinateJet {
  Mat g;
  std::array<Mat, 3> dg;
  std::array<std::array<Mat, 3>, 3> ddg;
};

// Reduced inverse metric M on the slots (xi0, eta):
//   G^{rho rho} = rho^4 + rho^6 A,  G^{rho y} = rho^4 B,  G^{yy} = rho^2 C,
// M = [[A, B^T], [B, C]]. Normal form means M = diag(0, h^{-1}).
struct ReducedInverse {
  Mat M;
  std::array<Mat, 3> dM;  // derivatives along (rho, y)
};

ReducedInverse reduced_from_coordinate(double rho, const CoordinateJet& jet);
CoordinateJet coordinate_from_collar(double rho, const CollarData& c);

// Symmetric tensor on the boundary with jets (used for perturbations).
class BoundaryTensor {
 public:
  virtual ~BoundaryTensor() = default;
  virtual BoundaryJet eval(const Vec& y) const = 0;
};

// w(y) h0(y)
class ConformalBoundaryTensor : public BoundaryTensor {
 public:
  ConformalBoundaryTensor(BoundaryManifold N, std::shared_ptr<const BoundaryFunction> w) : N_(N), w_(std::move(w)) {}
  BoundaryJet eval(const Vec& y) const override;

 private:
  BoundaryManifold N_;
  std::shared_ptr<const BoundaryFunction> w_;
};

// w(y) B with B a constant symmetric matrix.
class ConstantBoundaryTensor : public BoundaryTensor {
 public:
  ConstantBoundaryTensor(Mat B, std::shared_ptr<const BoundaryFunction> w) : B_(std::move(B)), w_(std::move(w)) {}
  BoundaryJet eval(const Vec& y) const override;

 private:
  Mat B_;
  std::shared_ptr<const BoundaryFunction> w_;
};

class MetricModel {
 public:
  explicit MetricModel(BoundaryManifold N) : N_(N) {}
  virtual ~MetricModel() = default;

  int dim() const { return N_.dim() + 1; }
  const BoundaryManifold& boundary() const { return N_; }
  virtual std::string family() const = 0;

  // Exact normal form (no cross terms, g^{rho rho} = rho^4) at this point.
  virtual bool normal_form_at(double rho, const Vec& y) const { (void)rho; (void)y; return true; }
  // Normal-form data; throws Domain where the metric is not in normal form.
  virtual CollarData collar(double rho, const Vec& y) const = 0;
  virtual ReducedInverse reduced_inverse(double rho, const Vec& y) const;
  virtual CoordinateJet coordinate_jet(double rho, const Vec& y) const;

  // Coefficient h_j of rho^j in h_rho^{-1} near rho = 0, with first
  // y-derivatives (dd left empty).
  virtual BoundaryJet dual_jet(int j, const Vec& y) const;

  // Beyond this rho (r = 1/rho below 1/rho_limit) the chart is not trusted.
  virtual double rho_limit() const { return 1e6; }

 protected:
  BoundaryManifold N_;
};

using MetricPtr = std::shared_ptr<const MetricModel>;

// g = drho^2/rho^4 + h0/rho^2 (= dr^2 + r^2 h0).
class ExactCone : public MetricModel {
 public:
  explicit ExactCone(BoundaryManifold N) : MetricModel(N) {}
  std::string family() const override { return "exact-cone"; }
  CollarData collar(double rho, const Vec& y) const override;
  BoundaryJet dual_jet(int j, const Vec& y) const override;
};

// g = dr^2 + f(r)^2 h_B, rho = 1/r; boundary metric is a^2 h_B with a the
// tail slope of f.
class WarpedProduct : public MetricModel {
 public:
  WarpedProduct(WarpedProfile f, BoundaryManifold base);
  std::string family() const override { return "warped-product"; }
  CollarData collar(double rho, const Vec& y) const override;
  BoundaryJet dual_jet(int j, const Vec& y) const override;
  const WarpedProfile& profile() const { return f_; }
  const BoundaryManifold& base() const { return base_; }

 private:
  WarpedProfile f_;
  BoundaryManifold base_;
};

// h_rho = h0 + rho^m chi(rho) P(y), chi = 1 on [0, r1], 0 beyond r2.
class PerturbedConic : public MetricModel {
 public:
  PerturbedConic(BoundaryManifold N, int m, std::shared_ptr<const BoundaryTensor> P, double r1, double r2);
  std::string family() const override { return "perturbed-conic"; }
  CollarData collar(double rho, const Vec& y) const override;
  BoundaryJet dual_jet(int j, const Vec& y) const override;
  int order() const { return m_; }
  BoundaryJet perturbation(const Vec& y) const { return P_->eval(y); }

 private:
  int m_;
  std::shared_ptr<const BoundaryTensor> P_;
  double r1_, r2_;
};

// Interior modifications of a base metric supported away from rho = 0.
class InteriorDecorator : public MetricModel {
 public:
  InteriorDecorator(MetricPtr base, ScalarFieldPtr profile)
      : MetricModel(base->boundary()), base_(std::move(base)), chi_(std::move(profile)) {}
  bool normal_form_at(double rho, const Vec& y) const override;
  CollarData collar(double rho, const Vec& y) const override;
  ReducedInverse reduced_inverse(double rho, const Vec& y) const override;
  BoundaryJet dual_jet(int j, const Vec& y) const override { return base_->dual_jet(j, y); }
  double rho_limit() const override { return base_->rho_limit(); }
  const MetricModel& base() const { return *base_; }
  MetricPtr base_ptr() const { return base_; }
  const ScalarField& bump() const { return *chi_; }

 protected:
  bool inside(double rho) const { return rho > chi_->support_lo() && rho < chi_->support_hi(); }
  MetricPtr base_;
  ScalarFieldPtr chi_;
};

// g = exp(2 s sigma) g_base.
class ConformalBump : public InteriorDecorator {
 public:
  ConformalBump(MetricPtr base, ScalarFieldPtr sigma, double s) : InteriorDecorator(std::move(base), std::move(sigma)), s_(s) {}
  std::string family() const override { return "conformal-bump"; }
  CoordinateJet coordinate_jet(double rho, const Vec& y) const override;

 private:
  double s_;
};

// g = g_base + s q with q = chi * Q (Q constant in the scattering frame
// drho/rho^2, dy/rho) or q = chi * g_base.
class TensorBump : public InteriorDecorator {
 public:
  enum class Mode { FrameConstant, Conformal };
  TensorBump(MetricPtr base, ScalarFieldPtr chi, Mat Q, double s)
      : InteriorDecorator(std::move(base), std::move(chi)), mode_(Mode::FrameConstant), Q_(std::move(Q)), s_(s) {}
  TensorBump(MetricPtr base, ScalarFieldPtr chi, double s)
      : InteriorDecorator(std::move(base), std::move(chi)), mode_(Mode::Conformal), s_(s) {}
  std::string family() const override { return "tensor-bump"; }
  CoordinateJet coordinate_jet(double rho, const Vec& y) const override;
  // q in the scattering frame (without the factor s).
  Mat perturbation_frame(double rho, const Vec& y) const;
  TensorBump with_scale(double s) const;

 private:
  CoordinateJet q_jet(double rho, const Vec& y) const;
  Mode mode_;
  Mat Q_;
  double s_;
};

}  // namespace conic

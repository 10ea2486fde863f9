#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "conic_lens/fields.hpp"
#include "conic_lens/flow.hpp"
#include "conic_lens/metric.hpp"

namespace conic {

// Components of a symmetric m-tensor (m <= 4, n <= 3) in the scattering
// coframe e^0 = drho/rho^2, e^a = dy^a/rho, stored over all n^m index
// tuples (row-major), with optional chart gradients.
struct TensorJet {
  static constexpr int kMax = 81;
  int n = 0, m = 0;
  bool has_grad = false;
  std::array<double, kMax> v{};
  std::array<std::array<double, 3>, kMax> dv{};

  static TensorJet zero(int n, int m);
  int size() const;
  // flat index of a tuple
  static int index(int n, const int* idx, int m);
};

// Symmetrization over all index permutations.
TensorJet symmetrize(const TensorJet& t);

// Field f = rho^p * Fbar with Fbar smooth up to rho = 0.
class SymTensorField {
 public:
  using Eval = std::function<TensorJet(double rho, const Vec& y, bool grad)>;

  SymTensorField(int n, int m, double p, Eval reduced, std::string name = "");

  int dim() const { return n_; }
  int order() const { return m_; }
  double prefactor() const { return p_; }
  const std::string& name() const { return name_; }

  TensorJet reduced(double rho, const Vec& y, bool grad = false) const { return F_(rho, y, grad); }
  TensorJet eval(double rho, const Vec& y, bool grad = false) const;

  // For fields built from other fields: the X-ray integrand is taken to be
  // zero for rho <= 0 instead of evaluating Fbar there.
  bool zero_at_boundary = false;

 private:
  int n_, m_;
  double p_;
  Eval F_;
  std::string name_;
};

using TensorFieldPtr = std::shared_ptr<const SymTensorField>;

// s(rho, y) * C with C a constant symmetric tensor in the scattering frame.
TensorFieldPtr scalar_times_constant(ScalarFieldPtr s, int n, int m, const TensorJet& C, double p = 0.0,
                                     std::string name = "");
// rho^p * w(y) * C, smooth up to rho = 0.
TensorFieldPtr collar_tensor(std::shared_ptr<const BoundaryFunction> w, int n, int m, const TensorJet& C, double p,
                             std::string name = "");
// Linear combination a f + b g (same order).
TensorFieldPtr combine(double a, TensorFieldPtr f, double b, TensorFieldPtr g);

// pi^* f at z: f(v, ..., v) with v = (rho', rho y') in the scattering frame,
// times rho^shift. X-ray integrands use shift = -2.
double lift(const SymTensorField& f, const PhasePoint& z, const FieldEval& fe, double shift = 0.0);
inline double xray_density(const SymTensorField& f, const PhasePoint& z, const FieldEval& fe) {
  return lift(f, z, fe, -2.0);
}

// Symmetrized covariant derivative D u, from coordinate Christoffel symbols.
// u must provide gradients.
TensorFieldPtr sym_derivative(MetricPtr model, TensorFieldPtr u);

// Gauge normalization for m in {1, 2}: u with f - D u tangential.
struct GaugeResult {
  TensorFieldPtr potential;  // u, order m - 1
  TensorFieldPtr residual;   // f - D u
  // max over the sampled points of the transversal components of f - D u
  double transversal_residual(const std::vector<double>& rhos, const std::vector<Vec>& ys) const;
  int m = 0;
};
GaugeResult gauge_normalize(MetricPtr model, TensorFieldPtr f);

}  // namespace conic

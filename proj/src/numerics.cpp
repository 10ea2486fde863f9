#include "conic_lens/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

namespace conic {

std::vector<double> dyadic(double eps0, int count) {
  std::vector<double> e(count);
  for (int j = 0; j < count; ++j) e[j] = eps0 * std::ldexp(1.0, -j);
  return e;
}

namespace {

double fit_intercept(const std::vector<double>& eps, const std::vector<double>& F, int degree) {
  int m = static_cast<int>(eps.size());
  MatX A(m, degree + 1);
  VecX b(m);
  double scale = *std::max_element(eps.begin(), eps.end());
  for (int i = 0; i < m; ++i) {
    double x = eps[i] / scale, p = 1;
    for (int k = 0; k <= degree; ++k) {
      A(i, k) = p;
      p *= x;
    }
    b(i) = F[i];
  }
  VecX c = A.colPivHouseholderQr().solve(b);
  return c(0);
}

}  // namespace

Extrapolation extrapolate(const std::vector<double>& eps, const std::vector<double>& F, int degree) {
  if (eps.size() != F.size() || static_cast<int>(eps.size()) < degree + 1)
    fail(ErrorKind::Domain, "extrapolation needs at least degree+1 samples");
  Extrapolation r;
  r.value = fit_intercept(eps, F, degree);
  if (static_cast<int>(eps.size()) >= degree + 2) {
    std::vector<double> e2(eps.begin() + 1, eps.end()), F2(F.begin() + 1, F.end());
    r.error = std::abs(fit_intercept(e2, F2, degree) - r.value);
  }
  for (double f : F) r.residuals.push_back(std::abs(f - r.value));
  r.order = observed_order(eps, F);
  return r;
}

double observed_order(const std::vector<double>& eps, const std::vector<double>& F) {
  std::vector<double> orders;
  for (size_t j = 0; j + 2 < F.size(); ++j) {
    double a = std::abs(F[j] - F[j + 1]), b = std::abs(F[j + 1] - F[j + 2]);
    if (a > 0 && b > 0) orders.push_back(std::log(a / b) / std::log(eps[j] / eps[j + 1]));
  }
  if (orders.empty()) return std::numeric_limits<double>::infinity();
  std::sort(orders.begin(), orders.end());
  return orders[orders.size() / 2];
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int panels) {
  double s = 0, w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * w;
    s += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + w);
  }
  return s;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

}  // namespace conic

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace conic {

// Total dimension n is 2 or 3, so every small vector/matrix fits in 3x3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

enum class ErrorKind {
  Config,        // bad input, unsupported combination
  Domain,        // evaluation outside where an object is defined
  Decay,         // tensor decay too weak for the requested operation
  Integration,   // step-size underflow, non-finite state
  NotConverged,  // iteration or extrapolation did not settle
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline double sqr(double x) { return x * x; }

// Signed power that tolerates non-integer exponents on rho >= 0 and
// integer exponents on slightly negative rho (exit overshoot).
inline double rho_pow(double rho, double p) {
  double ip;
  if (std::modf(p, &ip) == 0.0) {
    return std::pow(rho, static_cast<int>(ip));
  }
  return std::pow(std::max(rho, 0.0), p);
}

// Wrap to [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0) r += 2.0 * kPi;
  return r - kPi;
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace conic

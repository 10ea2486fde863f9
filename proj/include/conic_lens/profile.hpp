#pragma once

#include <string>
#include <vector>

#include "conic_lens/core.hpp"

namespace conic {

struct ProfileJet {
  double f, df, d2f;
};

// Warp function f(r) for g = dr^2 + f(r)^2 h_B. Built from analytic pieces
// joined by C^2 transitions. The last piece is affine (f = a r + b) and
// extends to infinity.
class WarpedProfile {
 public:
  enum class Kind { Identity, Sin, Sinh, Affine, Hermite, ConvexBlend };

  struct Piece {
    Kind kind;
    double lo, hi;
    double a = 1.0, b = 0.0;       // affine coefficients
    double L = 1.0;                // transition length
    double c[6] = {0, 0, 0, 0, 0, 0};  // Hermite data / blend data
  };

  // f = r everywhere.
  static WarpedProfile euclidean();
  // f = r on [0, r1], f = a r on [R0, inf), quintic transition.
  static WarpedProfile smoothed_cone(double a, double r1, double R0);
  // f = r on [0, r1], f'' >= 0 on the transition, f = a r + b on [R0, inf).
  static WarpedProfile convex_cone(double a, double r1, double R0);
  // f = r on [0,1], f = sinh r on [2,3], f = a r + b on [4, inf).
  static WarpedProfile sinh_band(double a);
  // f = sin r on [0, rc], f = a r on [R0, inf).
  static WarpedProfile spherical_cap(double rc, double a, double R0);

  ProfileJet eval(double r) const;

  // phi(rho) = rho f(1/rho) and its rho-derivatives; closed form on the
  // affine tail so that rho <= 0 is allowed there.
  ProfileJet eval_rho(double rho) const;

  double tail_slope() const { return pieces_.back().a; }
  double tail_intercept() const { return pieces_.back().b; }
  double tail_start() const { return pieces_.back().lo; }
  const std::string& name() const { return name_; }
  const std::vector<Piece>& pieces() const { return pieces_; }

  double min_slope(int samples = 4000) const;

 private:
  static Piece hermite(double A, const ProfileJet& fa, double B, const ProfileJet& fb);
  static ProfileJet eval_piece(const Piece& p, double r);
  std::vector<Piece> pieces_;
  std::string name_;
};

}  // namespace conic

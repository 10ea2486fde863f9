#include "conic_lens/profile.hpp"

#include <algorithm>
#include <limits>

namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WarpedProfile::Piece analytic(WarpedProfile::Kind k, double lo, double hi, double a = 1, double b = 0) {
  WarpedProfile::Piece p;
  p.kind = k;
  p.lo = lo;
  p.hi = hi;
  p.a = a;
  p.b = b;
  return p;
}

}  // namespace

WarpedProfile::Piece WarpedProfile::hermite(double A, const ProfileJet& fa, double B, const ProfileJet& fb) {
  Piece p;
  p.kind = Kind::Hermite;
  p.lo = A;
  p.hi = B;
  p.L = B - A;
  double L = p.L;
  p.c[0] = fa.f;
  p.c[1] = fa.df * L;
  p.c[2] = fa.d2f * L * L;
  p.c[3] = fb.f;
  p.c[4] = fb.df * L;
  p.c[5] = fb.d2f * L * L;
  return p;
}

ProfileJet WarpedProfile::eval_piece(const Piece& p, double r) {
  switch (p.kind) {
    case Kind::Identity: return {r, 1.0, 0.0};
    case Kind::Sin: return {std::sin(r), std::cos(r), -std::sin(r)};
    case Kind::Sinh: return {std::sinh(r), std::cosh(r), std::sinh(r)};
    case Kind::Affine: return {p.a * r + p.b, p.a, 0.0};
    case Kind::Hermite: {
      // Quintic Hermite basis on t in [0,1] matching value, slope, curvature.
      double L = p.L, t = (r - p.lo) / L;
      double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
      double H[6] = {1 - 10 * t3 + 15 * t4 - 6 * t5,       t - 6 * t3 + 8 * t4 - 3 * t5,
                     0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5, 10 * t3 - 15 * t4 + 6 * t5,
                     -4 * t3 + 7 * t4 - 3 * t5,              0.5 * t3 - t4 + 0.5 * t5};
      double D[6] = {-30 * t2 + 60 * t3 - 30 * t4,      1 - 18 * t2 + 32 * t3 - 15 * t4,
                     t - 4.5 * t2 + 6 * t3 - 2.5 * t4, 30 * t2 - 60 * t3 + 30 * t4,
                     -12 * t2 + 28 * t3 - 15 * t4,     1.5 * t2 - 4 * t3 + 2.5 * t4};
      double DD[6] = {-60 * t + 180 * t2 - 120 * t3, -36 * t + 96 * t2 - 60 * t3,
                      1 - 9 * t + 18 * t2 - 10 * t3, 60 * t - 180 * t2 + 120 * t3,
                      -24 * t + 84 * t2 - 60 * t3,   3 * t - 12 * t2 + 10 * t3};
      ProfileJet j{0, 0, 0};
      for (int i = 0; i < 6; ++i) {
        j.f += p.c[i] * H[i];
        j.df += p.c[i] * D[i];
        j.d2f += p.c[i] * DD[i];
      }
      j.df /= L;
      j.d2f /= L * L;
      return j;
    }
    case Kind::ConvexBlend: {
      // f' = 1 + (a-1) S(u), S = 3u^2 - 2u^3, starting from f(lo) = c[0].
      double L = p.L, u = (r - p.lo) / L, am1 = p.a - 1.0;
      double f = p.c[0] + L * (u + am1 * (u * u * u - 0.5 * u * u * u * u));
      double df = 1.0 + am1 * (3 * u * u - 2 * u * u * u);
      double d2f = am1 * 6.0 * u * (1 - u) / L;
      return {f, df, d2f};
    }
  }
  return {0, 0, 0};
}

WarpedProfile WarpedProfile::euclidean() {
  WarpedProfile w;
  w.name_ = "euclidean";
  w.pieces_.push_back(analytic(Kind::Affine, 0.0, kInf, 1.0, 0.0));
  return w;
}

WarpedProfile WarpedProfile::smoothed_cone(double a, double r1, double R0) {
  if (!(a > 0 && r1 > 0 && R0 > r1)) fail(ErrorKind::Config, "smoothed cone needs a > 0, 0 < r1 < R0");
  WarpedProfile w;
  w.name_ = "smoothed-cone";
  w.pieces_.push_back(analytic(Kind::Identity, 0.0, r1));
  w.pieces_.push_back(hermite(r1, {r1, 1.0, 0.0}, R0, {a * R0, a, 0.0}));
  w.pieces_.push_back(analytic(Kind::Affine, R0, kInf, a, 0.0));
  return w;
}

WarpedProfile WarpedProfile::convex_cone(double a, double r1, double R0) {
  if (!(a >= 1 && r1 > 0 && R0 > r1)) fail(ErrorKind::Config, "convex cone needs a >= 1, 0 < r1 < R0");
  WarpedProfile w;
  w.name_ = "convex-cone";
  w.pieces_.push_back(analytic(Kind::Identity, 0.0, r1));
  Piece blend;
  blend.kind = Kind::ConvexBlend;
  blend.lo = r1;
  blend.hi = R0;
  blend.L = R0 - r1;
  blend.a = a;
  blend.c[0] = r1;
  w.pieces_.push_back(blend);
  double fR = eval_piece(blend, R0).f;
  w.pieces_.push_back(analytic(Kind::Affine, R0, kInf, a, fR - a * R0));
  return w;
}

WarpedProfile WarpedProfile::sinh_band(double a) {
  WarpedProfile w;
  w.name_ = "sinh-band";
  w.pieces_.push_back(analytic(Kind::Identity, 0.0, 1.0));
  Piece s = analytic(Kind::Sinh, 2.0, 3.0);
  w.pieces_.push_back(hermite(1.0, {1.0, 1.0, 0.0}, 2.0, eval_piece(s, 2.0)));
  w.pieces_.push_back(s);
  // Tail f = a r + b with b chosen so the tail passes through f(3) + 1.5 a.
  double b = std::sinh(3.0) + 1.5 * a - 4.0 * a;
  Piece tail = analytic(Kind::Affine, 4.0, kInf, a, b);
  w.pieces_.push_back(hermite(3.0, eval_piece(s, 3.0), 4.0, eval_piece(tail, 4.0)));
  w.pieces_.push_back(tail);
  return w;
}

WarpedProfile WarpedProfile::spherical_cap(double rc, double a, double R0) {
  if (!(rc > 0 && rc < kPi / 2 && R0 > rc && a > 0)) fail(ErrorKind::Config, "spherical cap needs 0 < rc < pi/2 < ..., R0 > rc");
  WarpedProfile w;
  w.name_ = "spherical-cap";
  Piece s = analytic(Kind::Sin, 0.0, rc);
  w.pieces_.push_back(s);
  w.pieces_.push_back(hermite(rc, eval_piece(s, rc), R0, {a * R0, a, 0.0}));
  w.pieces_.push_back(analytic(Kind::Affine, R0, kInf, a, 0.0));
  return w;
}

ProfileJet WarpedProfile::eval(double r) const {
  if (r < 0) fail(ErrorKind::Domain, "warp profile evaluated at r < 0");
  for (const auto& p : pieces_)
    if (r <= p.hi) return eval_piece(p, r);
  return eval_piece(pieces_.back(), r);
}

ProfileJet WarpedProfile::eval_rho(double rho) const {
  const Piece& tail = pieces_.back();
  if (rho * tail.lo <= 1.0) {
    // phi = rho (a / rho + b) = a + b rho
    return {tail.a + tail.b * rho, tail.b, 0.0};
  }
  double r = 1.0 / rho;
  ProfileJet j = eval(r);
  return {rho * j.f, j.f - r * j.df, r * r * r * j.d2f};
}

double WarpedProfile::min_slope(int samples) const {
  double hi = pieces_.back().lo + 1.0;
  double m = kInf;
  for (int i = 0; i <= samples; ++i) m = std::min(m, eval(hi * i / samples).df);
  return m;
}

}  // namespace conic

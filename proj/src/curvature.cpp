#include "conic_lens/curvature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

namespace conic {

double Riemann::operator()(const Vec& X, const Vec& Y, const Vec& Z, const Vec& W) const {
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += R[i][j][k][l] * X(i) * Y(j) * Z(k) * W(l);
  return s;
}

double Riemann::sectional(const Vec& U, const Vec& V) const {
  double uu = U.dot(g * U), vv = V.dot(g * V), uv = U.dot(g * V);
  return (*this)(U, V, V, U) / (uu * vv - uv * uv);
}

std::array<Mat, 3> christoffel(const CoordinateJet& jet) {
  int n = static_cast<int>(jet.g.rows());
  Mat gi = jet.g.inverse();
  std::array<Mat, 3> G;
  for (int k = 0; k < 3; ++k) G[k] = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += gi(k, l) * (jet.dg[i](l, j) + jet.dg[j](l, i) - jet.dg[l](i, j));
        G[k](i, j) = G[k](j, i) = 0.5 * s;
      }
  return G;
}

Riemann riemann_from_jet(const CoordinateJet& jet) {
  Riemann r;
  int n = static_cast<int>(jet.g.rows());
  r.n = n;
  r.g = jet.g;
  r.ginv = jet.g.inverse();
  r.gamma = christoffel(jet);
  // Coordinate formula; the sign is flipped so that K(u,v) = Rm(u,v,v,u)/|u^v|^2.
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          double v = 0.5 * (jet.ddg[k][l](i, m) + jet.ddg[i][m](k, l) - jet.ddg[k][m](i, l) - jet.ddg[i][l](k, m));
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              v += jet.g(a, b) * (r.gamma[a](k, l) * r.gamma[b](i, m) - r.gamma[a](k, m) * r.gamma[b](i, l));
          r.R[i][k][l][m] = -v;
        }
  return r;
}

Riemann riemann(const MetricModel& model, double rho, const Vec& y) {
  return riemann_from_jet(model.coordinate_jet(rho, y));
}

double slice_gauss_curvature(const CollarData& c) {
  int d = static_cast<int>(c.h.rows());
  if (d != 2) fail(ErrorKind::Domain, "slice Gaussian curvature needs a 2-dimensional boundary");
  CoordinateJet j;
  j.g = c.h;
  for (int a = 0; a < 3; ++a) {
    j.dg[a] = a < 2 ? c.h_y[a] : Mat::Zero(2, 2);
    for (int b = 0; b < 3; ++b) j.ddg[a][b] = (a < 2 && b < 2) ? c.h_yy[a][b] : Mat::Zero(2, 2);
  }
  Riemann r = riemann_from_jet(j);
  return r.sectional(vec({1.0, 0.0}), vec({0.0, 1.0}));
}

double slice_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& Vb, const Vec& Wb) {
  CollarData c = model.collar(rho, y);
  double Kh = slice_gauss_curvature(c);
  double vv = Vb.dot(c.h_r * Vb), ww = Wb.dot(c.h_r * Wb), vw = Vb.dot(c.h_r * Wb);
  double r2 = rho * rho;
  return r2 * (Kh - 1.0) + 0.5 * r2 * rho * (vv + ww) - 0.25 * r2 * r2 * (vv * ww - vw * vw);
}

double mixed_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& Vb) {
  CollarData c = model.collar(rho, y);
  Vec SV = c.hinv * (c.h_r * Vb);
  double r4 = rho * rho * rho * rho;
  return -0.5 * r4 * Vb.dot(c.h_rr * Vb) + 0.25 * r4 * SV.dot(c.h * SV);
}

std::vector<Vec> slice_frame(const Mat& h) {
  int d = static_cast<int>(h.rows());
  std::vector<Vec> out;
  for (int a = 0; a < d; ++a) {
    Vec v = Vec::Zero(d);
    v(a) = 1.0;
    for (const Vec& u : out) v -= u.dot(h * v) * u;
    v /= std::sqrt(v.dot(h * v));
    out.push_back(v);
  }
  return out;
}

SectionalResult sectional_curvature(const MetricModel& model, double rho, const Vec& y, const Vec& U, const Vec& W) {
  int n = model.dim();
  bool normal = model.normal_form_at(rho, y);
  auto tangential = [](const Vec& v) { return v(0) == 0.0; };
  auto radial = [&](const Vec& v) { return v.tail(n - 1).isZero(0.0); };
  if (normal) {
    CollarData c = model.collar(rho, y);
    auto bar = [&](const Vec& v) {
      Vec b = v.tail(n - 1);
      return Vec(b / std::sqrt(b.dot(c.h * b)));
    };
    if (tangential(U) && tangential(W) && n == 3) {
      // orthonormalize in h before using the closed form
      Vec Vb = bar(U);
      Vec Wt = W.tail(2);
      Wt -= Vb.dot(c.h * Wt) * Vb;
      Vec Wb = Wt / std::sqrt(Wt.dot(c.h * Wt));
      return {slice_curvature(model, rho, y, Vb, Wb), "slice"};
    }
    if (radial(U) && tangential(W)) return {mixed_curvature(model, rho, y, bar(W)), "mixed"};
    if (radial(W) && tangential(U)) return {mixed_curvature(model, rho, y, bar(U)), "mixed"};
  }
  return {riemann(model, rho, y).sectional(U, W), "riemann"};
}

const DecayFit& DecayReport::get(const std::string& q) const {
  for (const auto& f : fits)
    if (f.quantity == q) return f;
  fail(ErrorKind::Domain, "no decay fit for " + q);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  if (n < 3) fail(ErrorKind::Domain, "line fit needs at least 3 points");
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (size_t i = 0; i < n; ++i) rss += sqr(y[i] - f.intercept - f.slope * x[i]);
  f.slope_se = std::sqrt(rss / (n - 2) / sxx);
  boost::math::students_t t(static_cast<double>(n - 2));
  f.ci = boost::math::quantile(boost::math::complement(t, 0.025)) * f.slope_se;
  return f;
}

DecayReport curvature_decay_rates(const MetricModel& model, const std::vector<Vec>& ys, const std::vector<double>& rhos) {
  int n = model.dim();
  if (rhos.size() < 8) fail(ErrorKind::Config, "decay fit needs at least 8 sample radii");
  auto [lo, hi] = std::minmax_element(rhos.begin(), rhos.end());
  if (!(*lo > 0) || *hi < 100.0 * *lo) fail(ErrorKind::Config, "decay fit radii must span two decades");
  if (ys.empty()) fail(ErrorKind::Config, "decay fit needs boundary sample points");
  DecayReport rep;
  DecayFit kvw, kzv, rvwwz;
  kvw.quantity = "K(V,W)";
  kzv.quantity = "K(Z,V)";
  rvwwz.quantity = "R(V,W,W,Z)";
  if (n < 3) {
    kvw.available = false;
    rvwwz.available = false;
  }
  constexpr double kZero = 1e-13;
  for (double rho : rhos) {
    double m_vw = 0, m_zv = 0, m_r = 0;
    for (const Vec& y : ys) {
      CollarData c = model.collar(rho, y);
      std::vector<Vec> fr = slice_frame(c.h);
      for (const Vec& Vb : fr) m_zv = std::max(m_zv, std::abs(mixed_curvature(model, rho, y, Vb)));
      if (n == 3) {
        m_vw = std::max(m_vw, std::abs(slice_curvature(model, rho, y, fr[0], fr[1])));
        Riemann R = riemann(model, rho, y);
        Vec Z = vec({rho * rho, 0.0, 0.0});
        for (int p = 0; p < 2; ++p) {
          Vec V(3), W(3);
          V << 0.0, rho * fr[p];
          W << 0.0, rho * fr[1 - p];
          m_r = std::max(m_r, std::abs(R(V, W, W, Z)));
        }
      }
    }
    kzv.table.emplace_back(rho, m_zv);
    if (n == 3) {
      kvw.table.emplace_back(rho, m_vw);
      rvwwz.table.emplace_back(rho, m_r);
    }
  }
  for (DecayFit* f : {&kvw, &kzv, &rvwwz}) {
    if (!f->available) {
      rep.fits.push_back(*f);
      continue;
    }
    std::vector<double> lx, ly;
    bool all_zero = true;
    for (auto [r, v] : f->table) {
      if (v > kZero * r * r) all_zero = false;
      if (v > 0) {
        lx.push_back(std::log(r));
        ly.push_back(std::log(v));
      }
    }
    f->identically_zero = all_zero;
    if (!all_zero && lx.size() >= 3) {
      LineFit lf = fit_line(lx, ly);
      f->slope = lf.slope;
      f->ci = lf.ci;
    }
    rep.fits.push_back(*f);
  }
  return rep;
}

}  // namespace conic

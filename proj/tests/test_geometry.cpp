#include <doctest.h>

#include <cmath>

#include "conic_lens/curvature.hpp"
#include "conic_lens/numerics.hpp"
#include "test_util.hpp"

using namespace conic;
using namespace testutil;

TEST_CASE("boundary flows are closed form and periodic") {
  auto C = BoundaryManifold::circle(2 * kPi);
  auto [y, eta] = C.flow(vec({0.3}), vec({1.7}), 0.4);
  CHECK(y(0) == doctest::Approx(0.3 + 0.4 * 1.7).epsilon(1e-15));
  CHECK(eta(0) == 1.7);

  for (double R : {1.0, 2.5}) {
    auto S = BoundaryManifold::round_sphere(R);
    Vec y0 = vec({1.1, 0.4});
    Vec e0 = S.unit_covector(y0, 0.8);
    CHECK(S.norm(y0, e0) == doctest::Approx(1.0).epsilon(1e-14));
    auto [y1, e1] = S.flow(y0, e0, 2 * kPi * R);
    CHECK(S.difference(y1, y0).norm() < 1e-10);
    CHECK(max_abs_diff(e1, e0) < 1e-10);
    for (double s : {0.3, 1.7, 4.0}) {
      auto [ys, es] = S.flow(y0, e0, s);
      CHECK(S.norm(ys, es) == doctest::Approx(1.0).epsilon(1e-13));
    }
  }

  auto T = BoundaryManifold::flat_torus(1.0, 2.0);
  auto [yt, et] = T.flow(vec({0.2, 0.3}), vec({1.0, -0.5}), 3.0);
  CHECK(T.difference(yt, vec({0.2 + 3.0, 0.3 - 1.5})).norm() < 1e-14);
  CHECK(max_abs_diff(et, vec({1.0, -0.5})) == 0.0);
}

TEST_CASE("sphere geodesic flow composes") {
  auto S = BoundaryManifold::round_sphere(1.0);
  Vec y0 = vec({0.9, -0.6});
  Vec e0 = 1.3 * S.unit_covector(y0, 2.2);
  auto [ya, ea] = S.flow(y0, e0, 0.7);
  auto [yb, eb] = S.flow(ya, ea, 0.5);
  auto [yc, ec] = S.flow(y0, e0, 1.2);
  CHECK(S.difference(yb, yc).norm() < 1e-12);
  CHECK(max_abs_diff(eb, ec) < 1e-12);
}

TEST_CASE("collar data of the basic families") {
  SUBCASE("exact cone is rho-independent") {
    auto m = cone_circle();
    for (double rho : {0.0, 0.1, 0.7}) {
      CollarData c = m->collar(rho, vec({0.4}));
      CHECK(c.h(0, 0) == doctest::Approx(1.0));
      CHECK(c.h_r(0, 0) == 0.0);
      CHECK((c.hinv * c.h - Mat::Identity(1, 1)).norm() < 1e-14);
    }
  }
  SUBCASE("euclidean plane in rho = 1/r has h = dtheta^2") {
    auto m = euclidean_plane();
    for (double rho : {0.01, 0.3, 0.9}) {
      CollarData c = m->collar(rho, vec({2.0}));
      CHECK(c.h(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::abs(c.h_r(0, 0)) < 1e-12);
    }
  }
  SUBCASE("second-order perturbation has vanishing rho-derivative at the boundary") {
    auto m = perturbed_circle(2);
    CollarData c = m->collar(0.0, vec({0.5}));
    CHECK(c.h_r.norm() == 0.0);
    CHECK(m->collar(0.1, vec({0.5})).h_r.norm() > 1e-3);
  }
}

TEST_CASE("analytic collar derivatives match central differences") {
  std::vector<MetricPtr> models{perturbed_circle(1), perturbed_circle(2), perturbed_sphere(2),
                                std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(0.5, 1.0, 6.0),
                                                                BoundaryManifold::round_sphere(1.0))};
  const double h = 1e-5;
  for (const auto& m : models) {
    int d = m->boundary().dim();
    Vec y = d == 1 ? vec({0.7}) : vec({1.2, 0.4});
    for (double rho : {0.05, 0.3, 0.6}) {
      CollarData c = m->collar(rho, y);
      Mat fd_r = (m->collar(rho + h, y).h - m->collar(rho - h, y).h) / (2 * h);
      Mat fd_rr = (m->collar(rho + h, y).h_r - m->collar(rho - h, y).h_r) / (2 * h);
      CHECK(max_abs_diff(fd_r, c.h_r) < 1e-6);
      CHECK(max_abs_diff(fd_rr, c.h_rr) < 1e-6);
      for (int a = 0; a < d; ++a) {
        Vec yp = y, ym = y;
        yp(a) += h;
        ym(a) -= h;
        CHECK(max_abs_diff((m->collar(rho, yp).h - m->collar(rho, ym).h) / (2 * h), c.h_y[a]) < 1e-6);
        CHECK(max_abs_diff((m->collar(rho, yp).h_r - m->collar(rho, ym).h_r) / (2 * h), c.h_ry[a]) < 1e-6);
      }
    }
  }
}

TEST_CASE("normal form and positivity at random collar points") {
  Rng rng(7);
  std::vector<MetricPtr> models{cone_circle(), euclidean_plane(), perturbed_circle(1), perturbed_sphere(3),
                                std::make_shared<WarpedProduct>(WarpedProfile::sinh_band(2.0),
                                                                BoundaryManifold::circle(2 * kPi))};
  for (const auto& m : models) {
    int d = m->boundary().dim();
    double worst_nf = 0, min_eig = 1e300;
    for (int i = 0; i < 10000; ++i) {
      double rho = rng.uniform(1e-3, 0.9);
      Vec y = d == 1 ? vec({rng.uniform(0, 2 * kPi)}) : vec({rng.uniform(0.2, kPi - 0.2), rng.uniform(0, 2 * kPi)});
      CollarData c = m->collar(rho, y);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(c.h).eigenvalues().minCoeff());
      if (i % 50 == 0) {
        CoordinateJet j = m->coordinate_jet(rho, y);
        Mat gi = j.g.inverse();
        worst_nf = std::max(worst_nf, std::abs(gi(0, 0) / std::pow(rho, 4) - 1.0));
      }
    }
    CHECK(min_eig > 0);
    CHECK(worst_nf < 1e-12);
  }
}

TEST_CASE("sectional curvature closed forms") {
  SUBCASE("flat plane") {
    auto m = euclidean_plane();
    CHECK(std::abs(sectional_curvature(*m, 0.3, vec({0.2}), vec({1.0, 0.0}), vec({0.0, 1.0})).value) < 1e-12);
  }
  SUBCASE("hyperbolic band of the sinh profile") {
    auto m = std::make_shared<WarpedProduct>(WarpedProfile::sinh_band(2.0), BoundaryManifold::circle(2 * kPi));
    double rho = 1.0 / 2.5;
    SectionalResult r = sectional_curvature(*m, rho, vec({0.4}), vec({1.0, 0.0}), vec({0.0, 1.0}));
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-10));
  }
  SUBCASE("warped products agree with the closed forms") {
    auto base = BoundaryManifold::round_sphere(1.0);
    for (auto p : {WarpedProfile::smoothed_cone(0.5, 1.0, 6.0), WarpedProfile::convex_cone(2.0, 1.0, 3.0),
                   WarpedProfile::sinh_band(2.0)}) {
      auto m = std::make_shared<WarpedProduct>(p, base);
      Vec y = vec({1.0, 0.3});
      for (double r : {1.5, 2.5, 3.7, 5.0, 20.0}) {
        double rho = 1.0 / r;
        ProfileJet f = p.eval(r);
        double tang = (1.0 - f.df * f.df) / (f.f * f.f);
        double radial = -f.d2f / f.f;
        SectionalResult s = sectional_curvature(*m, rho, y, vec({0.0, 1.0, 0.0}), vec({0.0, 0.0, 1.0}));
        SectionalResult z = sectional_curvature(*m, rho, y, vec({1.0, 0.0, 0.0}), vec({0.0, 0.0, 1.0}));
        CHECK(s.route == "slice");
        CHECK(z.route == "mixed");
        double scale = std::max(1.0, std::abs(tang));
        CHECK(std::abs(s.value - tang) <= 1e-10 * scale);
        CHECK(std::abs(z.value - radial) <= 1e-10 * std::max(1.0, std::abs(radial)));
        // same quantities through the full Riemann tensor
        Riemann R = riemann(*m, rho, y);
        CHECK(std::abs(R.sectional(vec({0.0, 1.0, 0.0}), vec({0.0, 0.0, 1.0})) - tang) <= 1e-9 * scale);
        CHECK(std::abs(R.sectional(vec({1.0, 0.0, 0.0}), vec({0.0, 0.0, 1.0})) - radial) <= 1e-9);
      }
    }
  }
  SUBCASE("large-r tangential curvature of the a = 1/2 cone") {
    auto m = std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(0.5, 1.0, 6.0),
                                             BoundaryManifold::round_sphere(1.0));
    double r = 40.0;
    double K = sectional_curvature(*m, 1.0 / r, vec({1.2, 0.5}), vec({0.0, 1.0, 0.0}), vec({0.0, 0.0, 1.0})).value;
    CHECK(K == doctest::Approx(0.75 / (0.25 * r * r)).epsilon(1e-10));
  }
  SUBCASE("closed forms agree with Riemann components on perturbed models") {
    auto m = perturbed_sphere(2);
    Vec y = vec({1.3, 2.0});
    for (double rho : {0.05, 0.2}) {
      Riemann R = riemann(*m, rho, y);
      double a = sectional_curvature(*m, rho, y, vec({0.0, 1.0, 0.0}), vec({0.0, 0.3, 1.0})).value;
      double b = R.sectional(vec({0.0, 1.0, 0.0}), vec({0.0, 0.3, 1.0}));
      CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(b)));
      double c = sectional_curvature(*m, rho, y, vec({1.0, 0.0, 0.0}), vec({0.0, 0.2, 1.0})).value;
      double e = R.sectional(vec({1.0, 0.0, 0.0}), vec({0.0, 0.2, 1.0}));
      CHECK(std::abs(c - e) < 1e-10 * std::max(1.0, std::abs(e)));
    }
  }
}

TEST_CASE("curvature decay fits") {
  std::vector<double> rhos;
  for (int j = 0; j < 8; ++j) rhos.push_back(0.2 * std::pow(0.5, j));
  SUBCASE("exact cone is flat in radial planes") {
    auto m = cone_circle();
    DecayReport r = curvature_decay_rates(*m, {vec({0.1}), vec({2.0})}, rhos);
    CHECK(r.get("K(Z,V)").identically_zero);
    CHECK_FALSE(r.get("K(V,W)").available);
  }
  SUBCASE("order-1 perturbation over the flat torus") {
    auto N = BoundaryManifold::flat_torus(2 * kPi, 2 * kPi);
    Vec k = vec({1.0, 1.0});
    auto w = std::make_shared<TrigFunction>(2, 0.3, std::vector<TrigFunction::Mode>{{k, 0.2, 0.1}});
    auto m = std::make_shared<PerturbedConic>(N, 1, std::make_shared<ConformalBoundaryTensor>(N, w), 0.4, 0.8);
    DecayReport r = curvature_decay_rates(*m, {vec({0.3, 0.2}), vec({1.5, 4.0}), vec({3.0, 1.0})}, rhos);
    CHECK(r.get("K(V,W)").slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK(r.get("K(Z,V)").slope >= 4.0 - 0.1);
    CHECK(r.get("R(V,W,W,Z)").slope >= 3.0 - 0.1);
  }
  SUBCASE("round unit sphere gains an order in K(V,W)") {
    auto m = perturbed_sphere(3);
    DecayReport r = curvature_decay_rates(*m, {vec({0.7, 0.2}), vec({1.6, 3.0}), vec({2.4, 5.0})}, rhos);
    CHECK(r.get("K(V,W)").slope >= 3.0 - 0.1);
  }
  SUBCASE("sampling requirements") {
    auto m = cone_circle();
    CHECK_THROWS_AS(curvature_decay_rates(*m, {vec({0.1})}, {0.1, 0.05, 0.02}), Error);
    CHECK_THROWS_AS(curvature_decay_rates(*m, {vec({0.1})}, {0.1, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03}), Error);
  }
}

TEST_CASE("profiles are C2 and keep their tail") {
  for (auto p : {WarpedProfile::smoothed_cone(0.5, 1.0, 6.0), WarpedProfile::convex_cone(2.0, 1.0, 3.0),
                 WarpedProfile::sinh_band(2.0), WarpedProfile::spherical_cap(1.0, 0.5, 6.0)}) {
    for (const auto& piece : p.pieces()) {
      if (piece.lo <= 0) continue;
      ProfileJet a = p.eval(piece.lo - 1e-9), b = p.eval(piece.lo + 1e-9);
      CHECK(std::abs(a.f - b.f) < 1e-7);
      CHECK(std::abs(a.df - b.df) < 1e-7);
      CHECK(std::abs(a.d2f - b.d2f) < 1e-6);
    }
    ProfileJet t = p.eval(50.0);
    CHECK(t.df == doctest::Approx(p.tail_slope()));
    CHECK(t.d2f == 0.0);
  }
  auto convex = WarpedProfile::convex_cone(2.0, 1.0, 3.0);
  for (double r = 0.01; r < 10; r += 0.01) CHECK(convex.eval(r).d2f >= -1e-12);
}

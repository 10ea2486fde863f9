#include <doctest.h>

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "conic_lens/jacobi.hpp"
#include "conic_lens/profile.hpp"
#include "test_util.hpp"

using namespace conic;
using namespace testutil;

namespace {

namespace odeint = boost::numeric::odeint;

// Warped plane dr^2 + f(r)^2 dtheta^2 with angular momentum L: r'' = L^2 f'/f^3,
// normal Jacobi component u'' = (f''/f) u, u(0) = 0, u'(0) = 1.
std::vector<double> scalar_conjugate_times(const WarpedProfile& p, double r0, double rdot0, double L, double t_max) {
  using S = std::array<double, 4>;
  S x{r0, rdot0, 0.0, 1.0};
  auto sys = [&](const S& s, S& ds, double) {
    ProfileJet j = p.eval(s[0]);
    ds[0] = s[1];
    ds[1] = L * L * j.df / (j.f * j.f * j.f);
    ds[2] = s[3];
    ds[3] = (j.d2f / j.f) * s[2];
  };
  auto st = odeint::make_dense_output(1e-12, 1e-12, odeint::runge_kutta_dopri5<S>());
  st.initialize(x, 0.0, 1e-3);
  std::vector<double> zeros;
  while (st.current_time() < t_max) {
    st.do_step(sys);
    double t0 = st.previous_time(), t1 = st.current_time();
    S a, b = st.current_state();
    st.calc_state(t0, a);
    if (t0 > 1e-6 && a[2] * b[2] < 0) {
      double lo = t0, hi = t1;
      for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        S c;
        st.calc_state(mid, c);
        ((c[2] > 0) == (a[2] > 0) ? lo : hi) = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
  }
  return zeros;
}

MatX mat(int r, int c, std::initializer_list<double> v) {
  MatX m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

MetricPtr warped(const WarpedProfile& p) { return std::make_shared<WarpedProduct>(p, BoundaryManifold::circle(2 * kPi)); }

}  // namespace

TEST_CASE("flat Jacobi fields are affine") {
  auto m = euclidean_plane();
  PhasePoint z0 = on_constraint(*m, 0.3, vec({0.5}), 0.4, 0.0);
  JacobiSolution js = jacobi_integrate(m, z0, mat(1, 2, {1.0, 0.0}), mat(1, 2, {0.5, 1.0}), {.t_max = 5.0});
  for (double t : {0.5, 2.0, 4.5}) {
    MatX U = js.U(t);
    CHECK(U(0, 0) == doctest::Approx(1.0 + 0.5 * t).epsilon(1e-10));
    CHECK(U(0, 1) == doctest::Approx(t).epsilon(1e-10));
    CHECK(js.curvature(t).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(js.frame_drift < 1e-9);
  CHECK(js.speed_drift < 1e-9);
}

TEST_CASE("Jacobi residual, Wronskian and linearity") {
  std::vector<MetricPtr> models{warped(WarpedProfile::smoothed_cone(0.5, 1.0, 6.0)), perturbed_sphere(2)};
  for (const auto& m : models) {
    int n = m->dim();
    PhasePoint z0 = n == 2 ? on_constraint(*m, 0.5, vec({0.2}), 0.6, 0.0) : on_constraint(*m, 0.5, vec({1.1, 0.3}), 0.6, 0.8);
    int k = n - 1;
    MatX U0(k, 2 * k), V0(k, 2 * k);
    U0 << MatX::Identity(k, k), MatX::Zero(k, k);
    V0 << MatX::Zero(k, k), MatX::Identity(k, k);
    // the residual tracks the integration tolerance, not the difference step
    JacobiOptions tight{.rtol = 1e-13, .atol = 1e-14, .t_max = 6.0};
    JacobiSolution js = jacobi_integrate(m, z0, U0, V0, tight);
    std::vector<double> ts{0.7, 2.0, 3.5, 5.2};
    double res = jacobi_residual(js, ts);
    CHECK(res < 1e-8);
    CHECK(res < 0.2 * jacobi_residual(jacobi_integrate(m, z0, U0, V0, {.t_max = 6.0}), ts));
    MatX W0 = wronskian(js, 0.0, k);
    for (double t : ts) CHECK(max_abs_diff(wronskian(js, t, k), W0) < 1e-9);
    // a combined initial condition solves to the combined field
    MatX Uc = 0.3 * U0.leftCols(k) - 1.2 * U0.rightCols(k), Vc = 0.3 * V0.leftCols(k) - 1.2 * V0.rightCols(k);
    JacobiSolution jc = jacobi_integrate(m, z0, Uc, Vc, tight);
    for (double t : ts)
      CHECK(max_abs_diff(jc.U(t), MatX(0.3 * js.U(t).leftCols(k) - 1.2 * js.U(t).rightCols(k))) < 1e-8);
    CHECK(js.frame_drift < 1e-8);
  }
}

TEST_CASE("conjugate times on the a = 0.5 cone match the scalar oracle") {
  WarpedProfile p = WarpedProfile::smoothed_cone(0.5, 1.0, 6.0);
  auto m = warped(p);
  int checked = 0;
  for (double L : {0.05, 0.2, 0.5, 0.9, 1.5, 2.0}) {
    ConjugateScan cs = conjugate_scan(m, vec({0.2}), vec({L}), 1.0 / 6.0, true);
    REQUIRE(cs.crossed);
    REQUIRE(!cs.times.empty());
    std::vector<double> ref =
        scalar_conjugate_times(p, 1.0 / cs.start.rho, -cs.start.xi0, cs.start.eta(0), cs.times.back() + 2.0);
    REQUIRE(ref.size() >= cs.times.size());
    for (size_t i = 0; i < cs.times.size(); ++i) CHECK(std::abs(cs.times[i] - ref[i]) < 1e-6);
    CHECK(cs.frame_drift < 1e-9);
    ++checked;
  }
  CHECK(checked == 6);
  SUBCASE("geodesics that stay outside the window are reported") {
    ConjugateScan cs = conjugate_scan(m, vec({0.2}), vec({3.0}), 1.0 / 6.0, true);
    CHECK(!cs.crossed);
    CHECK(cs.times.empty());
  }
}

TEST_CASE("convex profile has no conjugate points") {
  auto m = warped(WarpedProfile::convex_cone(2.0, 1.0, 3.0));
  for (double L : {0.05, 0.3, 1.0, 2.5}) {
    ConjugateScan cs = conjugate_scan(m, vec({0.2}), vec({L}), 1.0 / 3.0, true);
    CHECK(cs.crossed);
    CHECK(cs.times.empty());
  }
}

TEST_CASE("spherical cap agrees with the oracle") {
  WarpedProfile p = WarpedProfile::spherical_cap(1.2, 0.5, 4.0);
  auto m = warped(p);
  ConjugateScan cs = conjugate_scan(m, vec({0.0}), vec({0.3}), 0.25, true);
  REQUIRE(cs.crossed);
  REQUIRE(!cs.times.empty());
  std::vector<double> ref =
      scalar_conjugate_times(p, 1.0 / cs.start.rho, -cs.start.xi0, cs.start.eta(0), cs.t_window + 30.0);
  REQUIRE(ref.size() >= cs.times.size());
  for (size_t i = 0; i < cs.times.size(); ++i) CHECK(std::abs(cs.times[i] - ref[i]) < 1e-6);
}

TEST_CASE("outgoing Jacobi growth") {
  Rng rng(31);
  GrowthReport r = jacobi_growth_check(perturbed_circle(2), 20, 0.05, 200.0, rng);
  CHECK(r.samples == 20);
  CHECK(r.violations == 0);
  CHECK(std::isfinite(r.C_dot));
  CHECK(std::isfinite(r.C_curv));
  CHECK(r.max_frame_drift < 1e-8);
}

#include <doctest.h>

#include <cmath>

#include "conic_lens/curvature.hpp"
#include "conic_lens/flow.hpp"
#include "test_util.hpp"

using namespace conic;
using namespace testutil;

namespace {

VecX field_vector(const MetricModel& m, const PhasePoint& z) {
  FieldEval f = rescaled_field(m, z);
  PhasePoint dz{f.drho, f.dy, f.dxi0, f.deta};
  return pack(dz);
}

PhasePoint shifted(const PhasePoint& z, const VecX& v, double h, int d) { return unpack(pack(z) + h * v, d); }

}  // namespace

TEST_CASE("rescaled field at the boundary is the limiting field") {
  auto N = BoundaryManifold::round_sphere(1.0);
  auto m = std::make_shared<ExactCone>(N);
  Vec y = vec({0.8, 1.1}), eta = vec({0.6, -1.3});
  FieldEval f = rescaled_field(*m, {0.0, y, 1.0, eta});
  BoundaryJet hi = N.inverse_jet(y);
  CHECK(f.drho == 1.0);
  CHECK(max_abs_diff(f.dy, Vec(hi.v * eta)) < 1e-15);
  CHECK(f.dxi0 == 0.0);
  for (int a = 0; a < 2; ++a) CHECK(f.deta(a) == doctest::Approx(-0.5 * eta.dot(hi.d[a] * eta)).epsilon(1e-14));
}

TEST_CASE("exact cone radial acceleration") {
  Rng rng(3);
  auto N = BoundaryManifold::round_sphere(2.0);
  auto m = std::make_shared<ExactCone>(N);
  for (int i = 0; i < 50; ++i) {
    PhasePoint z{rng.uniform(0, 0.8), vec({rng.uniform(0.3, 2.8), rng.uniform(-3, 3)}), rng.uniform(-1, 1),
                 vec({rng.uniform(-2, 2), rng.uniform(-2, 2)})};
    double e2 = sqr(N.norm(z.y, z.eta));
    CHECK(rescaled_field(*m, z).dxi0 == doctest::Approx(-z.rho * e2).epsilon(1e-13));
  }
}

TEST_CASE("constraint is constant along the field") {
  Rng rng(11);
  for (const auto& m : {perturbed_circle(1), perturbed_sphere(2)}) {
    int d = m->boundary().dim();
    for (int i = 0; i < 20; ++i) {
      Vec y = d == 1 ? vec({rng.uniform(0, 6)}) : vec({rng.uniform(0.4, 2.7), rng.uniform(-3, 3)});
      PhasePoint z = on_constraint(*m, rng.uniform(0.01, 0.7), y, rng.uniform(-0.9, 0.9), rng.uniform(0, 6));
      CHECK(constraint(*m, z) == doctest::Approx(1.0).epsilon(1e-13));
      VecX v = field_vector(*m, z);
      // step scaled to the field so the stencil sees a smooth function
      const double h = 1e-3 / v.norm();
      auto C = [&](double t) { return constraint(*m, shifted(z, v, t, d)); };
      double dC = (8 * (C(h) - C(-h)) - (C(2 * h) - C(-2 * h))) / (12 * h);
      CHECK(std::abs(dC) < 1e-7 * v.norm());
    }
  }
}

TEST_CASE("exact cone trajectories follow the closed form") {
  auto N = BoundaryManifold::circle(2 * kPi);
  auto m = std::make_shared<ExactCone>(N);
  Vec y0 = vec({0.4}), eta0 = vec({2.0});
  Trajectory tr = trace(m, y0, eta0);
  REQUIRE(tr.exited());
  CHECK(std::abs(tr.tau_plus() - kPi / 2) < 1e-9);
  PhasePoint end = tr.end_point();
  CHECK(std::abs(end.rho) < 1e-10);
  CHECK(std::abs(end.xi0 + 1.0) < 1e-8);
  double worst = 0, rho_max = 0;
  for (int k = 0; k <= 200; ++k) {
    double t = tr.t_end * k / 200.0;
    PhasePoint z = tr.point(t), ref = exact_cone_solution(N, y0, eta0, t);
    worst = std::max({worst, std::abs(z.rho - ref.rho), std::abs(z.xi0 - ref.xi0), N.difference(z.y, ref.y).norm(),
                      (z.eta - ref.eta).norm()});
    rho_max = std::max(rho_max, z.rho);
    CHECK(std::abs(N.norm(z.y, z.eta) - 2.0) < 1e-12);
  }
  CHECK(worst < 1e-8);
  CHECK(rho_max == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(tr.max_drift <= 1e-9 * (1 + tr.tau_plus()));
}

TEST_CASE("euclidean lines have antipodal ends") {
  auto m = euclidean_plane();
  for (double e : {0.3, 1.0, 4.0}) {
    Trajectory tr = trace(m, vec({1.0}), vec({e}));
    REQUIRE(tr.exited());
    PhasePoint z = tr.end_point();
    CHECK(std::abs(wrap_angle(z.y(0) - 1.0 - kPi)) < 1e-8);
    CHECK(std::abs(z.eta(0) - e) < 1e-8);
  }
}

TEST_CASE("rho grows like tau near the entry") {
  auto m = perturbed_circle(1);
  FlowOptions o;
  o.keep_dense = true;
  Trajectory tr = trace(m, vec({0.3}), vec({1.5}), {}, o);
  std::vector<double> lx, ly;
  for (double t : {0.02, 0.015, 0.01, 0.007, 0.005, 0.0035}) {
    double r = tr.point(t).rho;
    lx.push_back(std::log(t));
    ly.push_back(std::log(std::abs(r - t)));
  }
  CHECK(fit_line(lx, ly).slope == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("flow property and time reversal") {
  Rng rng(5);
  std::vector<MetricPtr> models{perturbed_circle(1), perturbed_sphere(2),
                                std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(2.0, 1.0, 3.0),
                                                                BoundaryManifold::circle(2 * kPi))};
  FlowOptions o;
  o.stop_at_boundary = false;
  o.keep_dense = false;
  for (const auto& m : models) {
    int d = m->boundary().dim();
    for (int i = 0; i < 5; ++i) {
      Vec y = d == 1 ? vec({rng.uniform(0, 6)}) : vec({rng.uniform(0.5, 2.6), rng.uniform(-3, 3)});
      PhasePoint z = on_constraint(*m, rng.uniform(0.1, 0.5), y, rng.uniform(-0.5, 0.5), rng.uniform(0, 6));
      double t1 = rng.uniform(0.05, 0.3), t2 = rng.uniform(0.05, 0.3);
      PhasePoint a = integrate(m, integrate(m, z, t1, {}, o).end_point(), t2, {}, o).end_point();
      PhasePoint b = integrate(m, z, t1 + t2, {}, o).end_point();
      CHECK((pack(a) - pack(b)).norm() < 1e-8);
      PhasePoint back = integrate(m, time_reversed(b), t1 + t2, {}, o).end_point();
      CHECK((pack(time_reversed(back)) - pack(z)).norm() < 1e-8);
    }
  }
}

TEST_CASE("outgoing lower bounds of the radial decay") {
  Rng rng(17);
  SUBCASE("exact cone") {
    AsymptoticReport r = asymptotic_bounds_check(cone_circle(), 30, 0.05, 1e4, rng);
    CHECK(r.samples == 30);
    CHECK(r.lower_violations == 0);
    CHECK(r.worst_lower_gap >= -1e-8);
    CHECK(r.max_tail_slope <= -2.0 + 0.1);
  }
  SUBCASE("warped a = 2 cone") {
    auto m = std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(2.0, 1.0, 3.0),
                                             BoundaryManifold::circle(2 * kPi));
    AsymptoticReport r = asymptotic_bounds_check(m, 100, 0.05, 1e4, rng);
    CHECK(r.lower_violations == 0);
    CHECK(r.max_tail_slope <= -2.0 + 0.1);
    CHECK(r.C_eta < 10.0);
  }
  SUBCASE("sphere starts heading for a pole are redrawn") {
    Rng r3(3);
    AsymptoticReport r = asymptotic_bounds_check(perturbed_sphere(2), 250, 0.05, 1e4, r3);
    CHECK(r.samples == 250);
    CHECK(r.redrawn > 0);
    CHECK(r.lower_violations == 0);
  }
  SUBCASE("radial data is the equality case") {
    auto m = cone_circle();
    FlowOptions o;
    o.mode = TimeMode::T;
    o.stop_at_boundary = false;
    PhasePoint z{0.04, vec({0.2}), -1.0, vec({0.0})};
    Trajectory tr = integrate(m, z, 500.0, {}, o);
    CHECK(tr.end_point().rho == doctest::Approx(0.04 / (1 + 0.04 * 500.0)).epsilon(1e-10));
  }
}

TEST_CASE("large-eta trajectories approach the limiting dynamic") {
  std::vector<double> eps = dyadic(0.2, 5);
  SUBCASE("exact cone is the limiting model") {
    TildeReport r = tilde_dynamic_check(cone_circle(), vec({0.1}), vec({1.0}), eps);
    for (size_t i = 0; i < eps.size(); ++i) {
      CHECK(r.sup_rho_err[i] < 1e-9);
      CHECK(r.sup_xi_err[i] < 1e-8);
      CHECK(r.tau_err[i] < 1e-8);
    }
  }
  SUBCASE("first-order perturbation") {
    TildeReport r = tilde_dynamic_check(perturbed_circle(1), vec({0.1}), vec({1.0}), eps);
    CHECK(r.slope_rho >= 0.9);
    CHECK(r.slope_xi >= 0.9);
    CHECK(r.slope_tau >= 0.9);
    CHECK(r.C_rho_max < 2.0);
  }
}

TEST_CASE("guards produce the trapped sentinel") {
  FlowOptions o;
  o.tau_max = 0.1;
  Trajectory tr = trace(cone_circle(), vec({0.0}), vec({1.0}), {}, o);
  CHECK(tr.status == TrajStatus::Trapped);
  CHECK(to_string(tr.status) == "trapped");
}

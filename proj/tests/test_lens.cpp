#include <doctest.h>

#include <cmath>

#include "conic_lens/lens.hpp"
#include "test_util.hpp"

using namespace conic;
using namespace testutil;

namespace {

MetricPtr cone_a2() {
  return std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(2.0, 1.0, 3.0), BoundaryManifold::circle(2 * kPi));
}

std::shared_ptr<const CartesianBump> plane_bump() {
  return std::make_shared<CartesianBump>(BoundaryKind::Circle, vec({1.6, 0.9}), 1.2, 1.0);
}

}  // namespace

TEST_CASE("exact cones scatter by half a turn") {
  Rng rng(21);
  for (double len : {2 * kPi, 3.0, 9.0}) {
    auto m = cone_circle(len);
    const BoundaryManifold& N = m->boundary();
    for (int i = 0; i < 12; ++i) {
      Vec y0 = vec({rng.uniform(0, len)});
      double e = rng.uniform(0.2, 5.0) * (i % 2 ? -1 : 1);
      ScatterResult s = scattering_map(m, y0, vec({e}));
      REQUIRE(s.ok());
      // angle coordinate with h = c^2 dtheta^2: arclength pi at speed |e| / c
      double c = len / (2 * kPi);
      Vec y1 = vec({y0(0) + (e > 0 ? 1 : -1) * kPi / c});
      CHECK(N.difference(s.y1, y1).norm() < 1e-9);
      CHECK(std::abs(s.eta1(0) - e) < 1e-9);
      CHECK(std::abs(s.tau_plus - kPi * c / std::abs(e)) < 1e-9);
    }
  }
}

TEST_CASE("euclidean plane has zero renormalized length") {
  auto m = euclidean_plane();
  for (double e : {0.5, 1.0, 3.0}) {
    for (LengthMethod meth : {LengthMethod::CutExtrapolation, LengthMethod::TauSubtraction, LengthMethod::Flux}) {
      LensRecord r = renormalized_length(m, vec({0.3}), vec({e}), meth);
      REQUIRE(r.ok());
      INFO(to_string(meth), " eta ", e);
      CHECK(std::abs(r.L) < 1e-6);
    }
  }
}

TEST_CASE("scattering reverses under eta -> -eta") {
  Rng rng(22);
  for (const auto& m : {cone_a2(), perturbed_circle(1), perturbed_circle(2)}) {
    const BoundaryManifold& N = m->boundary();
    for (int i = 0; i < 8; ++i) {
      Vec y0 = vec({rng.uniform(0, 2 * kPi)}), eta0 = vec({rng.uniform(0.3, 4.0)});
      ScatterResult s = scattering_map(m, y0, eta0);
      REQUIRE(s.ok());
      ScatterResult b = scattering_map(m, s.y1, -s.eta1);
      REQUIRE(b.ok());
      CHECK(phase_distance(N, b.y1, b.eta1, y0, -eta0) < 1e-7);
    }
  }
}

TEST_CASE("length methods agree on the a = 2 cone") {
  auto m = cone_a2();
  for (double e : {0.6, 2.0, 5.0}) {
    Vec y0 = vec({0.3}), eta0 = vec({e});
    LensRecord c = renormalized_length(m, y0, eta0, LengthMethod::CutExtrapolation);
    LensRecord t = renormalized_length(m, y0, eta0, LengthMethod::TauSubtraction);
    LensRecord f = renormalized_length(m, y0, eta0, LengthMethod::Flux);
    CHECK(std::abs(c.L - t.L) < 1e-6);
    CHECK(std::abs(c.L - f.L) < 1e-6);
    CHECK(c.order == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("boundary defining function shifts the length by a(y0) + a(y1)") {
  auto m = cone_a2();
  std::vector<std::shared_ptr<const TrigFunction>> as{
      trig1(0.2, {{vec({1.0}), 0.3, 0.1}, {vec({2.0}), 0.1, 0.5}}), trig1(-0.4, {{vec({1.0}), 0.6, 1.3}}),
      trig1(0.0, {{vec({3.0}), 0.25, 0.0}})};
  for (const auto& a : as) {
    for (double e : {0.6, 2.5}) {
      Vec y0 = vec({0.3}), eta0 = vec({e});
      LensRecord c = renormalized_length(m, y0, eta0, LengthMethod::CutExtrapolation);
      LensRecord ca = renormalized_length(m, y0, eta0, LengthMethod::CutExtrapolation, {}, a);
      double pred = a->eval(y0).v + a->eval(c.scatter.y1).v;
      INFO("a(y0) ", a->eval(y0).v, " eta ", e, " L ", c.L, " La ", ca.L, " pred ", pred);
      CHECK(std::abs((ca.L - c.L) - pred) < 1e-6);
    }
  }
}

TEST_CASE("scattering map preserves the symplectic volume") {
  auto m = cone_a2();
  for (double e : {0.5, 1.7, 4.0}) CHECK(std::abs(scattering_jacobian_det(m, vec({0.9}), vec({e})) - 1.0) < 1e-4);
  CHECK(std::abs(scattering_jacobian_det(perturbed_circle(1), vec({2.0}), vec({1.2})) - 1.0) < 1e-4);
}

TEST_CASE("a conformal bump that is missed changes nothing") {
  auto base = euclidean_plane();
  auto bumped = std::make_shared<ConformalBump>(base, plane_bump(), 0.3);
  // impact parameter |eta| = 6 keeps the line outside r <= 3.1
  for (double y : {0.0, 1.5, 4.0}) {
    Vec y0 = vec({y}), eta0 = vec({6.0});
    ScatterResult a = scattering_map(base, y0, eta0), b = scattering_map(bumped, y0, eta0);
    CHECK(phase_distance(base->boundary(), a.y1, a.eta1, b.y1, b.eta1) < 1e-8);
    double La = renormalized_length(base, y0, eta0, LengthMethod::Flux).L;
    double Lb = renormalized_length(bumped, y0, eta0, LengthMethod::Flux).L;
    CHECK(std::abs(La - Lb) < 1e-8);
  }
  SUBCASE("and one that is hit does change it") {
    Vec y0 = vec({0.1}), eta0 = vec({0.6});
    double La = renormalized_length(base, y0, eta0, LengthMethod::Flux).L;
    double Lb = renormalized_length(bumped, y0, eta0, LengthMethod::Flux).L;
    CHECK(std::abs(La - Lb) > 1e-3);
  }
}

TEST_CASE("first variation of the length is half the x-ray of q") {
  auto base = euclidean_plane();
  Mat Q(2, 2);
  Q << 0.7, 0.2, 0.2, -0.4;
  TensorBump frame(base, plane_bump(), Q, 0.0);
  TensorBump conf(base, plane_bump(), 0.0);
  std::vector<double> steps{0.04, 0.02, 0.01};
  for (const TensorBump* fam : {&frame, &conf}) {
    for (auto [y, e] : {std::pair{0.1, 0.3}, {0.1, 0.6}, {-0.4, 1.0}}) {
      VariationResult r = lens_variation(*fam, vec({y}), vec({e}), steps);
      REQUIRE(std::abs(r.I2) > 0.1);
      CHECK(std::abs(r.I2 - r.I2_direct) < 1e-8);
      CHECK(r.dLds / r.I2 == doctest::Approx(0.5).epsilon(1e-4));
    }
  }
  SUBCASE("zero perturbation") {
    TensorBump zero(base, plane_bump(), Mat::Zero(2, 2), 0.0);
    VariationResult r = lens_variation(zero, vec({0.1}), vec({0.6}), steps);
    CHECK(std::abs(r.dLds) < 1e-12);
    CHECK(std::abs(r.I2) < 1e-14);
  }
  SUBCASE("one step is not enough") { CHECK_THROWS_AS(lens_variation(frame, vec({0.1}), vec({0.6}), {0.01}), Error); }
}

TEST_CASE("large-eta scattering approaches the boundary flow") {
  std::vector<double> eps = dyadic(0.2, 5);
  LargeEtaStudy ex = scattering_large_eta(cone_circle(), vec({0.4}), vec({1.0}), eps);
  for (double g : ex.gaps) CHECK(g < 1e-8);
  LargeEtaStudy p = scattering_large_eta(perturbed_circle(1), vec({0.4}), vec({1.0}), eps);
  CHECK(p.slope >= 0.9);
}

#include <doctest.h>

#include <cmath>

#include "conic_lens/curvature.hpp"
#include "conic_lens/tensor.hpp"
#include "conic_lens/xray.hpp"
#include "test_util.hpp"

using namespace conic;
using namespace testutil;

namespace {

// x_1 = cos(y) / rho on the plane
class FirstCoordinate : public ScalarField {
 public:
  ScalarJet eval(double rho, const Vec& y) const override {
    ScalarJet j = ScalarJet::zero(2);
    double c = std::cos(y(0)), s = std::sin(y(0));
    j.v = c / rho;
    j.g = vec({-c / (rho * rho), -s / rho});
    j.H(0, 0) = 2 * c / (rho * rho * rho);
    j.H(0, 1) = j.H(1, 0) = s / (rho * rho);
    j.H(1, 1) = -c / rho;
    return j;
  }
};

TensorJet basis(int n, std::initializer_list<std::pair<std::vector<int>, double>> entries, int m) {
  TensorJet t = TensorJet::zero(n, m);
  for (const auto& [idx, val] : entries) t.v[TensorJet::index(n, idx.data(), m)] = val;
  return t;
}

std::shared_ptr<const TrigFunction> one() { return trig1(1.0, {}); }

}  // namespace

TEST_CASE("symmetrization is a projection") {
  Rng rng(2);
  TensorJet t = TensorJet::zero(3, 3);
  for (int k = 0; k < t.size(); ++k) t.v[k] = rng.uniform(-1, 1);
  TensorJet s = symmetrize(t), ss = symmetrize(s);
  double worst = 0;
  for (int k = 0; k < t.size(); ++k) worst = std::max(worst, std::abs(s.v[k] - ss.v[k]));
  CHECK(worst < 1e-12);
  int a[3] = {0, 1, 2}, b[3] = {2, 0, 1};
  CHECK(s.v[TensorJet::index(3, a, 3)] == doctest::Approx(s.v[TensorJet::index(3, b, 3)]));
}

TEST_CASE("lift basics") {
  auto m = cone_circle();
  Rng rng(9);
  SUBCASE("scalars ignore the covector") {
    TensorJet c = TensorJet::zero(2, 0);
    c.v[0] = 1.0;
    auto f = collar_tensor(trig1(0.5, {{vec({1.0}), 0.3, 0.0}}), 2, 0, c, 0.0);
    PhasePoint a = on_constraint(*m, 0.3, vec({1.0}), 0.2, 0.0), b = on_constraint(*m, 0.3, vec({1.0}), -0.7, 3.0);
    CHECK(lift(*f, a, rescaled_field(*m, a)) == lift(*f, b, rescaled_field(*m, b)));
  }
  SUBCASE("the metric lifts to one on the unit bundle") {
    auto g = collar_tensor(one(), 2, 2, basis(2, {{{0, 0}, 1.0}, {{1, 1}, 1.0}}, 2), 0.0, "g");
    for (int i = 0; i < 20; ++i) {
      PhasePoint z = on_constraint(*m, rng.uniform(0, 1), vec({rng.uniform(0, 6)}), rng.uniform(-1, 1),
                                   rng.uniform(0, 6));
      CHECK(lift(*g, z, rescaled_field(*m, z)) == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  SUBCASE("tangentiality depth shifts the decay exponent") {
    auto tang = collar_tensor(one(), 2, 2, basis(2, {{{1, 1}, 1.0}}, 2), 0.0);
    auto mixed = collar_tensor(one(), 2, 2, basis(2, {{{0, 1}, 1.0}}, 2), 0.0);
    std::vector<double> lx, lt, lm;
    for (double rho : {0.1, 0.05, 0.02, 0.01, 0.005}) {
      PhasePoint z{rho, vec({0.4}), 0.6, vec({1.3})};
      FieldEval fe = rescaled_field(*m, z);
      lx.push_back(std::log(rho));
      lt.push_back(std::log(std::abs(lift(*tang, z, fe))));
      lm.push_back(std::log(std::abs(lift(*mixed, z, fe))));
    }
    CHECK(fit_line(lx, lt).slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK(fit_line(lx, lm).slope == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("symmetrized covariant derivative") {
  SUBCASE("flat gradient of a coordinate") {
    auto plane = euclidean_plane();
    TensorJet c = TensorJet::zero(2, 0);
    c.v[0] = 1.0;
    auto u = scalar_times_constant(std::make_shared<FirstCoordinate>(), 2, 0, c);
    auto Du = sym_derivative(plane, u);
    for (double rho : {0.2, 0.7}) {
      for (double y : {0.3, 2.0}) {
        TensorJet d = Du->eval(rho, vec({y}));
        CHECK(d.v[0] == doctest::Approx(-std::cos(y)).epsilon(1e-12));
        CHECK(d.v[1] == doctest::Approx(-std::sin(y)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("covariant derivative of drho/rho^2 on the exact cone") {
    auto N = BoundaryManifold::circle(3.0);
    auto m = std::make_shared<ExactCone>(N);
    auto e0 = collar_tensor(one(), 2, 1, basis(2, {{{0}, 1.0}}, 1), 0.0);
    auto D = sym_derivative(m, e0);
    double rho = 0.3;
    Vec y = vec({1.0});
    TensorJet d = D->eval(rho, y);
    double h0 = N.metric(y)(0, 0);
    // -h0 / rho in coordinates is -rho h0 in the scattering frame
    CHECK(d.v[3] == doctest::Approx(-rho * h0).epsilon(1e-12));
    CHECK(std::abs(d.v[0]) < 1e-12);
    CHECK(std::abs(d.v[1]) < 1e-12);
  }
  SUBCASE("X pi^* u = pi^* D u along trajectories") {
    auto m = std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(2.0, 1.0, 3.0),
                                             BoundaryManifold::circle(2 * kPi));
    auto bump = std::make_shared<CartesianBump>(BoundaryKind::Circle, vec({1.6, 0.9}), 1.2, 1.0);
    TensorJet s0 = TensorJet::zero(2, 0);
    s0.v[0] = 1.0;
    std::vector<TensorFieldPtr> us{scalar_times_constant(bump, 2, 0, s0),
                                   scalar_times_constant(bump, 2, 1, basis(2, {{{0}, 0.4}, {{1}, -0.9}}, 1))};
    for (const auto& u : us) {
      auto Du = sym_derivative(m, u);
      Trajectory tr = trace(m, vec({2.0}), vec({0.7}));
      REQUIRE(tr.exited());
      double worst = 0;
      for (int k = 1; k < 40; ++k) {
        double t = tr.t_end * k / 40.0, h = 1e-4;
        auto val = [&](double s) {
          VecX x = tr.state_exact(s);
          PhasePoint z = unpack(x, 1);
          return lift(*u, z, rescaled_field(*m, z));
        };
        PhasePoint z = tr.point(t);
        double fd = (val(t + h) - val(t - h)) / (2 * h);
        worst = std::max(worst, std::abs(fd - xray_density(*Du, z, rescaled_field(*m, z))));
      }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("gauge normalization") {
  auto m = perturbed_circle(2);
  std::vector<double> rhos{0.02, 0.1, 0.3};
  std::vector<Vec> ys{vec({0.3}), vec({2.5}), vec({4.4})};
  SUBCASE("tangential tensors need no potential") {
    auto f = collar_tensor(trig1(1.0, {{vec({1.0}), 0.4, 0.0}}), 2, 1, basis(2, {{{1}, 1.0}}, 1), 3.0);
    GaugeResult g = gauge_normalize(m, f);
    for (double r : rhos) CHECK(g.potential->eval(r, ys[0]).v[0] == 0.0);
    CHECK(g.transversal_residual(rhos, ys) < 1e-12);
  }
  SUBCASE("explicit antiderivative") {
    for (double k : {2.5, 3.0, 4.0}) {
      auto f = collar_tensor(one(), 2, 1, basis(2, {{{0}, 1.0}}, 1), k);
      GaugeResult g = gauge_normalize(m, f);
      for (double r : rhos)
        CHECK(g.potential->eval(r, ys[1]).v[0] == doctest::Approx(std::pow(r, k - 1) / (k - 1)).epsilon(1e-10));
    }
  }
  SUBCASE("transversal components are killed") {
    auto w = trig1(0.7, {{vec({1.0}), 0.5, 0.2}, {vec({2.0}), 0.2, 1.0}});
    auto f1 = collar_tensor(w, 2, 1, basis(2, {{{0}, 1.0}, {{1}, 0.5}}, 1), 3.0);
    auto f2 = collar_tensor(w, 2, 2, basis(2, {{{0, 0}, 1.0}, {{0, 1}, 0.3}, {{1, 0}, 0.3}, {{1, 1}, -0.2}}, 2), 3.0);
    CHECK(gauge_normalize(m, f1).transversal_residual(rhos, ys) < 1e-8);
    CHECK(gauge_normalize(m, f2).transversal_residual(rhos, ys) < 1e-8);
  }
  SUBCASE("x-ray is invariant under the gauge") {
    auto mw = std::make_shared<WarpedProduct>(WarpedProfile::smoothed_cone(2.0, 1.0, 3.0),
                                              BoundaryManifold::circle(2 * kPi));
    auto f = collar_tensor(trig1(0.7, {{vec({1.0}), 0.5, 0.2}}), 2, 1, basis(2, {{{0}, 1.0}, {{1}, 0.5}}, 1), 3.0);
    GaugeResult g = gauge_normalize(mw, f);
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
      Vec y0 = vec({rng.uniform(0, 2 * kPi)}), eta0 = vec({rng.uniform(0.5, 6.0) * (i % 2 ? 1 : -1)});
      double a = xray(mw, *f, y0, eta0).value, b = xray(mw, *g.residual, y0, eta0).value;
      CHECK(std::abs(a - b) < 1e-7);
    }
  }
  SUBCASE("errors") {
    auto f3 = collar_tensor(one(), 2, 3, basis(2, {{{0, 0, 0}, 1.0}}, 3), 3.0);
    CHECK_THROWS_AS(gauge_normalize(m, f3), Error);
    auto weak = collar_tensor(one(), 2, 1, basis(2, {{{0}, 1.0}}, 1), 1.5);
    try {
      gauge_normalize(m, weak);
      FAIL("expected a decay error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Decay);
    }
  }
}

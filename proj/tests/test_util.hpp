#pragma once

#include <doctest.h>

#include <cmath>
#include <memory>

#include "conic_lens/metric.hpp"
#include "conic_lens/profile.hpp"

namespace testutil {

using namespace conic;

inline std::shared_ptr<const TrigFunction> trig1(double c0, std::vector<TrigFunction::Mode> modes) {
  return std::make_shared<TrigFunction>(1, c0, std::move(modes));
}

inline MetricPtr euclidean_plane() {
  return std::make_shared<WarpedProduct>(WarpedProfile::euclidean(), BoundaryManifold::circle(2 * kPi));
}

inline MetricPtr cone_circle(double length = 2 * kPi) {
  return std::make_shared<ExactCone>(BoundaryManifold::circle(length));
}

inline MetricPtr perturbed_circle(int m, double c0 = 0.3, double amp = 0.2) {
  auto N = BoundaryManifold::circle(2 * kPi);
  auto w = trig1(c0, {{vec({1.0}), amp, 0.3}});
  return std::make_shared<PerturbedConic>(N, m, std::make_shared<ConformalBoundaryTensor>(N, w), 0.4, 0.8);
}

inline MetricPtr perturbed_sphere(int m) {
  auto N = BoundaryManifold::round_sphere(1.0);
  Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
  B(0, 1) = B(1, 0) = 0.2;
  B(2, 2) = 0.1;
  auto w = std::make_shared<SphereQuadratic>(0.3, Eigen::Vector3d(0.2, -0.1, 0.3), B);
  return std::make_shared<PerturbedConic>(N, m, std::make_shared<ConformalBoundaryTensor>(N, w), 0.4, 0.8);
}

// max |a - b| entrywise
template <class A, class B>
double max_abs_diff(const A& a, const B& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil

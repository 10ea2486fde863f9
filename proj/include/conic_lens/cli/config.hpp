#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conic_lens/metric.hpp"

namespace conic::cli {

struct MetricConfig {
  std::string family = "exact-cone";  // exact-cone | warped-product | perturbed-conic | conformal-bump
  std::string boundary = "circle";    // circle | sphere | torus
  double size = 2.0 * kPi;            // circle length, sphere radius or torus period
  // warped-product
  std::string profile = "euclidean";  // euclidean | smoothed-cone | convex-cone | sinh-band | spherical-cap
  double a = 1.0, r1 = 1.0, R0 = 3.0, rc = 1.0;
  // perturbed-conic: h = h0 + rho^order chi(rho) P, P = (c0 + amp cos(k.y)) h0
  int order = 2;
  double p_c0 = 0.3, p_amp = 0.2;
  int p_mode = 1;
  double cut_lo = 0.4, cut_hi = 0.8;
  // conformal-bump over a warped base
  std::vector<double> bump_center{2.0, 0.5};
  double bump_radius = 1.0, bump_amp = 0.5, bump_scale = 1.0;
};

struct SweepConfig {
  std::string kind = "grid";  // grid | random
  int count = 16;
  std::uint64_t seed = 1;
  double eta_min = 0.5, eta_max = 4.0;
};

// Task parameters; each task reads the keys it needs.
struct TaskConfig {
  std::string method = "cut";             // length: cut | tau | flux | compare
  std::string field = "bump";             // xray: bump | collar | gauge1
  double k = 3.0;                         // limits: weight exponent
  std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125};
  std::vector<double> rhos{0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
  double rho_window = 0.0;                // conjugate: 0 picks 1 / R0
  bool flat_exterior = true;
  std::vector<double> steps{0.02, 0.01, 0.005};
  std::vector<double> q{0.7, 0.2, -0.4};  // variation: upper triangle of the frame-constant bump tensor
  int m = 2;                              // perturb: order
};

struct OutputConfig {
  std::string csv = "rows.csv";
  std::string json = "summary.json";
  std::string dense;  // optional dense-trajectory CSV (trace)
};

struct ExperimentConfig {
  std::string task;
  MetricConfig metric;
  SweepConfig sweep;
  TaskConfig params;
  OutputConfig output;
  std::uint64_t hash = 0;  // FNV-1a of the config text
};

extern const std::vector<std::string> kTasks;

// Throws Error(Config) with a message naming the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& task);
ExperimentConfig load_config(const std::string& path, const std::string& task);

std::uint64_t fnv1a(const std::string& bytes);

BoundaryManifold build_boundary(const MetricConfig& m);
MetricPtr build_metric(const MetricConfig& m);

struct Entry {
  Vec y0, eta0;
};
std::vector<Entry> build_sweep(const SweepConfig& s, const BoundaryManifold& N);

}  // namespace conic::cli

#include "conic_lens/cli/run.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "conic_lens/curvature.hpp"
#include "conic_lens/jacobi.hpp"
#include "conic_lens/lens.hpp"
#include "conic_lens/linearized.hpp"
#include "conic_lens/profile.hpp"
#include "conic_lens/xray.hpp"

namespace conic::cli {

using json = nlohmann::json;
using Row = std::vector<std::string>;

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

struct TaskOutput {
  Row header;
  std::vector<Row> rows;
  json fitted = json::object();
  std::vector<Assertion> checks;
  int failures = 0;
  Row dense_header;
  std::vector<Row> dense_rows;
};

// Per-entry result: a row, or the error that prevented it.
struct Cell {
  Row row;
  std::vector<double> values;  // numbers used for the summary
  std::vector<Row> dense;
  std::string error;
  int error_kind = -1;
};

std::vector<Cell> parallel_map(int count, int jobs, const std::function<Cell(int)>& f) {
  std::vector<Cell> out(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[i] = f(i);
      } catch (const Error& e) {
        out[i].error = e.what();
        out[i].error_kind = static_cast<int>(e.kind());
      } catch (const std::exception& e) {
        out[i].error = e.what();
        out[i].error_kind = static_cast<int>(ErrorKind::Integration);
      }
    }
  };
  int n = std::max(1, std::min(jobs, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

void add_vec(Row& r, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) r.push_back(fmt_num(v(i)));
}

Row entry_header(int d) {
  Row h{"index"};
  for (int i = 0; i < d; ++i) h.push_back("y0_" + std::to_string(i));
  for (int i = 0; i < d; ++i) h.push_back("eta0_" + std::to_string(i));
  return h;
}

Row entry_row(int i, const Entry& e) {
  Row r{std::to_string(i)};
  add_vec(r, e.y0);
  add_vec(r, e.eta0);
  return r;
}

Row blank_tail(const Row& header, const Row& row, const std::string& status) {
  Row r = row;
  while (r.size() + 1 < header.size()) r.push_back("");
  r.push_back(status);
  return r;
}

// Gathers cells into rows; failed entries keep their entry columns and
// carry the error in the status column.
void collect(TaskOutput& out, const std::vector<Entry>& entries, std::vector<Cell>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    Cell& c = cells[i];
    if (!c.error.empty()) {
      ++out.failures;
      spdlog::warn("entry {}: {}", i, c.error);
      out.rows.push_back(blank_tail(out.header, entry_row(static_cast<int>(i), entries[i]), "error: " + c.error));
      continue;
    }
    out.rows.push_back(c.row);
    for (auto& d : c.dense) out.dense_rows.push_back(std::move(d));
  }
}

void check(TaskOutput& out, std::string name, std::string anchor, double value, double tol, bool pass) {
  out.checks.push_back({std::move(name), std::move(anchor), pass, value, tol});
}

bool is_euclidean(const ExperimentConfig& c) {
  return c.metric.family == "warped-product" && c.metric.profile == "euclidean";
}

Vec unit(const BoundaryManifold& N, const Entry& e) { return e.eta0 / N.norm(e.y0, e.eta0); }

// --- tasks ---

TaskOutput task_trace(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  int d = model->boundary().dim();
  TaskOutput out;
  out.header = entry_header(d);
  for (int i = 0; i < d; ++i) out.header.push_back("y1_" + std::to_string(i));
  for (int i = 0; i < d; ++i) out.header.push_back("eta1_" + std::to_string(i));
  for (const char* h : {"tau_plus", "drift", "drift_per_tau", "steps", "status"}) out.header.push_back(h);
  out.dense_header = {"index", "tau", "rho", "xi0"};
  for (int i = 0; i < d; ++i) out.dense_header.push_back("y_" + std::to_string(i));
  for (int i = 0; i < d; ++i) out.dense_header.push_back("eta_" + std::to_string(i));
  bool dense = !cfg.output.dense.empty();
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    FlowOptions fo;
    fo.keep_dense = dense;
    Trajectory tr = trace(model, e.y0, e.eta0, {}, fo);
    Cell c;
    c.row = entry_row(i, e);
    PhasePoint z = tr.end_point();
    add_vec(c.row, model->boundary().canonical(z.y));
    add_vec(c.row, z.eta);
    double span = std::max(tr.tau_plus(), 1e-300);
    c.row.insert(c.row.end(), {fmt_num(tr.tau_plus()), fmt_num(tr.max_drift), fmt_num(tr.max_drift / std::max(span, 1.0)),
                               std::to_string(tr.sol.accepted), to_string(tr.status)});
    c.values = {tr.max_drift / std::max(span, 1.0)};
    if (dense) {
      for (int k = 0; k <= 64; ++k) {
        double t = tr.t_start + (tr.t_end - tr.t_start) * k / 64.0;
        PhasePoint p = tr.point(t);
        Row r{std::to_string(i), fmt_num(t), fmt_num(p.rho), fmt_num(p.xi0)};
        add_vec(r, p.y);
        add_vec(r, p.eta);
        c.dense.push_back(r);
      }
    }
    return c;
  });
  double worst = 0;
  for (const auto& c : cells)
    if (c.error.empty()) worst = std::max(worst, c.values[0]);
  collect(out, entries, cells);
  out.fitted["max_drift_per_tau"] = worst;
  check(out, "constraint drift", "Hamiltonian constraint conserved along the rescaled flow", worst, 1e-9, worst <= 1e-9);
  return out;
}

TaskOutput task_scatter(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim();
  bool cone = cfg.metric.family == "exact-cone";
  bool euclid = is_euclidean(cfg) && d == 1;
  TaskOutput out;
  out.header = entry_header(d);
  for (int i = 0; i < d; ++i) out.header.push_back("y1_" + std::to_string(i));
  for (int i = 0; i < d; ++i) out.header.push_back("eta1_" + std::to_string(i));
  for (const char* h : {"tau_plus", "L_g", "drift", "oracle_error", "status"}) out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    LensRecord rec = renormalized_length(model, e.y0, e.eta0, LengthMethod::Flux);
    const ScatterResult& s = rec.scatter;
    Cell c;
    c.row = entry_row(i, e);
    double err = std::nan("");
    if (s.ok()) {
      add_vec(c.row, s.y1);
      add_vec(c.row, s.eta1);
      if (cone) {
        double mag = N.norm(e.y0, e.eta0);
        PhasePoint z = exact_cone_solution(N, e.y0, e.eta0, kPi / mag);
        err = std::max({phase_distance(N, s.y1, s.eta1, z.y, z.eta), std::abs(s.tau_plus - kPi / mag)});
      } else if (euclid) {
        err = phase_distance(N, s.y1, s.eta1, e.y0 + vec({kPi}), e.eta0);
      }
    } else {
      for (int k = 0; k < 2 * d; ++k) c.row.push_back("");
    }
    c.row.insert(c.row.end(), {fmt_num(s.tau_plus), s.ok() ? fmt_num(rec.L) : "", fmt_num(s.drift), fmt_num(err),
                               to_string(s.status)});
    c.values = {err, s.ok() ? 0.0 : 1.0};
    return c;
  });
  double worst = 0;
  int trapped = 0;
  for (const auto& c : cells)
    if (c.error.empty()) {
      if (!std::isnan(c.values[0])) worst = std::max(worst, c.values[0]);
      trapped += c.values[1] > 0;
    }
  collect(out, entries, cells);
  out.fitted["trapped"] = trapped;
  if (cone) check(out, "exact-cone exit data", "closed-form exact-cone trajectories", worst, 1e-8, worst <= 1e-8);
  if (euclid) check(out, "euclidean antipodal exit", "straight lines have antipodal ends", worst, 1e-8, worst <= 1e-8);
  out.fitted["max_oracle_error"] = worst;
  return out;
}

TaskOutput task_length(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  int d = model->boundary().dim();
  const std::string& method = cfg.params.method;
  bool compare = method == "compare";
  TaskOutput out;
  out.header = entry_header(d);
  if (compare)
    for (const char* h : {"L_cut", "L_tau", "L_flux", "cut_minus_tau", "tau_plus", "status"}) out.header.push_back(h);
  else
    for (const char* h : {"L_g", "L_error", "order", "tau_plus", "status"}) out.header.push_back(h);
  LengthMethod lm = method == "tau" ? LengthMethod::TauSubtraction
                    : method == "flux" ? LengthMethod::Flux
                                       : LengthMethod::CutExtrapolation;
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    Cell c;
    c.row = entry_row(i, e);
    if (compare) {
      LensRecord a = renormalized_length(model, e.y0, e.eta0, LengthMethod::CutExtrapolation);
      if (!a.ok()) {
        c.row = blank_tail(out.header, c.row, to_string(a.scatter.status));
        c.values = {0, 0};
        return c;
      }
      LensRecord b = renormalized_length(model, e.y0, e.eta0, LengthMethod::TauSubtraction);
      LensRecord f = renormalized_length(model, e.y0, e.eta0, LengthMethod::Flux);
      c.row.insert(c.row.end(), {fmt_num(a.L), fmt_num(b.L), fmt_num(f.L), fmt_num(a.L - b.L),
                                 fmt_num(a.scatter.tau_plus), to_string(a.scatter.status)});
      c.values = {a.L, std::abs(a.L - b.L)};
    } else {
      LensRecord r = renormalized_length(model, e.y0, e.eta0, lm);
      if (!r.ok()) {
        c.row = blank_tail(out.header, c.row, to_string(r.scatter.status));
        c.values = {0, 0};
        return c;
      }
      c.row.insert(c.row.end(), {fmt_num(r.L), fmt_num(r.L_error), fmt_num(r.order), fmt_num(r.scatter.tau_plus),
                                 to_string(r.scatter.status)});
      c.values = {r.L, 0};
    }
    return c;
  });
  double maxL = 0, maxdiff = 0;
  for (const auto& c : cells)
    if (c.error.empty()) {
      maxL = std::max(maxL, std::abs(c.values[0]));
      maxdiff = std::max(maxdiff, c.values[1]);
    }
  collect(out, entries, cells);
  out.fitted["max_abs_L"] = maxL;
  if (cfg.metric.family == "exact-cone" || is_euclidean(cfg))
    check(out, "vanishing renormalized length", "renormalized length of exact cones and flat space", maxL, 1e-6,
          maxL <= 1e-6);
  if (compare) {
    out.fitted["max_cut_minus_tau"] = maxdiff;
    check(out, "length methods agree", "cut extrapolation equals tau subtraction", maxdiff, 1e-6, maxdiff <= 1e-6);
  }
  return out;
}

TaskOutput task_xray(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim(), n = d + 1;
  const MetricConfig& mc = cfg.metric;
  TensorFieldPtr f;
  bool gauge = cfg.params.field == "gauge1";
  if (static_cast<int>(mc.bump_center.size()) != n) fail(ErrorKind::Config, "'bump_center' needs n coordinates");
  Vec center(n);
  for (int i = 0; i < n; ++i) center(i) = mc.bump_center[i];
  auto bump = std::make_shared<CartesianBump>(N.kind(), center, mc.bump_radius, 1.0);
  TensorJet one = TensorJet::zero(n, 0);
  one.v[0] = 1.0;
  if (cfg.params.field == "bump") {
    f = scalar_times_constant(bump, n, 0, one, 0.0, "bump");
  } else if (cfg.params.field == "collar") {
    Vec kv = Vec::Zero(d);
    kv(0) = 1.0;
    auto w = std::make_shared<TrigFunction>(d, 1.0, std::vector<TrigFunction::Mode>{{kv, 0.5, 0.0}});
    f = collar_tensor(w, n, 0, one, cfg.params.k, "collar");
  } else {
    f = sym_derivative(model, scalar_times_constant(bump, n, 0, one, 0.0, "u"));
  }
  TaskOutput out;
  out.header = entry_header(d);
  for (const char* h : {"value", "error", "tau_plus", "status"}) out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    XrayOptions xo;
    xo.estimate_error = true;
    XrayValue v = xray(model, *f, e.y0, e.eta0, xo);
    Cell c;
    c.row = entry_row(i, e);
    c.row.insert(c.row.end(), {fmt_num(v.value), fmt_num(v.error), fmt_num(v.tau_plus), to_string(v.status)});
    c.values = {v.value};
    return c;
  });
  double worst = 0;
  for (const auto& c : cells)
    if (c.error.empty()) worst = std::max(worst, std::abs(c.values[0]));
  collect(out, entries, cells);
  out.fitted["max_abs_value"] = worst;
  if (gauge) check(out, "potential tensors are invisible", "I_1 of a symmetric derivative vanishes", worst, 1e-7, worst <= 1e-7);
  return out;
}

TaskOutput task_curvature(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int) {
  std::vector<Vec> ys;
  for (const auto& e : entries) ys.push_back(e.y0);
  DecayReport rep = curvature_decay_rates(*model, ys, cfg.params.rhos);
  TaskOutput out;
  out.header = {"quantity", "rho", "max_abs_value"};
  bool perturbed = cfg.metric.family == "perturbed-conic";
  const std::map<std::string, double> expected{{"K(V,W)", 2.0}, {"K(Z,V)", 4.0}, {"R(V,W,W,Z)", 3.0}};
  for (const auto& fit : rep.fits) {
    json j;
    j["available"] = fit.available;
    j["identically_zero"] = fit.identically_zero;
    j["slope"] = fit.slope;
    j["ci"] = fit.ci;
    out.fitted[fit.quantity] = j;
    for (auto [r, v] : fit.table) out.rows.push_back({fit.quantity, fmt_num(r), fmt_num(v)});
    if (perturbed && fit.available && !fit.identically_zero) {
      double want = expected.at(fit.quantity) - 0.1;
      check(out, fit.quantity + " decay slope", "curvature decay near the boundary", fit.slope, want,
            fit.slope >= want);
    }
  }
  return out;
}

TaskOutput task_conjugate(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  int d = model->boundary().dim();
  double rw = cfg.params.rho_window > 0 ? cfg.params.rho_window : 1.0 / cfg.metric.R0;
  TaskOutput out;
  out.header = entry_header(d);
  for (const char* h : {"crossed", "conjugate_count", "first_time", "extrapolated", "t_window", "frame_drift", "status"})
    out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    ConjugateScan cs = conjugate_scan(model, e.y0, e.eta0, rw, cfg.params.flat_exterior);
    Cell c;
    c.row = entry_row(i, e);
    c.row.insert(c.row.end(), {cs.crossed ? "1" : "0", std::to_string(cs.times.size()),
                               cs.times.empty() ? "" : fmt_num(cs.times.front()), cs.extrapolated ? "1" : "0",
                               fmt_num(cs.t_window), fmt_num(cs.frame_drift), "ok"});
    c.values = {cs.crossed ? 1.0 : 0.0, static_cast<double>(cs.times.size()), cs.frame_drift};
    return c;
  });
  int crossed = 0, with = 0;
  double drift = 0;
  for (const auto& c : cells)
    if (c.error.empty()) {
      crossed += c.values[0] > 0;
      with += c.values[1] > 0;
      drift = std::max(drift, c.values[2]);
    }
  collect(out, entries, cells);
  out.fitted["window_rho"] = rw;
  out.fitted["crossing_geodesics"] = crossed;
  out.fitted["with_conjugate_points"] = with;
  out.fitted["max_frame_drift"] = drift;
  check(out, "parallel frame drift", "orthonormal parallel frame along the geodesic", drift, 1e-8, drift <= 1e-8);
  return out;
}

TaskOutput task_variation(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim(), n = d + 1;
  const MetricConfig& mc = cfg.metric;
  if (mc.family != "warped-product" && mc.family != "exact-cone")
    fail(ErrorKind::Config, "variation needs an exact-cone or warped-product base");
  int nq = n * (n + 1) / 2;
  if (static_cast<int>(cfg.params.q.size()) != nq)
    fail(ErrorKind::Config, "'q' needs " + std::to_string(nq) + " upper-triangular entries");
  Mat Q(n, n);
  for (int i = 0, k = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k) Q(i, j) = Q(j, i) = cfg.params.q[k];
  Vec center(n);
  if (static_cast<int>(mc.bump_center.size()) != n) fail(ErrorKind::Config, "'bump_center' needs n coordinates");
  for (int i = 0; i < n; ++i) center(i) = mc.bump_center[i];
  auto chi = std::make_shared<CartesianBump>(N.kind(), center, mc.bump_radius, 1.0);
  TensorBump family(model, chi, Q, 0.0);
  TaskOutput out;
  out.header = entry_header(d);
  for (const char* h : {"dLds_raw", "boundary_term", "dLds", "I2", "I2_direct", "ratio", "richardson_error", "status"})
    out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    VariationResult v = lens_variation(family, e.y0, e.eta0, cfg.params.steps);
    Cell c;
    c.row = entry_row(i, e);
    double ratio = std::abs(v.I2) > 1e-12 ? v.dLds / v.I2 : std::nan("");
    c.row.insert(c.row.end(), {fmt_num(v.dLds_raw), fmt_num(v.boundary_term), fmt_num(v.dLds), fmt_num(v.I2),
                               fmt_num(v.I2_direct), fmt_num(ratio), fmt_num(v.richardson_error), "ok"});
    c.values = {v.dLds, v.I2};
    return c;
  });
  collect(out, entries, cells);
  double kappa = std::nan("");
  for (const auto& c : cells)
    if (c.error.empty() && std::abs(c.values[1]) > 1e-3) {
      kappa = c.values[0] / c.values[1];
      break;
    }
  double worst = 0;
  bool first = true;
  for (const auto& c : cells) {
    if (!c.error.empty()) continue;
    if (first && std::abs(c.values[1]) > 1e-3) {
      first = false;
      continue;
    }
    double gap = std::abs(c.values[0] - kappa * c.values[1]);
    worst = std::max(worst, gap / std::max(1e-5, 1e-4 * std::abs(c.values[1])));
  }
  out.fitted["kappa"] = kappa;
  check(out, "lens variation proportional to I_2", "first variation of the renormalized length", worst, 1.0,
        !std::isnan(kappa) && worst <= 1.0);
  return out;
}

TaskOutput task_limits(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim(), n = d + 1;
  TensorJet one = TensorJet::zero(n, 0);
  one.v[0] = 1.0;
  auto w = std::make_shared<TrigFunction>(d, 1.0, std::vector<TrigFunction::Mode>{});
  TensorFieldPtr f = collar_tensor(w, n, 0, one, 0.0, "one");
  double k = cfg.params.k;
  TaskOutput out;
  out.header = entry_header(d);
  for (const char* h : {"scatter_gap_slope", "pi_value", "pi_target", "pi_gap", "pi_slope", "status"})
    out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    Vec eu = unit(N, e);
    LargeEtaStudy ls = scattering_large_eta(model, e.y0, eu, cfg.params.eps);
    LimitStudy ps = boundary_pi_transform(model, *f, e.y0, eu, k, cfg.params.eps);
    Cell c;
    c.row = entry_row(i, e);
    c.row.insert(c.row.end(), {fmt_num(ls.slope), fmt_num(ps.ext.value), fmt_num(ps.target), fmt_num(ps.gap),
                               fmt_num(ps.slope), "ok"});
    c.values = {ls.slope, ps.gap, ps.slope};
    return c;
  });
  double min_s = 1e300, max_gap = 0, min_p = 1e300;
  for (const auto& c : cells)
    if (c.error.empty()) {
      min_s = std::min(min_s, c.values[0]);
      max_gap = std::max(max_gap, c.values[1]);
      min_p = std::min(min_p, c.values[2]);
    }
  collect(out, entries, cells);
  out.fitted["min_scatter_slope"] = min_s;
  out.fitted["min_pi_slope"] = min_p;
  out.fitted["max_pi_gap"] = max_gap;
  check(out, "large-eta scattering rate", "scattering approaches the time-pi boundary flow", min_s, 0.9, min_s >= 0.9);
  check(out, "pi-transform rate", "weighted X-ray approaches the boundary pi-transform", min_p, 0.9, min_p >= 0.9);
  check(out, "pi-transform limit", "boundary pi-transform quadrature", max_gap, 1e-4, max_gap <= 1e-4);
  return out;
}

TaskOutput task_perturb(const ExperimentConfig& cfg, MetricPtr model, const std::vector<Entry>& entries, int jobs) {
  const BoundaryManifold& N = model->boundary();
  int d = N.dim();
  if (cfg.metric.family != "perturbed-conic") fail(ErrorKind::Config, "perturb needs the perturbed-conic family");
  int m = cfg.params.m;
  auto ref = std::make_shared<ExactCone>(N);
  DualTensor T = jet_difference(model, ref, m);
  TaskOutput out;
  out.header = entry_header(d);
  for (const char* h : {"rel_gap", "E_fd", "E_duhamel", "energyvar", "equcos", "equdirectionH0", "rhocm", "status"})
    out.header.push_back(h);
  auto cells = parallel_map(static_cast<int>(entries.size()), jobs, [&](int i) {
    const Entry& e = entries[i];
    Vec eu = unit(N, e);
    LinearizedDifference ld = linearized_difference(model, ref, m, e.y0, eu, cfg.params.eps);
    PerturbativeQuadratures q = perturbative_identities(N, T, m, e.y0, eu);
    Cell c;
    c.row = entry_row(i, e);
    c.row.insert(c.row.end(), {fmt_num(ld.rel_gap), fmt_num(ld.energy_fd), fmt_num(ld.energy_duhamel),
                               fmt_num(q.energyvar), fmt_num(q.equcos), fmt_num(q.equdirectionH0), fmt_num(q.rhocm),
                               "ok"});
    c.values = {ld.rel_gap, std::abs(ld.energy_fd + q.energyvar)};
    return c;
  });
  double gap = 0, egap = 0;
  for (const auto& c : cells)
    if (c.error.empty()) {
      gap = std::max(gap, c.values[0]);
      egap = std::max(egap, c.values[1]);
    }
  collect(out, entries, cells);
  out.fitted["max_rel_gap"] = gap;
  out.fitted["max_energy_gap"] = egap;
  check(out, "linearized flow equivalence", "finite-difference e_m(pi) equals the Duhamel formula", gap, 1e-4,
        gap <= 1e-4);
  check(out, "energy component", "dE . e_m(pi) = -int sin^m H0 T_m", egap, 1e-5, egap <= 1e-5);
  return out;
}

void write_csv(const std::filesystem::path& p, const Row& header, const std::vector<Row>& rows) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail(ErrorKind::Config, "cannot write " + p.string());
  auto line = [&](const Row& r) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
    os << "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
}

}  // namespace

int run(const ExperimentConfig& cfg, int jobs, const std::string& out_dir) {
  MetricPtr model;
  std::vector<Entry> entries;
  TaskOutput out;
  std::string error;
  int code = kOk;
  try {
    model = build_metric(cfg.metric);
    entries = build_sweep(cfg.sweep, model->boundary());
    if (entries.empty()) fail(ErrorKind::Config, "empty sweep");
    spdlog::info("task {} on {} over {} ({} entries, {} jobs)", cfg.task, model->family(), model->boundary().name(),
                 entries.size(), jobs);
    using Fn = TaskOutput (*)(const ExperimentConfig&, MetricPtr, const std::vector<Entry>&, int);
    const std::map<std::string, Fn> tasks{{"trace", task_trace},         {"scatter", task_scatter},
                                          {"length", task_length},       {"xray", task_xray},
                                          {"curvature", task_curvature}, {"conjugate", task_conjugate},
                                          {"variation", task_variation}, {"limits", task_limits},
                                          {"perturb", task_perturb}};
    out = tasks.at(cfg.task)(cfg, model, entries, jobs);
  } catch (const Error& e) {
    error = e.what();
    code = e.kind() == ErrorKind::Config ? kConfigError : kNumericalFailure;
  } catch (const std::exception& e) {
    error = e.what();
    code = kNumericalFailure;
  }
  if (code == kConfigError) {
    spdlog::error("config error: {}", error);
    return code;
  }
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    spdlog::error("cannot create output directory {}: {}", out_dir, ec.message());
    return kConfigError;
  }
  bool all_pass = true;
  for (const auto& a : out.checks) all_pass = all_pass && a.pass;
  if (code == kOk && (out.failures > 0 || !all_pass)) code = kNumericalFailure;

  json s;
  s["task"] = cfg.task;
  s["config_hash"] = fmt::format("{:016x}", cfg.hash);
  s["family"] = cfg.metric.family;
  s["boundary"] = cfg.metric.boundary;
  s["entries"] = entries.size();
  s["failures"] = out.failures;
  s["fitted"] = out.fitted;
  s["assertions"] = json::array();
  for (const auto& a : out.checks)
    s["assertions"].push_back(
        {{"name", a.name}, {"anchor", a.anchor}, {"pass", a.pass}, {"value", a.value}, {"tolerance", a.tolerance}});
  s["status"] = code == kOk ? "ok" : "numerical-failure";
  if (!error.empty()) s["error"] = error;
  try {
    if (!out.header.empty()) write_csv(dir / cfg.output.csv, out.header, out.rows);
    if (!cfg.output.dense.empty() && !out.dense_rows.empty())
      write_csv(dir / cfg.output.dense, out.dense_header, out.dense_rows);
    std::ofstream js(dir / cfg.output.json, std::ios::binary);
    js << s.dump(2) << "\n";
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  }
  for (const auto& a : out.checks)
    spdlog::info("{} {}: value {} (tolerance {})", a.pass ? "PASS" : "FAIL", a.name, fmt_num(a.value),
                 fmt_num(a.tolerance));
  if (!error.empty()) spdlog::error("numerical failure: {}", error);
  return code;
}

}  // namespace conic::cli

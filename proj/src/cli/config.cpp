#include "conic_lens/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "conic_lens/numerics.hpp"
#include "conic_lens/profile.hpp"

namespace conic::cli {

const std::vector<std::string> kTasks{"trace",     "scatter",   "length", "xray",   "curvature",
                                      "conjugate", "variation", "limits", "perturb"};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorKind::Config, msg); }

void check_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    std::string key(k.str());
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
  }
}

double get_num(const toml::table& t, const char* key, double def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value<double>()) return *v;
  bad(std::string("key '") + key + "' must be a number");
}

int get_int(const toml::table& t, const char* key, int def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value<std::int64_t>()) return static_cast<int>(*v);
  bad(std::string("key '") + key + "' must be an integer");
}

std::string get_str(const toml::table& t, const char* key, const std::string& def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value<std::string>()) return *v;
  bad(std::string("key '") + key + "' must be a string");
}

bool get_bool(const toml::table& t, const char* key, bool def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value<bool>()) return *v;
  bad(std::string("key '") + key + "' must be a boolean");
}

std::vector<double> get_list(const toml::table& t, const char* key, const std::vector<double>& def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  const toml::array* arr = n->as_array();
  if (!arr) bad(std::string("key '") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) {
    auto v = e.value<double>();
    if (!v) bad(std::string("key '") + key + "' must be an array of numbers");
    out.push_back(*v);
  }
  return out;
}

const toml::table* section(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) bad(std::string("'") + name + "' must be a table");
  return t;
}

void one_of(const std::string& v, const std::string& key, const std::vector<std::string>& options) {
  if (std::find(options.begin(), options.end(), v) == options.end()) {
    std::string all;
    for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
    bad("'" + key + "' = '" + v + "' is not one of: " + all);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& task) {
  ExperimentConfig c;
  c.hash = fnv1a(text);
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    bad(os.str());
  }
  check_keys(root, "config", {"task", "metric", "sweep", "params", "output"});
  c.task = get_str(root, "task", task);
  if (!task.empty() && c.task != task) bad("config task '" + c.task + "' does not match subcommand '" + task + "'");
  one_of(c.task, "task", kTasks);

  if (const toml::table* t = section(root, "metric")) {
    check_keys(*t, "[metric]",
               {"family", "boundary", "size", "profile", "a", "r1", "R0", "rc", "order", "p_c0", "p_amp", "p_mode",
                "cut_lo", "cut_hi", "bump_center", "bump_radius", "bump_amp", "bump_scale"});
    MetricConfig& m = c.metric;
    m.family = get_str(*t, "family", m.family);
    m.boundary = get_str(*t, "boundary", m.boundary);
    m.size = get_num(*t, "size", m.boundary == "circle" ? 2.0 * kPi : 1.0);
    m.profile = get_str(*t, "profile", m.profile);
    m.a = get_num(*t, "a", m.a);
    m.r1 = get_num(*t, "r1", m.r1);
    m.R0 = get_num(*t, "R0", m.R0);
    m.rc = get_num(*t, "rc", m.rc);
    m.order = get_int(*t, "order", m.order);
    m.p_c0 = get_num(*t, "p_c0", m.p_c0);
    m.p_amp = get_num(*t, "p_amp", m.p_amp);
    m.p_mode = get_int(*t, "p_mode", m.p_mode);
    m.cut_lo = get_num(*t, "cut_lo", m.cut_lo);
    m.cut_hi = get_num(*t, "cut_hi", m.cut_hi);
    m.bump_center = get_list(*t, "bump_center", m.bump_center);
    m.bump_radius = get_num(*t, "bump_radius", m.bump_radius);
    m.bump_amp = get_num(*t, "bump_amp", m.bump_amp);
    m.bump_scale = get_num(*t, "bump_scale", m.bump_scale);
  }
  one_of(c.metric.family, "family", {"exact-cone", "warped-product", "perturbed-conic", "conformal-bump"});
  one_of(c.metric.boundary, "boundary", {"circle", "sphere", "torus"});
  one_of(c.metric.profile, "profile", {"euclidean", "smoothed-cone", "convex-cone", "sinh-band", "spherical-cap"});
  if (!(c.metric.size > 0)) bad("'size' must be positive");
  if (c.metric.order < 1) bad("'order' must be at least 1");
  if (!(c.metric.cut_lo > 0 && c.metric.cut_hi > c.metric.cut_lo)) bad("need 0 < cut_lo < cut_hi");

  if (const toml::table* t = section(root, "sweep")) {
    check_keys(*t, "[sweep]", {"kind", "count", "seed", "eta_min", "eta_max"});
    SweepConfig& s = c.sweep;
    s.kind = get_str(*t, "kind", s.kind);
    s.count = get_int(*t, "count", s.count);
    s.seed = static_cast<std::uint64_t>(get_int(*t, "seed", static_cast<int>(s.seed)));
    s.eta_min = get_num(*t, "eta_min", s.eta_min);
    s.eta_max = get_num(*t, "eta_max", s.eta_max);
  }
  one_of(c.sweep.kind, "kind", {"grid", "random"});
  if (c.sweep.count <= 0) bad("empty sweep: 'count' must be positive");
  if (!(c.sweep.eta_min > 0 && c.sweep.eta_max >= c.sweep.eta_min)) bad("need 0 < eta_min <= eta_max");

  if (const toml::table* t = section(root, "params")) {
    check_keys(*t, "[params]",
               {"method", "field", "k", "eps", "rhos", "rho_window", "flat_exterior", "steps", "q", "m"});
    TaskConfig& p = c.params;
    p.method = get_str(*t, "method", p.method);
    p.field = get_str(*t, "field", p.field);
    p.k = get_num(*t, "k", p.k);
    p.eps = get_list(*t, "eps", p.eps);
    p.rhos = get_list(*t, "rhos", p.rhos);
    p.rho_window = get_num(*t, "rho_window", p.rho_window);
    p.flat_exterior = get_bool(*t, "flat_exterior", p.flat_exterior);
    p.steps = get_list(*t, "steps", p.steps);
    p.q = get_list(*t, "q", p.q);
    p.m = get_int(*t, "m", c.metric.order);
  } else {
    c.params.m = c.metric.order;
  }
  one_of(c.params.method, "method", {"cut", "tau", "flux", "compare"});
  one_of(c.params.field, "field", {"bump", "collar", "gauge1"});
  if (c.params.eps.size() < 3) bad("'eps' needs at least three values");
  if (c.params.rhos.size() < 8) bad("'rhos' needs at least eight values");
  if (c.params.steps.size() < 2) bad("'steps' needs at least two values");

  if (const toml::table* t = section(root, "output")) {
    check_keys(*t, "[output]", {"csv", "json", "dense"});
    c.output.csv = get_str(*t, "csv", c.output.csv);
    c.output.json = get_str(*t, "json", c.output.json);
    c.output.dense = get_str(*t, "dense", c.output.dense);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), task);
}

BoundaryManifold build_boundary(const MetricConfig& m) {
  if (m.boundary == "circle") return BoundaryManifold::circle(m.size);
  if (m.boundary == "sphere") return BoundaryManifold::round_sphere(m.size);
  return BoundaryManifold::flat_torus(m.size, m.size);
}

namespace {

WarpedProfile build_profile(const MetricConfig& m) {
  if (m.profile == "euclidean") return WarpedProfile::euclidean();
  if (m.profile == "smoothed-cone") return WarpedProfile::smoothed_cone(m.a, m.r1, m.R0);
  if (m.profile == "convex-cone") return WarpedProfile::convex_cone(m.a, m.r1, m.R0);
  if (m.profile == "sinh-band") return WarpedProfile::sinh_band(m.a);
  return WarpedProfile::spherical_cap(m.rc, m.a, m.R0);
}

}  // namespace

MetricPtr build_metric(const MetricConfig& m) {
  BoundaryManifold N = build_boundary(m);
  int d = N.dim();
  if (m.family == "exact-cone") return std::make_shared<ExactCone>(N);
  if (m.family == "warped-product") {
    if (m.boundary == "torus") fail(ErrorKind::Config, "warped products need a circle or sphere base");
    return std::make_shared<WarpedProduct>(build_profile(m), N);
  }
  if (m.family == "perturbed-conic") {
    Vec kv = Vec::Zero(d);
    kv(0) = m.p_mode;
    auto w = std::make_shared<TrigFunction>(d, m.p_c0, std::vector<TrigFunction::Mode>{{kv, m.p_amp, 0.0}});
    auto P = std::make_shared<ConformalBoundaryTensor>(N, w);
    return std::make_shared<PerturbedConic>(N, m.order, P, m.cut_lo, m.cut_hi);
  }
  // conformal-bump over a warped base
  if (m.boundary == "torus") fail(ErrorKind::Config, "conformal bumps need a circle or sphere base");
  auto base = std::make_shared<WarpedProduct>(build_profile(m), N);
  if (static_cast<int>(m.bump_center.size()) != d + 1) fail(ErrorKind::Config, "'bump_center' needs n coordinates");
  Vec c(d + 1);
  for (int i = 0; i <= d; ++i) c(i) = m.bump_center[i];
  auto sigma = std::make_shared<CartesianBump>(N.kind(), c, m.bump_radius, m.bump_amp);
  return std::make_shared<ConformalBump>(base, sigma, m.bump_scale);
}

std::vector<Entry> build_sweep(const SweepConfig& s, const BoundaryManifold& N) {
  std::vector<Entry> out;
  Rng rng(s.seed);
  double lr = std::log(s.eta_max / s.eta_min);
  const double golden = 0.6180339887498949;
  for (int i = 0; i < s.count; ++i) {
    double u1, u2, u3;
    if (s.kind == "grid") {
      u1 = (i + 0.5) / s.count;
      u2 = std::fmod(0.5 + i * golden, 1.0);
      u3 = std::fmod(0.25 + i * 0.7548776662466927, 1.0);
    } else {
      u1 = rng.uniform();
      u2 = rng.uniform();
      u3 = rng.uniform();
    }
    double mag = s.eta_min * std::exp(lr * u2);
    Entry e;
    switch (N.kind()) {
      case BoundaryKind::Circle:
        e.y0 = vec({2.0 * kPi * u1});
        break;
      case BoundaryKind::RoundSphere:
        e.y0 = vec({kPi / 6 + (2 * kPi / 3) * u3, -kPi + 2.0 * kPi * u1});
        break;
      case BoundaryKind::FlatTorus:
        e.y0 = vec({N.size() * u1, N.size2() * u3});
        break;
    }
    double psi = N.dim() == 1 ? (i % 2 == 0 ? 0.0 : kPi) : 2.0 * kPi * std::fmod(u1 * 7.0 + u3, 1.0);
    e.eta0 = mag * N.unit_covector(e.y0, psi);
    out.push_back(e);
  }
  return out;
}

}  // namespace conic::cli

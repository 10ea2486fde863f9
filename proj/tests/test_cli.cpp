#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "conic_lens/cli/config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string binary() {
  const char* b = std::getenv("CONIC_LENS_BIN");
  return b ? b : "./conic-lens";
}

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) {
    dir = fs::temp_directory_path() / ("conic_lens_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file) << text;
    return dir / file;
  }
};

int run(const std::string& sub, const fs::path& cfg, const fs::path& out, const std::string& extra = "") {
  std::string cmd = "'" + binary() + "' " + sub + " --config '" + cfg.string() + "' --out '" + out.string() + "' " +
                    extra + " 2>/dev/null";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kConeScatter = R"(task = "scatter"
[metric]
family = "exact-cone"
boundary = "circle"
[sweep]
kind = "random"
count = 64
seed = 7
eta_min = 0.5
eta_max = 8.0
)";

}  // namespace

TEST_CASE("scatter on the exact cone matches the closed form") {
  Workdir w("scatter");
  fs::path cfg = w.write("c.toml", kConeScatter);
  REQUIRE(run("scatter", cfg, w.dir / "out", "--jobs 2") == 0);
  json s = json::parse(slurp(w.dir / "out" / "summary.json"));
  CHECK(s["task"] == "scatter");
  CHECK(s["entries"] == 64);
  CHECK(s["failures"] == 0);
  CHECK(s["status"] == "ok");
  CHECK(s["fitted"]["max_oracle_error"].get<double>() < 1e-8);
  std::string csv = slurp(w.dir / "out" / "rows.csv");
  CHECK(csv.rfind("index,y0_0,eta0_0,y1_0,eta1_0,tau_plus,L_g,drift,oracle_error,status\r\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 65);
}

TEST_CASE("euclidean lengths vanish") {
  Workdir w("length");
  fs::path cfg = w.write("c.toml", R"(task = "length"
[metric]
family = "warped-product"
profile = "euclidean"
[sweep]
count = 8
[params]
method = "compare"
)");
  REQUIRE(run("length", cfg, w.dir) == 0);
  json s = json::parse(slurp(w.dir / "summary.json"));
  CHECK(s["fitted"]["max_abs_L"].get<double>() < 1e-6);
  for (const auto& a : s["assertions"]) CHECK(a["pass"] == true);
}

TEST_CASE("configuration errors exit with code 2") {
  Workdir w("errors");
  SUBCASE("empty sweep") {
    fs::path cfg = w.write("c.toml", "task = \"scatter\"\n[sweep]\ncount = 0\n");
    CHECK(run("scatter", cfg, w.dir / "o") == 2);
    CHECK(!fs::exists(w.dir / "o" / "summary.json"));
  }
  SUBCASE("unknown key") {
    fs::path cfg = w.write("c.toml", "task = \"scatter\"\n[metric]\nfamly = \"exact-cone\"\n");
    CHECK(run("scatter", cfg, w.dir / "o") == 2);
  }
  SUBCASE("task does not match the subcommand") {
    fs::path cfg = w.write("c.toml", kConeScatter);
    CHECK(run("length", cfg, w.dir / "o") == 2);
  }
  SUBCASE("missing file") { CHECK(run("scatter", w.dir / "nope.toml", w.dir / "o") == 2); }
  SUBCASE("bad jobs value") {
    fs::path cfg = w.write("c.toml", kConeScatter);
    CHECK(run("scatter", cfg, w.dir / "o", "--jobs 0") == 2);
  }
}

TEST_CASE("outputs are deterministic across job counts") {
  Workdir w("determinism");
  fs::path cfg = w.write("c.toml", kConeScatter);
  REQUIRE(run("scatter", cfg, w.dir / "a", "--jobs 1") == 0);
  REQUIRE(run("scatter", cfg, w.dir / "b", "--jobs 3") == 0);
  CHECK(slurp(w.dir / "a" / "rows.csv") == slurp(w.dir / "b" / "rows.csv"));
  CHECK(slurp(w.dir / "a" / "summary.json") == slurp(w.dir / "b" / "summary.json"));
}

TEST_CASE("parser defaults and hashing") {
  using namespace conic::cli;
  ExperimentConfig c = parse_config("task = \"curvature\"\n", "curvature");
  CHECK(c.metric.family == "exact-cone");
  CHECK(c.params.rhos.size() == 8);
  CHECK(c.hash == fnv1a("task = \"curvature\"\n"));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK_THROWS_AS(parse_config("task = \"curvature\"\n[params]\nrhos = [0.1, 0.01]\n", "curvature"), conic::Error);
  CHECK_THROWS_AS(parse_config("task = [1]\n", ""), conic::Error);
  CHECK_THROWS_AS(parse_config("task = \"trace\"\n[metric]\nsize = -1.0\n", "trace"), conic::Error);
}

TEST_CASE("sweeps are reproducible") {
  using namespace conic::cli;
  SweepConfig s;
  s.kind = "random";
  s.count = 10;
  s.seed = 3;
  auto N = conic::BoundaryManifold::circle(2 * conic::kPi);
  auto a = build_sweep(s, N), b = build_sweep(s, N);
  REQUIRE(a.size() == 10);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].y0(0) == b[i].y0(0));
    double e = std::abs(a[i].eta0(0));
    CHECK(e >= s.eta_min);
    CHECK(e <= s.eta_max);
  }
}

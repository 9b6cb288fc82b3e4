#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "legflow/io.hpp"

using namespace legflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "legflow_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

const char* kMinimalConfig = R"(
[model]
id = round_s3
[scenario]
kind = great_circle
vertices = 64
[control]
max_dt = 5e-4
t_max = 0.002
tol_stop = 1e-12
cadence = 1
)";

}  // namespace

TEST_CASE("minimal config parses with defaults applied") {
  RunConfig cfg = parse_config(kMinimalConfig);
  CHECK(cfg.model_id == "round_s3");
  CHECK(cfg.scenario == "great_circle");
  CHECK(cfg.vertices == 64);
  CHECK(cfg.control.cfl_kappa == 0.25);                   // default
  CHECK(cfg.gauge.policy == AlphaGauge::Policy::Anchor);  // default
  // canonical form is a fixed point of parse
  RunConfig cfg2 = parse_config(canonical_config(cfg));
  CHECK(canonical_config(cfg2) == canonical_config(cfg));
  CHECK(config_hash(cfg2) == config_hash(cfg));
}

TEST_CASE("config errors are aggregated, named, and located") {
  const char* bad = R"(
[model]
id = round_s3
[scenario]
kind = great_circle
[control]
cfl_kappa = -2
cfl_kappa = 0.5
banana = 7
)";
  try {
    parse_config(bad);
    FAIL("expected validation error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cfl_kappa") != std::string::npos);   // named key
    CHECK(msg.find("(0, 100]") != std::string::npos);    // bound
    CHECK(msg.find("duplicate key") != std::string::npos);
    CHECK(msg.find("line 7") != std::string::npos);      // first definition
    CHECK(msg.find("line 8") != std::string::npos);      // duplicate line
    CHECK(msg.find("banana") != std::string::npos);      // unknown key
    CHECK(std::count(msg.begin(), msg.end(), '\n') >= 3);  // all errors listed
  }
}

TEST_CASE("snapshot files round-trip bit-exactly") {
  auto imm = build_scenario(parse_config(kMinimalConfig));
  imm.time = 0.12345678901234567;
  GeometrySnapshot snap = compute_snapshot(imm, AlphaGauge{});
  fs::path dir = fresh_dir("snap_roundtrip");
  fs::create_directories(dir);
  write_snapshot(dir / "a.txt", imm, &snap);
  SnapshotData rd = read_snapshot(dir / "a.txt");
  write_snapshot(dir / "b.txt", rd.imm, nullptr);
  // rewrite with the read-back fields to compare full content
  GeometrySnapshot fake;
  fake.gauge = rd.gauge;
  fake.alpha = rd.alpha;
  fake.omega = rd.omega;
  write_snapshot(dir / "c.txt", rd.imm, &fake);
  CHECK(slurp(dir / "a.txt") == slurp(dir / "c.txt"));
  CHECK(rd.imm.num_vertices() == imm.num_vertices());
  for (int v = 0; v < imm.num_vertices(); ++v)
    CHECK((rd.imm.verts[v].x - imm.verts[v].x).cwiseAbs().maxCoeff() == 0.0);

  // version guard
  {
    std::ofstream bad(dir / "bad.txt");
    bad << "legflow-snapshot 999\n";
  }
  CHECK_THROWS_WITH_AS(read_snapshot(dir / "bad.txt"),
                       doctest::Contains("version"), Error);
}

TEST_CASE("series round-trip and header") {
  std::vector<SeriesRow> rows(3);
  rows[0].t = 0;
  rows[1].t = 0.1234567890123456789;
  rows[1].a2_max = 1e-17;
  rows[2].t = 0.3;
  rows[2].h_max = M_PI;
  fs::path dir = fresh_dir("series_roundtrip");
  fs::create_directories(dir);
  write_series(dir / "s.csv", rows);
  std::string text = slurp(dir / "s.csv");
  CHECK(text.rfind("t,area,omega_min,omega_max,A2_max,H_max,alpha_min,alpha_max,"
                   "leg_residual,dt,restored_displacement\n", 0) == 0);
  auto back = read_series(dir / "s.csv");
  write_series(dir / "s2.csv", back);
  CHECK(slurp(dir / "s.csv") == slurp(dir / "s2.csv"));
}

TEST_CASE("run directory, manifest reproducibility, determinism") {
  RunConfig cfg = parse_config(kMinimalConfig);
  fs::path d1 = fresh_dir("run_a");
  fs::path d2 = fresh_dir("run_b");

  cfg.out_dir = d1.string();
  RunResult r1 = run_from_config(cfg);
  CHECK(fs::exists(d1 / "complete"));
  CHECK(fs::exists(d1 / "manifest.txt"));
  CHECK(fs::exists(d1 / "series.csv"));
  CHECK(fs::exists(d1 / "snap_0000.txt"));

  // byte-identical rerun
  cfg.out_dir = d2.string();
  RunResult r2 = run_from_config(cfg);
  CHECK(slurp(d1 / "series.csv") == slurp(d2 / "series.csv"));
  CHECK(slurp(d1 / "snap_0000.txt") == slurp(d2 / "snap_0000.txt"));

  // manifest echoes a config that reproduces the hash
  const std::string echoed = manifest_config_text(d1 / "manifest.txt");
  RunConfig cfg_back = parse_config(echoed);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg_back)));
  const std::string manifest = slurp(d1 / "manifest.txt");
  CHECK(manifest.find(std::string("config_hash = ") + buf) != std::string::npos);

  // refusing to overwrite a non-empty directory
  cfg.out_dir = d1.string();
  CHECK_THROWS_AS(run_from_config(cfg), Error);

  // reload and compare series
  Trajectory traj = load_trajectory(d1);
  CHECK(traj.series.size() == r1.traj.series.size());
  CHECK(traj.termination == r1.traj.termination);
  CHECK(traj.snapshots.size() == r1.traj.snapshots.size());
}

TEST_CASE("manifest records measured model constants") {
  RunConfig cfg = parse_config(R"(
[model]
id = t11
[scenario]
kind = identity_graph
level = 1
[control]
max_dt = 1e-3
t_max = 1e-3
tol_stop = 1e-12
)");
  fs::path dir = fresh_dir("run_t11");
  cfg.out_dir = dir.string();
  run_from_config(cfg);
  const std::string manifest = slurp(dir / "manifest.txt");
  CHECK(manifest.find("alpha_linear = 6") != std::string::npos);
  auto pos = manifest.find("c_transverse = ");
  REQUIRE(pos != std::string::npos);
  const double c = std::strtod(manifest.c_str() + pos + 15, nullptr);
  CHECK(c == doctest::Approx(6.0).epsilon(0.01));
}

TEST_CASE("scenario construction errors") {
  RunConfig cfg = parse_config(kMinimalConfig);
  cfg.scenario = "from_snapshot";
  cfg.snapshot_path = "";
  CHECK_THROWS_AS(build_scenario(cfg), Error);
}

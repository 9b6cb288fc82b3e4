#pragma once

#include <filesystem>
#include <optional>

#include "legflow/analysis.hpp"
#include "legflow/scenarios.hpp"

namespace legflow {

/// Deterministic run description: one config file drives model, scenario,
/// control, analysis and output.
struct RunConfig {
  // [model]
  std::string model_id = "round_s3";
  int model_n = 1;
  bool verify_model = false;

  // [scenario]
  std::string scenario;
  int vertices = 256;
  int level = 3;
  double eps = 0.05;
  int mode = 3;
  double amplitude = 0.2;
  double axis_x = 0, axis_y = 0, axis_z = 1;
  double angle = 0.3;
  double phi_amp = 0.8, z_amp = 0.4;
  double half_length = 4.0;
  std::string snapshot_path;

  // [control]
  StepControl control;
  StoppingSpec stopping;
  int cadence = 10;
  int max_steps = 2000000;

  // [gauge]
  AlphaGauge gauge;

  // [analysis]
  std::string kernel_y0 = "0,0,0,0";
  double kernel_t0 = 0.0;  // 0 = auto (after the last snapshot)
  std::string lambda_schedule = "1,2,4,8";
  bool analyze_monotonicity = false;
  bool analyze_inequalities = false;
  bool analyze_evolution = false;
  bool analyze_bound = false;
  double slack = 1e-3;

  // [output]
  std::string out_dir = "out";
  int precision = 17;

  // [run]
  std::uint64_t seed = 1;
};

/// Parse a line-oriented key=value config with [section] headers. Reports
/// every problem (unknown keys, duplicates with both line numbers, range
/// violations) in a single validation error.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Canonical serialization (defaults applied, fixed order); its FNV-1a hash
/// is the config fingerprint echoed into the manifest.
std::string canonical_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

std::string format_g17(double v);

// ---- scenario construction ----

DiscreteImmersion build_scenario(const RunConfig& cfg);

// ---- snapshot files ----

void write_snapshot(const std::filesystem::path& path, const DiscreteImmersion& imm,
                    const GeometrySnapshot* fields = nullptr);

struct SnapshotData {
  DiscreteImmersion imm;
  Vec alpha;
  Vec omega;
  AlphaGauge gauge;
};
SnapshotData read_snapshot(const std::filesystem::path& path);

// ---- series files ----

void write_series(const std::filesystem::path& path, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series(const std::filesystem::path& path);

// ---- manifest ----

void write_manifest(const std::filesystem::path& path, const RunConfig& cfg,
                    const ModelPtr& model, const std::string& termination,
                    bool complete);
/// Extract the echoed config block from a manifest.
std::string manifest_config_text(const std::filesystem::path& path);

// ---- run directories ----

struct RunResult {
  std::filesystem::path dir;
  Trajectory traj;
};

/// Execute a configured run into cfg.out_dir: series.csv, snap_####.txt,
/// manifest.txt and the `complete` marker.
RunResult run_from_config(const RunConfig& cfg);

/// Load a persisted run (recomputing field snapshots deterministically).
Trajectory load_trajectory(const std::filesystem::path& dir);

void write_report(const std::filesystem::path& path, const ReportRecord& rep);
void write_density_series(const std::filesystem::path& path, const DensitySeries& s);

}  // namespace legflow

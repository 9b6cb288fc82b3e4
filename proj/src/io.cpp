#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "legflow/io.hpp"

namespace legflow {

namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------- config parsing ----------------

namespace {

struct Entry {
  std::string value;
  int line;
};

struct ParsedText {
  std::map<std::string, Entry> kv;  // "section.key" -> entry
  std::vector<std::string> errors;
};

ParsedText tokenize_config(const std::string& text) {
  ParsedText out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  std::map<std::string, int> first_line;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto l = line.find_first_not_of(" \t\r");
    if (l == std::string::npos) continue;
    auto r = line.find_last_not_of(" \t\r");
    line = line.substr(l, r - l + 1);
    if (line.front() == '[') {
      if (line.back() != ']') {
        out.errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(val);
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.kv.count(full)) {
      out.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + full +
                           "' (first defined at line " + std::to_string(first_line[full]) + ")");
      continue;
    }
    first_line[full] = lineno;
    out.kv[full] = Entry{val, lineno};
  }
  return out;
}

class ConfigReader {
 public:
  ConfigReader(ParsedText parsed) : p_(std::move(parsed)) {}

  bool has(const std::string& k) const { return p_.kv.count(k) > 0; }

  std::string str(const std::string& k, const std::string& dflt) {
    used_.insert(k);
    auto it = p_.kv.find(k);
    return it == p_.kv.end() ? dflt : it->second.value;
  }

  double num(const std::string& k, double dflt, double lo = -1e300, double hi = 1e300,
             bool strict_lo = false) {
    used_.insert(k);
    auto it = p_.kv.find(k);
    if (it == p_.kv.end()) return dflt;
    char* end = nullptr;
    const double v = std::strtod(it->second.value.c_str(), &end);
    if (end == it->second.value.c_str() || *end != '\0') {
      err(it->second.line, k, "is not a number");
      return dflt;
    }
    if (v < lo || v > hi || (strict_lo && v <= lo)) {
      std::ostringstream os;
      os << "must lie in " << (strict_lo ? "(" : "[") << lo << ", " << hi << "]";
      err(it->second.line, k, os.str());
    }
    return v;
  }

  long integer(const std::string& k, long dflt, long lo, long hi) {
    const double v = num(k, double(dflt), double(lo), double(hi));
    if (v != std::floor(v)) {
      auto it = p_.kv.find(k);
      if (it != p_.kv.end()) err(it->second.line, k, "must be an integer");
    }
    return long(v);
  }

  bool flag(const std::string& k, bool dflt) {
    const std::string v = str(k, dflt ? "1" : "0");
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    auto it = p_.kv.find(k);
    if (it != p_.kv.end()) err(it->second.line, k, "must be a boolean (0/1)");
    return dflt;
  }

  std::string choice(const std::string& k, const std::string& dflt,
                     const std::vector<std::string>& allowed) {
    const std::string v = str(k, dflt);
    for (const auto& a : allowed)
      if (v == a) return v;
    auto it = p_.kv.find(k);
    std::ostringstream os;
    os << "must be one of {";
    for (std::size_t i = 0; i < allowed.size(); ++i) os << (i ? ", " : "") << allowed[i];
    os << "}";
    err(it == p_.kv.end() ? 0 : it->second.line, k, os.str());
    return dflt;
  }

  void err(int line, const std::string& key, const std::string& what) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << "key '" << key << "' " << what;
    p_.errors.push_back(os.str());
  }

  void finish() {
    for (const auto& [k, e] : p_.kv)
      if (!used_.count(k))
        p_.errors.push_back("line " + std::to_string(e.line) + ": unknown key '" + k + "'");
    if (!p_.errors.empty()) {
      std::ostringstream os;
      os << "config validation failed with " << p_.errors.size() << " error(s):";
      for (const auto& e : p_.errors) os << "\n  " << e;
      throw validation_error(os.str());
    }
  }

 private:
  ParsedText p_;
  std::set<std::string> used_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
  ConfigReader r(tokenize_config(text));
  RunConfig c;

  c.model_id = r.choice("model.id", "round_s3", {"std_contact", "round_s3", "t11"});
  c.model_n = int(r.integer("model.n", 1, 1, 3));
  c.verify_model = r.flag("model.verify", false);

  c.scenario = r.choice("scenario.kind", "",
                        {"great_circle", "perturbed_great_circle", "bowtie",
                         "equator_lift", "identity_graph", "twist_graph",
                         "rotation_graph", "axis_line", "from_snapshot", ""});
  c.vertices = int(r.integer("scenario.vertices", 256, 8, 100000));
  c.level = int(r.integer("scenario.level", 3, 0, 6));
  c.eps = r.num("scenario.eps", 0.05, -10, 10);
  c.mode = int(r.integer("scenario.mode", 3, 1, 64));
  c.amplitude = r.num("scenario.amplitude", 0.2, -10, 10);
  c.axis_x = r.num("scenario.axis_x", 0);
  c.axis_y = r.num("scenario.axis_y", 0);
  c.axis_z = r.num("scenario.axis_z", 1);
  c.angle = r.num("scenario.angle", 0.3);
  c.phi_amp = r.num("scenario.phi_amp", 0.8, 0, 3);
  c.z_amp = r.num("scenario.z_amp", 0.4, 0, 1);
  c.half_length = r.num("scenario.half_length", 4.0, 0.1, 100);
  c.snapshot_path = r.str("scenario.path", "");

  c.control.cfl_kappa = r.num("control.cfl_kappa", 0.25, 0.0, 100.0, true);
  c.control.curvature_kappa = r.num("control.curvature_kappa", 0.1, 0.0, 100.0, true);
  c.control.max_dt = r.num("control.max_dt", 1e-3, 0.0, 10.0, true);
  c.control.fixed_dt = r.num("control.fixed_dt", 0.0, 0.0, 10.0);
  const std::string integ = r.choice("control.integrator", "euler", {"euler", "rk2"});
  c.control.integrator =
      integ == "euler" ? StepControl::Integrator::Euler : StepControl::Integrator::RK2;
  const std::string rp =
      r.choice("control.restore_policy", "every_k", {"off", "every_k", "threshold"});
  c.control.restore_policy = rp == "off" ? StepControl::RestorePolicy::Off
                             : rp == "every_k" ? StepControl::RestorePolicy::EveryK
                                               : StepControl::RestorePolicy::Threshold;
  c.control.restore_k = int(r.integer("control.restore_k", 1, 1, 1000000));
  c.control.redistribute = r.flag("control.redistribute", false);
  c.control.restore_threshold = r.num("control.restore_threshold", 1e-8, 0.0, 1.0, true);
  c.control.restore_tol = r.num("control.restore_tol", 1e-8, 0.0, 1.0, true);
  c.stopping.tol_stop = r.num("control.tol_stop", 1e-3, 0.0, 1e6, true);
  c.stopping.t_max = r.num("control.t_max", 10.0, 0.0, 1e9, true);
  c.stopping.guard_a2 = r.num("control.guard_a2", 1e6, 0.0, 1e300, true);
  c.stopping.guard_measure_ratio = r.num("control.guard_measure_ratio", 1e-10, 0.0, 1.0);
  c.cadence = int(r.integer("control.cadence", 10, 1, 1000000));
  c.max_steps = int(r.integer("control.max_steps", 2000000, 1, 100000000));

  const std::string gp =
      r.choice("gauge.policy", "anchor", {"anchor", "mean_zero", "cone_phase"});
  c.gauge.policy = gp == "anchor" ? AlphaGauge::Policy::Anchor
                   : gp == "mean_zero" ? AlphaGauge::Policy::MeanZero
                                       : AlphaGauge::Policy::ConePhase;
  c.gauge.anchor_vertex = int(r.integer("gauge.anchor_vertex", 0, 0, 100000000));
  c.gauge.anchor_value = r.num("gauge.anchor_value", 0.0);

  c.kernel_y0 = r.str("analysis.kernel_y0", "0,0,0,0");
  c.kernel_t0 = r.num("analysis.kernel_t0", 0.0);
  c.lambda_schedule = r.str("analysis.lambda_schedule", "1,2,4,8");
  c.analyze_monotonicity = r.flag("analysis.monotonicity", false);
  c.analyze_inequalities = r.flag("analysis.inequalities", false);
  c.analyze_evolution = r.flag("analysis.evolution", false);
  c.analyze_bound = r.flag("analysis.bound_check", false);
  c.slack = r.num("analysis.slack", 1e-3, 0.0, 1.0, true);

  c.out_dir = r.str("output.dir", "out");
  c.precision = int(r.integer("output.precision", 17, 6, 17));

  c.seed = std::uint64_t(r.integer("run.seed", 1, 0, 1000000000));

  r.finish();
  if (c.scenario.empty())
    throw validation_error("config validation failed: scenario.kind is required");
  return c;
}

RunConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[model]\n";
  os << "id = " << c.model_id << "\n";
  os << "n = " << c.model_n << "\n";
  os << "verify = " << (c.verify_model ? 1 : 0) << "\n";
  os << "[scenario]\n";
  os << "kind = " << c.scenario << "\n";
  os << "vertices = " << c.vertices << "\n";
  os << "level = " << c.level << "\n";
  os << "eps = " << format_g17(c.eps) << "\n";
  os << "mode = " << c.mode << "\n";
  os << "amplitude = " << format_g17(c.amplitude) << "\n";
  os << "axis_x = " << format_g17(c.axis_x) << "\n";
  os << "axis_y = " << format_g17(c.axis_y) << "\n";
  os << "axis_z = " << format_g17(c.axis_z) << "\n";
  os << "angle = " << format_g17(c.angle) << "\n";
  os << "phi_amp = " << format_g17(c.phi_amp) << "\n";
  os << "z_amp = " << format_g17(c.z_amp) << "\n";
  os << "half_length = " << format_g17(c.half_length) << "\n";
  os << "path = " << c.snapshot_path << "\n";
  os << "[control]\n";
  os << "cfl_kappa = " << format_g17(c.control.cfl_kappa) << "\n";
  os << "curvature_kappa = " << format_g17(c.control.curvature_kappa) << "\n";
  os << "max_dt = " << format_g17(c.control.max_dt) << "\n";
  os << "fixed_dt = " << format_g17(c.control.fixed_dt) << "\n";
  os << "integrator = "
     << (c.control.integrator == StepControl::Integrator::Euler ? "euler" : "rk2") << "\n";
  os << "restore_policy = "
     << (c.control.restore_policy == StepControl::RestorePolicy::Off ? "off"
         : c.control.restore_policy == StepControl::RestorePolicy::EveryK ? "every_k"
                                                                          : "threshold")
     << "\n";
  os << "restore_k = " << c.control.restore_k << "\n";
  os << "redistribute = " << (c.control.redistribute ? 1 : 0) << "\n";
  os << "restore_threshold = " << format_g17(c.control.restore_threshold) << "\n";
  os << "restore_tol = " << format_g17(c.control.restore_tol) << "\n";
  os << "tol_stop = " << format_g17(c.stopping.tol_stop) << "\n";
  os << "t_max = " << format_g17(c.stopping.t_max) << "\n";
  os << "guard_a2 = " << format_g17(c.stopping.guard_a2) << "\n";
  os << "guard_measure_ratio = " << format_g17(c.stopping.guard_measure_ratio) << "\n";
  os << "cadence = " << c.cadence << "\n";
  os << "max_steps = " << c.max_steps << "\n";
  os << "[gauge]\n";
  os << "policy = "
     << (c.gauge.policy == AlphaGauge::Policy::Anchor ? "anchor"
         : c.gauge.policy == AlphaGauge::Policy::MeanZero ? "mean_zero"
                                                          : "cone_phase")
     << "\n";
  os << "anchor_vertex = " << c.gauge.anchor_vertex << "\n";
  os << "anchor_value = " << format_g17(c.gauge.anchor_value) << "\n";
  os << "[analysis]\n";
  os << "kernel_y0 = " << c.kernel_y0 << "\n";
  os << "kernel_t0 = " << format_g17(c.kernel_t0) << "\n";
  os << "lambda_schedule = " << c.lambda_schedule << "\n";
  os << "monotonicity = " << (c.analyze_monotonicity ? 1 : 0) << "\n";
  os << "inequalities = " << (c.analyze_inequalities ? 1 : 0) << "\n";
  os << "evolution = " << (c.analyze_evolution ? 1 : 0) << "\n";
  os << "bound_check = " << (c.analyze_bound ? 1 : 0) << "\n";
  os << "slack = " << format_g17(c.slack) << "\n";
  os << "[output]\n";
  os << "dir = " << c.out_dir << "\n";
  os << "precision = " << c.precision << "\n";
  os << "[run]\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(canonical_config(cfg)); }

// ---------------- scenarios ----------------

DiscreteImmersion build_scenario(const RunConfig& cfg) {
  const std::string& k = cfg.scenario;
  if (k == "great_circle") return great_circle(cfg.vertices);
  if (k == "perturbed_great_circle")
    return perturbed_great_circle(cfg.vertices, cfg.eps, cfg.mode);
  if (k == "bowtie") return bowtie_curve(cfg.vertices, cfg.phi_amp, cfg.z_amp);
  if (k == "equator_lift") {
    auto eq = [](double u) { return Vec3(std::cos(u), std::sin(u), 0.0); };
    return horizontal_lift_curve(eq, cfg.vertices, 2);
  }
  if (k == "identity_graph") return identity_graph(cfg.level);
  if (k == "twist_graph") return map_graph(SymplectoMap::twist(cfg.amplitude), cfg.level);
  if (k == "rotation_graph") {
    Vec3 axis(cfg.axis_x, cfg.axis_y, cfg.axis_z);
    if (axis.norm() < 1e-12) throw validation_error("rotation axis must be nonzero");
    return map_graph(SymplectoMap::rotation(axis.normalized(), cfg.angle), cfg.level);
  }
  if (k == "axis_line") return axis_line_std_contact(cfg.vertices, cfg.half_length);
  if (k == "from_snapshot") {
    if (cfg.snapshot_path.empty())
      throw validation_error("scenario.path required for from_snapshot");
    return read_snapshot(cfg.snapshot_path).imm;
  }
  throw validation_error("unknown scenario '" + k + "'");
}

// ---------------- snapshot files ----------------

void write_snapshot(const fs::path& path, const DiscreteImmersion& imm,
                    const GeometrySnapshot* fields) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write snapshot '" + path.string() + "'");
  const int V = imm.num_vertices();
  const int E = imm.num_elements();
  out << "legflow-snapshot 1\n";
  out << "model = " << imm.model->name << "\n";
  out << "n = " << imm.model->n << "\n";
  out << "dim = " << imm.dim << "\n";
  out << "ambient = " << imm.model->ambient_dim << "\n";
  out << "vertices = " << V << "\n";
  out << "elements = " << E << "\n";
  out << "time = " << format_g17(imm.time) << "\n";
  out << "gauge = " << (fields ? to_string(fields->gauge) : "anchor 0 0") << "\n";
  out << "orientation = " << imm.orientation << "\n";
  out << "closed = " << (imm.closed ? 1 : 0) << "\n";
  out << "diagnostic = " << (imm.diagnostic ? 1 : 0) << "\n";
  for (int v = 0; v < V; ++v) {
    out << "v " << imm.verts[v].chart;
    for (int i = 0; i < imm.verts[v].x.size(); ++i)
      out << " " << format_g17(imm.verts[v].x[i]);
    const double alpha = fields && fields->alpha.size() ? fields->alpha[v] : 0.0;
    const double omega = fields && fields->omega.size() ? fields->omega[v] : 0.0;
    out << " " << format_g17(alpha) << " " << format_g17(omega) << "\n";
  }
  if (imm.dim == 1)
    for (const auto& s : imm.segments) out << "e " << s[0] << " " << s[1] << "\n";
  else
    for (const auto& t : imm.triangles)
      out << "e " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

SnapshotData read_snapshot(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open snapshot '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "legflow-snapshot 1")
    throw io_error("snapshot '" + path.string() + "': unsupported format version '" +
                   line + "'");
  std::map<std::string, std::string> hdr;
  int V = -1, E = -1;
  while (in.peek() != 'v' && in.peek() != 'e' && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(val);
    hdr[key] = val;
  }
  for (const char* k : {"model", "n", "dim", "ambient", "vertices", "elements", "time",
                        "gauge", "orientation", "closed", "diagnostic"})
    if (!hdr.count(k)) throw io_error("snapshot header misses '" + std::string(k) + "'");

  SnapshotData sd;
  sd.imm.model = make_model(hdr["model"], std::stoi(hdr["n"]));
  sd.imm.dim = std::stoi(hdr["dim"]);
  sd.imm.time = std::strtod(hdr["time"].c_str(), nullptr);
  sd.imm.orientation = std::stoi(hdr["orientation"]);
  sd.imm.closed = hdr["closed"] == "1";
  sd.imm.diagnostic = hdr["diagnostic"] == "1";
  sd.gauge = alpha_gauge_from_string(hdr["gauge"]);
  V = std::stoi(hdr["vertices"]);
  E = std::stoi(hdr["elements"]);
  const int N = std::stoi(hdr["ambient"]);
  sd.alpha = Vec::Zero(V);
  sd.omega = Vec::Zero(V);

  int nv = 0, ne = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      ChartPoint p;
      p.x = Vec(N);
      ls >> p.chart;
      for (int i = 0; i < N; ++i) ls >> p.x[i];
      ls >> sd.alpha[nv] >> sd.omega[nv];
      if (!ls) throw io_error("snapshot vertex line " + std::to_string(nv) + " malformed");
      sd.imm.verts.push_back(p);
      ++nv;
    } else if (tag == "e") {
      if (sd.imm.dim == 1) {
        std::array<int, 2> s{};
        ls >> s[0] >> s[1];
        sd.imm.segments.push_back(s);
      } else {
        std::array<int, 3> t{};
        ls >> t[0] >> t[1] >> t[2];
        sd.imm.triangles.push_back(t);
      }
      ++ne;
    }
  }
  if (nv != V || ne != E)
    throw io_error("snapshot '" + path.string() + "': count mismatch");
  return sd;
}

// ---------------- series ----------------

static const char* kSeriesHeader =
    "t,area,omega_min,omega_max,A2_max,H_max,alpha_min,alpha_max,leg_residual,dt,"
    "restored_displacement";

void write_series(const fs::path& path, const std::vector<SeriesRow>& rows) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write series '" + path.string() + "'");
  out << kSeriesHeader << "\n";
  for (const auto& r : rows) {
    out << format_g17(r.t) << ',' << format_g17(r.area) << ',' << format_g17(r.omega_min)
        << ',' << format_g17(r.omega_max) << ',' << format_g17(r.a2_max) << ','
        << format_g17(r.h_max) << ',' << format_g17(r.alpha_min) << ','
        << format_g17(r.alpha_max) << ',' << format_g17(r.leg_residual) << ','
        << format_g17(r.dt) << ',' << format_g17(r.restored_displacement) << "\n";
  }
}

std::vector<SeriesRow> read_series(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open series '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != kSeriesHeader)
    throw io_error("series '" + path.string() + "': unexpected header");
  std::vector<SeriesRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SeriesRow r;
    double* fields[] = {&r.t, &r.area, &r.omega_min, &r.omega_max, &r.a2_max, &r.h_max,
                        &r.alpha_min, &r.alpha_max, &r.leg_residual, &r.dt,
                        &r.restored_displacement};
    std::istringstream ls(line);
    std::string cell;
    for (double* f : fields) {
      if (!std::getline(ls, cell, ',')) throw io_error("series row malformed");
      *f = std::strtod(cell.c_str(), nullptr);
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------- manifest ----------------

void write_manifest(const fs::path& path, const RunConfig& cfg, const ModelPtr& model,
                    const std::string& termination, bool complete) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write manifest '" + path.string() + "'");
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  out << "legflow-manifest 1\n";
  out << "config_hash = " << hash << "\n";
  out << "snapshot_format = 1\n";
  out << "series_format = 1\n";
  out << "model = " << model->name << "\n";
  out << "n = " << model->n << "\n";
  out << "K = " << format_g17(model->constants.K) << "\n";
  out << "c_transverse = " << format_g17(model->constants.c_transverse) << "\n";
  out << "einstein_factor = " << format_g17(model->constants.einstein_factor) << "\n";
  out << "alpha_linear = " << format_g17(model->constants.alpha_linear) << "\n";
  out << "gauge = " << to_string(cfg.gauge) << "\n";
  out << "termination = " << termination << "\n";
  out << "complete = " << (complete ? 1 : 0) << "\n";
  out << "[config]\n";
  out << canonical_config(cfg);
  out << "[end-config]\n";
}

std::string manifest_config_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest '" + path.string() + "'");
  std::string line;
  std::ostringstream cfg;
  bool inside = false;
  while (std::getline(in, line)) {
    if (line == "[config]") {
      inside = true;
      continue;
    }
    if (line == "[end-config]") break;
    if (inside) cfg << line << "\n";
  }
  if (!inside) throw io_error("manifest has no [config] block");
  return cfg.str();
}

// ---------------- run orchestration ----------------

RunResult run_from_config(const RunConfig& cfg) {
  fs::path dir = cfg.out_dir;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir) || !fs::is_empty(dir))
      throw validation_error("run directory '" + dir.string() +
                             "' already exists and is not empty");
  } else {
    fs::create_directories(dir);
  }

  DiscreteImmersion initial = build_scenario(cfg);
  RunSpec spec;
  spec.control = cfg.control;
  spec.stopping = cfg.stopping;
  spec.gauge = cfg.gauge;
  spec.cadence = cfg.cadence;
  spec.max_steps = cfg.max_steps;

  Trajectory traj = run_flow(std::move(initial), spec);

  write_series(dir / "series.csv", traj.series);
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%04zu.txt", i);
    write_snapshot(dir / name, traj.snapshots[i], &traj.fields[i]);
  }
  write_manifest(dir / "manifest.txt", cfg, traj.model, traj.termination, traj.complete);
  if (traj.complete) std::ofstream(dir / "complete") << "ok\n";

  return RunResult{dir, std::move(traj)};
}

Trajectory load_trajectory(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.txt"))
    throw io_error("no manifest in '" + dir.string() + "'");
  const RunConfig cfg = parse_config(manifest_config_text(dir / "manifest.txt"));

  Trajectory traj;
  traj.gauge = cfg.gauge;
  traj.series = read_series(dir / "series.csv");

  std::vector<fs::path> snaps;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && name.size() >= 9) snaps.push_back(e.path());
  }
  std::sort(snaps.begin(), snaps.end());
  if (snaps.empty()) throw io_error("no snapshots in '" + dir.string() + "'");
  for (const auto& p : snaps) {
    SnapshotData sd = read_snapshot(p);
    traj.model = sd.imm.model;
    traj.fields.push_back(compute_snapshot(sd.imm, cfg.gauge));
    traj.snapshots.push_back(std::move(sd.imm));
  }

  // termination from the manifest
  std::ifstream in(dir / "manifest.txt");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("termination = ", 0) == 0) traj.termination = line.substr(14);
    if (line.rfind("complete = ", 0) == 0) traj.complete = line.substr(11) == "1";
  }
  if (!traj.initial_mean_measure && !traj.fields.empty())
    traj.initial_mean_measure =
        traj.fields.front().area / std::max(1, traj.snapshots.front().num_elements());
  return traj;
}

void write_report(const fs::path& path, const ReportRecord& rep) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write report '" + path.string() + "'");
  out << "name = " << rep.name << "\n";
  for (const auto& [k, v] : rep.values) out << k << " = " << format_g17(v) << "\n";
  out << "pass = " << (rep.pass ? 1 : 0) << "\n";
  for (const auto& n : rep.notes) out << "note = " << n << "\n";
}

void write_density_series(const fs::path& path, const DensitySeries& s) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write density series '" + path.string() + "'");
  out << "t,density,bracket,defect,defect_a,ddt_density,identity_residual,violated\n";
  for (const auto& r : s.rows) {
    out << format_g17(r.t) << ',' << format_g17(r.density) << ',' << format_g17(r.bracket)
        << ',' << format_g17(r.defect) << ',' << format_g17(r.defect_a) << ','
        << format_g17(r.ddt_density) << ',' << format_g17(r.identity_residual) << ','
        << (r.inequality_violated ? 1 : 0) << "\n";
  }
}

}  // namespace legflow

#include <CLI11.hpp>
#include <iostream>

#include "legflow/io.hpp"

using namespace legflow;

namespace {

KernelSpec kernel_from_strings(const std::string& y0_csv, double t0, int n) {
  KernelSpec ks;
  std::vector<double> vals;
  std::stringstream ss(y0_csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
  ks.y0 = Vec(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) ks.y0[i] = vals[i];
  ks.t0 = t0;
  ks.n = n;
  return ks;
}

std::vector<double> parse_schedule(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::strtod(cell.c_str(), nullptr));
  if (out.empty()) throw validation_error("empty lambda schedule");
  return out;
}

void print_report(const ReportRecord& rep) {
  std::cout << "name = " << rep.name << "\n";
  for (const auto& [k, v] : rep.values) std::cout << k << " = " << format_g17(v) << "\n";
  std::cout << "pass = " << (rep.pass ? 1 : 0) << "\n";
  for (const auto& n : rep.notes) std::cout << "note = " << n << "\n";
}

int dispatch(int argc, char** argv) {
  CLI::App app{"legflow: Legendrian mean curvature flow laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir, op = "monotonicity";
  std::string model_name = "t11";
  std::string kernel_y0 = "0,0,0,0";
  std::string lambda_schedule = "1,2,4,8";
  std::string map_kind = "twist";
  double kernel_t0 = 0.0, t_max = -1.0, amplitude = 0.2, angle = 0.3, slack = 1e-3;
  int samples = 100, level = 3, model_n = 1;
  double fd_step = 1e-4;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "run a configured flow");
  run->add_option("--config", config_path)->required();
  run->add_option("--out", out_dir);
  run->add_option("--seed", seed);
  run->add_option("--t-max", t_max);

  auto* analyze = app.add_subcommand("analyze", "trajectory-level analysis");
  analyze->add_option("--run", run_dir)->required();
  analyze
      ->add_option("--op", op)
      ->check(CLI::IsMember({"monotonicity", "shrinker", "odebound", "inequalities",
                             "evolution", "density"}));
  analyze->add_option("--kernel-y0", kernel_y0);
  analyze->add_option("--kernel-t0", kernel_t0);
  analyze->add_option("--lambda-schedule", lambda_schedule);
  analyze->add_option("--slack", slack);
  analyze->add_option("--out", out_dir);

  auto* verify = app.add_subcommand("verify-model", "numeric model verification");
  verify->add_option("--model", model_name)->required();
  verify->add_option("--n", model_n);
  verify->add_option("--samples", samples);
  verify->add_option("--fd-step", fd_step);
  verify->add_option("--seed", seed);

  auto* lift = app.add_subcommand("lift", "Legendrian graph lift of a map");
  lift->add_option("--map", map_kind)->check(CLI::IsMember({"identity", "twist", "rotation", "zcube"}));
  lift->add_option("--amplitude", amplitude);
  lift->add_option("--angle", angle);
  lift->add_option("--level", level);
  lift->add_option("--out", out_dir)->required();

  auto* rescale = app.add_subcommand("rescale", "parabolic dilation of a run");
  rescale->add_option("--run", run_dir)->required();
  rescale->add_option("--kernel-y0", kernel_y0);
  rescale->add_option("--kernel-t0", kernel_t0)->required();
  rescale->add_option("--lambda-schedule", lambda_schedule);
  rescale->add_option("--out", out_dir);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    RunConfig cfg = parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (run->count("--seed")) cfg.seed = seed;
    if (t_max > 0) cfg.stopping.t_max = t_max;
    RunResult res = run_from_config(cfg);
    std::cout << "run " << res.dir.string() << " finished: " << res.traj.termination
              << " after " << res.traj.series.size() - 1 << " steps, t = "
              << format_g17(res.traj.series.back().t) << "\n";
    return 0;
  }

  if (analyze->parsed()) {
    Trajectory traj = load_trajectory(run_dir);
    const std::filesystem::path outp =
        out_dir.empty() ? std::filesystem::path(run_dir) : std::filesystem::path(out_dir);
    std::filesystem::create_directories(outp);
    if (op == "monotonicity" || op == "density") {
      double t0 = kernel_t0;
      if (t0 <= traj.fields.back().time)
        t0 = traj.fields.back().time +
             0.25 * std::max(traj.fields.back().time - traj.fields.front().time, 1e-3);
      KernelSpec ks = kernel_from_strings(kernel_y0, t0, traj.snapshots.front().dim);
      if (op == "density") {
        ReportRecord rep;
        rep.name = "gaussian_density";
        rep.set("t0", ks.t0);
        rep.set("density_last", gaussian_density(traj.snapshots.back(), ks));
        print_report(rep);
        write_report(outp / "density_report.txt", rep);
      } else {
        DensitySeries ds = monotonicity_series(traj, ks, slack);
        write_density_series(outp / "monotonicity.csv", ds);
        ReportRecord rep;
        rep.name = "monotonicity";
        rep.set("t0", ks.t0);
        rep.set("max_identity_residual", ds.max_identity_residual);
        rep.set("violations", ds.violations);
        rep.pass = ds.violations == 0;
        print_report(rep);
        write_report(outp / "monotonicity_report.txt", rep);
      }
    } else if (op == "shrinker") {
      auto res = shrinker_residual(traj.snapshots.back(), traj.fields.back(),
                                   ShrinkerMode::Static);
      ReportRecord rep;
      rep.name = "shrinker_residual";
      rep.set("static_residual", res.residual);
      rep.set("weight", res.weight);
      print_report(rep);
      write_report(outp / "shrinker_report.txt", rep);
    } else if (op == "odebound") {
      ReportRecord rep = check_bound(traj, slack);
      print_report(rep);
      write_report(outp / "odebound_report.txt", rep);
    } else if (op == "inequalities") {
      ReportRecord rep;
      rep.name = "pointwise_inequalities";
      int vh = 0, vg = 0, gl = 0;
      double worst_h = 1e300, worst_g = 1e300;
      for (const auto& f : traj.fields) {
        auto ir = pointwise_inequalities(f, slack);
        vh += ir.violations_h;
        vg += ir.violations_grad;
        gl += ir.graph_loss_vertices;
        worst_h = std::min(worst_h, ir.worst_margin_h);
        worst_g = std::min(worst_g, ir.worst_margin_grad);
      }
      PsiTrend pt = psi_trend(traj);
      rep.set("violations_h", vh);
      rep.set("violations_grad", vg);
      rep.set("graph_loss_vertices", gl);
      rep.set("worst_margin_h", worst_h);
      rep.set("worst_margin_grad", worst_g);
      rep.set("psi_running_max", pt.running_max);
      rep.set("psi_trend_slope", pt.slope);
      rep.pass = vh == 0 && vg == 0;
      print_report(rep);
      write_report(outp / "inequalities_report.txt", rep);
    } else if (op == "evolution") {
      ReportRecord rep = evolution_residuals(traj);
      print_report(rep);
      write_report(outp / "evolution_report.txt", rep);
    }
    return 0;
  }

  if (verify->parsed()) {
    auto model = make_model(model_name, model_n);
    ReportRecord rep = verify_einstein(*model, samples, fd_step, seed);
    print_report(rep);
    return rep.pass ? 0 : 3;
  }

  if (lift->parsed()) {
    SymplectoMap map = SymplectoMap::rotation(Vec3(0, 0, 1), 0.0);
    if (map_kind == "twist") map = SymplectoMap::twist(amplitude);
    if (map_kind == "rotation") map = SymplectoMap::rotation(Vec3(0, 0, 1), angle);
    if (map_kind == "zcube") map = SymplectoMap::zcube();
    LiftReport lr;
    DiscreteImmersion imm = legendrian_lift(map, icosphere(level), &lr);
    std::filesystem::create_directories(out_dir);
    GeometrySnapshot snap = compute_snapshot(imm, AlphaGauge{});
    write_snapshot(std::filesystem::path(out_dir) / "lift.txt", imm, &snap);
    ReportRecord rep;
    rep.name = "legendrian_lift";
    rep.set("holonomy_residual", lr.holonomy_residual);
    rep.set("legendrian_residual", lr.legendrian_residual);
    rep.set("tree_edges", lr.tree_edges);
    rep.set("omega_min", snap.omega_min);
    print_report(rep);
    write_report(std::filesystem::path(out_dir) / "lift_report.txt", rep);
    return 0;
  }

  if (rescale->parsed()) {
    Trajectory traj = load_trajectory(run_dir);
    const std::filesystem::path outp =
        out_dir.empty() ? std::filesystem::path(run_dir) : std::filesystem::path(out_dir);
    std::filesystem::create_directories(outp);
    KernelSpec ks = kernel_from_strings(kernel_y0, kernel_t0, traj.snapshots.front().dim);
    std::ofstream csv(outp / "rescale.csv");
    csv << "lambda,s,density,a2_max,selfsimilar_residual\n";
    for (double lam : parse_schedule(lambda_schedule)) {
      DilationView view = parabolic_dilate(traj, ks, lam);
      const std::size_t last = view.slices.size() - 1;
      auto sres = shrinker_residual(view.slices[last], ShrinkerMode::SelfSimilar,
                                    view.s[last]);
      csv << format_g17(lam) << ',' << format_g17(view.s[last]) << ','
          << format_g17(view.density[last]) << ',' << format_g17(view.a2_max[last]) << ','
          << format_g17(sres.residual) << "\n";
    }
    std::cout << "rescale written to " << (outp / "rescale.csv").string() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Validation:
      case ErrorKind::Unsupported:
      case ErrorKind::Io:
        return 2;
      case ErrorKind::Numerical:
        return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

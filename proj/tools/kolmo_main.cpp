// Batch front end: check-wronskian | trajectory | poincare | solve | simulate.
// Exit codes: 0 success, 1 numerical failure, 2 input error, 3 unsupported mode.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kolmo/io.hpp"
#include "kolmo/poincare.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/trajectory.hpp"
#include "kolmo/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitInput = 2;
constexpr int kExitUnsupported = 3;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestWriter {
  json manifest;
  fs::path out_dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  ManifestWriter(const std::string& command, const fs::path& out) : out_dir(out) {
    fs::create_directories(out_dir);
    manifest["command"] = command;
    manifest["version"] = kolmo::kVersion;
    manifest["started_utc"] = utc_now();
    manifest["outputs"] = json::array();
  }
  void add_output(const fs::path& p) { manifest["outputs"].push_back(p.filename().string()); }
  void finish() {
    manifest["finished_utc"] = utc_now();
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    kolmo::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

kolmo::ControlBasis basis_for(const kolmo::SystemSpec& spec,
                              const std::vector<double>& alphas_flag) {
  if (!alphas_flag.empty())
    return kolmo::ControlBasis::make(alphas_flag, spec.kappa, spec.beta,
                                     kolmo::ControlBasis::default_epsilon(spec.beta));
  return kolmo::ControlBasis::balanced(spec.kappa, spec.beta);
}

std::vector<double> jittered_alphas(int kappa, kolmo::rng::Stream& stream) {
  // Equally spaced slots in (-1, 0) with bounded jitter keeps the pairwise
  // gaps away from zero for the determinant oracle.
  std::vector<double> alphas(static_cast<std::size_t>(kappa) + 1);
  const double slot = 1.0 / (kappa + 1);
  for (int i = 0; i <= kappa; ++i)
    alphas[static_cast<std::size_t>(i)] =
        -1.0 + (i + 0.5) * slot + stream.uniform(-0.3, 0.3) * slot;
  return alphas;
}

int run_check_wronskian(const fs::path& spec_path, const std::vector<double>& alphas_flag,
                        int trials, std::uint64_t seed, double delta, double tol,
                        const fs::path& out_dir) {
  const kolmo::SystemSpec spec = kolmo::load_spec_file(spec_path);
  ManifestWriter mw("check-wronskian", out_dir);
  mw.manifest["config"] = {{"spec", spec_path.string()}, {"trials", trials}, {"seed", seed},
                           {"delta", delta},             {"tol", tol}};

  kolmo::rng::Stream stream = kolmo::rng::Stream::named(seed, "check-wronskian");
  const std::vector<double> s_values = {0.1, 0.5, 1.0};
  double max_rel = 0.0;
  int performed = 0;
  for (int trial = 0; trial < trials; ++trial) {
    kolmo::ControlBasis basis =
        !alphas_flag.empty()
            ? kolmo::ControlBasis::make(alphas_flag, spec.kappa, spec.beta,
                                        kolmo::ControlBasis::default_epsilon(spec.beta))
            : kolmo::ControlBasis::make(jittered_alphas(spec.kappa, stream), spec.kappa,
                                        spec.beta,
                                        kolmo::ControlBasis::default_epsilon(spec.beta));
    kolmo::WronskianBundle bundle(spec, basis, delta);
    for (double s : s_values) {
      const double closed = bundle.det_closed_form(s);
      const double numeric = static_cast<double>(bundle.det_numeric(s));
      const double rel = std::abs(numeric - closed) / std::abs(closed);
      max_rel = std::max(max_rel, rel);
    }
    ++performed;
    if (!alphas_flag.empty()) break;  // a fixed basis needs no repetition
  }
  const bool pass = max_rel <= tol;
  json report = {{"kappa", spec.kappa},   {"d0", spec.dims[0]}, {"trials", performed},
                 {"s_values", s_values},  {"max_rel_error", max_rel},
                 {"tolerance", tol},      {"pass", pass}};
  kolmo::write_text_file(out_dir / "wronskian_report.json", report.dump(2) + "\n");
  mw.add_output("wronskian_report.json");
  mw.finish();
  std::cout << "check-wronskian: max relative error " << kolmo::format_double(max_rel)
            << (pass ? " (pass)" : " (FAIL)") << "\n";
  return pass ? kExitOk : kExitNumerical;
}

int run_trajectory(const fs::path& spec_path, const fs::path& endpoints_path,
                   const std::vector<double>& alphas_flag, int samples, const fs::path& out_dir) {
  const kolmo::SystemSpec spec = kolmo::load_spec_file(spec_path);
  json endpoints;
  {
    std::string text = kolmo::read_text_file(endpoints_path);
    try {
      endpoints = json::parse(text);
    } catch (const json::exception& e) {
      throw kolmo::InvalidSpecError(std::string("malformed endpoints file: ") + e.what());
    }
  }
  if (!endpoints.contains("z_endpoint") || !endpoints.contains("z_0"))
    throw kolmo::InvalidSpecError("endpoints file must carry z_endpoint and z_0");
  const kolmo::KineticPoint z_e = kolmo::point_from_json(spec, endpoints["z_endpoint"]);
  const kolmo::KineticPoint z_0 = kolmo::point_from_json(spec, endpoints["z_0"]);

  ManifestWriter mw("trajectory", out_dir);
  mw.manifest["config"] = {{"spec", spec_path.string()},
                           {"endpoints", endpoints_path.string()},
                           {"samples", samples}};

  const kolmo::ControlBasis basis = basis_for(spec, alphas_flag);
  const kolmo::TrajectoryBundle bundle = kolmo::solve_control(spec, basis, z_e, z_0);

  std::ostringstream csv;
  csv << "s,t";
  for (int i = 0; i <= spec.kappa; ++i)
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c)
      csv << ",x" << i << "_" << c;
  csv << "\n";
  std::vector<double> max_layer_norms(static_cast<std::size_t>(spec.kappa) + 1, 0.0);
  for (int k = 0; k < samples; ++k) {
    const double s = samples == 1 ? 0.0 : static_cast<double>(k) / (samples - 1);
    const kolmo::KineticPoint g = bundle.at(s);
    csv << kolmo::format_double(s) << "," << kolmo::format_double(g.t);
    for (int i = 0; i <= spec.kappa; ++i) {
      max_layer_norms[static_cast<std::size_t>(i)] =
          std::max(max_layer_norms[static_cast<std::size_t>(i)],
                   g.layers[static_cast<std::size_t>(i)].norm());
      for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c)
        csv << "," << kolmo::format_double(g.layers[static_cast<std::size_t>(i)](c));
    }
    csv << "\n";
  }
  kolmo::write_text_file(out_dir / "trajectory.csv", csv.str());
  mw.add_output("trajectory.csv");

  const double res0 =
      (bundle.at(0.0).control_vector() - z_e.control_vector()).lpNorm<Eigen::Infinity>();
  const double res1 =
      (bundle.at(1.0).control_vector() - z_0.control_vector()).lpNorm<Eigen::Infinity>();
  json diag = {{"residual_s0", res0},
               {"residual_s1", res1},
               {"delta", bundle.delta()},
               {"coefficient_norm", bundle.coefficients().norm()},
               {"max_layer_norms", max_layer_norms}};
  const kolmo::SlopeFit fit = kolmo::singularity_slope(bundle);
  diag["degenerate_control"] = fit.degenerate_control;
  if (!fit.degenerate_control) {
    diag["singularity_slope"] = fit.slope;
    double max_alpha = basis.alphas[0];
    for (double a : basis.alphas) max_alpha = std::max(max_alpha, a);
    diag["expected_slope"] = -1.0 - max_alpha;
  }
  kolmo::write_text_file(out_dir / "diagnostics.json", diag.dump(2) + "\n");
  mw.add_output("diagnostics.json");
  mw.finish();
  std::cout << "trajectory: endpoint residuals " << kolmo::format_double(res0) << ", "
            << kolmo::format_double(res1) << "\n";
  return kExitOk;
}

int run_poincare(const fs::path& spec_path, kolmo::EnsembleConfig cfg, const fs::path& out_dir) {
  const kolmo::SystemSpec spec = kolmo::load_spec_file(spec_path);
  ManifestWriter mw("poincare", out_dir);
  mw.manifest["config"] = {{"spec", spec_path.string()},
                           {"runs", cfg.n_runs},
                           {"lambda", cfg.lambda},
                           {"p", cfg.p},
                           {"cells_per_axis", cfg.cells_per_axis},
                           {"tiles", cfg.tiles},
                           {"box_v", cfg.box_v},
                           {"box_x", cfg.box_x},
                           {"gap", cfg.gap},
                           {"seed", cfg.seed}};

  const kolmo::EnsembleResult result = kolmo::ensemble_estimate(spec, cfg);

  std::ostringstream csv;
  csv << "run,seed,lambda,kappa,p,lhs,rhs,ratio_defined,ratio,grid,failed\n";
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& run = result.runs[r];
    const std::string grid_desc = std::to_string(cfg.cells_per_axis);
    csv << r << "," << run.seed << "," << kolmo::format_double(cfg.lambda) << "," << spec.kappa
        << "," << kolmo::format_double(cfg.p) << ",";
    if (run.failed) {
      csv << ",,,," << grid_desc << ",1\n";
    } else {
      csv << kolmo::format_double(run.report.lhs) << "," << kolmo::format_double(run.report.rhs)
          << "," << (run.report.ratio_defined ? 1 : 0) << ","
          << (run.report.ratio_defined ? kolmo::format_double(run.report.ratio) : "") << ","
          << grid_desc << ",0\n";
    }
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu.json", r);
    json run_json = run.failed ? json{{"failed", true}, {"reason", run.failure}}
                               : run.report.to_json();
    run_json["run"] = r;
    run_json["seed"] = run.seed;
    kolmo::write_text_file(out_dir / name, run_json.dump(2) + "\n");
    mw.add_output(name);
  }
  kolmo::write_text_file(out_dir / "summary.csv", csv.str());
  mw.add_output("summary.csv");

  json summary = {{"n_ok", result.summary.n_ok},
                  {"n_failed", result.summary.n_failed},
                  {"max_ratio", result.summary.max_ratio},
                  {"median_ratio", result.summary.median_ratio},
                  {"flagged", result.summary.flagged}};
  kolmo::write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  mw.add_output("summary.json");
  mw.finish();
  std::cout << "poincare: " << result.summary.n_ok << " runs ok, " << result.summary.n_failed
            << " failed, max ratio " << kolmo::format_double(result.summary.max_ratio) << "\n";
  return result.summary.n_failed == 0 ? kExitOk : kExitNumerical;
}

int run_solve(const fs::path& spec_path, int cells, double box_v, double box_x, double t0,
              double t1, int steps, const std::string& coeff_kind, double lambda, int tiles,
              std::uint64_t seed, const fs::path& out_dir) {
  const kolmo::SystemSpec spec = kolmo::load_spec_file(spec_path);
  ManifestWriter mw("solve", out_dir);
  mw.manifest["config"] = {{"spec", spec_path.string()}, {"cells", cells},
                           {"box_v", box_v},             {"box_x", box_x},
                           {"t0", t0},                   {"t1", t1},
                           {"steps", steps},             {"coefficient", coeff_kind},
                           {"lambda", lambda},           {"tiles", tiles},
                           {"seed", seed}};

  std::vector<double> half_extent;
  std::vector<int> counts;
  for (int i = 0; i <= spec.kappa; ++i)
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c) {
      half_extent.push_back(i == 0 ? box_v : box_x);
      counts.push_back(cells);
    }
  const kolmo::GridGeometry grid = kolmo::GridGeometry::box(half_extent, counts);

  kolmo::CoefficientField coeff = kolmo::CoefficientField::identity(spec.dims[0]);
  if (coeff_kind == "rough")
    coeff = kolmo::rough_coefficient_field(spec, *std::max_element(half_extent.begin(), half_extent.end()),
                                           tiles, lambda, seed);
  else if (coeff_kind == "checker")
    coeff = kolmo::checkerboard_field(spec, lambda, 2.0 * box_v / tiles);
  else if (coeff_kind != "identity")
    throw kolmo::InvalidParametersError("coefficient kind must be identity|rough|checker");

  auto initial = [](const Eigen::VectorXd& x) { return std::exp(-0.5 * x.squaredNorm()); };
  kolmo::FdConfig fd;
  fd.t0 = t0;
  fd.t1 = t1;
  fd.n_steps = steps;
  const kolmo::GridField field = kolmo::fd_solve(spec, grid, coeff, initial, fd);

  std::ostringstream csv;
  for (int a = 0; a < grid.axes(); ++a) csv << "x" << a << ",";
  csv << "value\n";
  const int last = field.slices() - 1;
  for (long c = 0; c < field.cells(); ++c) {
    const Eigen::VectorXd x = grid.cell_center(c);
    for (int a = 0; a < grid.axes(); ++a) csv << kolmo::format_double(x(a)) << ",";
    csv << kolmo::format_double(field.at(last, c)) << "\n";
  }
  kolmo::write_text_file(out_dir / "grid_final.csv", csv.str());
  mw.add_output("grid_final.csv");
  mw.manifest["scheme"] = {{"dt", field.dt},
                           {"slices", field.slices()},
                           {"boundary", "v:dirichlet-zero,x:periodic"},
                           {"grid", grid.n}};
  mw.finish();
  std::cout << "solve: " << field.slices() << " stored slices, dt "
            << kolmo::format_double(field.dt) << "\n";
  return kExitOk;
}

int run_simulate(const fs::path& spec_path, long paths, double horizon, double dt,
                 std::uint64_t seed, int threads, const fs::path& out_dir) {
  const kolmo::SystemSpec spec = kolmo::load_spec_file(spec_path);
  ManifestWriter mw("simulate", out_dir);
  mw.manifest["config"] = {{"spec", spec_path.string()}, {"paths", paths},
                           {"horizon", horizon},         {"dt", dt},
                           {"seed", seed}};

  kolmo::SdeConfig cfg;
  cfg.n_paths = paths;
  cfg.horizon = horizon;
  cfg.dt = dt;
  cfg.seed = seed;
  cfg.threads = threads;
  const kolmo::PathEnsemble ens = kolmo::sde_simulate(spec, cfg);

  std::ostringstream csv;
  csv << "path";
  for (int i = 0; i <= spec.kappa; ++i)
    for (int c = 0; c < spec.dims[static_cast<std::size_t>(i)]; ++c) csv << ",x" << i << "_" << c;
  csv << "\n";
  const int n = spec.total_dim();
  for (long p = 0; p < paths; ++p) {
    csv << p;
    for (int k = 0; k < n; ++k)
      csv << "," << kolmo::format_double(ens.terminal[static_cast<std::size_t>(p) * n + k]);
    csv << "\n";
  }
  kolmo::write_text_file(out_dir / "terminal.csv", csv.str());
  mw.add_output("terminal.csv");

  const kolmo::MomentSummary mom = kolmo::ensemble_moments(ens);
  json moments;
  moments["n_paths"] = paths;
  moments["horizon"] = horizon;
  moments["dt"] = ens.dt_actual;
  moments["mean"] = std::vector<double>(mom.mean.data(), mom.mean.data() + n);
  json cov = json::array();
  for (int r = 0; r < n; ++r) {
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) row[static_cast<std::size_t>(c)] = mom.cov(r, c);
    cov.push_back(std::move(row));
  }
  moments["cov"] = cov;
  kolmo::write_text_file(out_dir / "moments.json", moments.dump(2) + "\n");
  mw.add_output("moments.json");
  mw.finish();
  std::cout << "simulate: " << paths << " paths, " << ens.n_steps << " steps\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypoelliptic Kolmogorov toolbox: geometry, control trajectories, solvers and "
               "Poincare ratio estimation"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = ".", endpoints_path;
  std::vector<double> alphas;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
    auto* opt = cmd->add_option("--spec", spec_path, "system spec JSON file");
    if (needs_spec) opt->required();
    cmd->add_option("--seed", seed, "master seed for all sub-streams");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--alphas", alphas, "override control exponents")->delimiter(',');
  };

  auto* cw = app.add_subcommand("check-wronskian", "closed-form vs numeric determinant oracle");
  int cw_trials = 100;
  double cw_delta = 2.0, cw_tol = 1e-9;
  add_common(cw);
  cw->add_option("--trials", cw_trials, "number of random alpha draws");
  cw->add_option("--delta", cw_delta, "time increment of the bundle");
  cw->add_option("--tol", cw_tol, "relative tolerance");

  auto* tr = app.add_subcommand("trajectory", "solve a control problem and dump the path");
  int tr_samples = 101;
  add_common(tr);
  tr->add_option("--endpoints", endpoints_path, "JSON file with z_endpoint and z_0")->required();
  tr->add_option("--samples", tr_samples, "number of s samples");

  auto* po = app.add_subcommand("poincare", "ensemble estimate of the inequality ratio");
  kolmo::EnsembleConfig po_cfg;
  add_common(po);
  po->add_option("--runs", po_cfg.n_runs, "ensemble size");
  po->add_option("--lambda", po_cfg.lambda, "ellipticity bound of the sampled fields");
  po->add_option("--p", po_cfg.p, "integrability exponent");
  po->add_option("--cells", po_cfg.cells_per_axis, "grid cells per spatial axis");
  po->add_option("--tiles", po_cfg.tiles, "coefficient tiles per axis");
  po->add_option("--box-v", po_cfg.box_v, "half extent of the diffusive axes");
  po->add_option("--box-x", po_cfg.box_x, "half extent of the transported axes");
  po->add_option("--gap", po_cfg.gap, "time gap between cylinders");
  po->add_option("--target-slices", po_cfg.target_slices, "stored time slices");

  auto* so = app.add_subcommand("solve", "single forward solve with grid dump");
  int so_cells = 48, so_steps = 0, so_tiles = 8;
  double so_box_v = 6.0, so_box_x = 6.0, so_t0 = 0.0, so_t1 = 1.0, so_lambda = 1.0;
  std::string so_coeff = "identity";
  add_common(so);
  so->add_option("--cells", so_cells, "grid cells per spatial axis");
  so->add_option("--box-v", so_box_v, "half extent of the diffusive axes");
  so->add_option("--box-x", so_box_x, "half extent of the transported axes");
  so->add_option("--t0", so_t0, "start time");
  so->add_option("--t1", so_t1, "end time");
  so->add_option("--steps", so_steps, "time steps (0 = from the stability bound)");
  so->add_option("--coeff", so_coeff, "coefficient field: identity|rough|checker");
  so->add_option("--lambda", so_lambda, "ellipticity bound");
  so->add_option("--tiles", so_tiles, "tiles per axis for rough/checker fields");

  auto* si = app.add_subcommand("simulate", "Euler-Maruyama path ensemble");
  long si_paths = 10000;
  double si_horizon = 1.0, si_dt = 1e-3;
  int si_threads = 0;
  add_common(si);
  si->add_option("--paths", si_paths, "number of paths");
  si->add_option("--horizon", si_horizon, "final time");
  si->add_option("--dt", si_dt, "time step");
  si->add_option("--threads", si_threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (cw->parsed())
      return run_check_wronskian(spec_path, alphas, cw_trials, seed, cw_delta, cw_tol, out_dir);
    if (tr->parsed()) return run_trajectory(spec_path, endpoints_path, alphas, tr_samples, out_dir);
    if (po->parsed()) {
      po_cfg.seed = seed;
      return run_poincare(spec_path, po_cfg, out_dir);
    }
    if (so->parsed())
      return run_solve(spec_path, so_cells, so_box_v, so_box_x, so_t0, so_t1, so_steps, so_coeff,
                       so_lambda, so_tiles, seed, out_dir);
    if (si->parsed())
      return run_simulate(spec_path, si_paths, si_horizon, si_dt, seed, si_threads, out_dir);
  } catch (const kolmo::UnsupportedModeError& e) {
    std::cerr << "unsupported mode: " << e.what() << "\n";
    return kExitUnsupported;
  } catch (const kolmo::InvalidSpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const kolmo::InvalidParametersError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const kolmo::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}

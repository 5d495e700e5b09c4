#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "palmcd/change.hpp"
#include "palmcd/errors.hpp"
#include "palmcd/evaluation.hpp"
#include "palmcd/palm.hpp"
#include "palmcd/raster.hpp"

namespace fs = std::filesystem;
using namespace palmcd;

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  SolverConfig solver;
  double noise_sigma = 0.03;
  int looks = 5;
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParamError("config '" + path + "': " + e.what());
  }

  static const char* keys[] = {"lambda",    "gamma",    "sigma1_sq", "sigma2_sq", "tau1",
                               "tau2",      "eps_code", "eps_tv_1",  "eps_tv_2",  "n_atoms",
                               "patch_size", "stride",  "max_iters", "rel_tol",   "seed",
                               "noise_sigma", "looks"};
  for (const char* key : keys)
    if (!j.contains(key)) throw ParamError("config is missing key '" + std::string(key) + "'");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ParamError("config has unknown key '" + key + "'");
  }

  RunConfig cfg;
  cfg.solver.lambda = j["lambda"].get<double>();
  cfg.solver.gamma = j["gamma"].get<double>();
  cfg.solver.sigma1_sq = j["sigma1_sq"].get<double>();
  cfg.solver.sigma2_sq = j["sigma2_sq"].get<double>();
  cfg.solver.tau1 = j["tau1"].get<double>();
  cfg.solver.tau2 = j["tau2"].get<double>();
  cfg.solver.smoothing.eps_code = j["eps_code"].get<double>();
  cfg.solver.smoothing.eps_tv_1 = j["eps_tv_1"].get<double>();
  cfg.solver.smoothing.eps_tv_2 = j["eps_tv_2"].get<double>();
  cfg.solver.n_atoms = j["n_atoms"].get<int>();
  cfg.solver.patch_size = j["patch_size"].get<int>();
  cfg.solver.stride = j["stride"].get<int>();
  cfg.solver.max_iters = j["max_iters"].get<int>();
  cfg.solver.rel_tol = j["rel_tol"].get<double>();
  cfg.solver.seed = j["seed"].get<std::uint64_t>();
  cfg.noise_sigma = j["noise_sigma"].get<double>();
  cfg.looks = j["looks"].get<int>();
  cfg.solver.validate();
  return cfg;
}

int cmd_detect(const std::string& input1, const std::string& input2,
               const std::string& config_path, const std::string& out_energy,
               const std::string& out_mask, std::optional<double> threshold,
               const std::string& trace, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.solver.seed = *seed;

  const Raster in1 = read_raster(input1);
  const Raster in2 = read_raster(input2);
  const auto [y1, scale1] = normalize(in1);
  const auto [y2, scale2] = normalize(in2);

  SolverState st = run(y1, y2, cfg.solver, trace);

  const Eigen::VectorXd e = code_change_energy(st.da);
  const PatchGrid& fine = st.grid2.dims.width >= st.grid1.dims.width ? st.grid2 : st.grid1;
  Raster energy = energy_to_pixel_map(e, fine);
  energy.resolution =
      fine.dims.width == in1.width ? in1.resolution : in2.resolution;
  write_raster(energy, out_energy);

  if (threshold) write_mask(threshold_map(energy, *threshold), out_mask);

  for (const std::string& w : st.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_simulate(int scenario, std::uint64_t seed, const std::string& config_path,
                 const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  const ScenarioData d = simulate_scenario(scenario, 96, 96, cfg.noise_sigma, cfg.looks, seed);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_raster(d.reference1, (dir / "reference1.rimg").string());
  write_raster(d.reference2, (dir / "reference2.rimg").string());
  write_raster(d.changed1, (dir / "changed1.rimg").string());
  write_raster(d.changed2, (dir / "changed2.rimg").string());
  write_raster(d.observed1, (dir / "observed1.rimg").string());
  write_raster(d.observed2, (dir / "observed2.rimg").string());
  write_mask(d.truth, (dir / "truth.pgm").string());
  return 0;
}

int cmd_eval(const std::string& input1, const std::string& input2, const std::string& out_dir) {
  const Raster energy = read_raster(input1);
  const BinaryChangeMask truth = read_mask(input2);
  const RocCurve roc = roc_curve(energy, truth);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  std::ofstream csv(dir / "roc.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot create roc.csv");
  csv << "pfa,pd\n";
  char line[80];
  for (const RocPoint& p : roc.points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", p.pfa, p.pd);
    csv << line;
  }

  nlohmann::json j;
  j["auc"] = auc(roc);
  j["distance"] = diagonal_distance(roc);
  std::ofstream metrics(dir / "metrics.json", std::ios::trunc);
  if (!metrics) throw IoError("cannot create metrics.json");
  metrics << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled dictionary learning change detection for multimodal remote sensing images"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

  std::string input1, input2, config_path, out_energy, out_mask, trace, out_dir;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed_override;
  int scenario = 1;
  std::uint64_t sim_seed = 0;

  CLI::App* detect = app.add_subcommand("detect", "detect changes between two RIMG images");
  detect->add_option("--input1", input1, "first observed image (RIMG)")->required();
  detect->add_option("--input2", input2, "second observed image (RIMG)")->required();
  detect->add_option("--config", config_path, "JSON solver configuration")->required();
  detect->add_option("--out-energy", out_energy, "output change-energy map (RIMG)")->required();
  auto* mask_opt = detect->add_option("--out-mask", out_mask, "output binary mask (PGM)");
  auto* thr_opt = detect->add_option("--threshold", threshold, "decision threshold on the energy");
  mask_opt->needs(thr_opt);
  thr_opt->needs(mask_opt);
  detect->add_option("--trace", trace, "per-iteration trace CSV");
  detect->add_option("--seed", seed_override, "override the config seed");

  CLI::App* simulate = app.add_subcommand("simulate", "emit a synthetic-change scenario");
  simulate->add_option("--scenario", scenario, "1: optical/optical, 2: SAR/SAR, 3: optical/SAR")
      ->required();
  simulate->add_option("--seed", sim_seed, "scenario seed")->capture_default_str();
  simulate->add_option("--config", config_path, "JSON configuration (sensor parameters)")
      ->required();
  simulate->add_option("--out-dir", out_dir, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "score an energy map against a truth mask");
  eval->add_option("--input1", input1, "change-energy map (RIMG)")->required();
  eval->add_option("--input2", input2, "ground-truth mask (PGM)")->required();
  eval->add_option("--out-dir", out_dir, "output directory for roc.csv and metrics.json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return kExitBadArgs;
  }

  if (threads > 0)
    Eigen::setNbThreads(threads);
  else
    Eigen::setNbThreads(static_cast<int>(std::thread::hardware_concurrency()));

  try {
    if (detect->parsed())
      return cmd_detect(input1, input2, config_path, out_energy, out_mask, threshold, trace,
                        seed_override);
    if (simulate->parsed()) {
      if (scenario < 1 || scenario > 3) {
        std::cerr << "scenario must be 1, 2 or 3\n";
        return kExitBadArgs;
      }
      return cmd_simulate(scenario, sim_seed, config_path, out_dir);
    }
    if (eval->parsed()) return cmd_eval(input1, input2, out_dir);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const InitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    // format, data, io, geometry, degenerate, domain, eval
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
  return 0;
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "oracles.hpp"
#include "palmcd/raster.hpp"

using namespace palmcd;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PALMCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("palmcd_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string small_config_json() {
  return R"({"lambda": 0.05, "gamma": 0.2, "sigma1_sq": 1.0, "sigma2_sq": 1.0,
             "tau1": 0.02, "tau2": 0.02, "eps_code": 0.001, "eps_tv_1": 0.001,
             "eps_tv_2": 0.001, "n_atoms": 16, "patch_size": 4, "stride": 2,
             "max_iters": 4, "rel_tol": 1e-5, "seed": 1, "noise_sigma": 0.03,
             "looks": 5})";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Raster small_scene(std::uint64_t seed) {
  oracles::TestRng rng(seed);
  Raster r(24, 24, 1);
  for (double& v : r.data) v = rng.uniform(0.05, 1.0);
  return r;
}

}  // namespace

TEST_CASE("detect writes the energy map and exits cleanly") {
  TempDir tmp;
  write_raster(small_scene(1), tmp.file("y1.rimg"));
  write_raster(small_scene(2), tmp.file("y2.rimg"));
  write_text(tmp.file("cfg.json"), small_config_json());

  const int rc = run_cli("detect --input1 " + tmp.file("y1.rimg") + " --input2 " +
                         tmp.file("y2.rimg") + " --config " + tmp.file("cfg.json") +
                         " --out-energy " + tmp.file("e.rimg") + " --trace " +
                         tmp.file("trace.csv"));
  CHECK(rc == 0);
  CHECK(fs::exists(tmp.file("e.rimg")));
  const Raster e = read_raster(tmp.file("e.rimg"));
  CHECK(e.width == 24);
  CHECK(e.bands == 1);

  // trace header matches the documented schema
  std::ifstream trace(tmp.file("trace.csv"));
  std::string header;
  std::getline(trace, header);
  CHECK(header == "iter,objective,L_A1,L_dA,L_D1,L_D2,L_S,L_X1,L_X2");
}

TEST_CASE("detect thresholds produce nested masks") {
  TempDir tmp;
  write_raster(small_scene(3), tmp.file("y1.rimg"));
  write_raster(small_scene(4), tmp.file("y2.rimg"));
  write_text(tmp.file("cfg.json"), small_config_json());

  const std::string base = "detect --input1 " + tmp.file("y1.rimg") + " --input2 " +
                           tmp.file("y2.rimg") + " --config " + tmp.file("cfg.json") +
                           " --out-energy " + tmp.file("e.rimg");
  CHECK(run_cli(base + " --out-mask " + tmp.file("low.pgm") + " --threshold 0.001") == 0);
  CHECK(run_cli(base + " --out-mask " + tmp.file("high.pgm") + " --threshold 0.01") == 0);
  const BinaryChangeMask low = read_mask(tmp.file("low.pgm"));
  const BinaryChangeMask high = read_mask(tmp.file("high.pgm"));
  for (std::size_t i = 0; i < low.values.size(); ++i)
    if (high.values[i]) CHECK(low.values[i]);
}

TEST_CASE("detect exits 3 on a missing input and 2 on bad config") {
  TempDir tmp;
  write_raster(small_scene(5), tmp.file("y1.rimg"));
  write_text(tmp.file("cfg.json"), small_config_json());

  CHECK(run_cli("detect --input1 " + tmp.file("absent.rimg") + " --input2 " +
                tmp.file("y1.rimg") + " --config " + tmp.file("cfg.json") +
                " --out-energy " + tmp.file("e.rimg")) == 3);

  write_text(tmp.file("unknown.json"),
             small_config_json().insert(1, "\"mystery\": 1, "));
  CHECK(run_cli("detect --input1 " + tmp.file("y1.rimg") + " --input2 " + tmp.file("y1.rimg") +
                " --config " + tmp.file("unknown.json") + " --out-energy " +
                tmp.file("e.rimg")) == 2);

  write_text(tmp.file("partial.json"), R"({"lambda": 0.1})");
  CHECK(run_cli("detect --input1 " + tmp.file("y1.rimg") + " --input2 " + tmp.file("y1.rimg") +
                " --config " + tmp.file("partial.json") + " --out-energy " +
                tmp.file("e.rimg")) == 2);

  CHECK(run_cli("detect --input1 " + tmp.file("y1.rimg") + " --config " + tmp.file("cfg.json") +
                " --out-energy " + tmp.file("e.rimg")) == 2);  // missing --input2
}

TEST_CASE("simulate is bitwise reproducible per seed and rejects bad scenarios") {
  TempDir tmp;
  write_text(tmp.file("cfg.json"), small_config_json());

  CHECK(run_cli("simulate --scenario 1 --seed 7 --config " + tmp.file("cfg.json") +
                " --out-dir " + tmp.file("a")) == 0);
  CHECK(run_cli("simulate --scenario 1 --seed 7 --config " + tmp.file("cfg.json") +
                " --out-dir " + tmp.file("b")) == 0);
  for (const char* name : {"reference1.rimg", "reference2.rimg", "changed1.rimg",
                           "changed2.rimg", "observed1.rimg", "observed2.rimg", "truth.pgm"}) {
    CHECK(fs::exists(tmp.file("a/") + name));
    CHECK(slurp(tmp.file("a/") + name) == slurp(tmp.file("b/") + name));
  }

  const BinaryChangeMask truth = read_mask(tmp.file("a/truth.pgm"));
  const double coverage =
      static_cast<double>(truth.count_set()) / static_cast<double>(truth.values.size());
  CHECK(coverage >= 0.02);
  CHECK(coverage <= 0.15);

  CHECK(run_cli("simulate --scenario 4 --seed 7 --config " + tmp.file("cfg.json") +
                " --out-dir " + tmp.file("c")) == 2);
}

TEST_CASE("eval reports metrics that match the library") {
  TempDir tmp;
  // perfect energy: exactly the truth mask
  Raster e(8, 8, 1);
  BinaryChangeMask t(8, 8);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      t.at(r, c) = 1;
      e.at(0, r, c) = 1.0;
    }
  write_raster(e, tmp.file("e.rimg"));
  write_mask(t, tmp.file("t.pgm"));

  CHECK(run_cli("eval --input1 " + tmp.file("e.rimg") + " --input2 " + tmp.file("t.pgm") +
                " --out-dir " + tmp.file("out")) == 0);
  const nlohmann::json metrics = nlohmann::json::parse(slurp(tmp.file("out/metrics.json")));
  CHECK(metrics["auc"].get<double>() == 1.0);
  CHECK(metrics["distance"].get<double>() == 1.0);

  std::ifstream roc(tmp.file("out/roc.csv"));
  std::string header;
  std::getline(roc, header);
  CHECK(header == "pfa,pd");

  // mismatched dimensions
  Raster small(4, 4, 1);
  small.data[0] = 1.0;
  write_raster(small, tmp.file("small.rimg"));
  CHECK(run_cli("eval --input1 " + tmp.file("small.rimg") + " --input2 " + tmp.file("t.pgm") +
                " --out-dir " + tmp.file("out2")) == 3);
}

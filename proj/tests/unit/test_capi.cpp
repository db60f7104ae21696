#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "onecomp/onecomp.h"

namespace fs = std::filesystem;

namespace {

const char* kCosine = R"(
model:
  type: generic_matrix
  form: generator
  matrix:
    - [0, 2]
    - [-2, 0]
  target: [1, 0]
solver:
  dt: 0.001
  t_end: 1
output:
  observables: [abs_p, p]
  stride: 100
)";

const char* kGrowing = R"(
model:
  type: generic_matrix
  form: generator
  matrix:
    - [0, 2]
    - [2, 0]
  target: [1, 0]
solver:
  dt: 0.001
  t_end: 20
output:
  observables: [abs_p]
)";

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "onecomp_capi_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ONECOMP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("C API parse, run and read back") {
  oc_config* cfg = nullptr;
  REQUIRE(oc_config_parse(kCosine, &cfg) == OC_OK);
  oc_result* res = nullptr;
  REQUIRE(oc_run(cfg, nullptr, &res) == OC_OK);
  CHECK(oc_result_rows(res) == 11);
  REQUIRE(oc_result_columns(res) == 4);
  CHECK(std::string(oc_result_column_name(res, 0)) == "t");
  CHECK(std::string(oc_result_column_name(res, 1)) == "abs_p");
  CHECK(std::string(oc_result_column_name(res, 2)) == "re_p");
  CHECK(std::string(oc_result_column_name(res, 3)) == "im_p");
  CHECK(oc_result_column_name(res, 4) == nullptr);
  for (size_t row = 0; row < oc_result_rows(res); ++row) {
    double t = 0.0, a = 0.0;
    REQUIRE(oc_result_value(res, row, 0, &t) == OC_OK);
    REQUIRE(oc_result_value(res, row, 1, &a) == OC_OK);
    CHECK(std::abs(a - std::abs(std::cos(2.0 * t))) < 1e-3);
  }
  double v = 0.0;
  CHECK(oc_result_value(res, 99, 0, &v) == OC_ERR_INVALID_ARGUMENT);
  CHECK(std::string(oc_last_error()).size() > 0);

  char* csv = nullptr;
  REQUIRE(oc_result_csv(res, &csv) == OC_OK);
  CHECK(std::string(csv).rfind("t,abs_p,re_p,im_p\n", 0) == 0);
  oc_string_free(csv);

  const fs::path out = scratch() / "cosine.csv";
  REQUIRE(oc_result_write(res, out.c_str()) == OC_OK);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out.string() + ".meta.json"));
  oc_result_free(res);
  oc_config_free(cfg);
}

TEST_CASE("C API errors") {
  oc_config* cfg = nullptr;
  CHECK(oc_config_parse("model: {type: nothing}", &cfg) == OC_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(oc_last_error()).find("model.type") != std::string::npos);
  CHECK(oc_config_parse(nullptr, &cfg) == OC_ERR_INVALID_ARGUMENT);
  CHECK(oc_config_load("/nonexistent/onecomp.yaml", &cfg) == OC_ERR_IO);
  CHECK(std::string(oc_status_name(OC_ERR_NUMERICAL)) != std::string(oc_status_name(OC_OK)));

  REQUIRE(oc_config_parse(kGrowing, &cfg) == OC_OK);
  oc_result* res = nullptr;
  CHECK(oc_run(cfg, nullptr, &res) == OC_ERR_NUMERICAL);
  CHECK(res == nullptr);
  CHECK(oc_config_set(cfg, "solver.dt", "-1") == OC_ERR_CONFIG);
  CHECK(oc_config_set(cfg, "solver.t_end", "1") == OC_OK);
  CHECK(oc_run(cfg, nullptr, &res) == OC_OK);
  oc_result_free(res);
  oc_config_free(cfg);
  oc_config_free(nullptr);
  oc_result_free(nullptr);
}

TEST_CASE("C API serialization and sweeps") {
  oc_config* cfg = nullptr;
  REQUIRE(oc_config_parse(kCosine, &cfg) == OC_OK);
  char* text = nullptr;
  REQUIRE(oc_config_serialize(cfg, &text) == OC_OK);
  oc_config* again = nullptr;
  REQUIRE(oc_config_parse(text, &again) == OC_OK);
  char* text2 = nullptr;
  REQUIRE(oc_config_serialize(again, &text2) == OC_OK);
  CHECK(std::string(text) == std::string(text2));
  oc_string_free(text);
  oc_string_free(text2);
  oc_config_free(again);

  const fs::path dir = scratch() / "sweep";
  fs::remove_all(dir);
  const char* axes[] = {"solver.t_end=0.5,1", "solver.dt=0.001,0.0005"};
  size_t cells = 0;
  REQUIRE(oc_sweep(cfg, axes, 2, nullptr, dir.c_str(), &cells) == OC_OK);
  CHECK(cells == 4);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "cell_0000.csv"));
  CHECK(fs::exists(dir / "cell_0003.csv"));
  const char* bad[] = {"solver.t_end"};
  CHECK(oc_sweep(cfg, bad, 1, nullptr, dir.c_str(), &cells) == OC_ERR_CONFIG);
  oc_config_free(cfg);
}

TEST_CASE("C API two-state amplitude") {
  double re = 0.0, im = 0.0;
  REQUIRE(oc_two_state_amplitude(0.0, 0.0, -1.0, 0.0, 0.7, &re, &im) == OC_OK);
  CHECK(re == doctest::Approx(std::cos(0.7)));
  CHECK(std::abs(im) < 1e-14);
  CHECK(oc_two_state_amplitude(0.0, 0.0, -1.0, 0.0, 0.7, nullptr, &im) == OC_ERR_INVALID_ARGUMENT);
  CHECK(oc_default_workers() >= 1);
  CHECK(std::string(oc_version()).size() > 0);
}

TEST_CASE("command line exit codes") {
  const auto good = write_file("good.yaml", kCosine);
  const auto growing = write_file("growing.yaml", kGrowing);
  const auto broken = write_file("broken.yaml", "model:\n  type: generic_matrix\n  strenght: 1\n");
  const auto out = scratch() / "cli.csv";

  CHECK(cli("validate --config " + good.string()) == 0);
  CHECK(cli("validate --config " + broken.string()) == 2);
  CHECK(cli("run --config " + broken.string()) == 2);
  CHECK(cli("run --config " + (scratch() / "missing.yaml").string()) == 2);
  CHECK(cli("run --config " + growing.string() + " --out " + out.string()) == 3);
  CHECK(cli("run") == 2);
  CHECK(cli("frobnicate") == 2);

  REQUIRE(cli("run --config " + good.string() + " --out " + out.string()) == 0);
  const auto first = read_file(out);
  CHECK(first.rfind("t,abs_p,re_p,im_p\n", 0) == 0);
  REQUIRE(cli("run --config " + good.string() + " --seed 5 --out " + out.string()) == 0);
  CHECK(read_file(out) == first);

  const auto dir = scratch() / "cli_sweep";
  fs::remove_all(dir);
  CHECK(cli("sweep --config " + good.string() + " --set solver.t_end=0.5,1 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "cell_0001.csv"));
  CHECK(cli("sweep --config " + good.string() + " --set bogus.key=1 --out " + dir.string()) == 2);
}

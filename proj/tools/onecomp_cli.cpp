// onecomp command line: run, sweep and validate experiment configs.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "onecomp/onecomp.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(oc_status s) {
  switch (s) {
    case OC_OK: return 0;
    case OC_ERR_CONFIG:
    case OC_ERR_IO: return kExitConfig;
    case OC_ERR_NUMERICAL: return kExitNumerical;
    default: return 1;
  }
}

int report(oc_status s) {
  std::cerr << "onecomp: " << oc_status_name(s) << ": " << oc_last_error() << "\n";
  return exit_code(s);
}

struct ConfigDeleter {
  void operator()(oc_config* c) const { oc_config_free(c); }
};
struct ResultDeleter {
  void operator()(oc_result* r) const { oc_result_free(r); }
};
using ConfigPtr = std::unique_ptr<oc_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<oc_result, ResultDeleter>;

int load(const std::string& path, ConfigPtr& out) {
  oc_config* raw = nullptr;
  const oc_status s = oc_config_load(path.c_str(), &raw);
  if (s != OC_OK) return report(s);
  out.reset(raw);
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::string out) {
  ConfigPtr cfg;
  if (int rc = load(config_path, cfg)) return rc;
  oc_result* raw = nullptr;
  oc_status s = oc_run(cfg.get(), seed ? &*seed : nullptr, &raw);
  if (s != OC_OK) return report(s);
  ResultPtr res(raw);
  for (size_t i = 0; i < oc_result_warning_count(res.get()); ++i) {
    std::cerr << "onecomp: warning: " << oc_result_warning(res.get(), i) << "\n";
  }
  if (out.empty()) {
    char* path = nullptr;
    if ((s = oc_config_output_path(cfg.get(), &path)) != OC_OK) return report(s);
    out = path;
    oc_string_free(path);
  }
  if (out.empty() || out == "-") {
    char* csv = nullptr;
    if ((s = oc_result_csv(res.get(), &csv)) != OC_OK) return report(s);
    std::fputs(csv, stdout);
    oc_string_free(csv);
    return 0;
  }
  if ((s = oc_result_write(res.get(), out.c_str())) != OC_OK) return report(s);
  std::cerr << "onecomp: wrote " << out << " (" << oc_result_rows(res.get()) << " rows)\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets,
              std::optional<std::uint64_t> seed, const std::string& out_dir) {
  ConfigPtr cfg;
  if (int rc = load(config_path, cfg)) return rc;
  std::vector<const char*> axes;
  for (const auto& s : sets) axes.push_back(s.c_str());
  size_t cells = 0;
  const oc_status s = oc_sweep(cfg.get(), axes.data(), axes.size(), seed ? &*seed : nullptr,
                               out_dir.c_str(), &cells);
  if (s != OC_OK) return report(s);
  std::cerr << "onecomp: " << cells << " cell(s) written to " << out_dir << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  ConfigPtr cfg;
  if (int rc = load(config_path, cfg)) return rc;
  std::cout << config_path << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-component reduction, leakage elimination and open-system fidelity runs"};
  app.set_version_flag("--version", std::string(oc_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Run one experiment and write its CSV");
  run->add_option("--config", config_path, "Experiment config (YAML)")->required();
  run->add_option("--seed", seed, "Master seed, overrides ensemble.master_seed");
  run->add_option("--out", out, "Output CSV path ('-' for stdout)");

  auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of parameter values");
  sweep->add_option("--config", config_path, "Experiment config (YAML)")->required();
  sweep->add_option("--set", sets, "key=v1,v2,... (repeatable)");
  sweep->add_option("--seed", seed, "Master seed, overrides ensemble.master_seed");
  sweep->add_option("--out", out, "Output directory")->default_val("sweep_out");

  auto* validate = app.add_subcommand("validate", "Check a config and report every violation");
  validate->add_option("--config", config_path, "Experiment config (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) return cmd_run(config_path, seed, out);
  if (sweep->parsed()) return cmd_sweep(config_path, sets, seed, out);
  return cmd_validate(config_path);
}

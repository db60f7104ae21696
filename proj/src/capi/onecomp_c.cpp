#include "onecomp/onecomp.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "onecomp/config.hpp"
#include "onecomp/one_component.hpp"
#include "onecomp/parallel.hpp"
#include "onecomp/runner.hpp"

struct oc_config {
  onecomp::config::ExperimentConfig cfg;
};

struct oc_result {
  onecomp::runner::RunResult result;
  onecomp::config::ExperimentConfig cfg;
  std::vector<std::string> names;
};

namespace {

thread_local std::string last_error;

oc_status set_error(oc_status status, const std::string& msg) {
  last_error = msg;
  return status;
}

template <typename Fn>
oc_status guard(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const onecomp::Error& e) {
    switch (e.kind()) {
      case onecomp::ErrorKind::config: return set_error(OC_ERR_CONFIG, e.what());
      case onecomp::ErrorKind::numerical: return set_error(OC_ERR_NUMERICAL, e.what());
      case onecomp::ErrorKind::invalid_argument: return set_error(OC_ERR_INVALID_ARGUMENT, e.what());
    }
    return set_error(OC_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(OC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(OC_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(OC_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

oc_status write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return set_error(OC_ERR_IO, "cannot open '" + path + "' for writing");
  f << content;
  if (!f) return set_error(OC_ERR_IO, "write failed for '" + path + "'");
  return OC_OK;
}

std::string csv_of(const onecomp::runner::RunResult& r) {
  std::ostringstream os;
  onecomp::runner::write_csv(r, os);
  return os.str();
}

oc_status write_run(const onecomp::runner::RunResult& r, const onecomp::config::ExperimentConfig& cfg,
                    const std::string& path) {
  if (auto s = write_file(path, csv_of(r)); s != OC_OK) return s;
  return write_file(path + ".meta.json", onecomp::runner::meta_json(r, cfg));
}

}  // namespace

extern "C" {

const char* oc_version(void) {
  static const std::string v = onecomp::runner::version();
  return v.c_str();
}

const char* oc_last_error(void) { return last_error.c_str(); }

const char* oc_status_name(oc_status status) {
  switch (status) {
    case OC_OK: return "ok";
    case OC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case OC_ERR_CONFIG: return "configuration error";
    case OC_ERR_NUMERICAL: return "numerical failure";
    case OC_ERR_IO: return "i/o error";
    case OC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void oc_string_free(char* s) { std::free(s); }

oc_status oc_config_parse(const char* text, oc_config** out) {
  if (!text || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    *out = new oc_config{onecomp::config::parse_config(text)};
    return OC_OK;
  });
}

oc_status oc_config_load(const char* path, oc_config** out) {
  if (!path || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::ifstream in(path);
    if (!in) return set_error(OC_ERR_IO, std::string("cannot read '") + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    *out = new oc_config{onecomp::config::parse_config(ss.str())};
    return OC_OK;
  });
}

oc_status oc_config_set(oc_config* cfg, const char* key_path, const char* value) {
  if (!cfg || !key_path || !value) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    cfg->cfg = onecomp::config::with_override(cfg->cfg, key_path, value);
    return OC_OK;
  });
}

oc_status oc_config_serialize(const oc_config* cfg, char** out) {
  if (!cfg || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    *out = dup_string(onecomp::config::serialize(cfg->cfg));
    return OC_OK;
  });
}

oc_status oc_config_output_path(const oc_config* cfg, char** out) {
  if (!cfg || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    *out = dup_string(cfg->cfg.output.path);
    return OC_OK;
  });
}

void oc_config_free(oc_config* cfg) { delete cfg; }

oc_status oc_run(const oc_config* cfg, const uint64_t* seed, oc_result** out) {
  if (!cfg || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    onecomp::runner::RunOptions opt;
    if (seed) opt.seed = *seed;
    auto res = std::make_unique<oc_result>();
    res->result = onecomp::runner::run_experiment(cfg->cfg, opt);
    res->cfg = cfg->cfg;
    res->names.push_back("t");
    for (const auto& c : res->result.columns) {
      if (c.complex_valued) {
        res->names.push_back("re_" + c.name);
        res->names.push_back("im_" + c.name);
      } else {
        res->names.push_back(c.name);
      }
    }
    *out = res.release();
    return OC_OK;
  });
}

size_t oc_result_rows(const oc_result* res) { return res ? res->result.t.size() : 0; }

size_t oc_result_columns(const oc_result* res) { return res ? res->names.size() : 0; }

const char* oc_result_column_name(const oc_result* res, size_t col) {
  if (!res || col >= res->names.size()) return nullptr;
  return res->names[col].c_str();
}

oc_status oc_result_value(const oc_result* res, size_t row, size_t col, double* out) {
  if (!res || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  if (row >= res->result.t.size() || col >= res->names.size()) {
    return set_error(OC_ERR_INVALID_ARGUMENT, "row or column out of range");
  }
  if (col == 0) {
    *out = res->result.t[row];
    return OC_OK;
  }
  size_t k = 1;
  for (const auto& c : res->result.columns) {
    const size_t width = c.complex_valued ? 2 : 1;
    if (col < k + width) {
      const auto v = c.values[row];
      *out = (col == k) ? v.real() : v.imag();
      return OC_OK;
    }
    k += width;
  }
  return set_error(OC_ERR_INTERNAL, "column lookup failed");
}

size_t oc_result_warning_count(const oc_result* res) { return res ? res->result.meta.warnings.size() : 0; }

const char* oc_result_warning(const oc_result* res, size_t i) {
  if (!res || i >= res->result.meta.warnings.size()) return nullptr;
  return res->result.meta.warnings[i].c_str();
}

oc_status oc_result_csv(const oc_result* res, char** out) {
  if (!res || !out) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    *out = dup_string(csv_of(res->result));
    return OC_OK;
  });
}

oc_status oc_result_write_csv(const oc_result* res, const char* path) {
  if (!res || !path) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return write_file(path, csv_of(res->result)); });
}

oc_status oc_result_write(const oc_result* res, const char* path) {
  if (!res || !path) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return write_run(res->result, res->cfg, path); });
}

void oc_result_free(oc_result* res) { delete res; }

oc_status oc_sweep(const oc_config* cfg, const char* const* axes, size_t n_axes, const uint64_t* seed,
                   const char* out_dir, size_t* n_cells) {
  if (!cfg || !out_dir || (n_axes > 0 && !axes)) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::vector<onecomp::runner::SweepAxis> parsed;
    for (size_t i = 0; i < n_axes; ++i) {
      if (!axes[i]) return set_error(OC_ERR_INVALID_ARGUMENT, "null sweep axis");
      parsed.push_back(onecomp::runner::parse_sweep_axis(axes[i]));
    }
    onecomp::runner::RunOptions opt;
    if (seed) opt.seed = *seed;
    const auto cells = onecomp::runner::run_sweep(cfg->cfg, parsed, opt);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) return set_error(OC_ERR_IO, std::string("cannot create '") + out_dir + "': " + ec.message());
    const std::filesystem::path dir(out_dir);
    for (const auto& cell : cells) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%04zu.csv", cell.index);
      if (auto s = write_run(cell.result, cell.config, (dir / name).string()); s != OC_OK) return s;
    }
    std::ostringstream summary;
    onecomp::runner::write_summary_csv(cells, summary);
    if (auto s = write_file((dir / "summary.csv").string(), summary.str()); s != OC_OK) return s;
    if (n_cells) *n_cells = cells.size();
    return OC_OK;
  });
}

oc_status oc_two_state_amplitude(double h_re, double h_im, double g_re, double g_im, double t,
                                 double* p_re, double* p_im) {
  if (!p_re || !p_im) return set_error(OC_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    const auto p = onecomp::reduced::closed_form_two_state({h_re, h_im}, {g_re, g_im}, t);
    *p_re = p.real();
    *p_im = p.imag();
    return OC_OK;
  });
}

size_t oc_default_workers(void) { return onecomp::default_workers(); }

}  // extern "C"

#ifndef ONECOMP_ONECOMP_H
#define ONECOMP_ONECOMP_H

/* C interface to the onecomp library. Objects are opaque handles; every
 * call that can fail returns an oc_status and leaves a message for
 * oc_last_error() on the calling thread. Strings returned through char**
 * are released with oc_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OC_API __declspec(dllexport)
#else
#define OC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum oc_status {
  OC_OK = 0,
  OC_ERR_INVALID_ARGUMENT = 1,
  OC_ERR_CONFIG = 2,
  OC_ERR_NUMERICAL = 3,
  OC_ERR_IO = 4,
  OC_ERR_INTERNAL = 5
} oc_status;

typedef struct oc_config oc_config;
typedef struct oc_result oc_result;

OC_API const char* oc_version(void);
OC_API const char* oc_last_error(void);
OC_API const char* oc_status_name(oc_status status);
OC_API void oc_string_free(char* s);

/* Configuration documents (YAML). */
OC_API oc_status oc_config_parse(const char* text, oc_config** out);
OC_API oc_status oc_config_load(const char* path, oc_config** out);
OC_API oc_status oc_config_set(oc_config* cfg, const char* key_path, const char* value);
OC_API oc_status oc_config_serialize(const oc_config* cfg, char** out);
OC_API oc_status oc_config_output_path(const oc_config* cfg, char** out);
OC_API void oc_config_free(oc_config* cfg);

/* Runs. `seed` may be NULL to use ensemble.master_seed. */
OC_API oc_status oc_run(const oc_config* cfg, const uint64_t* seed, oc_result** out);
OC_API size_t oc_result_rows(const oc_result* res);
/* Columns as written to CSV: t first, complex observables split re_/im_. */
OC_API size_t oc_result_columns(const oc_result* res);
OC_API const char* oc_result_column_name(const oc_result* res, size_t col);
OC_API oc_status oc_result_value(const oc_result* res, size_t row, size_t col, double* out);
OC_API size_t oc_result_warning_count(const oc_result* res);
OC_API const char* oc_result_warning(const oc_result* res, size_t i);
OC_API oc_status oc_result_csv(const oc_result* res, char** out);
OC_API oc_status oc_result_write_csv(const oc_result* res, const char* path);
/* Writes <path> and the metadata sidecar <path>.meta.json. */
OC_API oc_status oc_result_write(const oc_result* res, const char* path);
OC_API void oc_result_free(oc_result* res);

/* Cartesian sweep; each axis is "key=v1,v2,...". Writes cell_NNNN.csv per
 * cell and summary.csv into out_dir (created if missing). */
OC_API oc_status oc_sweep(const oc_config* cfg, const char* const* axes, size_t n_axes,
                          const uint64_t* seed, const char* out_dir, size_t* n_cells);

/* Two-state closed form p(t) for constant h' and coupling g. */
OC_API oc_status oc_two_state_amplitude(double h_re, double h_im, double g_re, double g_im,
                                        double t, double* p_re, double* p_im);

/* Worker count taken from ONECOMP_WORKERS (hardware concurrency otherwise). */
OC_API size_t oc_default_workers(void);

#ifdef __cplusplus
}
#endif

#endif

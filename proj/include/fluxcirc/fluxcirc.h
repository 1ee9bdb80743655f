/* fluxcirc C API: annular Josephson-junction fluxon circulator simulations.
 *
 * Every call returns an fc_status. On failure fc_last_error() holds a message
 * for the calling thread until its next API call. Handles are opaque; free
 * them with the matching *_free function (NULL is accepted).
 */
#ifndef FLUXCIRC_H
#define FLUXCIRC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FC_API __declspec(dllexport)
#else
#define FC_API __attribute__((visibility("default")))
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_ARGUMENT = 1,    /* null pointer, bad index, out-of-domain value */
  FC_ERR_CONFIG = 2,      /* unreadable or invalid configuration */
  FC_ERR_NUMERICAL = 3,   /* blow-up, non-convergence, unconverged sweep points */
  FC_ERR_IO = 4,          /* output could not be written */
  FC_ERR_INTERNAL = 5
} fc_status;

typedef struct fc_config fc_config;
typedef struct fc_result fc_result;

FC_API const char* fc_version(void);
FC_API const char* fc_last_error(void);
FC_API const char* fc_status_name(fc_status status);

/* Configuration (INI text with [device], [numerics], [experiment], [output]). */
FC_API fc_status fc_config_load(const char* path, fc_config** out);
FC_API fc_status fc_config_parse(const char* text, fc_config** out);
FC_API fc_status fc_config_experiment(const fc_config* config, const char** name);
/* Output directory from [output] directory; "" when the file does not set one. */
FC_API fc_status fc_config_output_dir(const fc_config* config, const char** dir);
FC_API void fc_config_free(fc_config* config);

/* Log sink for progress lines; may be called from worker threads, serialised. */
typedef void (*fc_log_fn)(const char* line, void* user);

/* Runs the configured experiment. workers <= 0 uses the config value, then
 * the available parallelism. Unconverged points do not fail the call; query
 * fc_result_failed_points. */
FC_API fc_status fc_run(const fc_config* config, int workers, fc_log_fn log, void* user, fc_result** out);
/* Runs the quick invariant suite; *passed is 1 when every check passes. */
FC_API fc_status fc_validate(fc_log_fn log, void* user, fc_result** out, int* passed);

FC_API fc_status fc_result_table_count(const fc_result* result, size_t* count);
FC_API fc_status fc_result_table_name(const fc_result* result, size_t index, const char** name);
FC_API fc_status fc_result_row_count(const fc_result* result, size_t index, size_t* rows);
FC_API fc_status fc_result_failed_points(const fc_result* result, int* failed);
FC_API fc_status fc_result_report_count(const fc_result* result, size_t* count);
FC_API fc_status fc_result_report_line(const fc_result* result, size_t index, const char** line);
/* CSV text of one table (valid until the result is freed). */
FC_API fc_status fc_result_csv(const fc_result* result, size_t index, const char** text);
/* Writes <dir>/<table>.csv for every table, creating dir if needed. */
FC_API fc_status fc_result_write(const fc_result* result, const char* dir);
FC_API void fc_result_free(fc_result* result);

/* Direct analytic entry points. */
FC_API fc_status fc_train_modulus(double length, int fluxons, double velocity, double* k);
FC_API fc_status fc_mode_frequency(int ell, int fluxons, double length, double* omega);
FC_API fc_status fc_dc_voltage(double length, int fluxons, double g, double bias, double* voltage);
/* coupling_capacitance <= 0 selects the galvanic circuit. */
FC_API fc_status fc_lc_reflection(double omega, double inductance, double capacitance, double coupling_capacitance,
                                  double z0, double* re, double* im);

#ifdef __cplusplus
}
#endif

#endif

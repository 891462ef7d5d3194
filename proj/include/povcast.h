#ifndef POVCAST_H
#define POVCAST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(POVCAST_BUILDING)
#    define POVCAST_API __declspec(dllexport)
#  else
#    define POVCAST_API __declspec(dllimport)
#  endif
#else
#  define POVCAST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum povcast_status {
    POVCAST_OK = 0,
    POVCAST_ERR_PARSE = 1,      /* malformed cell or row in a count matrix */
    POVCAST_ERR_SHAPE = 2,      /* ragged rows, mismatched dimensions */
    POVCAST_ERR_EMPTY = 3,      /* no header, no rows, too few entities */
    POVCAST_ERR_INDEX = 4,      /* row or column out of range */
    POVCAST_ERR_DOMAIN = 5,     /* value outside the model's domain */
    POVCAST_ERR_CONFIG = 6,     /* invalid options or arguments */
    POVCAST_ERR_IO = 7,         /* file system failure */
    POVCAST_ERR_FORMAT = 8,     /* malformed bundle, manifest or JSON */
    POVCAST_ERR_DEGENERATE = 9, /* chain or study could not proceed */
    POVCAST_ERR_INTERNAL = 10
} povcast_status;

typedef struct povcast_matrix povcast_matrix;
typedef struct povcast_samples povcast_samples;

/* Called with one progress line at a time; may be NULL. */
typedef void (*povcast_log_fn)(const char* line, void* user);

POVCAST_API const char* povcast_version(void);
POVCAST_API const char* povcast_status_name(povcast_status status);

/* Message of the last failed call on this thread, "" if none. */
POVCAST_API const char* povcast_last_error(void);

/* Process exit code for a status: 0 ok, 2 config, 3 input data, 4 io, 5 runtime. */
POVCAST_API int povcast_exit_code(povcast_status status);

/* Strings returned through char** out parameters are released with this. */
POVCAST_API void povcast_string_free(char* s);

/* Count matrices. Integer loaders reject negative, fractional and all-zero rows. */
POVCAST_API povcast_status povcast_matrix_load(const char* path, povcast_matrix** out);
POVCAST_API povcast_status povcast_matrix_parse(const char* csv, povcast_matrix** out);
POVCAST_API void povcast_matrix_free(povcast_matrix* m);
POVCAST_API povcast_status povcast_matrix_shape(const povcast_matrix* m, size_t* rows, size_t* cols);
POVCAST_API povcast_status povcast_matrix_value(const povcast_matrix* m, size_t row, size_t col,
                                                double* out);
/* The returned name lives as long as the matrix. */
POVCAST_API povcast_status povcast_matrix_entity(const povcast_matrix* m, size_t row, const char** out);
POVCAST_API povcast_status povcast_matrix_period(const povcast_matrix* m, size_t col, const char** out);
/* 0-based columns. weights points at two positive values, or NULL for the column sums. */
POVCAST_API povcast_status povcast_matrix_smooth(const povcast_matrix* m, size_t j1, size_t j2,
                                                 const double* weights, povcast_matrix** out);
POVCAST_API povcast_status povcast_matrix_serialize(const povcast_matrix* m, char** out);

/* Posterior samples. chain_json may be NULL or an object with any of
 * iterations, burn_in, thin, grid, seed, truncation_correction, random_start. */
POVCAST_API povcast_status povcast_samples_fit(const povcast_matrix* data, const char* chain_json,
                                               povcast_samples** out);
POVCAST_API povcast_status povcast_samples_save(const povcast_samples* s, const char* dir);
POVCAST_API povcast_status povcast_samples_load(const char* dir, size_t observed_periods,
                                                povcast_samples** out);
POVCAST_API void povcast_samples_free(povcast_samples* s);
POVCAST_API povcast_status povcast_samples_shape(const povcast_samples* s, size_t* draws,
                                                 size_t* entities);
/* ahead is 1 (next period) or 2. */
POVCAST_API povcast_status povcast_samples_prediction(const povcast_samples* s, int ahead, size_t draw,
                                                      size_t entity, int64_t* out);
/* Writes one probability per entity; len must be at least the entity count. */
POVCAST_API povcast_status povcast_samples_zero_probability(const povcast_samples* s, int ahead,
                                                            double* out, size_t len);
/* Writes the six hyperparameters of one draw. */
POVCAST_API povcast_status povcast_samples_hyper(const povcast_samples* s, size_t draw, double out[6]);

/* Commands: "fit", "report", "calibrate" or "validate" with a JSON options object.
 * On success *summary_json (if non-NULL) receives the manifest plus notes. */
POVCAST_API povcast_status povcast_run(const char* command, const char* options_json,
                                       const char* out_dir, povcast_log_fn log, void* user,
                                       char** summary_json);
/* Re-runs a manifest into out_dir; *summary_json lists matched and mismatched artifacts.
 * Returns POVCAST_ERR_DEGENERATE if any artifact differs. */
POVCAST_API povcast_status povcast_replay(const char* manifest_path, const char* out_dir,
                                          povcast_log_fn log, void* user, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif

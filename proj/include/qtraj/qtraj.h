/* C interface to the qtraj trajectory solver. */
#ifndef QTRAJ_QTRAJ_H
#define QTRAJ_QTRAJ_H

#include <stddef.h>

#if defined(_WIN32)
#  ifdef QTRAJ_BUILDING_LIBRARY
#    define QT_API __declspec(dllexport)
#  else
#    define QT_API __declspec(dllimport)
#  endif
#else
#  define QT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qt_status {
  QT_OK = 0,
  QT_ERR_INVALID_ARGUMENT = 1,
  QT_ERR_STRUCTURE = 2,
  QT_ERR_TYPE = 3,
  QT_ERR_PARSE = 4,
  QT_ERR_NUMERIC = 5,
  QT_ERR_IO = 6,
  QT_ERR_VALIDATION = 7,
  QT_ERR_INTERNAL = 99
} qt_status;

typedef enum qt_run_mode { QT_RUN_SINGLE = 0, QT_RUN_ENSEMBLE = 1 } qt_run_mode;

typedef struct qt_model qt_model;
typedef struct qt_result qt_result;

/* Receives one NUL-terminated line without trailing newline. */
typedef void (*qt_line_fn)(const char* line, void* user);

QT_API const char* qt_version(void);
QT_API const char* qt_status_string(qt_status status);
/* Message of the last failed call on this thread; "" if none. */
QT_API const char* qt_last_error(void);

QT_API qt_status qt_model_parse(const char* text, size_t length, qt_model** out);
QT_API qt_status qt_model_load(const char* path, qt_model** out);
QT_API void qt_model_free(qt_model* model);
/* Normalized model text; release with qt_string_free. */
QT_API qt_status qt_model_print(const qt_model* model, char** out);
QT_API void qt_string_free(char* text);
/* Overrides one [run] setting, e.g. ("seed", "7"). */
QT_API qt_status qt_model_set(qt_model* model, const char* key, const char* value);
QT_API size_t qt_model_num_outputs(const qt_model* model);

/* Runs one trajectory or an ensemble. out_dir, on_line and out may be NULL.
   Summary lines are delivered as they are produced. */
QT_API qt_status qt_run(const qt_model* model, qt_run_mode mode, const char* out_dir, qt_line_fn on_line,
                        void* user, qt_result** out);

/* Runs the ensemble and compares every output against the dense master
   equation at z standard errors. The report table goes to on_report line by
   line. *passed is 1 when every comparison passes. */
QT_API qt_status qt_oracle_check(const qt_model* model, double z, qt_line_fn on_report, void* user, int* passed,
                                 qt_result** out);

QT_API size_t qt_result_num_times(const qt_result* result);
QT_API size_t qt_result_num_outputs(const qt_result* result);
QT_API double qt_result_time(const qt_result* result, size_t k);
/* Ensemble mean (or the single trajectory value) of output i at time k. */
QT_API qt_status qt_result_mean(const qt_result* result, size_t k, size_t i, double* re, double* im);
/* Standard errors of the real and imaginary parts; zero for single runs. */
QT_API qt_status qt_result_standard_error(const qt_result* result, size_t k, size_t i, double* re, double* im);
QT_API double qt_result_basis_size(const qt_result* result, size_t k);
QT_API void qt_result_free(qt_result* result);

#ifdef __cplusplus
}
#endif

#endif

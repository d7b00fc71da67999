#ifndef SMASH_SMASH_H
#define SMASH_SMASH_H

/* C interface of the smash library. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every call
 * returns a status; on failure smash_last_error() describes the problem
 * (the message is per thread and valid until the next failing call). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SMASH_API __declspec(dllexport)
#else
#define SMASH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smash_status {
  SMASH_OK = 0,
  SMASH_E_INVALID_ARGUMENT = 1,
  SMASH_E_DIMENSION_MISMATCH = 2,
  SMASH_E_OUT_OF_BOUNDS = 3,
  SMASH_E_PARSE = 4,
  SMASH_E_IO = 5,
  SMASH_E_CAPACITY = 6,
  SMASH_E_WINDOW_OVERFLOW = 7,
  SMASH_E_DEADLOCK = 8,
  SMASH_E_UNMAPPED_ADDRESS = 9,
  SMASH_E_VERIFICATION = 10,
  SMASH_E_SIZE_GUARD = 11, /* dense oracle refused; pass force to override */
  SMASH_E_INTERNAL = 100
} smash_status;

typedef enum smash_kernel {
  SMASH_KERNEL_V1 = 0,
  SMASH_KERNEL_V2,
  SMASH_KERNEL_V3,
  SMASH_KERNEL_INNER,
  SMASH_KERNEL_OUTER,
  SMASH_KERNEL_ROWWISE,
  SMASH_KERNEL_COLWISE,
  SMASH_KERNEL_ORACLE
} smash_kernel;

typedef struct smash_matrix smash_matrix;
typedef struct smash_machine smash_machine;
typedef struct smash_report smash_report;

SMASH_API const char* smash_last_error(void);
SMASH_API const char* smash_status_name(smash_status status);
SMASH_API const char* smash_version(void);
/* Releases strings returned through char** out-parameters. */
SMASH_API void smash_string_free(char* s);

/* ---- matrices ---- */

typedef struct smash_rmat_params {
  unsigned scale;       /* dimension 2^scale */
  uint64_t edges;       /* generated edges; 0 = derive from target_nnz */
  uint64_t target_nnz;  /* smallest edge count whose deduplicated nnz reaches this */
  double a, b, c, d;    /* quadrant probabilities */
  uint64_t seed;
} smash_rmat_params;

/* Scale 14 with the evaluation skew and target nnz, seed 1. */
SMASH_API void smash_rmat_defaults(smash_rmat_params* p);
SMASH_API smash_status smash_matrix_rmat(const smash_rmat_params* p, smash_matrix** out);
/* MatrixMarket, or a binary snapshot when the path ends in ".smsh". */
SMASH_API smash_status smash_matrix_load(const char* path, smash_matrix** out);
SMASH_API smash_status smash_matrix_save(const smash_matrix* m, const char* path);
SMASH_API smash_status smash_matrix_from_csr(uint64_t nrows, uint64_t ncols, const uint64_t* row_ptr,
                                             const uint32_t* col_idx, const double* values, smash_matrix** out);
SMASH_API smash_status smash_matrix_shape(const smash_matrix* m, uint64_t* nrows, uint64_t* ncols, uint64_t* nnz);
/* 64-bit FNV-1a over the canonical CSR arrays. */
SMASH_API smash_status smash_matrix_fingerprint(const smash_matrix* m, uint64_t* out);
SMASH_API void smash_matrix_free(smash_matrix* m);

/* ---- machine ---- */

SMASH_API smash_status smash_machine_default(smash_machine** out);
/* key=value lines, '#' comments. */
SMASH_API smash_status smash_machine_load(const char* path, smash_machine** out);
SMASH_API smash_status smash_machine_parse(const char* text, smash_machine** out);
SMASH_API smash_status smash_machine_format(const smash_machine* m, char** out);
SMASH_API void smash_machine_free(smash_machine* m);

/* ---- runs ---- */

SMASH_API smash_status smash_kernel_parse(const char* name, smash_kernel* out);
SMASH_API const char* smash_kernel_name(smash_kernel k);
/* Nonzero for the three kernels executed on the simulated machine. */
SMASH_API int smash_kernel_simulated(smash_kernel k);

typedef struct smash_run_options {
  uint64_t interval;  /* utilization sampling interval in cycles; 0 keeps the machine's */
  int force;          /* allow the dense oracle above the size guard */
  uint32_t histogram_bins;  /* 0 = 10 */
} smash_run_options;

SMASH_API void smash_run_options_defaults(smash_run_options* o);
/* machine may be NULL for the default machine; it is ignored by native kernels. */
SMASH_API smash_status smash_run(smash_kernel kernel, const smash_matrix* a, const smash_matrix* b,
                                 const smash_machine* machine, const smash_run_options* options, smash_report** out);
/* Compares C against the dense oracle. SMASH_E_VERIFICATION names the first
 * differing entry; SMASH_E_SIZE_GUARD when the operands exceed 2048 in any
 * dimension and force is zero. */
SMASH_API smash_status smash_verify(const smash_matrix* a, const smash_matrix* b, const smash_report* r, int force);

typedef struct smash_summary {
  int simulated;
  uint64_t cycles;
  uint64_t instructions;
  double aggregate_ipc;
  double bandwidth_utilization;
  double cache_hit_rate;
  uint64_t dram_bytes;
  uint64_t flops;
  uint64_t nnz_c;
  uint64_t insertions, merges, collisions, max_probe_length;
  uint64_t windows, replans;
  double utilization_mean, utilization_stddev;
} smash_summary;

SMASH_API smash_status smash_report_summary(const smash_report* r, smash_summary* out);
/* Copy of the product matrix. */
SMASH_API smash_status smash_report_output(const smash_report* r, smash_matrix** out);
/* Full report, pretty-printed JSON; byte-identical for identical inputs. */
SMASH_API smash_status smash_report_json(const smash_report* r, char** out);
/* Header plus one row. */
SMASH_API smash_status smash_report_metrics_csv(const smash_report* r, char** out);
/* bin_low,bin_high,count over MTC thread utilization; empty table for native kernels. */
SMASH_API smash_status smash_report_histogram_csv(const smash_report* r, char** out);
SMASH_API void smash_report_free(smash_report* r);

#ifdef __cplusplus
}
#endif

#endif

#ifndef MES_H
#define MES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MesStatus {
  MES_STATUS_OK = 0,
  MES_STATUS_NULL_POINTER = 1,
  MES_STATUS_INVALID_ARGUMENT = 2,
  MES_STATUS_DIMENSION_MISMATCH = 3,
  MES_STATUS_CLASS_TOO_RARE = 4,
  MES_STATUS_DEGENERATE = 5,
  MES_STATUS_TRANSPORT = 6,
  MES_STATUS_IO = 7,
  MES_STATUS_FORMAT = 8,
  MES_STATUS_INTERNAL = 9,
} MesStatus;

// Opaque classifier handle.
typedef struct MesBlackBox MesBlackBox;

// Opaque input-density handle.
typedef struct MesDensity MesDensity;

// Opaque set of score tables.
typedef struct MesTables MesTables;

// Classifier callback: returns 1 or 0 for the label of `x[0..dim]`, or a
// negative value to signal failure.
typedef int32_t (*MesPredictFn)(void *user_data, const double *x, uintptr_t dim);

// Result of [`mes_explain`]. `family_index` is -1 and `threshold` is
// +infinity for the null explanation. `direction` is +1 for `<=`, -1 for
// `>=` (axis families, with `threshold` already sign-folded) and 0 for null.
typedef struct MesExplanation {
  int64_t family_index;
  int32_t direction;
  double threshold;
  double score;
} MesExplanation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *mes_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mes_version(void);

// Per-class Monte Carlo sample count for the given accuracy.
//
// # Safety
// `out_n` must be a valid pointer to writable memory.
enum MesStatus mes_sample_size(double epsilon,
                               double delta,
                               uintptr_t num_families,
                               uintptr_t *out_n);

// Linear classifier: label 1 iff `weights . x + bias >= 0`.
//
// # Safety
// `weights` must point to `dim` readable doubles; `out` must be writable.
enum MesStatus mes_linear_model_new(const double *weights,
                                    uintptr_t dim,
                                    double bias,
                                    struct MesBlackBox **out);

// Classifier backed by a C callback. `user_data` is passed through
// untouched and must outlive the handle.
//
// # Safety
// `out` must be writable; `func` must be safe to call with `user_data`.
enum MesStatus mes_callback_model_new(MesPredictFn func,
                                      void *user_data,
                                      uintptr_t dim,
                                      bool thread_safe,
                                      struct MesBlackBox **out);

// # Safety
// `model` must be a live handle; `x` must point to `dim` doubles; `out_label`
// must be writable.
enum MesStatus mes_blackbox_predict(const struct MesBlackBox *model,
                                    const double *x,
                                    uintptr_t dim,
                                    int32_t *out_label);

// # Safety
// `model` must be null or a handle not yet freed.
void mes_blackbox_free(struct MesBlackBox *model);

// # Safety
// `out` must be writable.
enum MesStatus mes_density_gaussian_new(uintptr_t dim, uint64_t seed, struct MesDensity **out);

// Empirical density over `rows` points stored row-major in `data`.
//
// # Safety
// `data` must point to `rows * cols` doubles; `out` must be writable.
enum MesStatus mes_density_empirical_new(const double *data,
                                         uintptr_t rows,
                                         uintptr_t cols,
                                         uint64_t seed,
                                         struct MesDensity **out);

// # Safety
// `density` must be null or a handle not yet freed.
void mes_density_free(struct MesDensity *density);

// Score tables for both orientations of every feature (`2 * dim` families).
//
// # Safety
// `model` and `density` must be live handles; `out` must be writable.
enum MesStatus mes_tables_build_axis(const struct MesBlackBox *model,
                                     const struct MesDensity *density,
                                     double epsilon,
                                     double delta,
                                     bool negative,
                                     struct MesTables **out);

// Score tables for linear families `g_i(x) = W[i] . x + offsets[i]`, with
// `W` row-major `num_families x dim`.
//
// # Safety
// `weights` must point to `num_families * dim` doubles and `offsets` to
// `num_families` doubles; handles must be live; `out` must be writable.
enum MesStatus mes_tables_build_linear(const struct MesBlackBox *model,
                                       const struct MesDensity *density,
                                       const double *weights,
                                       const double *offsets,
                                       uintptr_t num_families,
                                       double epsilon,
                                       double delta,
                                       bool negative,
                                       struct MesTables **out);

// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
enum MesStatus mes_tables_load(const char *path, struct MesTables **out);

// # Safety
// `tables` must be a live handle; `path` a NUL-terminated UTF-8 string.
enum MesStatus mes_tables_save(const struct MesTables *tables, const char *path);

// Number of families, or 0 for a null handle.
//
// # Safety
// `tables` must be null or a live handle.
uintptr_t mes_tables_len(const struct MesTables *tables);

// Feature dimension, or 0 for a null handle.
//
// # Safety
// `tables` must be null or a live handle.
uintptr_t mes_tables_dim(const struct MesTables *tables);

// # Safety
// `tables` must be null or a handle not yet freed.
void mes_tables_free(struct MesTables *tables);

// Best explanation at `x`.
//
// # Safety
// `tables` must be a live handle, `x` must point to `dim` doubles and
// `out` must be writable.
enum MesStatus mes_explain(const struct MesTables *tables,
                           const double *x,
                           uintptr_t dim,
                           struct MesExplanation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MES_H */

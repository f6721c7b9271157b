#ifndef CATSIZE_H
#define CATSIZE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Bit flags for rqfi generator families.
 */
#define CATSIZE_GEN_BOUNDED_LOCAL 1

#define CATSIZE_GEN_QUADRATURE 2

#define CATSIZE_GEN_NUMBER 4

#define CATSIZE_GEN_SPIN_SANDWICH 8

typedef enum CatsizeStatus {
  CATSIZE_STATUS_OK = 0,
  CATSIZE_STATUS_NULL_POINTER = 1,
  CATSIZE_STATUS_INVALID_ARGUMENT = 2,
  CATSIZE_STATUS_DOMAIN = 3,
  CATSIZE_STATUS_SIZING = 4,
  CATSIZE_STATUS_IO = 5,
  CATSIZE_STATUS_BUFFER_TOO_SMALL = 6,
  CATSIZE_STATUS_PANIC = 7,
} CatsizeStatus;

typedef enum CatsizeFamily {
  CATSIZE_FAMILY_OMEGA = 0,
  CATSIZE_FAMILY_OMEGA_PRIME = 1,
  CATSIZE_FAMILY_HCS = 2,
  CATSIZE_FAMILY_EVEN_CAT = 3,
  CATSIZE_FAMILY_ODD_CAT = 4,
  CATSIZE_FAMILY_PRODUCT_COHERENT = 5,
} CatsizeFamily;

/**
 * Opaque Wigner grid.
 */
typedef struct CatsizeGrid CatsizeGrid;

/**
 * Opaque measure result.
 */
typedef struct CatsizeResult CatsizeResult;

/**
 * Opaque state description.
 */
typedef struct CatsizeState CatsizeState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *catsize_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t catsize_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum CatsizeStatus catsize_state_new(enum CatsizeFamily family,
                                     size_t modes,
                                     double alpha_re,
                                     double alpha_im,
                                     struct CatsizeState **out);

/**
 * # Safety
 * `state` must come from `catsize_state_new` or be null.
 */
void catsize_state_free(struct CatsizeState *state);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_branch_dist_size(const struct CatsizeState *state,
                                            double delta,
                                            struct CatsizeResult **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_branch_dist_size_real(const struct CatsizeState *state,
                                                 double delta,
                                                 struct CatsizeResult **out);

/**
 * `generators` is a mask of `CATSIZE_GEN_*` flags.
 *
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_rqfi_size(const struct CatsizeState *state,
                                     uint32_t generators,
                                     struct CatsizeResult **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_marquardt_size(const struct CatsizeState *state,
                                          bool numeric_check,
                                          struct CatsizeResult **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_distillation_size(const struct CatsizeState *state,
                                             struct CatsizeResult **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_mode_loss_size(const struct CatsizeState *state,
                                          double lambda,
                                          struct CatsizeResult **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum CatsizeStatus catsize_wigner_empirical_size(const struct CatsizeState *state,
                                                 struct CatsizeResult **out);

/**
 * # Safety
 * `result` must be a live handle and `value` a valid pointer.
 */
enum CatsizeStatus catsize_result_value(const struct CatsizeResult *result, double *value);

/**
 * Looks up a numeric diagnostic by name.
 *
 * # Safety
 * `result` must be a live handle, `key` a NUL-terminated string and
 * `value` a valid pointer.
 */
enum CatsizeStatus catsize_result_diagnostic(const struct CatsizeResult *result,
                                             const char *key,
                                             double *value);

/**
 * JSON text of the full result, valid until the handle is freed.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
const char *catsize_result_json(const struct CatsizeResult *result);

/**
 * # Safety
 * `result` must come from a measure call or be null.
 */
void catsize_result_free(struct CatsizeResult *result);

/**
 * Closed-form Wigner value at one phase-space point per mode.
 *
 * # Safety
 * `gamma_re` and `gamma_im` must hold `modes` values of the state.
 */
enum CatsizeStatus catsize_wigner_point(const struct CatsizeState *state,
                                        const double *gamma_re,
                                        const double *gamma_im,
                                        double *value);

/**
 * Grid over the complex plane of `mode`; the other modes sit at
 * `fixed_re[k] + i fixed_im[k]` (the entry for `mode` is ignored).
 *
 * # Safety
 * `fixed_re`/`fixed_im` must hold `modes` values, or be null for a
 * single-mode state.
 */
enum CatsizeStatus catsize_wigner_plane(const struct CatsizeState *state,
                                        size_t mode,
                                        double min,
                                        double max,
                                        size_t steps,
                                        const double *fixed_re,
                                        const double *fixed_im,
                                        struct CatsizeGrid **out);

/**
 * # Safety
 * `grid` must be a live handle or null.
 */
size_t catsize_grid_len(const struct CatsizeGrid *grid);

/**
 * Copies the row-major values (last axis fastest) into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum CatsizeStatus catsize_grid_values(const struct CatsizeGrid *grid, double *buf, size_t len);

/**
 * # Safety
 * `grid` must come from `catsize_wigner_plane` or be null.
 */
void catsize_grid_free(struct CatsizeGrid *grid);

/**
 * Mean and standard error of the number of E1 outcomes in the
 * sequential distillation protocol.
 *
 * # Safety
 * `mean` and `std_error` must be valid pointers.
 */
enum CatsizeStatus catsize_simulate_distillation(size_t modes,
                                                 double alpha_re,
                                                 double alpha_im,
                                                 uint64_t trials,
                                                 uint64_t seed,
                                                 double *mean,
                                                 double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATSIZE_H */

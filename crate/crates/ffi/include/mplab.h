#ifndef MPLAB_H
#define MPLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MplabStatus {
  MPLAB_STATUS_OK = 0,
  MPLAB_STATUS_NULL_POINTER = 1,
  MPLAB_STATUS_INVALID_ARGUMENT = 2,
  MPLAB_STATUS_STRUCTURAL = 3,
  MPLAB_STATUS_INVALID_SPACE = 4,
  MPLAB_STATUS_CAP_EXCEEDED = 5,
  MPLAB_STATUS_NOT_ULTRAMETRIC = 6,
  MPLAB_STATUS_NOT_SINGLE_METRIC = 7,
  MPLAB_STATUS_IO = 8,
  MPLAB_STATUS_INTERNAL = 9,
  MPLAB_STATUS_PANIC = 10,
  MPLAB_STATUS_BUFFER_TOO_SMALL = 11,
} MplabStatus;

// Opaque mechanism bound to the space it was built on.
typedef struct MplabMechanism MplabMechanism;

// Opaque finite bimetric space.
typedef struct MplabSpace MplabSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message (NUL-terminated, truncated
// to `cap - 1` bytes) into `buf`. Returns the full message length.
//
// # Safety
// `buf` must be null or point to at least `cap` writable bytes.
size_t mplab_last_error_message(char *buf, size_t cap);

// Parses and validates a space from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MplabStatus mplab_space_from_json(const char *json, struct MplabSpace **out);

// Reads and validates a space JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MplabStatus mplab_space_read_json(const char *path, struct MplabSpace **out);

// Builds a space from row-major `n x n` matrices. `rho2` may be null, in
// which case both metrics are `rho1`.
//
// # Safety
// `rho1` (and `rho2` if non-null) must point to `n * n` doubles.
enum MplabStatus mplab_space_from_matrices(size_t n,
                                           const double *rho1,
                                           const double *rho2,
                                           bool ultrametric2,
                                           struct MplabSpace **out);

// The binary-string Baire cube of depth `depth` with `f = g = r^(-k)`.
//
// # Safety
// `out` must be writable.
enum MplabStatus mplab_space_gallery_baire(double r, size_t depth, struct MplabSpace **out);

// # Safety
// `space` must be null or a handle from this library not yet freed.
void mplab_space_free(struct MplabSpace *space);

// Number of points, or 0 for a null handle.
//
// # Safety
// `space` must be null or a live handle.
size_t mplab_space_len(const struct MplabSpace *space);

// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_entropic_scale(const struct MplabSpace *space, double alpha, double *out);

// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_diametric_scale(const struct MplabSpace *space, double alpha, double *out);

// Single-metric spaces only.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_doubling_scale(const struct MplabSpace *space, double alpha, double *out);

// Single-metric spaces only.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_outer_scale(const struct MplabSpace *space, double alpha, double *out);

// Exponential mechanism; pass NaN for `net_s` to use the default resolution.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_mechanism_exponential(const struct MplabSpace *space,
                                             double alpha,
                                             double net_s,
                                             struct MplabMechanism **out);

// Relaxed mechanism for ultrametric `rho2`; NaN `relax_s` selects the default.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_mechanism_ultrametric_relaxed(const struct MplabSpace *space,
                                                     double alpha,
                                                     double relax_s,
                                                     struct MplabMechanism **out);

// # Safety
// `space` must be a live handle and `out` writable.
enum MplabStatus mplab_mechanism_constant(const struct MplabSpace *space,
                                          size_t y0,
                                          struct MplabMechanism **out);

// # Safety
// `mech` must be null or a handle from this library not yet freed.
void mplab_mechanism_free(struct MplabMechanism *mech);

// Size of the output support, or 0 for a null handle.
//
// # Safety
// `mech` must be null or a live handle.
size_t mplab_mechanism_net_len(const struct MplabMechanism *mech);

// Writes the output distribution of input `x`: point ids into `ids` and
// probabilities into `probs`, both of capacity `cap >= net_len`.
//
// # Safety
// `ids` and `probs` must point to `cap` writable elements.
enum MplabStatus mplab_mechanism_distribution(const struct MplabMechanism *mech,
                                              size_t x,
                                              size_t *ids,
                                              double *probs,
                                              size_t cap);

// One draw from the output distribution of `x` under `seed`.
//
// # Safety
// `mech` must be a live handle and `out` writable.
enum MplabStatus mplab_mechanism_sample(const struct MplabMechanism *mech,
                                        size_t x,
                                        uint64_t seed,
                                        size_t *out);

// Exhaustive privacy audit at the mechanism's own alpha.
//
// # Safety
// Handles must be live; `max_slope` and `pass` writable.
enum MplabStatus mplab_audit(const struct MplabMechanism *mech,
                             const struct MplabSpace *space,
                             double *max_slope,
                             bool *pass);

// Exact worst-case expected error `sup_x E rho2(M(x), x)`.
//
// # Safety
// Handles must be live; `out` writable.
enum MplabStatus mplab_exact_accuracy(const struct MplabMechanism *mech,
                                      const struct MplabSpace *space,
                                      double *out);

// Monte-Carlo estimate of the worst per-input mean error; `stderr` is NaN
// when `trials == 1`.
//
// # Safety
// Handles must be live; `mean` and `stderr` writable.
enum MplabStatus mplab_accuracy_mc(const struct MplabMechanism *mech,
                                   const struct MplabSpace *space,
                                   uint64_t trials,
                                   uint64_t seed,
                                   double *mean,
                                   double *stderr);

// Checks a point id against a space.
//
// # Safety
// `space` must be a live handle.
enum MplabStatus mplab_space_check_point(const struct MplabSpace *space, size_t x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPLAB_H */

#ifndef TORSIONLAB_H
#define TORSIONLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared with the command-line interface.
 */
#define TL_OK 0

#define TL_ERR_OTHER 1

#define TL_ERR_DOMAIN 2

#define TL_ERR_PRECISION 3

#define TL_ERR_NOT_ACYCLIC 4

#define TL_ERR_MISMATCH 5

/**
 * An equivariant cochain complex with an optional cohomology metric.
 */
typedef struct TlComplex TlComplex;

/**
 * Message describing the most recent failure on this thread.  The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tl_last_error(void);

/**
 * Evaluate `psi(lambda, a, tau)` with `lambda = exp(2 pi i lambda_phase)`.
 * `accuracy <= 0` selects the default target.
 */
int tl_psi(double lambda_phase,
           double a,
           double tau,
           double accuracy,
           double *out_re,
           double *out_im);

/**
 * Parse a complex from schema JSON.  Returns null on failure; the status
 * is recoverable through `tl_last_error`.
 */
struct TlComplex *tl_complex_from_json(const char *json);

/**
 * Release a complex handle.  Null is ignored.
 */
void tl_complex_free(struct TlComplex *handle);

/**
 * Number of conjugacy classes of the acting group.
 */
int tl_complex_class_count(const struct TlComplex *handle);

/**
 * Torsion of the complex as one complex number per conjugacy class,
 * interleaved re/im into `out` (length `2 * tl_complex_class_count`).
 * Uses the stored metric when present, otherwise requires acyclicity.
 */
int tl_complex_torsion(const struct TlComplex *handle, double *out);

/**
 * Weyl-formula torsion of `SO(2m)/SO(2p-1)xSO(2m-2p+1)` at the torus
 * element with coordinates `num[i]/den[i]`, `i < m`.
 */
int tl_symmetric_so_even(int m, int p, const int64_t *num, const int64_t *den, double *out);

#endif  /* TORSIONLAB_H */

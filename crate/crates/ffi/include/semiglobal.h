#ifndef SEMIGLOBAL_H
#define SEMIGLOBAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_INVALID_MAPPING = 3,
  SG_STATUS_INTERFACE_MISMATCH = 4,
  SG_STATUS_OVERLAP = 5,
  SG_STATUS_SINGULAR = 6,
  SG_STATUS_EIGEN = 7,
  SG_STATUS_NO_BRACKET = 8,
  // Newton stopped before reaching tolerance; outputs are still written.
  SG_STATUS_NOT_CONVERGED = 9,
  SG_STATUS_BUFFER_TOO_SMALL = 10,
  SG_STATUS_INTERNAL = 11,
} SgStatus;

typedef enum SgMapKind {
  // `p0 = a`, `p1 = b`.
  SG_MAP_KIND_LINEAR = 0,
  // `p0 = rc`, `p1 = l1`.
  SG_MAP_KIND_ALGEBRAIC = 1,
  // `p0 = l`, `p1 = b`, `p2 = offset`.
  SG_MAP_KIND_RATIONAL_OFFSET = 2,
} SgMapKind;

typedef enum SgMethod {
  SG_METHOD_ONE_POINT = 0,
  SG_METHOD_TWO_POINT = 1,
  SG_METHOD_PSEUDO_MULTI = 2,
  SG_METHOD_TAYLOR_MULTI = 3,
} SgMethod;

// Opaque global derivative operator.
typedef struct SgOperator SgOperator;

// A coordinate mapping; unused parameters are ignored.
typedef struct SgMapping {
  enum SgMapKind kind;
  double p0;
  double p1;
  double p2;
} SgMapping;

typedef struct SgNewtonReport {
  size_t iterations;
  bool converged;
  double final_residual;
} SgNewtonReport;

typedef struct SgFlowParams {
  double reynolds;
  double peclet;
  double visc_log_ratio;
  double interface_loc;
  double interface_width;
  double k_axial_re;
  double k_axial_im;
  int32_t m_azimuthal;
  // Modes with `|omega|` above this are dropped.
  double filter_threshold;
} SgFlowParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error on this thread into `buf` as a NUL-terminated
// string, truncating to `len - 1` bytes. Returns the full message length
// excluding the terminator, or 0 if there is no error.
//
// # Safety
// `buf` must be null or valid for `len` bytes of writes.
size_t sg_last_error_message(char *buf, size_t len);

// Static description of a status code.
const char *sg_status_string(enum SgStatus status);

// Operator on one mapped Chebyshev grid of `n_points` nodes.
//
// # Safety
// `map` must be null or point to a valid [`SgMapping`]; `out` must be null
// or valid for one pointer write.
enum SgStatus sg_operator_single(const struct SgMapping *map,
                                 size_t n_points,
                                 struct SgOperator **out);

// Fuses two overlapping subdomains. `weight_a` blends rows on shared
// nodes; `taylor_terms` is used by the Taylor method only.
//
// # Safety
// `map_a` and `map_b` must be null or valid; `out` must be null or valid
// for one pointer write.
enum SgStatus sg_operator_pair(enum SgMethod method,
                               const struct SgMapping *map_a,
                               size_t n_a,
                               const struct SgMapping *map_b,
                               size_t n_b,
                               double weight_a,
                               size_t taylor_terms,
                               struct SgOperator **out);

// Chains `n_sub` linear subintervals of `[a, b]` overlapping by `delta`.
//
// # Safety
// `out` must be null or valid for one pointer write.
enum SgStatus sg_operator_multi_interval(double a,
                                         double b,
                                         size_t n_sub,
                                         size_t nodes_per,
                                         double delta,
                                         size_t taylor_terms,
                                         struct SgOperator **out);

// Releases an operator. Null is ignored.
//
// # Safety
// `op` must be null or a handle from `sg_operator_*` not yet freed.
void sg_operator_free(struct SgOperator *op);

// Number of global nodes, or 0 for a null handle.
//
// # Safety
// `op` must be null or a live handle.
size_t sg_operator_len(const struct SgOperator *op);

// Writes the sorted physical nodes; `buf` needs `sg_operator_len` entries.
//
// # Safety
// `op` must be null or live; `buf` must be null or valid for `len` writes.
enum SgStatus sg_operator_nodes(const struct SgOperator *op, double *buf, size_t len);

// Writes `D^order` row-major; `buf` needs `n * n` entries.
//
// # Safety
// `op` must be null or live; `buf` must be null or valid for `len` writes.
enum SgStatus sg_operator_derivative(const struct SgOperator *op,
                                     size_t order,
                                     double *buf,
                                     size_t len);

// Applies `D^order` to nodal values `u`, writing to `du`; both hold `n` values.
//
// # Safety
// `op` must be null or live; `u` and `du` must be null or valid for `n` elements.
enum SgStatus sg_operator_apply(const struct SgOperator *op,
                                size_t order,
                                const double *u,
                                double *du,
                                size_t n);

// Solves `nu u'' - u u' = 0` on `[0, 1]` with Robin ends. `guess` may be
// null for the default guess; otherwise it and `u` hold `n` values.
// `report` may be null.
//
// # Safety
// `op` must be null or live; non-null buffers must be valid for `n` elements;
// `report` must be null or valid for one write.
enum SgStatus sg_solve_burgers(const struct SgOperator *op,
                               double nu,
                               double alpha_bc,
                               double kappa,
                               const double *guess,
                               double *u,
                               size_t n,
                               struct SgNewtonReport *report);

// Solves the tanh front problem on `[0, truncation]`. `guess` may be null
// for a logistic front twice as wide as the exact one.
//
// # Safety
// As for [`sg_solve_burgers`].
enum SgStatus sg_solve_tanh(const struct SgOperator *op,
                            double theta,
                            double truncation,
                            const double *guess,
                            double *u,
                            size_t n,
                            struct SgNewtonReport *report);

// Temporal eigenvalues of core-annular pipe flow on `op` (which must span
// `[0, 1]`), most unstable first. Writes up to `cap` values into `re` and
// `im` and the total count into `count`; if `cap` is too small the first
// `cap` are written and `BufferTooSmall` is returned.
//
// # Safety
// `op` must be null or live; `params` null or valid; `re` and `im` null or
// valid for `cap` writes; `count` null or valid for one write.
enum SgStatus sg_stability_spectrum(const struct SgOperator *op,
                                    const struct SgFlowParams *params,
                                    double *re,
                                    double *im,
                                    size_t cap,
                                    size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIGLOBAL_H */

#ifndef VOLETA_H
#define VOLETA_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  VOLETA_STATUS_OK = 0,
  VOLETA_STATUS_NULL_POINTER = 1,
  VOLETA_STATUS_INVALID_INPUT = 2,
  VOLETA_STATUS_PARSE_ERROR = 3,
  VOLETA_STATUS_IO_ERROR = 4,
  VOLETA_STATUS_ILL_CONDITIONED = 5,
  VOLETA_STATUS_INVALID_UTF8 = 6,
  VOLETA_STATUS_PANIC = 7,
} VoletaStatus;

/**
 * Opaque triangle-mesh handle.
 */
typedef struct VoletaMesh VoletaMesh;

/**
 * Registration and shape-similarity outcome of
 * [`voleta_evaluate_pair`]. `transform` is the row-major 4x4 homogeneous
 * matrix mapping the first mesh's frame into the second's.
 */
typedef struct {
  double chamfer_with_transform;
  double chamfer_without_transform;
  double icp_rmse;
  uint64_t iterations;
  double transform[16];
} VoletaEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Human-readable description of the most recent failure on this thread.
 * The pointer stays valid until the next failing call on the same
 * thread. Never null.
 */
const char *voleta_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *voleta_status_name(VoletaStatus status);

/**
 * Load an OBJ or PLY mesh from `path` into a new handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
VoletaStatus voleta_mesh_load(const char *path, VoletaMesh **out);

/**
 * Save a mesh to `path` (`.obj` or `.ply`, ASCII).
 *
 * # Safety
 * `mesh` must be a live handle and `path` a valid NUL-terminated string.
 */
VoletaStatus voleta_mesh_save(const VoletaMesh *mesh, const char *path);

/**
 * Release a handle returned by this library. Null is a no-op.
 *
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void voleta_mesh_free(VoletaMesh *mesh);

/**
 * Number of vertices (0 for a null handle).
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
uint64_t voleta_mesh_vertex_count(const VoletaMesh *mesh);

/**
 * Number of triangles (0 for a null handle).
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
uint64_t voleta_mesh_triangle_count(const VoletaMesh *mesh);

/**
 * Number of boundary edges; 0 means the surface is closed.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
uint64_t voleta_mesh_boundary_edge_count(const VoletaMesh *mesh);

/**
 * Enclosed volume (cube of the vertex unit) via signed tetrahedra.
 *
 * # Safety
 * `mesh` must be a live handle, `out` a valid pointer.
 */
VoletaStatus voleta_mesh_volume(const VoletaMesh *mesh, double *out);

/**
 * Remove connected components whose diameter is at most
 * `diameter_fraction` of the mesh bounding-box diagonal; writes a new
 * handle.
 *
 * # Safety
 * `mesh` must be a live handle, `out` a valid pointer.
 */
VoletaStatus voleta_mesh_clean(const VoletaMesh *mesh, double diameter_fraction, VoletaMesh **out);

/**
 * Uniformly scale a mesh by `factor > 0`; writes a new handle.
 *
 * # Safety
 * `mesh` must be a live handle, `out` a valid pointer.
 */
VoletaStatus voleta_mesh_scale(const VoletaMesh *mesh, double factor, VoletaMesh **out);

/**
 * Scaling factor from measured reference-block lengths:
 * `block_edge_m / mean(lengths)`.
 *
 * # Safety
 * `lengths` must point to `len` doubles; `out` must be valid.
 */
VoletaStatus voleta_scale_from_blocks(const double *lengths,
                                      uintptr_t len,
                                      double block_edge_m,
                                      double *out);

/**
 * Depth-derived bounding-box volume `(f_w * ppu) * (f_l * ppu) * f_h`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VoletaStatus voleta_potential_volume(double f_w_px,
                                     double f_l_px,
                                     double f_h,
                                     double ppu,
                                     double *out);

/**
 * Food height as the absolute difference of two mean depths.
 */
double voleta_food_height(double d_r, double d_f);

/**
 * Validate a scale against the potential volume, correcting it with the
 * cube root when the relative deviation exceeds `tolerance`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VoletaStatus voleta_fine_tune_scale(double s,
                                    double unitless_volume,
                                    double potential,
                                    double tolerance,
                                    double *out);

/**
 * Pick the candidate factor whose scaled volume lands closest to the
 * potential volume (ties break toward the smaller candidate).
 *
 * # Safety
 * `candidates` must point to `len` doubles; `out` must be valid.
 */
VoletaStatus voleta_select_scale_one_shot(const double *candidates,
                                          uintptr_t len,
                                          double unitless_volume,
                                          double potential,
                                          double *out);

/**
 * Mean absolute percentage error of predicted against true volumes.
 *
 * # Safety
 * Both arrays must hold `len` doubles; `out` must be valid.
 */
VoletaStatus voleta_mape(const double *v_true, const double *v_pred, uintptr_t len, double *out);

/**
 * Sample both meshes, compute the raw Chamfer distance, register `ours`
 * onto `ground_truth` with point-to-point ICP, and compute the Chamfer
 * distance again after the transform.
 *
 * # Safety
 * Both handles must be live; `out` must be a valid pointer.
 */
VoletaStatus voleta_evaluate_pair(const VoletaMesh *ours,
                                  const VoletaMesh *ground_truth,
                                  uint64_t samples,
                                  uint64_t seed,
                                  VoletaEvalResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOLETA_H */

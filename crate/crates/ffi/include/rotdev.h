#ifndef ROTDEV_H
#define ROTDEV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_INVALID_ARGUMENT = 2,
  RD_STATUS_CONFIG = 3,
  RD_STATUS_NUMERICAL = 4,
  RD_STATUS_DEPENDENCY = 5,
  RD_STATUS_IO = 6,
  RD_STATUS_PANIC = 7,
} RdStatus;

typedef enum RdClassification {
  RD_CLASSIFICATION_POINT = 0,
  RD_CLASSIFICATION_SEGMENT = 1,
  RD_CLASSIFICATION_INTERIOR = 2,
  RD_CLASSIFICATION_INCONCLUSIVE = 3,
} RdClassification;

typedef enum RdVerdict {
  RD_VERDICT_BOUNDED = 0,
  RD_VERDICT_GROWING = 1,
  RD_VERDICT_INCONCLUSIVE = 2,
} RdVerdict;

// Lift of a torus homeomorphism.
typedef struct RdMap RdMap;

// Deviation profile `D(n)`, `|n| ≤ N`.
typedef struct RdProfile RdProfile;

// Finite-horizon rotation set estimate.
typedef struct RdRotationSet RdRotationSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t rd_last_error(char *buf, size_t len);

// Static description of a status code.
const char *rd_status_str(enum RdStatus status);

// Translation `z ↦ z + (ax, ay)`.
//
// # Safety
// `out` must be null or valid for writes.
enum RdStatus rd_map_translation(double ax, double ay, struct RdMap **out);

// Map described by the `[map]` section of a run configuration.
//
// # Safety
// `ini` must be a NUL-terminated string; `out` must be valid for writes.
enum RdStatus rd_map_from_ini(const char *ini, struct RdMap **out);

// # Safety
// `map` must be null or a handle from an `rd_map_*` constructor, freed once.
void rd_map_free(struct RdMap *map);

// `f̃(x, y)`.
//
// # Safety
// `map` must be a live handle; `ox`, `oy` valid for writes.
enum RdStatus rd_map_apply(const struct RdMap *map, double x, double y, double *ox, double *oy);

// Cocycle `Δ^{(n)}(x, y) = f̃ⁿ(z) − z`; negative `n` iterates the inverse.
//
// # Safety
// `map` must be a live handle; `ox`, `oy` valid for writes.
enum RdStatus rd_map_displacement(const struct RdMap *map,
                                  double x,
                                  double y,
                                  int64_t n,
                                  double *ox,
                                  double *oy);

// Convex hull of the averages `Δ^{(n)}/n` over a `grid_res²` lattice, with
// default tolerances.
//
// # Safety
// `map` must be a live handle, `horizons` must point to `n_horizons`
// values and `out` must be valid for writes.
enum RdStatus rd_rotation_set_estimate(const struct RdMap *map,
                                       size_t grid_res,
                                       const uint64_t *horizons,
                                       size_t n_horizons,
                                       struct RdRotationSet **out);

// # Safety
// `set` must be null or a live handle, freed once.
void rd_rotation_set_free(struct RdRotationSet *set);

// # Safety
// `set` must be a live handle.
enum RdClassification rd_rotation_set_classification(const struct RdRotationSet *set);

// Number of hull vertices.
//
// # Safety
// `set` must be a live handle.
size_t rd_rotation_set_hull_len(const struct RdRotationSet *set);

// Hull vertex `k` (counter-clockwise order).
//
// # Safety
// `set` must be a live handle; `x`, `y` valid for writes.
enum RdStatus rd_rotation_set_hull_vertex(const struct RdRotationSet *set,
                                          size_t k,
                                          double *x,
                                          double *y);

// Carrier line `⟨z, v⟩ = α`; `Dependency` when the estimate has none.
//
// # Safety
// `set` must be a live handle; outputs valid for writes.
enum RdStatus rd_rotation_set_carrier(const struct RdRotationSet *set,
                                      double *vx,
                                      double *vy,
                                      double *alpha);

// Deviation profile in direction `(vx, vy)` against the line level `alpha`.
//
// # Safety
// `map` must be a live handle and `out` valid for writes.
enum RdStatus rd_deviation_profile(const struct RdMap *map,
                                   double vx,
                                   double vy,
                                   double alpha,
                                   size_t grid_res,
                                   uint64_t horizon,
                                   struct RdProfile **out);

// # Safety
// `profile` must be null or a live handle, freed once.
void rd_profile_free(struct RdProfile *profile);

// Horizon `N` of the profile.
//
// # Safety
// `profile` must be a live handle.
uint64_t rd_profile_horizon(const struct RdProfile *profile);

// `D(n)` for `|n| ≤ N`.
//
// # Safety
// `profile` must be a live handle; `value` valid for writes.
enum RdStatus rd_profile_value(const struct RdProfile *profile, int64_t n, double *value);

// `max_{|n| ≤ N} D(n)`.
//
// # Safety
// `profile` must be a live handle.
double rd_profile_sup(const struct RdProfile *profile);

// # Safety
// `profile` must be a live handle.
enum RdVerdict rd_profile_verdict(const struct RdProfile *profile);

// Runs a pipeline subcommand (`rotset`, `deviation`, `stableset`,
// `foliation`, `verify`, `render`) as the `rotdev` binary would. `out_dir`
// may be null to use the configured directory.
//
// # Safety
// String arguments must be null or NUL-terminated.
enum RdStatus rd_run(const char *subcommand,
                     const char *config_path,
                     const char *out_dir,
                     bool force);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTDEV_H */

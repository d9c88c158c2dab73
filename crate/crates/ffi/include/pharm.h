#ifndef PHARM_H
#define PHARM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PharmStatus {
  PHARM_STATUS_OK = 0,
  PHARM_STATUS_NULL_POINTER = 1,
  PHARM_STATUS_CONFIG = 2,
  PHARM_STATUS_DOMAIN = 3,
  PHARM_STATUS_PRECONDITION = 4,
  PHARM_STATUS_SOLVER = 5,
  PHARM_STATUS_NON_CONVERGENCE = 6,
  PHARM_STATUS_ORACLE = 7,
  PHARM_STATUS_IO = 8,
  PHARM_STATUS_PANIC = 9,
  PHARM_STATUS_BUFFER_TOO_SMALL = 10,
} PharmStatus;

typedef enum PharmLawKind {
  PHARM_LAW_KIND_DIRICHLET = 0,
  PHARM_LAW_KIND_NEUMANN = 1,
  PHARM_LAW_KIND_ROBIN = 2,
} PharmLawKind;

typedef enum PharmFarKind {
  PHARM_FAR_KIND_LIMIT = 0,
  PHARM_FAR_KIND_OUTER_DIRICHLET = 1,
  PHARM_FAR_KIND_GROWTH = 2,
} PharmFarKind;

typedef enum PharmVerdict {
  PHARM_VERDICT_CONSTANT_LIMIT = 0,
  PHARM_VERDICT_FUNDAMENTAL_GROWTH = 1,
  PHARM_VERDICT_UNDETERMINED = 2,
} PharmVerdict;

// Opaque nodal field handle; keeps its mesh alive.
typedef struct PharmField PharmField;

// Opaque mesh handle.
typedef struct PharmMesh PharmMesh;

// Hole boundary law; `value` is the Dirichlet datum or the Robin `alpha`.
typedef struct PharmLaw {
  enum PharmLawKind kind;
  double value;
} PharmLaw;

// Far-field condition; `radius` is used by `OuterDirichlet` only.
typedef struct PharmFar {
  enum PharmFarKind kind;
  double value;
  double radius;
} PharmFar;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message (NUL-terminated) into
// `buf` and stores the required size, including the terminator, in
// `needed`. Passing `len == 0` only queries the size.
enum PharmStatus pharm_last_error(char *buf, size_t len, size_t *needed);

// `μ_p(r)`: `r^κ`, or `ln r` when `p = d`.
enum PharmStatus pharm_mu(double p, uint32_t d, double r, double *value);

// Gradient of `μ_p` at the point `x` of length `d`; `grad` receives `d` values.
enum PharmStatus pharm_mu_grad(double p, uint32_t d, const double *x, double *grad);

enum PharmStatus pharm_annulus_decay_constant(double p, uint32_t d, double *value);

// Exact radial solution `offset + coefficient μ_p(r)`.
enum PharmStatus pharm_solve_radial(double p,
                                    uint32_t d,
                                    double r_in,
                                    struct PharmLaw law,
                                    struct PharmFar far,
                                    double *offset,
                                    double *coefficient);

// Shooting solution at the `n` radii (increasing, starting at `r_in`).
enum PharmStatus pharm_shoot_radial(double p,
                                    uint32_t d,
                                    double r_in,
                                    struct PharmLaw law,
                                    struct PharmFar far,
                                    const double *radii,
                                    size_t n,
                                    double *values);

// Planar annulus `r_in <= |x| <= r_out` with `n_r × n_theta` nodes.
enum PharmStatus pharm_mesh_annulus_new(double r_in,
                                        double r_out,
                                        size_t n_r,
                                        size_t n_theta,
                                        double grading,
                                        struct PharmMesh **mesh);

// Radial grid in dimension `d` with `n` geometrically graded radii.
enum PharmStatus pharm_mesh_radial_new(uint32_t d,
                                       double r_in,
                                       double r_out,
                                       size_t n,
                                       double grading,
                                       struct PharmMesh **mesh);

// Releases a mesh; null is ignored. Fields built on it stay valid.
void pharm_mesh_free(struct PharmMesh *mesh);

enum PharmStatus pharm_mesh_node_count(const struct PharmMesh *mesh, size_t *count);

// Polar coordinates of node `node`.
enum PharmStatus pharm_mesh_node_polar(const struct PharmMesh *mesh,
                                       size_t node,
                                       double *r,
                                       double *theta);

// Field from `n` nodal values (`n` must equal the node count).
enum PharmStatus pharm_field_new(const struct PharmMesh *mesh,
                                 const double *values,
                                 size_t n,
                                 struct PharmField **field);

void pharm_field_free(struct PharmField *field);

// Copies the nodal values into `values` (capacity `n`).
enum PharmStatus pharm_field_values(const struct PharmField *field, double *values, size_t n);

// Minimizes the regularized energy with `law` on the whole hole boundary
// and `outer_value` on the outer circle, using the default schedule and
// tolerances. `energy` may be null.
enum PharmStatus pharm_solve(const struct PharmMesh *mesh,
                             double p,
                             struct PharmLaw law,
                             double outer_value,
                             struct PharmField **field,
                             double *energy);

// Both sides of the cutoff energy inequality at radius `r` with the
// exponential-bump cutoff. `holds` receives 1 or 0.
enum PharmStatus pharm_caccioppoli(const struct PharmField *field,
                                   double p,
                                   double b,
                                   double r,
                                   double *lhs,
                                   double *rhs,
                                   int32_t *holds);

// Limit-versus-growth classification of circle means at dyadic radii.
// `value` receives the limit or the signed growth coefficient (NaN when
// undetermined). Non-positive thresholds select the defaults.
enum PharmStatus pharm_classify(double p,
                                uint32_t d,
                                const double *radii,
                                const double *means,
                                size_t n,
                                double ratio,
                                double growth_band,
                                enum PharmVerdict *verdict,
                                double *value);

// Parses `config` (the `key = value` format of the command-line tool), runs
// it and writes the artifacts under `out_dir`. `exit_status` receives the
// command-line exit status of the run (0 when every check passed, 3 when a
// check failed).
enum PharmStatus pharm_run_config(const char *config, const char *out_dir, int32_t *exit_status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHARM_H */

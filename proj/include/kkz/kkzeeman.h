#ifndef KKZ_KKZEEMAN_H
#define KKZ_KKZEEMAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(KKZ_BUILDING_LIBRARY)
#define KKZ_API __attribute__((visibility("default")))
#else
#define KKZ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. 2..6 coincide with the CLI exit codes. */
typedef enum kkz_status {
  KKZ_OK = 0,
  KKZ_ERR_INVALID_INPUT = 1,
  KKZ_ERR_CONFIG = 2,
  KKZ_ERR_SCENARIO = 3,
  KKZ_ERR_INTEGRATION = 4,
  KKZ_ERR_CLASSIFICATION = 5,
  KKZ_ERR_IO = 6,
  KKZ_ERR_CHART_DOMAIN = 7,
  KKZ_ERR_GEOMETRY = 8,
  KKZ_ERR_LIFT = 9,
  KKZ_ERR_INTERNAL = 10
} kkz_status;

typedef struct kkz_field kkz_field;
typedef struct kkz_trajectory kkz_trajectory;

typedef struct kkz_integrator {
  double tol;
  double s_max;
  size_t samples;
  double fd_scale;
} kkz_integrator;

KKZ_API const char* kkz_version(void);
KKZ_API const char* kkz_status_name(kkz_status status);
/* Message of the last failure on the calling thread; never NULL. */
KKZ_API const char* kkz_last_error(void);

KKZ_API void kkz_integrator_defaults(kkz_integrator* opts);

/* params_json is a JSON object of numeric parameters, or NULL. */
KKZ_API kkz_status kkz_field_create(const char* scenario, const char* params_json,
                                    kkz_field** out);
KKZ_API void kkz_field_destroy(kkz_field* field);
/* 1 for U(1), 3 for SU(2). */
KKZ_API int kkz_field_dim(const kkz_field* field);
/* out receives 16*dim doubles: F_{mu nu} component a at out[(4*mu + nu)*dim + a]. */
KKZ_API kkz_status kkz_field_curvature(const kkz_field* field, const double x[4],
                                       double fd_scale, double* out);
KKZ_API kkz_status kkz_field_bianchi(const kkz_field* field, const double x[4],
                                     double fd_scale, double* out);

/* metric is "minkowski", "exp-lapse" or "linear-lapse" with parameter a.
   charge points to dim coefficients. */
KKZ_API kkz_status kkz_simulate_base(const kkz_field* field, const char* metric, double a,
                                     const double x0[4], const double v0[4],
                                     const double* charge, const kkz_integrator* opts,
                                     kkz_trajectory** out);
/* Bundle geodesic from fiber point exp(theta) with omega = charge; returns the
   projection to the base. theta may be NULL for the identity. */
KKZ_API kkz_status kkz_simulate_bundle(const kkz_field* field, const char* metric, double a,
                                       const double x0[4], const double v0[4],
                                       const double* theta, const double* charge,
                                       const kkz_integrator* opts, kkz_trajectory** out);

KKZ_API void kkz_trajectory_destroy(kkz_trajectory* traj);
KKZ_API size_t kkz_trajectory_size(const kkz_trajectory* traj);
/* Number of charge columns (0 when the trajectory carries none). */
KKZ_API int kkz_trajectory_charge_dim(const kkz_trajectory* traj);
KKZ_API int kkz_trajectory_has_velocity(const kkz_trajectory* traj);
/* Any output pointer may be NULL. q receives charge_dim doubles. */
KKZ_API kkz_status kkz_trajectory_sample(const kkz_trajectory* traj, size_t i, double* s,
                                         double x[4], double v[4], double* q);
KKZ_API kkz_status kkz_trajectory_write_csv(const kkz_trajectory* traj, const char* path);
KKZ_API kkz_status kkz_trajectory_read_csv(const char* path, kkz_trajectory** out);

/* JSON results are allocated by the library; release with kkz_string_free. */
KKZ_API kkz_status kkz_compare_projection(const kkz_field* field, const char* metric, double a,
                                          const double x0[4], const double v0[4],
                                          const double* charge, const kkz_integrator* opts,
                                          char** report_json);
/* Classifies the curve stored at curve_path (.csv or .json). With
   equivalence != 0 the report also holds the lift verdict. */
KKZ_API kkz_status kkz_classify_json(const kkz_field* field, const char* metric, double a,
                                     const char* curve_path, uint64_t seed, int equivalence,
                                     char** report_json);
KKZ_API void kkz_string_free(char* s);

/* Runs a config file like the CLI. out_dir, seed and tol may be NULL.
   Returns the exit code; summary_json (optional) gets the JSON summary. */
KKZ_API int kkz_run(const char* config_path, const char* out_dir, const uint64_t* seed,
                    const double* tol, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif

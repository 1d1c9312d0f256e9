/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "kkz/kkzeeman.h"

static int failed = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      failed++;                                                       \
    }                                                                 \
  } while (0)

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  char path[4096];
  kkz_field* field = NULL;
  kkz_field* bad = NULL;
  kkz_trajectory* traj = NULL;
  kkz_trajectory* back = NULL;
  kkz_integrator opts;
  const double x0[4] = {0, 1, 0.5, 0};
  const double v0[4] = {1.1575836902790224, 0.5, 0.3, 0};
  const double q[1] = {0.3};
  double f[16];
  double x[4], v[4], s, bianchi;
  char* json = NULL;

  EXPECT(strcmp(kkz_version(), "0.1.0") == 0);
  EXPECT(strcmp(kkz_status_name(KKZ_ERR_SCENARIO), "scenario") == 0);

  EXPECT(kkz_field_create("u1-monopole", NULL, &bad) == KKZ_ERR_SCENARIO);
  EXPECT(bad == NULL);
  EXPECT(strlen(kkz_last_error()) > 0);
  EXPECT(kkz_field_create("u1-constant-B", "{\"B\": 0.5", &bad) == KKZ_ERR_CONFIG);

  EXPECT(kkz_field_create("u1-constant-B", "{\"B\": 0.5}", &field) == KKZ_OK);
  EXPECT(kkz_field_dim(field) == 1);
  EXPECT(kkz_field_curvature(field, x0, 1e-5, f) == KKZ_OK);
  EXPECT(fabs(f[4 * 1 + 2] - 0.5) < 1e-12);
  EXPECT(fabs(f[4 * 2 + 1] + 0.5) < 1e-12);
  EXPECT(kkz_field_bianchi(field, x0, 1e-5, &bianchi) == KKZ_OK);
  EXPECT(bianchi < 1e-8);

  kkz_integrator_defaults(&opts);
  opts.samples = 64;
  EXPECT(kkz_simulate_base(field, "minkowski", 0.0, x0, v0, q, &opts, &traj) == KKZ_OK);
  EXPECT(kkz_trajectory_size(traj) == 64);
  EXPECT(kkz_trajectory_charge_dim(traj) == 1);
  EXPECT(kkz_trajectory_sample(traj, 63, &s, x, v, NULL) == KKZ_OK);
  EXPECT(s == 10.0);
  EXPECT(fabs(v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3] - 1.0) < 1e-8);
  EXPECT(kkz_trajectory_sample(traj, 64, &s, x, v, NULL) == KKZ_ERR_INVALID_INPUT);

  snprintf(path, sizeof path, "%s/capi_traj.csv", dir);
  EXPECT(kkz_trajectory_write_csv(traj, path) == KKZ_OK);
  EXPECT(kkz_trajectory_read_csv(path, &back) == KKZ_OK);
  EXPECT(kkz_trajectory_size(back) == 64);
  {
    double xb[4];
    EXPECT(kkz_trajectory_sample(back, 63, NULL, xb, NULL, NULL) == KKZ_OK);
    EXPECT(memcmp(xb, x, sizeof xb) == 0);
  }
  {
    kkz_trajectory* missing = NULL;
    EXPECT(kkz_trajectory_read_csv("/nonexistent/kkz.csv", &missing) == KKZ_ERR_IO);
    EXPECT(missing == NULL);
  }

  EXPECT(kkz_compare_projection(field, "minkowski", 0.0, x0, v0, q, NULL, &json) == KKZ_OK);
  EXPECT(json != NULL && strstr(json, "\"position_deviation\"") != NULL);
  kkz_string_free(json);
  json = NULL;
  EXPECT(kkz_compare_projection(field, "wormhole", 0.0, x0, v0, q, NULL, &json) == KKZ_ERR_CONFIG);

  kkz_trajectory_destroy(traj);
  kkz_trajectory_destroy(back);
  kkz_field_destroy(field);

  if (failed) fprintf(stderr, "%d C API checks failed\n", failed);
  return failed ? 1 : 0;
}

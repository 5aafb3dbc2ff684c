/* Copyright (c) 2026 The sms Authors */
/* SPDX-License-Identifier: Apache-2.0 */

#ifndef SMS_SMS_H
#define SMS_SMS_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SMS_API
#else
#define SMS_API __attribute__((visibility("default")))
#endif

typedef enum sms_status
{
  SMS_OK = 0,
  SMS_ERR_INVALID_ARGUMENT = 1,
  SMS_ERR_DOMAIN = 2,
  SMS_ERR_NOT_CONVERGED = 3,
  SMS_ERR_IO = 4,
  SMS_ERR_PARSE = 5,
  SMS_ERR_ACCEPTANCE = 6,
  SMS_ERR_INTERNAL = 7
} sms_status;

typedef struct sms_grid sms_grid;
typedef struct sms_profile sms_profile;
typedef struct sms_field sms_field;

typedef struct sms_params
{
  double eps;
  double omega;
  double q;
  double p;
  double r;
} sms_params;

typedef struct sms_descent
{
  double grad_tol;
  double nehari_tol;
  int max_iter;
  int memory;
} sms_descent;

SMS_API const char *sms_version(void);

/* Message of the last failed call on this thread ("" when none). */
SMS_API const char *sms_last_error(void);
SMS_API const char *sms_status_name(sms_status status);

/* Process exit code for a status: 0 ok, 2 config, 3 non-convergence,
   4 failed check, 1 internal. */
SMS_API int sms_exit_code(sms_status status);

/* Applies the SMS_THREADS cap. */
SMS_API void sms_configure_threads(void);

SMS_API void sms_params_default(sms_params *params);
SMS_API void sms_descent_default(sms_descent *opts);

/* Grids. `shape` is a canonical shape string such as "ball:0,0,0:1". */
SMS_API sms_status sms_grid_create(const char *shape, double h, sms_grid **out);
SMS_API void sms_grid_destroy(sms_grid *grid);
SMS_API size_t sms_grid_size(const sms_grid *grid);
SMS_API int sms_grid_dim(const sms_grid *grid);
SMS_API double sms_grid_spacing(const sms_grid *grid);
SMS_API sms_status sms_grid_coord(const sms_grid *grid, size_t node, double xyz[3]);

/* Radial ground state of -U'' - (d-1)/r U' + U = U^(p-1). */
SMS_API sms_status sms_profile_shoot(double p, int d, sms_profile **out);
SMS_API void sms_profile_destroy(sms_profile *profile);
SMS_API double sms_profile_u0(const sms_profile *profile);
SMS_API double sms_profile_m_inf(const sms_profile *profile);
SMS_API double sms_profile_nehari_residual(const sms_profile *profile);
SMS_API double sms_profile_eval(const sms_profile *profile, double r);

/* Fields. */
SMS_API sms_status sms_field_create(const sms_grid *grid, sms_field **out);
SMS_API sms_status sms_field_from_values(const sms_grid *grid, const double *values, size_t n, sms_field **out);
SMS_API void sms_field_destroy(sms_field *field);
SMS_API size_t sms_field_size(const sms_field *field);
SMS_API double *sms_field_data(sms_field *field);
SMS_API const double *sms_field_cdata(const sms_field *field);
SMS_API sms_status sms_field_grid(const sms_field *field, sms_grid **out);
SMS_API sms_status sms_field_read(const char *path, sms_field **out);
SMS_API sms_status sms_field_write(const sms_field *field, const char *path);

/* Functional. */
SMS_API sms_status sms_energy(const sms_field *u, const sms_params *params, double *out);
SMS_API sms_status sms_nehari_residual(const sms_field *u, const sms_params *params, double *out);
SMS_API sms_status sms_photography(const sms_profile *profile, const sms_grid *grid, const sms_params *params,
                                   const double xi[3], sms_field **out, double *scale);

/* Descent on the Nehari set. On SMS_OK or SMS_ERR_NOT_CONVERGED `solution`
   and `report_json` are set; free them with sms_field_destroy and
   sms_string_free. */
SMS_API sms_status sms_solve(const sms_field *u0, const sms_params *params, const sms_descent *opts,
                             sms_field **solution, char **report_json);

/* Experiment drivers. Inputs are JSON text; results are JSON text owned by the
   caller. The record is returned also when the status is
   SMS_ERR_NOT_CONVERGED or SMS_ERR_ACCEPTANCE. */
SMS_API sms_status sms_config_check(const char *config_json, char **canonical_json);
SMS_API sms_status sms_cmd_groundstate(double p, int d, const char *out_dir, char **result_json);
SMS_API sms_status sms_cmd_sweep_eps(const char *config_json, char **record_json);
SMS_API sms_status sms_cmd_multiplicity(const char *config_json, char **record_json);
/* eps <= 0 selects the last entry of the config's eps list. */
SMS_API sms_status sms_cmd_diagnose(const char *config_json, const char *field_path, double eps,
                                    char **record_json);
SMS_API sms_status sms_cmd_morse(const char *run_dir, char **record_json);

SMS_API void sms_string_free(char *text);

#ifdef __cplusplus
}
#endif

#endif /* SMS_SMS_H */

// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/sms.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "sms/experiment.hpp"
#include "sms/parallel.hpp"

struct sms_grid
{
  sms::GridPtr grid;
};

struct sms_profile
{
  sms::RadialProfile profile;
};

struct sms_field
{
  sms::Field field;
};

namespace
{

thread_local std::string last_error;

sms_status to_status(sms::ErrorCode code)
{
  switch (code)
  {
  case sms::ErrorCode::InvalidArgument:
    return SMS_ERR_INVALID_ARGUMENT;
  case sms::ErrorCode::Domain:
    return SMS_ERR_DOMAIN;
  case sms::ErrorCode::NotConverged:
    return SMS_ERR_NOT_CONVERGED;
  case sms::ErrorCode::Io:
    return SMS_ERR_IO;
  case sms::ErrorCode::Parse:
    return SMS_ERR_PARSE;
  case sms::ErrorCode::Acceptance:
    return SMS_ERR_ACCEPTANCE;
  }
  return SMS_ERR_INTERNAL;
}

template <class F>
sms_status guard(F &&f)
{
  try
  {
    last_error.clear();
    return f();
  }
  catch (const sms::Error &e)
  {
    last_error = e.what();
    return to_status(e.code());
  }
  catch (const std::bad_alloc &)
  {
    last_error = "out of memory";
    return SMS_ERR_INTERNAL;
  }
  catch (const std::exception &e)
  {
    last_error = e.what();
    return SMS_ERR_INTERNAL;
  }
}

sms_status null_arg(const char *what)
{
  last_error = std::string("null argument: ") + what;
  return SMS_ERR_INVALID_ARGUMENT;
}

char *dup_string(const std::string &s)
{
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out)
  {
    throw std::bad_alloc();
  }
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

sms::Params to_params(const sms_params *p)
{
  sms::Params out;
  out.eps = p->eps;
  out.omega = p->omega;
  out.q = p->q;
  out.p = p->p;
  out.r = p->r;
  out.validate();
  return out;
}

sms::json parse_json(const char *text)
{
  try
  {
    return sms::json::parse(text);
  }
  catch (const sms::json::exception &e)
  {
    throw sms::Error(sms::ErrorCode::Parse, std::string("config: ") + e.what());
  }
}

sms_status finish(const sms::CommandResult &res, char **out)
{
  *out = dup_string(res.record.dump(2));
  if (res.exit_code == 3)
  {
    last_error = "solver did not converge";
    return SMS_ERR_NOT_CONVERGED;
  }
  if (res.exit_code == 4)
  {
    last_error = "one or more checks failed";
    return SMS_ERR_ACCEPTANCE;
  }
  return SMS_OK;
}

}  // namespace

extern "C" {

const char *sms_version(void)
{
  return sms::kVersion;
}

const char *sms_last_error(void)
{
  return last_error.c_str();
}

const char *sms_status_name(sms_status status)
{
  switch (status)
  {
  case SMS_OK:
    return "ok";
  case SMS_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case SMS_ERR_DOMAIN:
    return "domain error";
  case SMS_ERR_NOT_CONVERGED:
    return "not converged";
  case SMS_ERR_IO:
    return "i/o error";
  case SMS_ERR_PARSE:
    return "parse error";
  case SMS_ERR_ACCEPTANCE:
    return "check failed";
  case SMS_ERR_INTERNAL:
    return "internal error";
  }
  return "unknown";
}

int sms_exit_code(sms_status status)
{
  switch (status)
  {
  case SMS_OK:
    return 0;
  case SMS_ERR_INVALID_ARGUMENT:
  case SMS_ERR_DOMAIN:
  case SMS_ERR_IO:
  case SMS_ERR_PARSE:
    return 2;
  case SMS_ERR_NOT_CONVERGED:
    return 3;
  case SMS_ERR_ACCEPTANCE:
    return 4;
  default:
    return 1;
  }
}

void sms_configure_threads(void)
{
  sms::parallel::configure_threads();
}

void sms_params_default(sms_params *params)
{
  if (!params)
  {
    return;
  }
  const sms::Params d;
  *params = {d.eps, d.omega, d.q, d.p, d.r};
}

void sms_descent_default(sms_descent *opts)
{
  if (!opts)
  {
    return;
  }
  const sms::DescentOptions d;
  *opts = {d.grad_tol, d.nehari_tol, d.max_iter, d.memory};
}

sms_status sms_grid_create(const char *shape, double h, sms_grid **out)
{
  if (!shape || !out)
  {
    return null_arg("shape/out");
  }
  return guard(
      [&]
      {
        auto g = sms::build_domain(sms::DomainShape::parse(shape), h);
        *out = new sms_grid{std::move(g)};
        return SMS_OK;
      });
}

void sms_grid_destroy(sms_grid *grid)
{
  delete grid;
}

size_t sms_grid_size(const sms_grid *grid)
{
  return grid ? grid->grid->size() : 0;
}

int sms_grid_dim(const sms_grid *grid)
{
  return grid ? grid->grid->dim() : 0;
}

double sms_grid_spacing(const sms_grid *grid)
{
  return grid ? grid->grid->spacing() : 0.0;
}

sms_status sms_grid_coord(const sms_grid *grid, size_t node, double xyz[3])
{
  if (!grid || !xyz)
  {
    return null_arg("grid/xyz");
  }
  if (node >= grid->grid->size())
  {
    last_error = "node index out of range";
    return SMS_ERR_INVALID_ARGUMENT;
  }
  const sms::Point x = grid->grid->coord(node);
  xyz[0] = x[0];
  xyz[1] = x[1];
  xyz[2] = x[2];
  return SMS_OK;
}

sms_status sms_profile_shoot(double p, int d, sms_profile **out)
{
  if (!out)
  {
    return null_arg("out");
  }
  return guard(
      [&]
      {
        *out = new sms_profile{sms::shoot_ground_state(p, d, 1e-12)};
        return SMS_OK;
      });
}

void sms_profile_destroy(sms_profile *profile)
{
  delete profile;
}

double sms_profile_u0(const sms_profile *profile)
{
  return profile ? profile->profile.u0 : 0.0;
}

double sms_profile_m_inf(const sms_profile *profile)
{
  return profile ? profile->profile.m_inf : 0.0;
}

double sms_profile_nehari_residual(const sms_profile *profile)
{
  return profile ? profile->profile.nehari_residual() : 0.0;
}

double sms_profile_eval(const sms_profile *profile, double r)
{
  return profile ? sms::eval_profile(profile->profile, r) : 0.0;
}

sms_status sms_field_create(const sms_grid *grid, sms_field **out)
{
  if (!grid || !out)
  {
    return null_arg("grid/out");
  }
  return guard(
      [&]
      {
        *out = new sms_field{sms::Field(grid->grid)};
        return SMS_OK;
      });
}

sms_status sms_field_from_values(const sms_grid *grid, const double *values, size_t n, sms_field **out)
{
  if (!grid || !values || !out)
  {
    return null_arg("grid/values/out");
  }
  if (n != grid->grid->size())
  {
    last_error = "value count does not match the grid";
    return SMS_ERR_INVALID_ARGUMENT;
  }
  return guard(
      [&]
      {
        *out = new sms_field{sms::Field(grid->grid, std::vector<double>(values, values + n))};
        return SMS_OK;
      });
}

void sms_field_destroy(sms_field *field)
{
  delete field;
}

size_t sms_field_size(const sms_field *field)
{
  return field ? field->field.size() : 0;
}

double *sms_field_data(sms_field *field)
{
  return field ? field->field.values().data() : nullptr;
}

const double *sms_field_cdata(const sms_field *field)
{
  return field ? field->field.values().data() : nullptr;
}

sms_status sms_field_grid(const sms_field *field, sms_grid **out)
{
  if (!field || !out)
  {
    return null_arg("field/out");
  }
  return guard(
      [&]
      {
        *out = new sms_grid{field->field.grid_ptr()};
        return SMS_OK;
      });
}

sms_status sms_field_read(const char *path, sms_field **out)
{
  if (!path || !out)
  {
    return null_arg("path/out");
  }
  return guard(
      [&]
      {
        *out = new sms_field{sms::read_field(path)};
        return SMS_OK;
      });
}

sms_status sms_field_write(const sms_field *field, const char *path)
{
  if (!field || !path)
  {
    return null_arg("field/path");
  }
  return guard(
      [&]
      {
        sms::write_field(path, field->field);
        return SMS_OK;
      });
}

sms_status sms_energy(const sms_field *u, const sms_params *params, double *out)
{
  if (!u || !params || !out)
  {
    return null_arg("u/params/out");
  }
  return guard(
      [&]
      {
        *out = sms::energy(u->field, to_params(params)).total;
        return SMS_OK;
      });
}

sms_status sms_nehari_residual(const sms_field *u, const sms_params *params, double *out)
{
  if (!u || !params || !out)
  {
    return null_arg("u/params/out");
  }
  return guard(
      [&]
      {
        *out = sms::nehari_residual(u->field, to_params(params));
        return SMS_OK;
      });
}

sms_status sms_photography(const sms_profile *profile, const sms_grid *grid, const sms_params *params,
                           const double xi[3], sms_field **out, double *scale)
{
  if (!profile || !grid || !params || !xi || !out)
  {
    return null_arg("profile/grid/params/xi/out");
  }
  return guard(
      [&]
      {
        sms::Functional fn(to_params(params));
        sms::Field u = sms::photography({xi[0], xi[1], xi[2]}, profile->profile, fn, grid->grid, scale);
        *out = new sms_field{std::move(u)};
        return SMS_OK;
      });
}

sms_status sms_solve(const sms_field *u0, const sms_params *params, const sms_descent *opts, sms_field **solution,
                     char **report_json)
{
  if (!u0 || !params || !solution || !report_json)
  {
    return null_arg("u0/params/solution/report_json");
  }
  return guard(
      [&]
      {
        sms::DescentOptions o;
        if (opts)
        {
          o.grad_tol = opts->grad_tol;
          o.nehari_tol = opts->nehari_tol;
          o.max_iter = opts->max_iter;
          o.memory = opts->memory;
        }
        sms::Functional fn(to_params(params));
        sms::SolveReport rep = sms::solve_critical(fn, u0->field, o);
        *report_json = dup_string(sms::report_to_json(rep, true).dump(2));
        *solution = new sms_field{std::move(rep.solution)};
        if (!rep.converged)
        {
          last_error = rep.message;
          return SMS_ERR_NOT_CONVERGED;
        }
        return SMS_OK;
      });
}

sms_status sms_config_check(const char *config_json, char **canonical_json)
{
  if (!config_json || !canonical_json)
  {
    return null_arg("config_json/canonical_json");
  }
  return guard(
      [&]
      {
        const sms::ExperimentConfig cfg = sms::parse_config(parse_json(config_json));
        sms::json j = cfg.canonical();
        j["config_hash"] = cfg.hash();
        *canonical_json = dup_string(j.dump(2));
        return SMS_OK;
      });
}

sms_status sms_cmd_groundstate(double p, int d, const char *out_dir, char **result_json)
{
  if (!out_dir || !result_json)
  {
    return null_arg("out_dir/result_json");
  }
  return guard(
      [&]
      {
        *result_json = dup_string(sms::run_groundstate(p, d, out_dir).dump(2));
        return SMS_OK;
      });
}

sms_status sms_cmd_sweep_eps(const char *config_json, char **record_json)
{
  if (!config_json || !record_json)
  {
    return null_arg("config_json/record_json");
  }
  return guard(
      [&]
      {
        const sms::ExperimentConfig cfg = sms::parse_config(parse_json(config_json));
        if (cfg.eps_list.size() < 3)
        {
          throw sms::Error(sms::ErrorCode::Parse, "config: sweep needs at least three eps values");
        }
        return finish(sms::run_sweep(cfg), record_json);
      });
}

sms_status sms_cmd_multiplicity(const char *config_json, char **record_json)
{
  if (!config_json || !record_json)
  {
    return null_arg("config_json/record_json");
  }
  return guard(
      [&]
      {
        const sms::ExperimentConfig cfg = sms::parse_config(parse_json(config_json));
        return finish(sms::run_multiplicity(cfg), record_json);
      });
}

sms_status sms_cmd_diagnose(const char *config_json, const char *field_path, double eps, char **record_json)
{
  if (!config_json || !field_path || !record_json)
  {
    return null_arg("config_json/field_path/record_json");
  }
  return guard(
      [&]
      {
        const sms::ExperimentConfig cfg = sms::parse_config(parse_json(config_json));
        return finish(sms::run_diagnose(cfg, field_path, eps > 0.0 ? eps : cfg.eps_list.back()), record_json);
      });
}

sms_status sms_cmd_morse(const char *run_dir, char **record_json)
{
  if (!run_dir || !record_json)
  {
    return null_arg("run_dir/record_json");
  }
  return guard([&] { return finish(sms::run_morse(run_dir), record_json); });
}

void sms_string_free(char *text)
{
  std::free(text);
}

}  // extern "C"

// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sms/sms.h"

namespace
{

using json = nlohmann::json;

struct Overrides
{
  std::vector<double> eps;
  std::optional<double> omega, q, p, r, h, eps_over_h, delta;
  std::optional<int> seed_count, perturbed_copies, max_axis_nodes;
  std::optional<unsigned long> rng_seed;
  std::string out;
  bool assert_checks = false;
};

void add_overrides(CLI::App *cmd, Overrides &o)
{
  cmd->add_option("--eps", o.eps, "eps list");
  cmd->add_option("--omega", o.omega, "coupling weight");
  cmd->add_option("--q", o.q, "charge constant");
  cmd->add_option("--p", o.p, "exponent in (4,6)");
  cmd->add_option("--r", o.r, "cutoff radius");
  cmd->add_option("--spacing", o.h, "fixed grid spacing h");
  cmd->add_option("--eps-over-h", o.eps_over_h, "eps/h ratio");
  cmd->add_option("--max-axis-nodes", o.max_axis_nodes, "node cap per axis");
  cmd->add_option("--delta", o.delta, "energy window above m_inf (relative)");
  cmd->add_option("--seed-count", o.seed_count, "number of generated seeds");
  cmd->add_option("--perturbed-copies", o.perturbed_copies, "perturbed copies of the first seed");
  cmd->add_option("--rng-seed", o.rng_seed, "perturbation RNG seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--assert", o.assert_checks, "non-zero exit when a check fails");
}

void apply(json &cfg, const Overrides &o)
{
  auto set = [&](const char *section, const char *key, const auto &v)
  {
    if (v)
    {
      cfg[section][key] = *v;
    }
  };
  if (!o.eps.empty())
  {
    cfg["params"]["eps"] = o.eps;
  }
  set("params", "omega", o.omega);
  set("params", "q", o.q);
  set("params", "p", o.p);
  set("params", "r", o.r);
  set("grid", "h", o.h);
  set("grid", "eps_over_h", o.eps_over_h);
  set("grid", "max_axis_nodes", o.max_axis_nodes);
  set("seeds", "count", o.seed_count);
  set("seeds", "perturbed_copies", o.perturbed_copies);
  set("seeds", "rng_seed", o.rng_seed);
  if (o.delta)
  {
    cfg["delta"] = *o.delta;
  }
  if (!o.out.empty())
  {
    cfg["output_dir"] = o.out;
  }
  if (o.assert_checks)
  {
    cfg["assert"] = true;
  }
}

int fail(sms_status st)
{
  std::cerr << "error: " << sms_last_error() << '\n';
  return sms_exit_code(st);
}

// Reads and merges the config; returns an exit code on failure.
std::optional<std::string> load(const std::string &path, const Overrides &o, int &code)
{
  std::ifstream in(path);
  if (!in)
  {
    std::cerr << "error: cannot open config '" << path << "'\n";
    code = 2;
    return std::nullopt;
  }
  json cfg;
  try
  {
    cfg = json::parse(in);
  }
  catch (const json::exception &e)
  {
    std::cerr << "error: config: " << e.what() << '\n';
    code = 2;
    return std::nullopt;
  }
  apply(cfg, o);
  return cfg.dump();
}

// Takes the slot by address: the status call must run before it is read.
int emit(sms_status st, char **slot, bool quiet)
{
  char *text = *slot;
  if (text)
  {
    if (!quiet)
    {
      std::cout << text << '\n';
    }
    sms_string_free(text);
  }
  if (st != SMS_OK)
  {
    return fail(st);
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  sms_configure_threads();
  CLI::App app{"Semiclassical Schroedinger-Maxwell solver and experiment harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sms_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "do not print the result JSON");

  double gs_p = 5.0;
  int gs_d = 3;
  std::string gs_out = "groundstate-out";
  auto *gs = app.add_subcommand("groundstate", "radial ground state profile and m_inf");
  gs->add_option("--p", gs_p, "exponent in (4,6)");
  gs->add_option("--d", gs_d, "dimension (1-3)");
  gs->add_option("--out", gs_out, "output directory");

  std::string config;
  Overrides sweep_o, mult_o, diag_o;
  auto *sweep = app.add_subcommand("sweep-eps", "m_eps, G_eps(W) and t_eps(W) across eps");
  sweep->add_option("--config", config, "experiment config (JSON)")->required();
  add_overrides(sweep, sweep_o);

  auto *mult = app.add_subcommand("multiplicity", "solutions from topology-aware seeds");
  mult->add_option("--config", config, "experiment config (JSON)")->required();
  add_overrides(mult, mult_o);

  std::string field;
  double diag_eps = 0.0;
  auto *diag = app.add_subcommand("diagnose", "identities, partition and concentration of a field");
  diag->add_option("--config", config, "experiment config (JSON)")->required();
  diag->add_option("--field", field, "SMSFIELD dump")->required();
  diag->add_option("--at-eps", diag_eps, "eps of the field (default: last of the list)");
  add_overrides(diag, diag_o);

  std::string run_dir;
  auto *morse = app.add_subcommand("morse", "Hessian spectra of a multiplicity run");
  morse->add_option("--run", run_dir, "multiplicity output directory")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  char *out = nullptr;
  int code = 0;
  if (*gs)
  {
    return emit(sms_cmd_groundstate(gs_p, gs_d, gs_out.c_str(), &out), &out, quiet);
  }
  if (*sweep)
  {
    auto text = load(config, sweep_o, code);
    return text ? emit(sms_cmd_sweep_eps(text->c_str(), &out), &out, quiet) : code;
  }
  if (*mult)
  {
    auto text = load(config, mult_o, code);
    return text ? emit(sms_cmd_multiplicity(text->c_str(), &out), &out, quiet) : code;
  }
  if (*diag)
  {
    auto text = load(config, diag_o, code);
    return text ? emit(sms_cmd_diagnose(text->c_str(), field.c_str(), diag_eps, &out), &out, quiet) : code;
  }
  if (*morse)
  {
    return emit(sms_cmd_morse(run_dir.c_str(), &out), &out, quiet);
  }
  return 2;
}

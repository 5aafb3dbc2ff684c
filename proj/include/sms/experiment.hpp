// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sms/morse.hpp"
#include "sms/nehari.hpp"
#include "sms/topo.hpp"

namespace sms
{

inline constexpr const char *kConfigSchema = "sms-experiment/1";
inline constexpr const char *kVersion = "0.3.0";

using json = nlohmann::json;

struct ExperimentConfig
{
  DomainShape shape = make_ball(3, 1.0);
  double h = 0.0;           // fixed spacing; 0 derives h from eps_over_h
  double eps_over_h = 6.0;
  int max_axis_nodes = 96;  // lattice nodes per axis across the bounding box
  std::vector<double> eps_list{0.4, 0.3, 0.2, 0.15};
  double omega = 1.0;
  double q = 1.0;
  double p = 5.0;
  double r = 0.0;           // 0 means r_fraction * inradius
  double r_fraction = 0.9;
  std::string seed_generator = "auto";  // auto | explicit
  std::vector<Point> seeds;
  int seed_count = 6;
  int perturbed_copies = 0;
  double perturbation = 0.05;  // relative to max of the seed field
  std::uint64_t rng_seed = 1;
  double delta = 0.1;          // energy window m_inf (1 + delta)
  bool assert_checks = false;  // sweep: non-zero exit when a check fails
  DescentOptions descent;
  CgOptions cg;
  SpectrumOptions spectrum;
  std::string output_dir = "sms-out";
  bool write_fields = true;

  double cutoff() const;
  double spacing_for(double eps) const;
  Params params_for(double eps) const;
  std::vector<Point> seed_points() const;

  /// Fully populated form (defaults filled in); the hash is taken over it.
  json canonical() const;
  std::string hash() const;
};

ExperimentConfig parse_config(const json &j);
ExperimentConfig load_config(const std::filesystem::path &path);

/// 16 hex digits of FNV-1a over the text.
std::string fnv1a_hex(const std::string &text);

json report_to_json(const SolveReport &report, bool with_trace = true);
json spectrum_to_json(const SpectrumReport &spectrum);

/// Outcome of a driver: the run record plus the process exit code
/// (0 ok, 3 non-convergence, 4 failed check).
struct CommandResult
{
  json record;
  int exit_code = 0;
};

json run_groundstate(double p, int d, const std::filesystem::path &out_dir);
CommandResult run_sweep(const ExperimentConfig &config);
CommandResult run_multiplicity(const ExperimentConfig &config);
CommandResult run_diagnose(const ExperimentConfig &config, const std::filesystem::path &field, double eps);
CommandResult run_morse(const std::filesystem::path &run_dir);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace sms

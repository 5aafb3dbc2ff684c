// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

namespace sms
{

/// Positive radial solution of -Delta U + U = U^(p-1) in R^d, tabulated on
/// [0, R_max] with an attached exponential tail c r^(-(d-1)/2) e^(-a r).
struct RadialProfile
{
  int dim = 3;
  double p = 5.0;
  double dr = 1e-3;
  std::vector<double> samples;      // U(k dr), k = 0..K
  std::vector<double> derivatives;  // U'(k dr)
  double r_max = 0.0;
  double u0 = 0.0;
  double decay_a = 1.0;
  double decay_c = 0.0;
  double h1_norm_sq = 0.0;  // int |grad U|^2 + U^2 over R^d
  double lp_power = 0.0;    // int U^p over R^d
  double m_inf = 0.0;

  double nehari_residual() const { return std::abs(h1_norm_sq - lp_power) / h1_norm_sq; }
};

struct ShootingOptions
{
  double dr = 1e-3;
  double r_cap = 40.0;
  double floor_value = 1e-8;
  int max_bisections = 400;
};

/// Bisection on U(0) between undershoot (U' changes sign while U > 0) and
/// overshoot (U crosses zero), followed by RK4 tabulation and tail fitting.
/// Requires 4 < p < 6 and d in {1,2,3}. `tol` bounds the final relative
/// bracket width on U(0).
RadialProfile shoot_ground_state(double p, int d, double tol, const ShootingOptions &opts = {});

/// (1/2 - 1/p) ||U||^2_{H^1}.
double m_infinity(const RadialProfile &profile);

/// Linear interpolation of the table, exponential tail beyond R_max.
double eval_profile(const RadialProfile &profile, double s);

/// Surface area of the unit sphere S^(d-1) (2 for d = 1).
double sphere_area(int d);

void export_profile_csv(const RadialProfile &profile, const std::filesystem::path &path);
void export_profile_json(const RadialProfile &profile, const std::filesystem::path &path);

}  // namespace sms

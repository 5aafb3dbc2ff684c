// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sms/functional.hpp"
#include "sms/groundstate.hpp"

namespace sms
{

struct DescentOptions
{
  double grad_tol = 1e-6;     // on ||tangent gradient||_eps / ||u||_eps
  double nehari_tol = 1e-9;   // on |N(u)| / ||u||_eps^2
  int max_iter = 2000;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo_c = 1e-4;
  double step_floor = 1e-8;
  // Quasi-Newton memory for the tangent direction; 0 gives plain projected
  // steepest descent.
  int memory = 8;
  // Relative slack in the sufficient-decrease test covering the round-off of
  // energy evaluations (CG tolerances cap how precisely I can be compared).
  double energy_noise = 1e-12;

  void validate() const;
};

struct TraceEntry
{
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;  // tangent gradient, relative to ||u||_eps
  double step = 0.0;
};

struct SolveReport
{
  Field solution;
  EnergyBreakdown energy;
  double grad_norm = 0.0;          // ||g||_eps (full Sobolev gradient)
  double tangent_grad_norm = 0.0;  // ||g_T||_eps
  double norm = 0.0;               // ||u||_eps
  double nehari_abs = 0.0;         // |N(u)|
  int iterations = 0;
  Point barycenter{};
  double min_value = 0.0;
  double max_value = 0.0;
  double ray_hessian = 0.0;  // <H u, u>_eps
  bool converged = false;
  double wall_seconds = 0.0;
  std::string message;
  std::vector<TraceEntry> trace;
};

/// Unique t > 0 with A + G t^2 = B t^(p-2). Requires A > 0, G >= 0, B > 0,
/// p > 4.
double project_t(double A, double G, double B, double p);

/// Scale t_eps(w) placing t w on the Nehari set.
double nehari_scale(Functional &fn, const Field &w);

/// t_eps(w) w. Throws Error(InvalidArgument) when w+ vanishes.
Field retract(Functional &fn, const Field &w, double *scale = nullptr);
Field retract(const Field &w, const Params &params, const CgOptions &cg = {});

/// Retraction-based descent on the Nehari set from u0. Non-convergence is
/// reported through SolveReport::converged, never thrown.
SolveReport solve_critical(Functional &fn, const Field &u0, const DescentOptions &opts = {});

/// Fills the diagnostic fields of a report for a given field.
void finalize_report(Functional &fn, SolveReport &report);

struct MEpsEstimate
{
  double m_eps = 0.0;
  std::vector<Point> seeds;
  std::vector<SolveReport> reports;
};

/// Runs solve_critical from the photography of every seed and keeps the
/// lowest converged energy. Throws Error(NotConverged) when no seed converges.
MEpsEstimate estimate_m_eps(Functional &fn, const RadialProfile &profile, GridPtr grid,
                            const std::vector<Point> &seeds, const DescentOptions &opts = {});

/// True when two solutions count as different: relative L2 distance > 0.1 or
/// barycentres further apart than r/2.
bool distinct_solutions(const SolveReport &a, const SolveReport &b, double r);

}  // namespace sms

// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/nehari.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "sms/topo.hpp"

namespace sms
{

void DescentOptions::validate() const
{
  if (!(grad_tol > 0.0 && nehari_tol > 0.0 && initial_step > 0.0 && armijo_c > 0.0 &&
        step_floor > 0.0 && energy_noise >= 0.0) ||
      max_iter < 1 || memory < 0)
  {
    throw Error(ErrorCode::InvalidArgument, "descent options must be positive");
  }
  if (!(backtrack > 0.0 && backtrack < 1.0))
  {
    throw Error(ErrorCode::InvalidArgument, "backtracking factor must lie in (0,1)");
  }
}

double project_t(double A, double G, double B, double p)
{
  if (!(B > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "cannot project onto the Nehari set: positive part vanishes");
  }
  if (!(A > 0.0) || !(G >= 0.0) || !(p > 4.0))
  {
    throw Error(ErrorCode::InvalidArgument, "project_t requires A > 0, G >= 0, p > 4");
  }
  // f(t)/t^2 = B t^(p-4) - G - A/t^2 is strictly increasing, so f has one
  // positive root.
  const auto f = [&](double t) { return B * std::pow(t, p - 2.0) - G * t * t - A; };
  double lo = 0.0, hi = 1.0;
  while (f(hi) <= 0.0)
  {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e150)
    {
      throw Error(ErrorCode::NotConverged, "Nehari scale bracket not found");
    }
  }
  while (hi - lo > 1e-12 * hi)
  {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int k = 0; k < 4; ++k)
  {
    const double df = (p - 2.0) * B * std::pow(t, p - 3.0) - 2.0 * G * t;
    if (df <= 0.0)
    {
      break;
    }
    const double next = t - f(t) / df;
    if (!(next > lo && next < hi))
    {
      break;
    }
    t = next;
  }
  // H''(t) = A + 3 G t^2 - (p-1) B t^(p-2) must be negative at the root.
  const double h2 = A + 3.0 * G * t * t - (p - 1.0) * B * std::pow(t, p - 2.0);
  if (!(h2 < 0.0))
  {
    throw Error(ErrorCode::NotConverged, "Nehari scale is not a maximum along the ray");
  }
  return t;
}

double nehari_scale(Functional &fn, const Field &w)
{
  const RayCoefficients c = fn.ray(w);
  if (!(c.lp_power > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "u+ vanishes: field cannot be projected onto the Nehari set");
  }
  return project_t(c.norm_sq, c.coupling, c.lp_power, fn.params().p);
}

Field retract(Functional &fn, const Field &w, double *scale)
{
  const double t = nehari_scale(fn, w);
  Field u = t * w;
  if (fn.params().omega != 0.0)
  {
    fn.remember_scaled_psi(w, t, u);
  }
  if (scale)
  {
    *scale = t;
  }
  return u;
}

Field retract(const Field &w, const Params &params, const CgOptions &cg)
{
  Functional fn(params, cg);
  return retract(fn, w);
}

namespace
{

struct CurvaturePair
{
  Field s, y;
  double sy;
};

Field project_tangent(const Field &v, const Field &normal, double normal_sq, const Params &params)
{
  Field out = v;
  out.axpy(-inner_h1_eps(v, normal, params) / normal_sq, normal);
  return out;
}

bool has_positive_part(const Field &w)
{
  for (double v : w.values())
  {
    if (v > 0.0)
    {
      return true;
    }
  }
  return false;
}

}  // namespace

void finalize_report(Functional &fn, SolveReport &report)
{
  const Params &params = fn.params();
  const Field &u = report.solution;
  report.energy = fn.energy(u);
  report.norm = norm_h1_eps(u, params);
  report.nehari_abs = std::abs(fn.nehari_residual(u));
  auto [g, n] = fn.gradient_and_normal(u);
  report.grad_norm = norm_h1_eps(g, params);
  const double nn = inner_h1_eps(n, n, params);
  report.tangent_grad_norm = norm_h1_eps(project_tangent(g, n, nn, params), params);
  report.min_value = min_value(u);
  report.max_value = max_value(u);
  report.barycenter = barycenter(u, params.p);
  report.ray_hessian = inner_h1_eps(fn.hess_vec(u, u), u, params);
}

SolveReport solve_critical(Functional &fn, const Field &u0, const DescentOptions &opts)
{
  opts.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const Params &params = fn.params();
  if (!has_positive_part(u0))
  {
    throw Error(ErrorCode::InvalidArgument, "u+ vanishes: initial field has no positive part");
  }

  SolveReport report;
  Field u = retract(fn, u0);
  double energy = fn.energy(u).total;
  std::deque<CurvaturePair> memory;
  std::optional<Field> prev_u, prev_gt;

  int iter = 0;
  bool converged = false;
  for (;; ++iter)
  {
    auto [g, normal] = fn.gradient_and_normal(u);
    const double nn = inner_h1_eps(normal, normal, params);
    const Field gt = project_tangent(g, normal, nn, params);
    const double unorm = norm_h1_eps(u, params);
    const double gnorm = norm_h1_eps(gt, params);
    const double nehari = std::abs(fn.nehari_residual(u));

    if (prev_u)
    {
      Field s = project_tangent(u - *prev_u, normal, nn, params);
      Field y = project_tangent(gt - *prev_gt, normal, nn, params);
      const double sy = inner_h1_eps(s, y, params);
      if (sy > 1e-14 * inner_h1_eps(s, s, params) && opts.memory > 0)
      {
        memory.push_back({std::move(s), std::move(y), sy});
        if (memory.size() > static_cast<std::size_t>(opts.memory))
        {
          memory.pop_front();
        }
      }
    }

    const double rel = gnorm / unorm;
    report.trace.push_back({iter, energy, rel, 0.0});
    if (rel <= opts.grad_tol && nehari <= opts.nehari_tol * unorm * unorm)
    {
      converged = true;
      break;
    }
    if (iter >= opts.max_iter)
    {
      report.message = fmt::format("iteration limit {} reached", opts.max_iter);
      break;
    }

    // Two-loop recursion in the eps inner product.
    Field dir = gt;
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;)
    {
      alpha[k] = inner_h1_eps(memory[k].s, dir, params) / memory[k].sy;
      dir.axpy(-alpha[k], memory[k].y);
    }
    if (!memory.empty())
    {
      const auto &last = memory.back();
      dir *= last.sy / inner_h1_eps(last.y, last.y, params);
    }
    for (std::size_t k = 0; k < memory.size(); ++k)
    {
      const double beta = inner_h1_eps(memory[k].y, dir, params) / memory[k].sy;
      dir.axpy(alpha[k] - beta, memory[k].s);
    }
    dir = project_tangent(dir, normal, nn, params);
    dir *= -1.0;
    double slope = inner_h1_eps(gt, dir, params);
    if (!(slope < 0.0))
    {
      memory.clear();
      dir = -1.0 * gt;
      slope = -gnorm * gnorm;
    }

    double step = opts.initial_step;
    bool accepted = false;
    bool fallback = memory.empty();
    Field trial;
    double trial_energy = 0.0;
    while (!accepted)
    {
      Field w = u;
      w.axpy(step, dir);
      if (has_positive_part(w))
      {
        trial = retract(fn, w);
        trial_energy = fn.energy(trial).total;
        if (trial_energy <= energy + opts.armijo_c * step * slope + opts.energy_noise * std::abs(energy))
        {
          accepted = true;
          break;
        }
      }
      step *= opts.backtrack;
      if (step < opts.step_floor)
      {
        if (fallback)
        {
          break;
        }
        // Quasi-Newton direction failed: restart from steepest descent.
        memory.clear();
        fallback = true;
        dir = -1.0 * gt;
        slope = -gnorm * gnorm;
        step = opts.initial_step;
      }
    }
    if (!accepted)
    {
      report.message = "step floor reached in line search";
      break;
    }
    report.trace.back().step = step;
    prev_u = u;
    prev_gt = gt;
    u = std::move(trial);
    energy = trial_energy;
  }

  report.solution = std::move(u);
  report.iterations = iter;
  finalize_report(fn, report);
  report.converged = converged;
  if (converged && report.min_value < -1e-8 * report.max_value)
  {
    report.converged = false;
    report.message = "converged field has a significant negative part";
  }
  if (converged && !(report.energy.total > 0.0))
  {
    report.converged = false;
    report.message = "converged field has nonpositive energy";
  }
  if (report.converged && report.message.empty())
  {
    report.message = "converged";
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

MEpsEstimate estimate_m_eps(Functional &fn, const RadialProfile &profile, GridPtr grid,
                            const std::vector<Point> &seeds, const DescentOptions &opts)
{
  MEpsEstimate out;
  out.m_eps = std::numeric_limits<double>::infinity();
  for (const Point &xi : seeds)
  {
    const Field u0 = photography(xi, profile, fn, grid);
    SolveReport rep = solve_critical(fn, u0, opts);
    if (rep.converged)
    {
      out.m_eps = std::min(out.m_eps, rep.energy.total);
    }
    out.seeds.push_back(xi);
    out.reports.push_back(std::move(rep));
  }
  if (!std::isfinite(out.m_eps))
  {
    throw Error(ErrorCode::NotConverged, "no seed converged to a critical point");
  }
  return out;
}

bool distinct_solutions(const SolveReport &a, const SolveReport &b, double r)
{
  require_same_grid(a.solution, b.solution);
  const double diff = lattice_norm(a.solution - b.solution);
  const double scale = std::max(lattice_norm(a.solution), lattice_norm(b.solution));
  const double rel = scale > 0.0 ? diff / scale : 0.0;
  return rel > 0.1 || distance(a.barycenter, b.barycenter) > 0.5 * r;
}

}  // namespace sms

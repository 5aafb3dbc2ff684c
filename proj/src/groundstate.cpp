// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/groundstate.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "sms/types.hpp"

namespace sms
{

namespace
{

enum class Shot
{
  Undershoot,
  Overshoot,
};

struct State
{
  double u, v;
};

struct RadialOde
{
  int d;
  double p;

  State rhs(double r, const State &s) const
  {
    const double nl = std::pow(std::abs(s.u), p - 2.0) * s.u;
    return {s.v, -(d - 1) / r * s.v + s.u - nl};
  }

  // Series start U(r) = U0 + (U0 - U0^(p-1)) r^2 / (2d) avoids the 1/r term.
  State start(double u0, double dr) const
  {
    const double c = (u0 - std::pow(u0, p - 1.0)) / d;
    return {u0 + 0.5 * c * dr * dr, c * dr};
  }

  State step(double r, const State &s, double dr) const
  {
    const State k1 = rhs(r, s);
    const State k2 = rhs(r + 0.5 * dr, {s.u + 0.5 * dr * k1.u, s.v + 0.5 * dr * k1.v});
    const State k3 = rhs(r + 0.5 * dr, {s.u + 0.5 * dr * k2.u, s.v + 0.5 * dr * k2.v});
    const State k4 = rhs(r + dr, {s.u + dr * k3.u, s.v + dr * k3.v});
    return {s.u + dr / 6.0 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
            s.v + dr / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
  }

  Shot classify(double u0, double dr, double r_limit) const
  {
    State s = start(u0, dr);
    if (s.v >= 0.0)
    {
      return Shot::Undershoot;
    }
    double r = dr;
    while (r < r_limit)
    {
      s = step(r, s, dr);
      r += dr;
      if (s.u <= 0.0)
      {
        return Shot::Overshoot;
      }
      if (s.v >= 0.0)
      {
        return Shot::Undershoot;
      }
    }
    // Still on the separatrix to within double precision: call it an
    // undershoot so that the bracket keeps shrinking.
    return Shot::Undershoot;
  }

  std::vector<State> trajectory(double u0, double dr, double r_limit) const
  {
    std::vector<State> out;
    out.push_back({u0, 0.0});
    State s = start(u0, dr);
    out.push_back(s);
    double r = dr;
    while (r < r_limit && s.u > 0.0 && s.v < 0.0)
    {
      s = step(r, s, dr);
      r += dr;
      out.push_back(s);
    }
    return out;
  }
};

// Composite Simpson on a uniform table (trapezoid on a trailing odd interval).
template <class F>
double simpson(std::size_t n_points, double dr, F &&f)
{
  if (n_points < 2)
  {
    return 0.0;
  }
  const std::size_t intervals = n_points - 1;
  const std::size_t even = intervals - intervals % 2;
  double s = 0.0;
  for (std::size_t k = 0; k + 2 <= even; k += 2)
  {
    s += f(k) + 4.0 * f(k + 1) + f(k + 2);
  }
  s *= dr / 3.0;
  if (even < intervals)
  {
    s += 0.5 * dr * (f(even) + f(even + 1));
  }
  return s;
}

}  // namespace

double sphere_area(int d)
{
  switch (d)
  {
    case 1:
      return 2.0;
    case 2:
      return 2.0 * std::numbers::pi;
    case 3:
      return 4.0 * std::numbers::pi;
    default:
      throw Error(ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
  }
}

RadialProfile shoot_ground_state(double p, int d, double tol, const ShootingOptions &opts)
{
  if (!(p > 4.0 && p < 6.0))
  {
    throw Error(ErrorCode::InvalidArgument, "p out of range (4,6)");
  }
  if (d < 1 || d > 3)
  {
    throw Error(ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
  }
  if (!(tol > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "shooting tolerance must be positive");
  }
  const RadialOde ode{d, p};
  const double dr = opts.dr;
  const double classify_limit = 2.0 * opts.r_cap;

  // U0 <= 1 bends upward immediately; grow the upper end until it overshoots.
  double lo = 1.0, hi = 2.0;
  int guard = 0;
  while (ode.classify(hi, dr, classify_limit) != Shot::Overshoot)
  {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60)
    {
      throw Error(ErrorCode::NotConverged, "shooting bracket not found");
    }
  }
  int iterations = 0;
  while (iterations < opts.max_bisections)
  {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
    {
      break;
    }
    (ode.classify(mid, dr, classify_limit) == Shot::Overshoot ? hi : lo) = mid;
    ++iterations;
  }
  if (hi - lo > tol * hi)
  {
    throw Error(ErrorCode::NotConverged,
                fmt::format("shooting bracket {} wider than tolerance after {} bisections", hi - lo,
                            iterations));
  }

  // Tabulate the undershoot trajectory until it drops below the floor, leaves
  // the overshoot trajectory, or reaches the cap.
  const auto lower = ode.trajectory(lo, dr, opts.r_cap);
  const auto upper = ode.trajectory(hi, dr, opts.r_cap);
  const std::size_t common = std::min(lower.size(), upper.size());
  std::size_t last = 1;
  for (std::size_t k = 1; k < common; ++k)
  {
    const double u = lower[k].u;
    if (u <= 0.0 || lower[k].v >= 0.0)
    {
      break;
    }
    last = k;
    if (u < opts.floor_value || std::abs(lower[k].u - upper[k].u) > 1e-7 * u)
    {
      break;
    }
  }

  RadialProfile prof;
  prof.dim = d;
  prof.p = p;
  prof.dr = dr;
  prof.u0 = lo;
  prof.samples.reserve(last + 1);
  prof.derivatives.reserve(last + 1);
  for (std::size_t k = 0; k <= last; ++k)
  {
    prof.samples.push_back(lower[k].u);
    prof.derivatives.push_back(lower[k].v);
  }
  prof.r_max = static_cast<double>(last) * dr;

  // Tail: regress log(r^((d-1)/2) U) on r over the last decade of values.
  const double u_end = prof.samples.back();
  const double half_d = 0.5 * (d - 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t k = last; k > 0 && prof.samples[k] <= 10.0 * u_end; --k)
  {
    const double r = static_cast<double>(k) * dr;
    const double y = std::log(std::pow(r, half_d) * prof.samples[k]);
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += r * y;
    ++count;
  }
  if (count >= 2 && sxx * count - sx * sx > 0.0)
  {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    prof.decay_a = -slope;
  }
  if (!(prof.decay_a > 0.0))
  {
    prof.decay_a = 1.0;
  }
  // Pin c so that the tail meets the table exactly at R_max.
  prof.decay_c = u_end * std::pow(prof.r_max, half_d) * std::exp(prof.decay_a * prof.r_max);

  const double area = sphere_area(d);
  const auto radial_weight = [&](std::size_t k)
  { return d == 1 ? 1.0 : std::pow(static_cast<double>(k) * dr, d - 1); };
  const std::size_t n = prof.samples.size();
  const double h1_table = simpson(n, dr,
                                  [&](std::size_t k)
                                  {
                                    const double u = prof.samples[k], v = prof.derivatives[k];
                                    return (u * u + v * v) * radial_weight(k);
                                  });
  const double lp_table = simpson(n, dr,
                                  [&](std::size_t k)
                                  { return std::pow(prof.samples[k], p) * radial_weight(k); });
  // Leading-order tail integrals of the fitted asymptote.
  const double a = prof.decay_a, c = prof.decay_c, R = prof.r_max;
  const double e2 = std::exp(-2.0 * a * R);
  const double h1_tail = c * c * e2 / (2.0 * a) * (1.0 + a * a);
  const double lp_tail =
      std::pow(c, p) * std::pow(R, (d - 1) * (1.0 - 0.5 * p)) * std::exp(-p * a * R) / (p * a);
  prof.h1_norm_sq = area * (h1_table + h1_tail);
  prof.lp_power = area * (lp_table + lp_tail);
  prof.m_inf = (0.5 - 1.0 / p) * prof.h1_norm_sq;

  if (prof.nehari_residual() > 1e-6)
  {
    throw Error(ErrorCode::NotConverged,
                fmt::format("ground state fails the Nehari identity (residual {:.3e})",
                            prof.nehari_residual()));
  }
  return prof;
}

double m_infinity(const RadialProfile &profile)
{
  return (0.5 - 1.0 / profile.p) * profile.h1_norm_sq;
}

double eval_profile(const RadialProfile &profile, double s)
{
  if (s < 0.0)
  {
    throw Error(ErrorCode::InvalidArgument, "profile radius must be nonnegative");
  }
  if (s >= profile.r_max)
  {
    const double half_d = 0.5 * (profile.dim - 1);
    return profile.decay_c * std::pow(s, -half_d) * std::exp(-profile.decay_a * s);
  }
  const double x = s / profile.dr;
  const auto k = static_cast<std::size_t>(x);
  if (k + 1 >= profile.samples.size())
  {
    return profile.samples.back();
  }
  const double w = x - static_cast<double>(k);
  return (1.0 - w) * profile.samples[k] + w * profile.samples[k + 1];
}

void export_profile_csv(const RadialProfile &profile, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << "r,U\n";
  for (std::size_t k = 0; k < profile.samples.size(); ++k)
  {
    out << fmt::format("{:.17g},{:.17g}\n", static_cast<double>(k) * profile.dr, profile.samples[k]);
  }
}

void export_profile_json(const RadialProfile &profile, const std::filesystem::path &path)
{
  nlohmann::json j;
  j["d"] = profile.dim;
  j["p"] = profile.p;
  j["U0"] = profile.u0;
  j["mh1sq"] = profile.h1_norm_sq;
  j["lpp"] = profile.lp_power;
  j["m_inf"] = profile.m_inf;
  j["decay_c"] = profile.decay_c;
  j["decay_a"] = profile.decay_a;
  j["r_max"] = profile.r_max;
  j["dr"] = profile.dr;
  j["nehari_residual"] = profile.nehari_residual();
  std::ofstream out(path);
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << j.dump(2) << '\n';
}

}  // namespace sms

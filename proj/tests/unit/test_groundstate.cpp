// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>

#include "sms/groundstate.hpp"
#include "sms/types.hpp"

using namespace sms;

namespace
{

double soliton_1d(double x)
{
  return std::cbrt(2.5) * std::pow(1.0 / std::cosh(1.5 * x), 2.0 / 3.0);
}

// Independent shooter: RK4 with its own step, its own series start and its
// own overshoot/undershoot bisection.
double oracle_u0(double p, int d, double dr)
{
  auto rhs = [&](double r, const std::array<double, 2> &y)
  {
    const double up = std::max(y[0], 0.0);
    return std::array<double, 2>{y[1], -(d - 1) / r * y[1] + y[0] - std::pow(up, p - 1.0)};
  };
  // +1 overshoot (U crosses zero), -1 undershoot (U' turns positive).
  auto classify = [&](double u0)
  {
    const double c = (u0 - std::pow(u0, p - 1.0)) / (2.0 * d);
    double r = dr;
    std::array<double, 2> y{u0 + c * r * r, 2.0 * c * r};
    while (r < 40.0)
    {
      const auto k1 = rhs(r, y);
      std::array<double, 2> t{y[0] + 0.5 * dr * k1[0], y[1] + 0.5 * dr * k1[1]};
      const auto k2 = rhs(r + 0.5 * dr, t);
      t = {y[0] + 0.5 * dr * k2[0], y[1] + 0.5 * dr * k2[1]};
      const auto k3 = rhs(r + 0.5 * dr, t);
      t = {y[0] + dr * k3[0], y[1] + dr * k3[1]};
      const auto k4 = rhs(r + dr, t);
      y[0] += dr / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
      y[1] += dr / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
      r += dr;
      if (y[0] < 0.0)
      {
        return 1;
      }
      if (y[1] > 0.0)
      {
        return -1;
      }
    }
    return -1;
  };
  double lo = 1.0, hi = 20.0;
  for (int k = 0; k < 60; ++k)
  {
    const double mid = 0.5 * (lo + hi);
    (classify(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("groundstate")
{
  TEST_CASE("one-dimensional soliton")
  {
    const RadialProfile prof = shoot_ground_state(5.0, 1, 1e-12);
    CHECK(std::abs(prof.u0 - std::cbrt(2.5)) < 1e-5);
    double worst = 0.0;
    for (double x = 0.0; x <= 10.0; x += 0.01)
    {
      worst = std::max(worst, std::abs(eval_profile(prof, x) - soliton_1d(x)) / soliton_1d(x));
    }
    CHECK(worst <= 1e-5);
  }

  TEST_CASE("one-dimensional m_inf against quadrature of the closed form")
  {
    // U' = -U tanh(3x/2); Simpson on [0, 30] of U'^2 + U^2, doubled.
    const int n = 60000;
    const double L = 30.0, dx = L / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i)
    {
      const double x = i * dx;
      const double u = soliton_1d(x), du = -u * std::tanh(1.5 * x);
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * (du * du + u * u);
    }
    const double h1 = 2.0 * s * dx / 3.0;
    const RadialProfile prof = shoot_ground_state(5.0, 1, 1e-12);
    CHECK(std::abs(prof.h1_norm_sq - h1) / h1 < 1e-6);
    CHECK(std::abs(m_infinity(prof) - 0.3 * h1) / (0.3 * h1) < 1e-6);
  }

  TEST_CASE("three-dimensional profile against an independent fine-step shooter")
  {
    const RadialProfile prof = shoot_ground_state(5.0, 3, 1e-12);
    CHECK(prof.nehari_residual() <= 1e-6);
    const double ref = oracle_u0(5.0, 3, 1e-4);
    CHECK(std::abs(prof.u0 - ref) / ref < 1e-6);
    CHECK(prof.m_inf > 0.0);
    CHECK(std::abs(prof.m_inf - 0.3 * prof.lp_power) / prof.m_inf < 1e-6);
  }

  TEST_CASE("two-dimensional profile")
  {
    const RadialProfile prof = shoot_ground_state(4.5, 2, 1e-12);
    CHECK(prof.nehari_residual() <= 1e-6);
    const double ref = oracle_u0(4.5, 2, 1e-4);
    CHECK(std::abs(prof.u0 - ref) / ref < 1e-6);
  }

  TEST_CASE("exponent range is enforced")
  {
    CHECK_THROWS_WITH_AS(shoot_ground_state(6.5, 3, 1e-12), "p out of range (4,6)", Error);
    CHECK_THROWS_AS(shoot_ground_state(4.0, 3, 1e-12), Error);
    CHECK_THROWS_AS(shoot_ground_state(5.0, 3, -1.0), Error);
  }

  TEST_CASE("interpolation, splice and monotonicity")
  {
    const RadialProfile prof = shoot_ground_state(5.0, 3, 1e-12);
    CHECK(eval_profile(prof, 0.0) == prof.u0);
    const double table = prof.samples.back();
    const double tail = prof.decay_c * std::pow(prof.r_max, -1.0) * std::exp(-prof.decay_a * prof.r_max);
    CHECK(std::abs(table - tail) / table < 1e-6);
    CHECK(std::abs(eval_profile(prof, prof.r_max * (1 + 1e-12)) - table) / table < 1e-6);
    double prev = eval_profile(prof, 0.0);
    for (double s = 0.01; s < 30.0; s += 0.01)
    {
      const double v = eval_profile(prof, s);
      REQUIRE(v < prev);
      REQUIRE(v > 0.0);
      prev = v;
    }
    CHECK(prof.decay_a == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("shooting is deterministic")
  {
    const RadialProfile a = shoot_ground_state(5.0, 3, 1e-12);
    const RadialProfile b = shoot_ground_state(5.0, 3, 1e-12);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(double)) == 0);
    CHECK(a.m_inf == b.m_inf);
  }

  TEST_CASE("sphere areas")
  {
    CHECK(sphere_area(1) == 2.0);
    CHECK(sphere_area(2) == doctest::Approx(2.0 * M_PI));
    CHECK(sphere_area(3) == doctest::Approx(4.0 * M_PI));
  }
}

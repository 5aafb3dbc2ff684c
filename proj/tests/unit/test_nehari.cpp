// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "helpers.hpp"
#include "sms/groundstate.hpp"
#include "sms/nehari.hpp"
#include "sms/topo.hpp"

using namespace sms;

namespace
{

double cubic_root_oracle()
{
  // t^3 - t^2 - 1 on [1, 2].
  double lo = 1.0, hi = 2.0;
  for (int k = 0; k < 200; ++k)
  {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid - mid * mid - 1.0 > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

const RadialProfile &profile3()
{
  static const RadialProfile prof = shoot_ground_state(5.0, 3, 1e-12);
  return prof;
}

}  // namespace

TEST_SUITE("nehari")
{
  TEST_CASE("scalar projection")
  {
    CHECK(std::abs(project_t(1, 0, 1, 5) - 1.0) <= 1e-12);
    CHECK(std::abs(project_t(2, 0, 1, 5) - std::cbrt(2.0)) <= 1e-12 * std::cbrt(2.0));
    CHECK(std::abs(project_t(3, 0, 2, 4.5) - std::pow(1.5, 1.0 / 2.5)) <= 1e-12);
    const double oracle = cubic_root_oracle();
    CHECK(std::abs(oracle - 1.4655712) < 1e-7);
    CHECK(std::abs(project_t(1, 1, 1, 5) - oracle) <= 1e-9);
    CHECK_THROWS_AS(project_t(1, 0, 0, 5), Error);
    CHECK_THROWS_AS(project_t(0, 0, 1, 5), Error);
    CHECK_THROWS_AS(project_t(1, 0, 1, 4), Error);
  }

  TEST_CASE("retraction is idempotent and ray invariant")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.1);
    Params prm;
    prm.eps = 0.4;
    Functional fn(prm);
    Field w = test::smooth_field(g, 1, 0.3, -0.1);
    double t1 = 0.0, t2 = 0.0;
    Field u = retract(fn, w, &t1);
    CHECK(std::abs(fn.nehari_residual(u)) <= 1e-9 * fn.ray(u).norm_sq);
    Field v = retract(fn, u, &t2);
    CHECK(std::abs(t2 - 1.0) <= 1e-9);
    Field u3 = retract(fn, 3.7 * w);
    CHECK(test::rel_diff(u3, u) <= 1e-9);
    CHECK_THROWS_AS(retract(fn, -1.0 * test::smooth_field(g, 2)), Error);
  }

  TEST_CASE("photography scale near one")
  {
    const RadialProfile &prof = profile3();
    Params prm;
    prm.eps = 0.2;
    prm.r = 0.9;
    auto g = build_domain(make_ball(3, 1.0), prm.eps / 8.0);
    Functional fn(prm);
    double t = 0.0;
    photography({0, 0, 0}, prof, fn, g, &t);
    CHECK(t >= 0.9);
    CHECK(t <= 1.1);
  }

  TEST_CASE("descent from the photography seed")
  {
    const RadialProfile &prof = profile3();
    Params prm;
    prm.eps = 0.2;
    prm.r = 0.9;
    auto g = build_domain(make_ball(3, 1.0), prm.eps / 6.0);
    Functional fn(prm);
    Field u0 = photography({0, 0, 0}, prof, fn, g);
    const double e0 = fn.energy(u0).total;
    const SolveReport rep = solve_critical(fn, u0);
    REQUIRE(rep.converged);
    CHECK(rep.energy.total <= e0);
    CHECK(rep.nehari_abs <= 1e-9 * rep.norm * rep.norm);
    CHECK(rep.tangent_grad_norm <= 1e-6 * rep.norm);
    CHECK(rep.min_value >= -1e-8 * rep.max_value);
    CHECK(rep.ray_hessian < 0.0);
    for (std::size_t k = 1; k < rep.trace.size(); ++k)
    {
      REQUIRE(rep.trace[k].energy <= rep.trace[k - 1].energy * (1.0 + 1e-12));
    }
    std::size_t positive = 0;
    for (std::size_t i = 0; i < rep.solution.size(); ++i)
    {
      positive += rep.solution[i] > 0.0;
    }
    CHECK(positive >= 0.99 * rep.solution.size());
    CHECK_THROWS_AS(solve_critical(fn, -1.0 * u0), Error);
  }

  TEST_CASE("pure power limit solves the discrete equation")
  {
    const RadialProfile &prof = profile3();
    Params prm;
    prm.eps = 0.3;
    prm.r = 0.9;
    prm.omega = 0.0;
    auto g = build_domain(make_ball(3, 1.0), 0.05);
    CgOptions cg;
    cg.rel_tol = 1e-12;
    Functional fn(prm, cg);
    DescentOptions opts;
    opts.grad_tol = 1e-8;
    const SolveReport rep = solve_critical(fn, photography({0, 0, 0}, prof, fn, g), opts);
    REQUIRE(rep.converged);
    const Field &u = rep.solution;
    Field lhs = prm.eps * prm.eps * apply_laplacian(u) + u;
    Field rhs(g);
    for (std::size_t i = 0; i < u.size(); ++i)
    {
      rhs[i] = std::pow(std::max(u[i], 0.0), prm.p - 1.0);
    }
    CHECK(lattice_norm(lhs - rhs) / lattice_norm(rhs) <= 1e-5);
  }

  TEST_CASE("multi-seed estimate on a ball equals the centred one")
  {
    const RadialProfile &prof = profile3();
    Params prm;
    prm.eps = 0.3;
    prm.r = 0.6;
    auto g = build_domain(make_ball(3, 1.0), 0.05);
    Functional fn(prm);
    const MEpsEstimate one = estimate_m_eps(fn, prof, g, {{0, 0, 0}});
    Functional fn2(prm);
    const MEpsEstimate many = estimate_m_eps(fn2, prof, g, {{0, 0, 0}, {0.2, 0, 0}, {0, -0.15, 0.1}, {0, 0, 0.3}});
    CHECK(std::abs(one.m_eps - many.m_eps) <= 1e-4 * one.m_eps);
    CHECK(many.m_eps <= one.m_eps * (1.0 + 1e-12));
    for (std::size_t k = 0; k < many.seeds.size(); ++k)
    {
      Functional f(prm);
      CHECK(many.m_eps <= f.energy(photography(many.seeds[k], prof, f, g)).total);
    }
    CHECK(std::abs(m_infinity(prof) - prof.m_inf) < 1e-12 * prof.m_inf);
  }

  TEST_CASE("distinctness rule")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.1);
    SolveReport a, b;
    a.solution = test::smooth_field(g, 3);
    b.solution = a.solution;
    a.barycenter = {0, 0, 0};
    b.barycenter = {0.1, 0, 0};
    CHECK_FALSE(distinct_solutions(a, b, 0.5));
    b.barycenter = {0.3, 0, 0};
    CHECK(distinct_solutions(a, b, 0.5));
    b.barycenter = a.barycenter;
    b.solution = 1.2 * a.solution;
    CHECK(distinct_solutions(a, b, 0.5));
  }

  TEST_CASE("descent is deterministic")
  {
    const RadialProfile &prof = profile3();
    Params prm;
    prm.eps = 0.3;
    prm.r = 0.6;
    auto g = build_domain(make_ball(3, 1.0), 0.06);
    auto run = [&]
    {
      Functional fn(prm);
      return solve_critical(fn, photography({0.1, 0.05, 0}, prof, fn, g));
    };
    const SolveReport a = run(), b = run();
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k)
    {
      REQUIRE(a.trace[k].energy == b.trace[k].energy);
      REQUIRE(a.trace[k].step == b.trace[k].step);
    }
    CHECK(std::memcmp(a.solution.values().data(), b.solution.values().data(), a.solution.size() * sizeof(double)) == 0);
  }

  TEST_CASE("descent options are validated")
  {
    DescentOptions o;
    o.backtrack = 1.5;
    CHECK_THROWS_AS(o.validate(), Error);
    DescentOptions o2;
    o2.max_iter = 0;
    CHECK_THROWS_AS(o2.validate(), Error);
  }
}

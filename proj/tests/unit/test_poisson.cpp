// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "sms/poisson.hpp"

using namespace sms;
using std::numbers::pi;

TEST_SUITE("poisson")
{
  TEST_CASE("zero right-hand side")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.1);
    Field z(g);
    CHECK(lattice_norm(poisson_solve(z, {})) == 0.0);
    CHECK(lattice_norm(psi(z, Params{}, {})) == 0.0);
    CHECK(lattice_norm(istar_eps(z, Params{}, {})) == 0.0);
  }

  TEST_CASE("radial solution on the unit ball")
  {
    // Reference values from an independent sparse assembly of the same
    // staircase stencil; the boundary error is first order in h.
    struct Case
    {
      double h, centre, t_err;
    };
    Params prm;
    prm.eps = 1.0;
    double prev = 0.0;
    for (const Case c : {Case{0.04, 0.1702969068, 0.0547037006}, Case{0.02, 0.1686476667, 0.0298240226}})
    {
      auto g = build_domain(make_ball(3, 1.0), c.h);
      Field one = test::sample(g, [](const Point &) { return 1.0; });
      CgResult cert;
      Field v = poisson_solve(one, {}, &cert);
      CHECK(cert.converged);
      CHECK(cert.relative_residual <= 1e-10);
      const auto centre = static_cast<std::size_t>(g->find(g->dims()[0] / 2, g->dims()[1] / 2, g->dims()[2] / 2));
      REQUIRE(distance(g->coord(centre), {0, 0, 0}) < 1e-12);
      CHECK(v[centre] == doctest::Approx(c.centre).epsilon(1e-8));
      const double err = std::abs(v[centre] - 1.0 / 6.0) * 6.0;
      CHECK(err <= c.h);
      if (prev > 0.0)
      {
        CHECK(prev / err >= 1.6);
        CHECK(prev / err <= 2.4);
      }
      prev = err;
      const double T = g->cell_volume() * lattice_dot(one, psi(one, prm, {}));
      CHECK(T / (4.0 * pi / 45.0) - 1.0 == doctest::Approx(c.t_err).epsilon(1e-6));
    }
  }

  TEST_CASE("energy identity and certificates")
  {
    auto g = build_domain(make_shell(3, 0.4, 1.0), 0.05);
    Field rhs = test::random_field(g, 11);
    CgResult cert;
    Field v = poisson_solve(rhs, {}, &cert);
    const double lhs = lattice_dot(v, rhs), form = lattice_dot(v, apply_laplacian(v));
    CHECK(lhs >= 0.0);
    CHECK(std::abs(lhs - form) / form < 1e-9);
    Field back = apply_laplacian(v);
    CHECK(lattice_norm(back - rhs) / lattice_norm(rhs) <= 1.0001e-10);
    CHECK(cert.relative_residual <= 1e-10);
  }

  TEST_CASE("psi homogeneity, sign and derivative")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.08);
    Params prm;
    prm.q = 1.3;
    Field u = test::random_field(g, 12);
    Field p1 = psi(u, prm, {});
    Field p3 = psi(3.0 * u, prm, {});
    CHECK(test::rel_diff(p3, 9.0 * p1) <= 1e-10);
    CHECK(min_value(p1) >= -kMaxPrincipleTol);

    Field d = psi_prime_apply(u, u, prm, {});
    CHECK(test::rel_diff(d, 2.0 * p1) <= 1e-9);

    // psi is quadratic in u, so the central difference is exact.
    Field phi = test::random_field(g, 13);
    Field exact = psi_prime_apply(u, phi, prm, {});
    for (double s : {1e-3, 5e-4})
    {
      Field fd = (1.0 / (2.0 * s)) * (psi(u + s * phi, prm, {}) - psi(u - s * phi, prm, {}));
      CHECK(test::rel_diff(fd, exact) <= 1e-6);
    }
  }

  TEST_CASE("psi derivative is self-adjoint")
  {
    auto g = build_domain(make_box(3, {0, 0, 0}, {1, 1, 1}), 1.0 / 16);
    Params prm;
    Field u = test::random_field(g, 14), a = test::random_field(g, 15), b = test::random_field(g, 16);
    const double x = lattice_dot(test::times(u, a), psi_prime_apply(u, b, prm, {}));
    const double y = lattice_dot(test::times(u, b), psi_prime_apply(u, a, prm, {}));
    CHECK(std::abs(x - y) / std::abs(x) <= 1e-9);
  }

  TEST_CASE("Riesz map identity")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.08);
    Params prm;
    prm.eps = 0.3;
    const double c = g->cell_volume() / std::pow(prm.eps, 3);
    for (int s = 0; s < 4; ++s)
    {
      Field f = test::random_field(g, 20 + s), phi = test::random_field(g, 40 + s);
      Field v = istar_eps(f, prm, {});
      const double lhs = inner_h1_eps(v, phi, prm), rhs = c * lattice_dot(f, phi);
      CHECK(std::abs(lhs - rhs) / std::abs(rhs) <= 1e-9);
    }
  }

  TEST_CASE("Riesz map tends to the identity for tiny eps")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.1);
    Params prm;
    prm.eps = 1e-4;
    Field f = test::random_field(g, 30);
    CHECK(test::rel_diff(istar_eps(f, prm, {}), f) <= 1e-3);
  }

  TEST_CASE("warm start and preconditioner give the same solution")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.05);
    Params prm;
    Field u = test::smooth_field(g, 31);
    Field cold = psi(u, prm, {});
    Field guess = 0.9 * cold;
    Field warm = psi(u, prm, {}, &guess);
    CHECK(test::rel_diff(cold, warm) <= 1e-9);
    CgOptions ssor;
    ssor.preconditioner = Preconditioner::Ssor;
    CgResult cp, cn;
    Field pre = psi(u, prm, ssor, nullptr, &cp);
    psi(u, prm, {}, nullptr, &cn);
    CHECK(test::rel_diff(cold, pre) <= 1e-9);
    CHECK(cp.iterations < cn.iterations);
  }

  TEST_CASE("iteration cap is reported")
  {
    auto g = build_domain(make_ball(3, 1.0), 0.05);
    CgOptions opts;
    opts.max_iter = 2;
    Field rhs = test::random_field(g, 32);
    CHECK_THROWS_AS(poisson_solve(rhs, opts), Error);
    CgOptions bad;
    bad.rel_tol = 2.0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/poisson.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sms/parallel.hpp"

namespace sms
{

void CgOptions::validate() const
{
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
  {
    throw Error(ErrorCode::InvalidArgument, "CG tolerance must lie in (0,1)");
  }
  if (max_iter < 1)
  {
    throw Error(ErrorCode::InvalidArgument, "CG max_iter must be >= 1");
  }
  if (!(ssor_omega > 0.0 && ssor_omega < 2.0))
  {
    throw Error(ErrorCode::InvalidArgument, "SSOR relaxation must lie in (0,2)");
  }
}

void ShiftedLaplacian::apply(const Field &x, Field &y) const
{
  apply_laplacian(x, y);
  if (scale != 1.0 || shift != 0.0)
  {
    const double *xs = x.values().data();
    double *ys = y.values().data();
    parallel::for_each(x.size(), [&](std::size_t i) { ys[i] = scale * ys[i] + shift * xs[i]; });
  }
}

double ShiftedLaplacian::diagonal(const DomainGrid &g) const
{
  return scale * 2.0 * g.dim() / (g.spacing() * g.spacing()) + shift;
}

namespace
{

// Symmetric SOR sweep: z = M^{-1} r with
// M = (D/w + L) (D/w)^{-1} (D/w + U) * w / (2 - w).
void ssor_apply(const ShiftedLaplacian &op, const DomainGrid &g, double omega, const Field &r, Field &z)
{
  const std::size_t n = g.size();
  const int stencil = 2 * g.dim();
  const double off = -op.scale / (g.spacing() * g.spacing());
  const double dw = op.diagonal(g) / omega;
  const std::int32_t *nb = g.neighbor_table().data();
  const double *rv = r.values().data();
  double *zv = z.values().data();
  // Forward: (D/w + L) y = r
  for (std::size_t i = 0; i < n; ++i)
  {
    double s = rv[i];
    const std::int32_t *row = nb + i * stencil;
    for (int k = 0; k < stencil; ++k)
    {
      if (row[k] >= 0 && static_cast<std::size_t>(row[k]) < i)
      {
        s -= off * zv[row[k]];
      }
    }
    zv[i] = s / dw;
  }
  // Scale by D/w * (2 - w)/w
  const double mid = dw * (2.0 - omega) / omega;
  for (std::size_t i = 0; i < n; ++i)
  {
    zv[i] *= mid;
  }
  // Backward: (D/w + U) z = y
  for (std::size_t ii = n; ii-- > 0;)
  {
    double s = zv[ii];
    const std::int32_t *row = nb + ii * stencil;
    for (int k = 0; k < stencil; ++k)
    {
      if (row[k] >= 0 && static_cast<std::size_t>(row[k]) > ii)
      {
        s -= off * zv[row[k]];
      }
    }
    zv[ii] = s / dw;
  }
}

}  // namespace

CgResult conjugate_gradient(const ShiftedLaplacian &op, const Field &rhs, Field &x, const CgOptions &opts)
{
  opts.validate();
  require_same_grid(rhs, x);
  const DomainGrid &g = rhs.grid();
  CgResult result;
  const double bnorm = lattice_norm(rhs);
  if (bnorm == 0.0)
  {
    x *= 0.0;
    result.converged = true;
    return result;
  }
  const double target = opts.rel_tol * bnorm;
  const bool precond = opts.preconditioner == Preconditioner::Ssor;

  Field r(rhs.grid_ptr()), z(rhs.grid_ptr()), dir(rhs.grid_ptr()), ad(rhs.grid_ptr());
  const std::size_t n = rhs.size();
  int total = 0;
  // Outer loop restarts from the true residual if the recursive one drifted.
  for (int restart = 0; restart < 5; ++restart)
  {
    op.apply(x, r);
    {
      const double *b = rhs.values().data();
      double *rv = r.values().data();
      parallel::for_each(n, [&](std::size_t i) { rv[i] = b[i] - rv[i]; });
    }
    double rnorm = lattice_norm(r);
    if (rnorm <= target)
    {
      result.iterations = total;
      result.relative_residual = rnorm / bnorm;
      result.converged = true;
      return result;
    }
    if (precond)
    {
      ssor_apply(op, g, opts.ssor_omega, r, z);
    }
    else
    {
      z = r;
    }
    dir = z;
    double rz = lattice_dot(r, z);
    while (total < opts.max_iter)
    {
      op.apply(dir, ad);
      const double dad = lattice_dot(dir, ad);
      if (!(dad > 0.0))
      {
        throw Error(ErrorCode::NotConverged, "CG breakdown: operator not positive definite");
      }
      const double alpha = rz / dad;
      {
        double *xv = x.values().data();
        double *rv = r.values().data();
        const double *dv = dir.values().data();
        const double *av = ad.values().data();
        parallel::for_each(n,
                           [&](std::size_t i)
                           {
                             xv[i] += alpha * dv[i];
                             rv[i] -= alpha * av[i];
                           });
      }
      ++total;
      rnorm = lattice_norm(r);
      if (rnorm <= 0.5 * target)
      {
        break;
      }
      double rz_new;
      if (precond)
      {
        ssor_apply(op, g, opts.ssor_omega, r, z);
        rz_new = lattice_dot(r, z);
      }
      else
      {
        rz_new = rnorm * rnorm;
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      {
        double *dv = dir.values().data();
        const double *zv = precond ? z.values().data() : r.values().data();
        parallel::for_each(n, [&](std::size_t i) { dv[i] = zv[i] + beta * dv[i]; });
      }
    }
    if (total >= opts.max_iter)
    {
      break;
    }
  }
  // Certificate from the true residual.
  op.apply(x, r);
  const double *b = rhs.values().data();
  const double *rv = r.values().data();
  const double res = std::sqrt(parallel::sum(n,
                                             [&](std::size_t i)
                                             {
                                               const double e = b[i] - rv[i];
                                               return e * e;
                                             }));
  result.iterations = total;
  result.relative_residual = res / bnorm;
  result.converged = res <= target;
  if (!result.converged)
  {
    throw Error(ErrorCode::NotConverged,
                fmt::format("CG did not converge: relative residual {:.3e} after {} iterations",
                            result.relative_residual, total));
  }
  return result;
}

Field poisson_solve(const Field &rhs, const CgOptions &opts, CgResult *cert)
{
  Field x(rhs.grid_ptr());
  const CgResult res = conjugate_gradient(ShiftedLaplacian{1.0, 0.0}, rhs, x, opts);
  if (cert)
  {
    *cert = res;
  }
  return x;
}

Field psi(const Field &u, const Params &params, const CgOptions &opts, const Field *warm, CgResult *cert)
{
  Field rhs(u.grid_ptr());
  {
    const double *uv = u.values().data();
    double *rv = rhs.values().data();
    parallel::for_each(u.size(), [&](std::size_t i) { rv[i] = params.q * uv[i] * uv[i]; });
  }
  Field x = warm ? *warm : Field(u.grid_ptr());
  if (warm)
  {
    require_same_grid(u, *warm);
  }
  const CgResult res = conjugate_gradient(ShiftedLaplacian{1.0, 0.0}, rhs, x, opts);
  if (cert)
  {
    *cert = res;
  }
  const double lowest = min_value(x);
  if (lowest < -kMaxPrincipleTol)
  {
    throw Error(ErrorCode::NotConverged,
                fmt::format("psi violates the discrete maximum principle (min {:.3e})", lowest));
  }
  return x;
}

Field psi_prime_apply(const Field &u, const Field &phi, const Params &params, const CgOptions &opts,
                      CgResult *cert)
{
  require_same_grid(u, phi);
  Field rhs(u.grid_ptr());
  const double *uv = u.values().data();
  const double *pv = phi.values().data();
  double *rv = rhs.values().data();
  parallel::for_each(u.size(), [&](std::size_t i) { rv[i] = 2.0 * params.q * uv[i] * pv[i]; });
  return poisson_solve(rhs, opts, cert);
}

Field istar_eps(const Field &f, const Params &params, const CgOptions &opts, const Field *warm,
                CgResult *cert)
{
  Field x = warm ? *warm : Field(f.grid_ptr());
  if (warm)
  {
    require_same_grid(f, *warm);
  }
  const CgResult res =
      conjugate_gradient(ShiftedLaplacian{params.eps * params.eps, 1.0}, f, x, opts);
  if (cert)
  {
    *cert = res;
  }
  return x;
}

}  // namespace sms

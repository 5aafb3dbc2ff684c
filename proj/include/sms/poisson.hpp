// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sms/grid.hpp"

namespace sms
{

enum class Preconditioner
{
  None,
  Ssor,
};

struct CgOptions
{
  double rel_tol = 1e-10;
  int max_iter = 20000;
  bool deterministic = true;  // reductions are always block-ordered; kept for configs
  Preconditioner preconditioner = Preconditioner::None;
  double ssor_omega = 1.5;

  void validate() const;
};

/// Residual certificate of one solve: ||A x - b|| / ||b|| recomputed from
/// scratch after the iteration stopped.
struct CgResult
{
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// scale * (-Delta_h) + shift * I on the interior nodes of a grid.
struct ShiftedLaplacian
{
  double scale = 1.0;
  double shift = 0.0;

  void apply(const Field &x, Field &y) const;
  double diagonal(const DomainGrid &g) const;
};

/// Conjugate gradients for the SPD operator `op`. `x` holds the initial guess
/// on entry. Throws Error(NotConverged) if max_iter is reached.
CgResult conjugate_gradient(const ShiftedLaplacian &op, const Field &rhs, Field &x,
                            const CgOptions &opts);

/// Solves -Delta_h v = rhs.
Field poisson_solve(const Field &rhs, const CgOptions &opts, CgResult *cert = nullptr);

/// psi(u) solves -Delta_h psi = q u^2. `warm` (optional) is used as the
/// initial guess.
Field psi(const Field &u, const Params &params, const CgOptions &opts,
          const Field *warm = nullptr, CgResult *cert = nullptr);

/// psi'(u)[phi] solves -Delta_h v = 2 q u phi.
Field psi_prime_apply(const Field &u, const Field &phi, const Params &params,
                      const CgOptions &opts, CgResult *cert = nullptr);

/// Riesz map of the weighted L^2 pairing: (-eps^2 Delta_h + I) v = f.
Field istar_eps(const Field &f, const Params &params, const CgOptions &opts,
                const Field *warm = nullptr, CgResult *cert = nullptr);

/// Pointwise floor accepted for psi (discrete maximum principle).
inline constexpr double kMaxPrincipleTol = 1e-10;

}  // namespace sms

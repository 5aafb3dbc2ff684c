// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sms/grid.hpp"

namespace sms::test
{

// Generalised eigenvalues of the Hessian form against the eps Gram matrix,
// assembled densely from the Laplacian stencil.
inline Eigen::VectorXd dense_spectrum(const Field &u, const Params &prm)
{
  const DomainGrid &g = u.grid();
  const auto n = static_cast<Eigen::Index>(u.size());
  Eigen::MatrixXd L(n, n);
  Field e(u.grid_ptr());
  for (Eigen::Index j = 0; j < n; ++j)
  {
    e[j] = 1.0;
    const Field col = apply_laplacian(e);
    e[j] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
    {
      L(i, j) = col[i];
    }
  }
  Eigen::VectorXd uv(n), up(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    uv(i) = u[i];
    up(i) = std::pow(std::max(u[i], 0.0), prm.p - 2.0);
  }
  const Eigen::LLT<Eigen::MatrixXd> chol(L);
  const Eigen::VectorXd psi = chol.solve(prm.q * uv.cwiseProduct(uv));
  Eigen::MatrixXd A = uv.asDiagonal() * chol.solve(Eigen::MatrixXd(uv.asDiagonal()));
  A *= 2.0 * prm.q * prm.omega;
  Eigen::MatrixXd M = prm.eps * prm.eps * L;
  M.diagonal().array() += 1.0;
  A += M;
  A.diagonal() += prm.omega * psi - (prm.p - 1.0) * up;
  const double c = g.cell_volume() / std::pow(prm.eps, g.dim());
  A = (0.5 * c) * (A + A.transpose()).eval();
  M *= c;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline int dense_negative_count(const Eigen::VectorXd &ev, double degeneracy = 1e-6)
{
  const double scale = ev.cwiseAbs().maxCoeff();
  int k = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
  {
    k += ev(i) < -degeneracy * scale;
  }
  return k;
}

}  // namespace sms::test

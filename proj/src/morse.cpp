// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/morse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace sms
{

namespace
{

// Unweighted (eps^2 L + I) v; <a, v>_eps = weight * lattice_dot(a, mass(v)).
Field mass_apply(const Field &v, double eps)
{
  Field out = apply_laplacian(v);
  out *= eps * eps;
  out += v;
  return out;
}

}  // namespace

SpectrumReport lowest_spectrum(Functional &fn, const Field &u, const SpectrumOptions &opts)
{
  if (opts.count < 1 || opts.count > 12)
  {
    throw Error(ErrorCode::InvalidArgument, "spectrum count must lie in [1, 12]");
  }
  const Params &params = fn.params();
  const DomainGrid &g = u.grid();
  const double weight = g.cell_volume() / std::pow(params.eps, g.dim());
  const std::size_t n = u.size();
  const int max_dim = static_cast<int>(std::min<std::size_t>(opts.max_dim, n));
  const int k = std::min(opts.count, max_dim);

  SpectrumReport rep;
  {
    const Field hu = fn.hess_vec(u, u);
    ++rep.hess_vec_calls;
    rep.ray_rayleigh = inner_h1_eps(hu, u, params) / inner_h1_eps(u, u, params);
  }

  const auto eps_norm = [&](const Field &w) { return std::sqrt(weight * lattice_dot(w, mass_apply(w, params.eps))); };

  // Locked pairs; each Lanczos round works in their eps-orthogonal complement,
  // which recovers repeated eigenvalues that a single Krylov space misses.
  struct Pair
  {
    double lambda;
    Field y, my;
  };
  std::vector<Pair> locked;
  const auto deflate = [&](Field &w)
  {
    for (int pass = 0; pass < 2; ++pass)
    {
      for (const Pair &q : locked)
      {
        w.axpy(-weight * lattice_dot(w, q.my), q.y);
      }
    }
  };

  struct Round
  {
    std::vector<Pair> pairs;
    int basis_size = 0;
    double lambda_max = 0.0;
  };
  const auto lanczos = [&](Field v) -> Round
  {
    deflate(v);
    v *= 1.0 / eps_norm(v);
    std::vector<Field> basis, mbasis;
    std::vector<double> alpha, beta;
    Eigen::VectorXd ritz;
    Eigen::MatrixXd vecs;
    const auto solve_tridiagonal = [&]()
    {
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i)
      {
        t(i, i) = alpha[i];
        if (i + 1 < m)
        {
          t(i, i + 1) = t(i + 1, i) = beta[i];
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      ritz = es.eigenvalues();
      vecs = es.eigenvectors();
    };
    const int cap = std::min<int>(max_dim, static_cast<int>(n) - static_cast<int>(locked.size()));
    const int want = std::min(k, cap);
    while (true)
    {
      basis.push_back(v);
      mbasis.push_back(mass_apply(v, params.eps));
      const int j = static_cast<int>(basis.size()) - 1;
      Field w = fn.hess_vec(u, basis[j]);
      ++rep.hess_vec_calls;
      const double a = weight * lattice_dot(w, mbasis[j]);
      alpha.push_back(a);
      w.axpy(-a, basis[j]);
      if (j > 0)
      {
        w.axpy(-beta[j - 1], basis[j - 1]);
      }
      deflate(w);
      for (int pass = 0; pass < 2; ++pass)
      {
        for (int i = 0; i <= j; ++i)
        {
          w.axpy(-weight * lattice_dot(w, mbasis[i]), basis[i]);
        }
      }
      const double b = eps_norm(w);
      const int m = j + 1;
      const bool exhausted = m >= cap || b <= 1e-13 * std::abs(a);
      if ((m >= want && m % opts.check_every == 0) || exhausted)
      {
        solve_tridiagonal();
        bool all = m >= want;
        for (int i = 0; i < want && i < m; ++i)
        {
          if (std::abs(b * vecs(m - 1, i)) > opts.tol * std::abs(ritz(i)) + opts.tol)
          {
            all = false;
          }
        }
        if (all || exhausted)
        {
          break;
        }
      }
      beta.push_back(b);
      w *= 1.0 / b;
      v = std::move(w);
    }
    Round r;
    const int m = static_cast<int>(alpha.size());
    r.basis_size = m;
    r.lambda_max = ritz(m - 1);
    for (int i = 0; i < std::min(want, m); ++i)
    {
      Field y(u.grid_ptr());
      for (int c = 0; c < m; ++c)
      {
        y.axpy(vecs(c, i), basis[c]);
      }
      Field my = mass_apply(y, params.eps);
      r.pairs.push_back({ritz(i), std::move(y), std::move(my)});
    }
    return r;
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int round = 0; round < k; ++round)
  {
    // Start from u plus a deterministic perturbation so the ray direction and
    // the low modes are both represented.
    Field v = u;
    const double scale = (round == 0 ? 0.1 : 1.0) * max_value(u);
    for (std::size_t i = 0; i < n; ++i)
    {
      v[i] += scale * dist(rng);
    }
    if (static_cast<std::size_t>(locked.size()) >= n)
    {
      break;
    }
    Round r = lanczos(std::move(v));
    rep.basis_size += r.basis_size;
    rep.lambda_max = std::max(rep.lambda_max, r.lambda_max);
    const double kth = static_cast<int>(locked.size()) >= k ? locked[k - 1].lambda : INFINITY;
    const double bound = std::isfinite(kth) ? kth - (opts.tol * std::abs(kth) + opts.tol) : INFINITY;
    std::size_t added = 0;
    for (Pair &q : r.pairs)
    {
      if (q.lambda < bound)
      {
        locked.push_back(std::move(q));
        ++added;
      }
    }
    std::stable_sort(locked.begin(), locked.end(), [](const Pair &a, const Pair &b) { return a.lambda < b.lambda; });
    if (static_cast<int>(locked.size()) > k)
    {
      locked.resize(static_cast<std::size_t>(k));
    }
    if (added == 0)
    {
      break;
    }
  }

  const double zero_tol = opts.degeneracy * std::abs(rep.lambda_max);
  rep.converged = true;
  for (const Pair &q : locked)
  {
    Field hy = fn.hess_vec(u, q.y);
    ++rep.hess_vec_calls;
    hy.axpy(-q.lambda, q.y);
    const double res = norm_h1_eps(hy, params) / norm_h1_eps(q.y, params);
    const bool ok = res <= opts.tol * std::abs(q.lambda) + opts.tol;
    rep.eigenvalues.push_back(q.lambda);
    rep.residuals.push_back(res);
    rep.accepted.push_back(ok);
    rep.converged = rep.converged && ok;
    if (std::abs(q.lambda) < zero_tol)
    {
      ++rep.near_zero_count;
    }
    else if (q.lambda < 0.0)
    {
      ++rep.negative_count;
    }
  }
  return rep;
}

MorseSummary morse_consistency(const std::vector<MorseEntry> &entries, const DomainTopology &topology)
{
  MorseSummary s;
  s.category = topology.category;
  s.morse_target = topology.morse_lower_bound();
  // t P_t + t^2 (P_t - 1)
  const auto &b = topology.betti;
  s.target_poly.assign(b.size() + 2, 0);
  for (std::size_t k = 0; k < b.size(); ++k)
  {
    s.target_poly[k + 1] += b[k];
    if (k > 0)
    {
      s.target_poly[k + 2] += b[k];
    }
  }
  while (s.target_poly.size() > 1 && s.target_poly.back() == 0)
  {
    s.target_poly.pop_back();
  }
  if (entries.empty())
  {
    s.message = "no data";
    return s;
  }
  s.has_data = true;
  s.found = static_cast<int>(entries.size());
  int max_index = 0;
  for (const auto &e : entries)
  {
    s.indices.push_back(e.morse_index);
    max_index = std::max(max_index, e.morse_index);
  }
  std::sort(s.indices.begin(), s.indices.end());
  s.observed_poly.assign(static_cast<std::size_t>(max_index) + 1, 0);
  for (int mu : s.indices)
  {
    ++s.observed_poly[mu];
  }
  s.meets_category = s.found >= s.category;
  s.minimizers_index_one = std::all_of(s.indices.begin(), s.indices.end(), [](int mu) { return mu == 1; });
  const int ones = s.observed_poly.size() > 1 ? s.observed_poly[1] : 0;
  s.index_one_covered = ones >= s.target_poly[1];
  const int surplus = std::max(0, ones - s.target_poly[1]);
  s.message = fmt::format(
      "found {} solution(s) with indices [{}]; cat = {}; 2P1-1 target = {}; "
      "found >= {} minimizers{}; saddle search out of scope",
      s.found, fmt::join(s.indices, ","), s.category, s.morse_target, s.found,
      surplus > 0 ? fmt::format("; {} surplus index-1 point(s) attributed to t(1+t)Q(t)", surplus) : "");
  return s;
}

}  // namespace sms

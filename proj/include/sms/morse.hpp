// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sms/functional.hpp"
#include "sms/topo.hpp"

namespace sms
{

struct SpectrumOptions
{
  int count = 6;            // k lowest pairs, k <= 12
  double tol = 1e-6;        // ||H v - lambda v||_eps <= tol |lambda| + tol
  int max_dim = 160;        // Krylov basis cap
  int check_every = 10;
  double degeneracy = 1e-6; // |lambda| < degeneracy * |lambda_max| counts as near-zero
  unsigned seed = 20240601u;
};

struct SpectrumReport
{
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // explicit ||H v - lambda v||_eps
  std::vector<bool> accepted;
  int negative_count = 0;           // Morse index estimate (near-zero modes excluded)
  int near_zero_count = 0;
  double lambda_max = 0.0;          // largest Ritz value seen
  double ray_rayleigh = 0.0;        // <H u, u>_eps / <u, u>_eps
  int basis_size = 0;
  int hess_vec_calls = 0;
  bool converged = false;
};

/// Lanczos iteration on the Hessian operator in the eps inner product, with
/// full reorthogonalisation. Uses only hess_vec products.
SpectrumReport lowest_spectrum(Functional &fn, const Field &u, const SpectrumOptions &opts = {});

struct MorseEntry
{
  std::string label;
  double energy = 0.0;
  int morse_index = 0;
  int near_zero = 0;
};

struct MorseSummary
{
  bool has_data = false;
  std::vector<int> indices;           // observed multiset {mu(u)}
  std::vector<int> observed_poly;     // coefficient k = #solutions with mu = k
  std::vector<int> target_poly;       // coefficients of t P_t + t^2 (P_t - 1)
  int found = 0;
  int category = 1;
  int morse_target = 1;               // 2 P_1 - 1
  bool meets_category = false;        // found >= cat
  bool minimizers_index_one = false;  // every found solution has mu = 1
  bool index_one_covered = false;     // #(mu = 1) >= [t^1] target
  std::string message;
};

MorseSummary morse_consistency(const std::vector<MorseEntry> &entries, const DomainTopology &topology);

}  // namespace sms

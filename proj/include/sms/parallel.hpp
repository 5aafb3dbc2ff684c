// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#ifdef SMS_HAVE_OPENMP
#include <omp.h>
#endif

namespace sms::parallel
{

// Reductions sum fixed-size blocks and then combine the block partials in
// index order, so the result does not depend on the thread count.
inline constexpr std::size_t kBlock = 4096;

/// Applies the SMS_THREADS cap (if set) to the worker pool.
void configure_threads();

int thread_count();

template <class F>
void for_each(std::size_t n, F &&f)
{
#ifdef SMS_HAVE_OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
  {
    f(static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i)
  {
    f(i);
  }
#endif
}

template <class F>
double sum(std::size_t n, F &&f)
{
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
#ifdef SMS_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b)
  {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
    {
      s += f(i);
    }
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial)
  {
    total += s;
  }
  return total;
}

}  // namespace sms::parallel

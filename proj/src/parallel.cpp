// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/parallel.hpp"

#include <cstdlib>
#include <string>

namespace sms::parallel
{

void configure_threads()
{
  const char *env = std::getenv("SMS_THREADS");
  if (!env || !*env)
  {
    return;
  }
  char *end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || n < 1)
  {
    return;
  }
#ifdef SMS_HAVE_OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

int thread_count()
{
#ifdef SMS_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sms::parallel

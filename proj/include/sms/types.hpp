// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sms
{

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode
{
  InvalidArgument,
  Domain,
  NotConverged,
  Io,
  Parse,
  Acceptance,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &message)
    : std::runtime_error(message), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Point in R^d, d <= 3. Unused trailing coordinates are zero.
using Point = std::array<double, 3>;

inline double distance(const Point &a, const Point &b)
{
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Physical and semiclassical constants of the coupled system.
struct Params
{
  double eps = 0.2;    // semiclassical parameter
  double omega = 1.0;  // coupling weight
  double q = 1.0;      // charge constant
  double p = 5.0;      // nonlinearity exponent, 4 < p < 6
  double r = 0.5;      // cutoff radius for the photography map

  void validate() const;
};

}  // namespace sms

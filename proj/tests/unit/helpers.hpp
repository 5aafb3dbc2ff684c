// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "sms/grid.hpp"

namespace sms::test
{

inline Field random_field(const GridPtr &grid, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Field f(grid);
  for (std::size_t i = 0; i < f.size(); ++i)
  {
    f[i] = dist(rng);
  }
  return f;
}

template <class F>
Field sample(const GridPtr &grid, F &&f)
{
  Field out(grid);
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = f(grid->coord(i));
  }
  return out;
}

inline double rel_diff(const Field &a, const Field &b)
{
  return lattice_norm(a - b) / std::max(lattice_norm(a), lattice_norm(b));
}

inline std::filesystem::path scratch_dir(const std::string &name)
{
  auto dir = std::filesystem::temp_directory_path() / ("sms-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sms::test

namespace sms::test
{

inline Field times(const Field &a, const Field &b)
{
  Field out(a.grid_ptr());
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    out[i] = a[i] * b[i];
  }
  return out;
}

// Smooth positive-leaning field: a few random Gaussians.
inline Field smooth_field(const GridPtr &grid, std::uint64_t seed, double width = 0.35, double shift = 0.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.4, 0.4), amp(0.3, 1.5);
  std::array<Point, 3> c{};
  std::array<double, 3> a{};
  for (int k = 0; k < 3; ++k)
  {
    c[k] = {pos(rng), pos(rng), grid->dim() == 3 ? pos(rng) : 0.0};
    a[k] = amp(rng);
  }
  return sample(grid, [&](const Point &x)
                {
                  double v = shift;
                  for (int k = 0; k < 3; ++k)
                  {
                    const double s = distance(x, c[k]) / width;
                    v += a[k] * std::exp(-s * s);
                  }
                  return v;
                });
}

}  // namespace sms::test

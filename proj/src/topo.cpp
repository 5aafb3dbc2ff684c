// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/topo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <fmt/format.h>

#include "sms/mask.hpp"
#include "sms/nehari.hpp"
#include "sms/parallel.hpp"

namespace sms
{

double Cutoff::value(double s) const
{
  if (s <= 0.5 * radius)
  {
    return 1.0;
  }
  if (s >= radius)
  {
    return 0.0;
  }
  return 2.0 * (1.0 - s / radius);
}

double Cutoff::slope(double s) const
{
  return (s > 0.5 * radius && s < radius) ? -2.0 / radius : 0.0;
}

int DomainTopology::poincare_at_one() const
{
  int s = 0;
  for (int b : betti)
  {
    s += b;
  }
  return s;
}

std::string DomainTopology::poincare_string() const
{
  std::string out;
  for (std::size_t k = 0; k < betti.size(); ++k)
  {
    if (betti[k] == 0)
    {
      continue;
    }
    if (!out.empty())
    {
      out += " + ";
    }
    const std::string coef = (betti[k] == 1 && k > 0) ? "" : std::to_string(betti[k]);
    if (k == 0)
    {
      out += coef;
    }
    else if (k == 1)
    {
      out += coef + "t";
    }
    else
    {
      out += coef + "t^" + std::to_string(k);
    }
  }
  return out.empty() ? "0" : out;
}

DomainTopology topology_catalog(const DomainShape &shape)
{
  return std::visit(
      [&](const auto &g) -> DomainTopology
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball> || std::is_same_v<T, Box>)
        {
          return {1, {1}};
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          // Homotopy equivalent to S^(d-1).
          if (shape.dim == 2)
          {
            return {2, {1, 1}};
          }
          return {2, {1, 0, 1}};
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          return {2, {1, 1}};
        }
        else
        {
          throw Error(ErrorCode::InvalidArgument, "no topology entry for mask-file domains");
        }
      },
      shape.geometry);
}

Membership inner_outer_membership(const Point &x, const DomainGrid &grid, double r)
{
  const double sd = grid.shape().signed_distance(x);
  if (sd < 0.0 && -sd >= r)
  {
    return Membership::Inner;
  }
  if (sd <= r)
  {
    return Membership::Outer;
  }
  return Membership::Neither;
}

const char *to_string(Membership m)
{
  switch (m)
  {
    case Membership::Inner:
      return "inner";
    case Membership::Outer:
      return "outer";
    default:
      return "neither";
  }
}

Field sample_bump(const Point &xi, const RadialProfile &profile, const Params &params, GridPtr grid)
{
  const Cutoff chi{params.r};
  Field w(grid);
  const DomainGrid &g = *grid;
  parallel::for_each(g.size(),
                     [&](std::size_t i)
                     {
                       const double s = distance(g.coord(i), xi);
                       w[i] = s >= params.r ? 0.0 : eval_profile(profile, s / params.eps) * chi.value(s);
                     });
  return w;
}

Field photography(const Point &xi, const RadialProfile &profile, Functional &fn, GridPtr grid, double *scale)
{
  const Params &params = fn.params();
  if (profile.dim != grid->dim())
  {
    throw Error(ErrorCode::InvalidArgument, "ground-state dimension does not match the grid");
  }
  if (inner_outer_membership(xi, *grid, params.r) != Membership::Inner)
  {
    throw Error(ErrorCode::Domain,
                fmt::format("seed ({}, {}, {}) is outside the admissible inner set for r={}", xi[0],
                            xi[1], xi[2], params.r));
  }
  if (params.eps < 4.0 * grid->spacing())
  {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("eps={} too small for h={} (requires eps >= 4h)", params.eps, grid->spacing()));
  }
  const Field w = sample_bump(xi, profile, params, std::move(grid));
  if (!(lattice_norm(w) > 0.0))
  {
    throw Error(ErrorCode::Domain, "photography sampled zero mass");
  }
  return retract(fn, w, scale);
}

Point barycenter(const Field &u, double p)
{
  const DomainGrid &g = u.grid();
  const double *uv = u.values().data();
  const auto weight = [&](std::size_t i) { return uv[i] > 0.0 ? std::pow(uv[i], p) : 0.0; };
  const double mass = parallel::sum(u.size(), weight);
  if (!(mass > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "u+ vanishes: barycenter undefined");
  }
  Point b{};
  for (int a = 0; a < g.dim(); ++a)
  {
    b[a] = parallel::sum(u.size(), [&](std::size_t i) { return weight(i) * g.coord(i)[a]; }) / mass;
  }
  return b;
}

double concentration_fraction(const Field &u, double p, const Point &center, double radius)
{
  const DomainGrid &g = u.grid();
  const double *uv = u.values().data();
  const auto weight = [&](std::size_t i) { return uv[i] > 0.0 ? std::pow(uv[i], p) : 0.0; };
  const double mass = parallel::sum(u.size(), weight);
  if (!(mass > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "u+ vanishes: concentration undefined");
  }
  const double inside = parallel::sum(u.size(),
                                      [&](std::size_t i)
                                      { return distance(g.coord(i), center) < radius ? weight(i) : 0.0; });
  return std::clamp(inside / mass, 0.0, 1.0);
}

GoodPartition good_partition(const DomainGrid &grid, double eps)
{
  const double h = grid.spacing();
  if (!(eps >= 4.0 * h * (1.0 - 1e-12)))
  {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("eps={} too small for h={} (requires eps >= 4h)", eps, h));
  }
  const int d = grid.dim();
  GoodPartition part;
  part.side = eps;
  part.anchor = grid.origin();

  using Key = std::array<int, 3>;
  const auto cube_of = [&](std::size_t node)
  {
    Key k{0, 0, 0};
    const auto &idx = grid.lattice_index(node);
    for (int a = 0; a < d; ++a)
    {
      k[a] = static_cast<int>(std::floor(idx[a] * h / eps + 1e-9));
    }
    return k;
  };

  std::map<Key, std::vector<std::size_t>> cubes;
  for (std::size_t n = 0; n < grid.size(); ++n)
  {
    cubes[cube_of(n)].push_back(n);
  }

  // Union of cubes: owner[c] is the representative cube of the cell holding c.
  std::map<Key, Key> owner;
  std::map<Key, std::size_t> count;
  for (const auto &[k, nodes] : cubes)
  {
    owner[k] = k;
    count[k] = nodes.size();
  }
  const auto root = [&](Key k)
  {
    while (owner[k] != k)
    {
      k = owner[k];
    }
    return k;
  };
  const double min_nodes = std::pow(0.25 * eps / h, d);
  bool changed = true;
  while (changed)
  {
    changed = false;
    for (const auto &[k, nodes] : cubes)
    {
      const Key rk = root(k);
      if (rk != k || static_cast<double>(count[rk]) >= min_nodes)
      {
        continue;
      }
      // Collect face neighbours of every cube in this cell.
      Key best{};
      std::size_t best_count = 0;
      bool found = false;
      for (const auto &[c, _] : cubes)
      {
        if (root(c) != rk)
        {
          continue;
        }
        for (int a = 0; a < d; ++a)
        {
          for (int s = -1; s <= 1; s += 2)
          {
            Key nb = c;
            nb[a] += s;
            if (!cubes.count(nb))
            {
              continue;
            }
            const Key rn = root(nb);
            if (rn == rk)
            {
              continue;
            }
            if (!found || count[rn] > best_count || (count[rn] == best_count && rn < best))
            {
              best = rn;
              best_count = count[rn];
              found = true;
            }
          }
        }
      }
      if (found)
      {
        owner[rk] = best;
        count[best] += count[rk];
        changed = true;
      }
    }
  }

  std::map<Key, std::size_t> cell_of_root;
  for (const auto &[k, nodes] : cubes)
  {
    const Key rk = root(k);
    auto [it, inserted] = cell_of_root.emplace(rk, part.cells.size());
    if (inserted)
    {
      part.cells.emplace_back();
    }
    auto &cell = part.cells[it->second];
    cell.cubes.push_back(k);
    cell.nodes.insert(cell.nodes.end(), nodes.begin(), nodes.end());
  }
  std::vector<std::int32_t> cell_index(grid.size(), -1);
  for (std::size_t c = 0; c < part.cells.size(); ++c)
  {
    auto &cell = part.cells[c];
    std::sort(cell.nodes.begin(), cell.nodes.end());
    Point centre{};
    for (std::size_t n : cell.nodes)
    {
      const Point x = grid.coord(n);
      for (int a = 0; a < d; ++a)
      {
        centre[a] += x[a];
      }
      cell_index[n] = static_cast<std::int32_t>(c);
    }
    for (int a = 0; a < d; ++a)
    {
      centre[a] /= static_cast<double>(cell.nodes.size());
    }
    cell.center = centre;
  }

  // Overlap: number of distinct cells whose closed cubes contain a node.
  std::map<Key, std::size_t> cube_cell;
  for (std::size_t c = 0; c < part.cells.size(); ++c)
  {
    for (const auto &k : part.cells[c].cubes)
    {
      cube_cell[k] = c;
    }
  }
  int overlap = 0;
  for (std::size_t n = 0; n < grid.size(); ++n)
  {
    const auto &idx = grid.lattice_index(n);
    const Key base = cube_of(n);
    bool on_face[3] = {false, false, false};
    for (int a = 0; a < d; ++a)
    {
      const double t = idx[a] * h / eps;
      on_face[a] = std::abs(t - std::round(t)) < 1e-9;
    }
    std::vector<std::size_t> seen;
    for (int mask = 0; mask < (1 << d); ++mask)
    {
      Key k = base;
      bool valid = true;
      for (int a = 0; a < d; ++a)
      {
        if (mask & (1 << a))
        {
          if (!on_face[a])
          {
            valid = false;
            break;
          }
          k[a] -= 1;
        }
      }
      if (!valid)
      {
        continue;
      }
      if (auto it = cube_cell.find(k); it != cube_cell.end() &&
                                       std::find(seen.begin(), seen.end(), it->second) == seen.end())
      {
        seen.push_back(it->second);
      }
    }
    overlap = std::max(overlap, static_cast<int>(seen.size()));
  }
  part.overlap = overlap;

  // Inscribed radius: distance from q_j to the nearest lattice point outside
  // the cell. Circumscribed: farthest node of the cell.
  double inscribed = std::numeric_limits<double>::infinity();
  double circumscribed = 0.0;
  for (std::size_t c = 0; c < part.cells.size(); ++c)
  {
    const auto &cell = part.cells[c];
    double near = std::numeric_limits<double>::infinity();
    for (std::size_t n : cell.nodes)
    {
      circumscribed = std::max(circumscribed, distance(grid.coord(n), cell.center));
      const auto nbs = grid.neighbors(n);
      for (int k = 0; k < 2 * d; ++k)
      {
        if (nbs[k] >= 0 && cell_index[nbs[k]] == static_cast<std::int32_t>(c))
        {
          continue;
        }
        Point x = grid.coord(n);
        x[k / 2] += (k % 2 ? 1.0 : -1.0) * h;
        near = std::min(near, distance(x, cell.center));
      }
    }
    inscribed = std::min(inscribed, near);
  }
  part.inscribed = inscribed / eps;
  part.circumscribed = circumscribed;
  return part;
}

std::vector<double> cell_masses(const GoodPartition &partition, const Field &u, const Params &params)
{
  const DomainGrid &g = u.grid();
  const double weight = g.cell_volume() / std::pow(params.eps, g.dim());
  std::vector<double> out;
  out.reserve(partition.cells.size());
  for (const auto &cell : partition.cells)
  {
    double s = 0.0;
    for (std::size_t n : cell.nodes)
    {
      const double v = u[n];
      s += v > 0.0 ? std::pow(v, params.p) : 0.0;
    }
    out.push_back(weight * s);
  }
  return out;
}

std::vector<Point> admissible_seeds(const DomainShape &shape, int count)
{
  if (count < 1)
  {
    throw Error(ErrorCode::InvalidArgument, "seed count must be positive");
  }
  return std::visit(
      [&](const auto &g) -> std::vector<Point>
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          return {g.center};
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          Point c{};
          for (int a = 0; a < shape.dim; ++a)
          {
            c[a] = 0.5 * (g.lo[a] + g.hi[a]);
          }
          return {c};
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          const double rm = 0.5 * (g.inner_radius + g.outer_radius);
          std::vector<Point> out;
          if (shape.dim == 2)
          {
            for (int k = 0; k < count; ++k)
            {
              const double th = std::numbers::pi * (k % 2) + 2.0 * std::numbers::pi * (k / 2) / count;
              out.push_back({g.center[0] + rm * std::cos(th), g.center[1] + rm * std::sin(th), 0.0});
            }
            return out;
          }
          static const Point axes[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (int k = 0; k < count; ++k)
          {
            Point dir{};
            if (k < 6)
            {
              dir = axes[k];
            }
            else
            {
              // Fibonacci sphere for the remainder.
              const int m = k - 6;
              const double z = 1.0 - 2.0 * (m + 0.5) / (count - 6);
              const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
              const double phi = m * std::numbers::pi * (3.0 - std::sqrt(5.0));
              dir = {rho * std::cos(phi), rho * std::sin(phi), z};
            }
            out.push_back({g.center[0] + rm * dir[0], g.center[1] + rm * dir[1], g.center[2] + rm * dir[2]});
          }
          return out;
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          std::vector<Point> out;
          for (int k = 0; k < count; ++k)
          {
            const double th = 2.0 * std::numbers::pi * k / count;
            out.push_back({g.center[0] + g.major_radius * std::cos(th),
                           g.center[1] + g.major_radius * std::sin(th), g.center[2]});
          }
          return out;
        }
        else
        {
          auto mask = load_mask(g.path);
          // Deepest lattice node.
          Point best{};
          double depth = -1.0;
          for (int i = 0; i < mask->dims[0]; ++i)
          {
            for (int j = 0; j < mask->dims[1]; ++j)
            {
              for (int k = 0; k < mask->dims[2]; ++k)
              {
                if (!mask->inside(i, j, k))
                {
                  continue;
                }
                const Point x{mask->origin[0] + mask->h * i, mask->origin[1] + mask->h * j,
                              mask->dim == 3 ? mask->origin[2] + mask->h * k : 0.0};
                const double dd = -mask->signed_distance(x);
                if (dd > depth)
                {
                  depth = dd;
                  best = x;
                }
              }
            }
          }
          return {best};
        }
      },
      shape.geometry);
}

}  // namespace sms

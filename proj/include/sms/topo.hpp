// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "sms/functional.hpp"
#include "sms/groundstate.hpp"
#include "sms/grid.hpp"

namespace sms
{

/// chi(s) = 1 on [0, r/2], 2(1 - s/r) on (r/2, r), 0 on [r, inf).
struct Cutoff
{
  double radius = 1.0;

  double value(double s) const;
  double slope(double s) const;
};

/// Betti numbers and Lusternik-Schnirelmann category of a catalogued domain.
struct DomainTopology
{
  int category = 1;
  std::vector<int> betti;  // dim H_k, k = 0, 1, ...

  /// P_1 = sum of Betti numbers.
  int poincare_at_one() const;
  /// 2 P_1 - 1 (the Morse-theoretic count for non-degenerate problems).
  int morse_lower_bound() const { return 2 * poincare_at_one() - 1; }
  std::string poincare_string() const;
};

DomainTopology topology_catalog(const DomainShape &shape);

enum class Membership
{
  Inner,    // x in Omega and d(x, dOmega) >= r
  Outer,    // d(x, Omega) <= r, not inner
  Neither,
};

Membership inner_outer_membership(const Point &x, const DomainGrid &grid, double r);
const char *to_string(Membership m);

/// Truncated, rescaled ground state U((x - xi)/eps) chi(|x - xi|) on the grid.
Field sample_bump(const Point &xi, const RadialProfile &profile, const Params &params, GridPtr grid);

/// Photography map: sample_bump followed by the Nehari retraction. Requires xi
/// in the inner set and eps >= 4h. The scale t_eps is returned in `scale`.
Field photography(const Point &xi, const RadialProfile &profile, Functional &fn, GridPtr grid,
                  double *scale = nullptr);

/// |u+|^p-weighted centre of mass.
Point barycenter(const Field &u, double p);

/// Mass fraction of |u+|^p inside the open ball B(center, radius).
double concentration_fraction(const Field &u, double p, const Point &center, double radius);

struct PartitionCell
{
  std::vector<std::size_t> nodes;
  std::vector<std::array<int, 3>> cubes;  // cube indices merged into this cell
  Point center{};                         // centroid of the cell's nodes
};

struct GoodPartition
{
  double side = 0.0;
  Point anchor{};
  std::vector<PartitionCell> cells;
  int overlap = 0;            // max number of closed cell cubes containing a node
  double inscribed = 0.0;     // min over cells of the largest ball (in eps units) around q_j inside the cell
  double circumscribed = 0.0; // max over cells of the radius of the smallest centred ball containing it
};

GoodPartition good_partition(const DomainGrid &grid, double eps);

/// (1/eps^d) int_{P_j} |u+|^p per cell.
std::vector<double> cell_masses(const GoodPartition &partition, const Field &u, const Params &params);

/// Admissible seed points tracking the domain topology: ball -> centre,
/// shell -> mid-sphere (+-x, +-y, +-z, ...), torus -> core circle.
std::vector<Point> admissible_seeds(const DomainShape &shape, int count);

}  // namespace sms

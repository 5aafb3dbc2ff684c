// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sms/types.hpp"

namespace sms
{

struct Ball
{
  Point center{};
  double radius = 1.0;
};

struct Shell
{
  Point center{};
  double inner_radius = 0.5;
  double outer_radius = 1.0;
};

struct Box
{
  Point lo{};
  Point hi{1.0, 1.0, 1.0};
};

/// Solid torus with its symmetry axis along z.
struct SolidTorus
{
  Point center{};
  double major_radius = 1.0;
  double minor_radius = 0.3;
};

/// Lattice mask stored on disk (see read_mask_file for the format).
struct MaskFile
{
  std::string path;
};

struct DomainShape
{
  int dim = 3;
  std::variant<Ball, Shell, Box, SolidTorus, MaskFile> geometry;

  /// Throws Error(InvalidArgument) when an invariant of the variant is broken.
  void validate() const;

  /// Compact text form without whitespace, e.g. "ball:0,0,0:1". Numbers
  /// round-trip exactly.
  std::string canonical() const;
  static DomainShape parse(std::string_view text);

  /// Signed distance to the boundary, negative inside. Exact for the analytic
  /// shapes.
  double signed_distance(const Point &x) const;

  /// Radius of the largest inscribed ball.
  double inradius() const;

  /// Smallest extent across the domain (used for the resolution check).
  double narrowest_gap() const;

  bool is_mask() const { return std::holds_alternative<MaskFile>(geometry); }
};

DomainShape make_ball(int dim, double radius, Point center = {});
DomainShape make_shell(int dim, double inner, double outer, Point center = {});
DomainShape make_box(int dim, Point lo, Point hi);
DomainShape make_torus(double major, double minor, Point center = {});

/// Uniform Cartesian lattice restricted to the strict interior of a shape.
/// Nodes are ordered lexicographically by (i, j, k) with k fastest.
class DomainGrid
{
public:
  int dim() const { return dim_; }
  double spacing() const { return h_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return index_.size(); }
  const DomainShape &shape() const { return shape_; }

  /// Lattice box: node (i,j,k) sits at origin + h*(i,j,k), 0 <= i < dims[0].
  const std::array<int, 3> &dims() const { return dims_; }
  const Point &origin() const { return origin_; }

  const std::array<int, 3> &lattice_index(std::size_t n) const { return index_[n]; }
  Point coord(std::size_t n) const;

  /// Interior position of lattice node (i,j,k) or -1 when it is not interior.
  std::int64_t find(int i, int j, int k) const;

  /// 2d neighbours per node (-x,+x,-y,+y[,-z,+z]); -1 marks a Dirichlet node.
  std::span<const std::int32_t> neighbors(std::size_t n) const
  {
    return {neighbors_.data() + n * 2 * dim_, static_cast<std::size_t>(2 * dim_)};
  }
  const std::vector<std::int32_t> &neighbor_table() const { return neighbors_; }

  bool same_as(const DomainGrid &other) const;

  friend std::shared_ptr<const DomainGrid> build_domain(const DomainShape &shape, double h);

private:
  DomainGrid() = default;

  DomainShape shape_;
  int dim_ = 3;
  double h_ = 0.0;
  double cell_volume_ = 0.0;
  std::array<int, 3> dims_{1, 1, 1};
  Point origin_{};
  std::vector<std::array<int, 3>> index_;
  std::vector<std::int32_t> lookup_;
  std::vector<std::int32_t> neighbors_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

/// Builds the strict-interior lattice of `shape` with spacing h.
GridPtr build_domain(const DomainShape &shape, double h);

/// Real function on the interior nodes of a grid, zero elsewhere.
class Field
{
public:
  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const DomainGrid &grid() const { return *grid_; }
  const GridPtr &grid_ptr() const { return grid_; }

  Field &operator+=(const Field &o);
  Field &operator-=(const Field &o);
  Field &operator*=(double s);

  /// this += a * x
  void axpy(double a, const Field &x);

private:
  GridPtr grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field &b);
Field operator-(Field a, const Field &b);
Field operator*(double s, Field a);

void require_same_grid(const Field &a, const Field &b);

/// Plain lattice sum sum_i a_i b_i (no h^d weight).
double lattice_dot(const Field &a, const Field &b);
double lattice_norm(const Field &a);
double max_value(const Field &a);
double min_value(const Field &a);

/// (-Delta_h u)_i = (2d u_i - sum_neighbours u_j) / h^2 with zero Dirichlet data.
Field apply_laplacian(const Field &u);
void apply_laplacian(const Field &u, Field &out);

/// (1/eps^d) h^d (eps^2 <-Delta_h u, w> + <u, w>).
double inner_h1_eps(const Field &u, const Field &w, const Params &params);
double norm_h1_eps(const Field &u, const Params &params);

/// ((1/eps^d) h^d sum |g(u_i)|^t)^(1/t), g = identity or positive part.
double lp_norm_eps(const Field &u, double t, const Params &params, bool positive_part);

/// (1/eps^d) h^d sum (u_i^+)^t, i.e. lp_norm_eps(u,t,.,true)^t without the root.
double lp_power_eps(const Field &u, double t, const Params &params, bool positive_part);

/// Field dump: one text header line followed by little-endian doubles.
void write_field(const std::filesystem::path &path, const Field &u);

struct FieldDump
{
  int dim = 3;
  double h = 0.0;
  DomainShape shape;
  std::vector<double> values;
};

FieldDump read_field_dump(const std::filesystem::path &path);

/// Reads a dump and rebuilds its grid; throws Error(Parse) on a size mismatch.
Field read_field(const std::filesystem::path &path);

}  // namespace sms

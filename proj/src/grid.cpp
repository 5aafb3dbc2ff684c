// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "sms/mask.hpp"
#include "sms/parallel.hpp"

namespace sms
{

namespace
{

std::string format_point(const Point &x, int dim)
{
  std::string s;
  for (int a = 0; a < dim; ++a)
  {
    if (a)
    {
      s += ',';
    }
    s += fmt::format("{:.17g}", x[a]);
  }
  return s;
}

double parse_number(std::string_view text)
{
  std::string buf(text);
  char *end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v))
  {
    throw Error(ErrorCode::Parse, fmt::format("bad number '{}' in shape string", buf));
  }
  return v;
}

Point parse_point(std::string_view text, int &dim)
{
  Point x{};
  int n = 0;
  std::size_t start = 0;
  while (true)
  {
    const std::size_t comma = text.find(',', start);
    const auto tok = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    if (n >= 3)
    {
      throw Error(ErrorCode::Parse, "point with more than 3 coordinates");
    }
    x[n++] = parse_number(tok);
    if (comma == std::string_view::npos)
    {
      break;
    }
    start = comma + 1;
  }
  dim = n;
  return x;
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true)
  {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start));
    if (pos == std::string_view::npos)
    {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

double norm_of(const Point &x)
{
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

Point minus(const Point &a, const Point &b)
{
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

}  // namespace

void Params::validate() const
{
  if (!(eps > 0.0) || !(omega >= 0.0) || !(q > 0.0) || !(r > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "eps, q, r must be positive and omega nonnegative");
  }
  if (!(p > 4.0 && p < 6.0))
  {
    throw Error(ErrorCode::InvalidArgument, "p out of range (4,6)");
  }
}

DomainShape make_ball(int dim, double radius, Point center)
{
  return {dim, Ball{center, radius}};
}

DomainShape make_shell(int dim, double inner, double outer, Point center)
{
  return {dim, Shell{center, inner, outer}};
}

DomainShape make_box(int dim, Point lo, Point hi)
{
  return {dim, Box{lo, hi}};
}

DomainShape make_torus(double major, double minor, Point center)
{
  return {3, SolidTorus{center, major, minor}};
}

void DomainShape::validate() const
{
  if (dim != 2 && dim != 3)
  {
    throw Error(ErrorCode::InvalidArgument, "domain dimension must be 2 or 3");
  }
  std::visit(
      [this](const auto &g)
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          if (!(g.radius > 0.0))
          {
            throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
          }
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          if (!(g.inner_radius > 0.0 && g.inner_radius < g.outer_radius))
          {
            throw Error(ErrorCode::InvalidArgument, "shell requires 0 < R_in < R_out");
          }
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          for (int a = 0; a < dim; ++a)
          {
            if (!(g.lo[a] < g.hi[a]))
            {
              throw Error(ErrorCode::InvalidArgument, "box requires lo < hi componentwise");
            }
          }
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          if (dim != 3)
          {
            throw Error(ErrorCode::InvalidArgument, "solid torus is three-dimensional");
          }
          if (!(g.minor_radius > 0.0 && g.minor_radius < g.major_radius))
          {
            throw Error(ErrorCode::InvalidArgument, "torus requires 0 < minor_r < major_R");
          }
        }
        else
        {
          if (g.path.empty())
          {
            throw Error(ErrorCode::InvalidArgument, "mask file path is empty");
          }
        }
      },
      geometry);
}

std::string DomainShape::canonical() const
{
  return std::visit(
      [this](const auto &g) -> std::string
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          return fmt::format("ball:{}:{:.17g}", format_point(g.center, dim), g.radius);
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          return fmt::format("shell:{}:{:.17g}:{:.17g}", format_point(g.center, dim),
                             g.inner_radius, g.outer_radius);
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          return fmt::format("box:{}:{}", format_point(g.lo, dim), format_point(g.hi, dim));
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          return fmt::format("torus:{}:{:.17g}:{:.17g}", format_point(g.center, dim),
                             g.major_radius, g.minor_radius);
        }
        else
        {
          return "mask:" + g.path;
        }
      },
      geometry);
}

DomainShape DomainShape::parse(std::string_view text)
{
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
  {
    throw Error(ErrorCode::Parse, fmt::format("malformed shape string '{}'", text));
  }
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  DomainShape shape;
  if (kind == "mask")
  {
    shape.geometry = MaskFile{std::string(rest)};
    shape.dim = read_mask_header(std::string(rest)).dim;
    shape.validate();
    return shape;
  }
  const auto parts = split(rest, ':');
  int dim = 0;
  if (kind == "ball" && parts.size() == 2)
  {
    shape.geometry = Ball{parse_point(parts[0], dim), parse_number(parts[1])};
  }
  else if (kind == "shell" && parts.size() == 3)
  {
    shape.geometry = Shell{parse_point(parts[0], dim), parse_number(parts[1]), parse_number(parts[2])};
  }
  else if (kind == "box" && parts.size() == 2)
  {
    int dim_hi = 0;
    Box b{parse_point(parts[0], dim), parse_point(parts[1], dim_hi)};
    if (dim_hi != dim)
    {
      throw Error(ErrorCode::Parse, "box corners have different dimensions");
    }
    shape.geometry = b;
  }
  else if (kind == "torus" && parts.size() == 3)
  {
    shape.geometry =
        SolidTorus{parse_point(parts[0], dim), parse_number(parts[1]), parse_number(parts[2])};
  }
  else
  {
    throw Error(ErrorCode::Parse, fmt::format("malformed shape string '{}'", text));
  }
  shape.dim = dim;
  shape.validate();
  return shape;
}

double DomainShape::signed_distance(const Point &x) const
{
  return std::visit(
      [&](const auto &g) -> double
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          return norm_of(minus(x, g.center)) - g.radius;
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          const double rho = norm_of(minus(x, g.center));
          return std::max(g.inner_radius - rho, rho - g.outer_radius);
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          double outside = 0.0, inside = -std::numeric_limits<double>::infinity();
          for (int a = 0; a < dim; ++a)
          {
            const double c = 0.5 * (g.lo[a] + g.hi[a]);
            const double half = 0.5 * (g.hi[a] - g.lo[a]);
            const double q = std::abs(x[a] - c) - half;
            outside += q > 0.0 ? q * q : 0.0;
            inside = std::max(inside, q);
          }
          return outside > 0.0 ? std::sqrt(outside) : inside;
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          const Point d = minus(x, g.center);
          const double ring = std::sqrt(d[0] * d[0] + d[1] * d[1]) - g.major_radius;
          return std::sqrt(ring * ring + d[2] * d[2]) - g.minor_radius;
        }
        else
        {
          return load_mask(g.path)->signed_distance(x);
        }
      },
      geometry);
}

double DomainShape::inradius() const
{
  return std::visit(
      [this](const auto &g) -> double
      {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Ball>)
        {
          return g.radius;
        }
        else if constexpr (std::is_same_v<T, Shell>)
        {
          return 0.5 * (g.outer_radius - g.inner_radius);
        }
        else if constexpr (std::is_same_v<T, Box>)
        {
          double m = std::numeric_limits<double>::infinity();
          for (int a = 0; a < dim; ++a)
          {
            m = std::min(m, 0.5 * (g.hi[a] - g.lo[a]));
          }
          return m;
        }
        else if constexpr (std::is_same_v<T, SolidTorus>)
        {
          return g.minor_radius;
        }
        else
        {
          return load_mask(g.path)->inradius();
        }
      },
      geometry);
}

double DomainShape::narrowest_gap() const
{
  if (const auto *m = std::get_if<MaskFile>(&geometry))
  {
    return 2.0 * load_mask(m->path)->inradius();
  }
  return 2.0 * inradius();
}

Point DomainGrid::coord(std::size_t n) const
{
  const auto &idx = index_[n];
  Point x{};
  for (int a = 0; a < dim_; ++a)
  {
    x[a] = origin_[a] + h_ * idx[a];
  }
  return x;
}

std::int64_t DomainGrid::find(int i, int j, int k) const
{
  if (i < 0 || j < 0 || k < 0 || i >= dims_[0] || j >= dims_[1] || k >= dims_[2])
  {
    return -1;
  }
  return lookup_[(static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k];
}

bool DomainGrid::same_as(const DomainGrid &other) const
{
  return this == &other ||
         (dim_ == other.dim_ && h_ == other.h_ && dims_ == other.dims_ &&
          origin_ == other.origin_ && index_ == other.index_);
}

GridPtr build_domain(const DomainShape &shape, double h)
{
  shape.validate();
  if (!(h > 0.0) || !std::isfinite(h))
  {
    throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  }
  const int d = shape.dim;
  std::shared_ptr<DomainGrid> grid(new DomainGrid());
  grid->shape_ = shape;
  grid->dim_ = d;
  grid->h_ = h;
  grid->cell_volume_ = std::pow(h, d);

  std::shared_ptr<const MaskData> mask;
  if (const auto *m = std::get_if<MaskFile>(&shape.geometry))
  {
    mask = load_mask(m->path);
    if (std::abs(mask->h - h) > 1e-12 * h)
    {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("mask spacing {} does not match requested h={}", mask->h, h));
    }
    grid->dims_ = mask->dims;
    grid->origin_ = mask->origin;
  }
  else
  {
    if (shape.narrowest_gap() < 4.0 * h)
    {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("h={} too coarse for shape {} (narrowest gap {} < 4h)", h,
                              shape.canonical(), shape.narrowest_gap()));
    }
    // Lattice anchored at the shape's centre (or box corner) so that
    // symmetric shapes get symmetric node sets.
    Point anchor{};
    Point extent{};
    bool centred = true;
    std::visit(
        [&](const auto &g)
        {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, Ball>)
          {
            anchor = g.center;
            extent = {g.radius, g.radius, g.radius};
          }
          else if constexpr (std::is_same_v<T, Shell>)
          {
            anchor = g.center;
            extent = {g.outer_radius, g.outer_radius, g.outer_radius};
          }
          else if constexpr (std::is_same_v<T, SolidTorus>)
          {
            anchor = g.center;
            const double e = g.major_radius + g.minor_radius;
            extent = {e, e, g.minor_radius};
          }
          else if constexpr (std::is_same_v<T, Box>)
          {
            anchor = g.lo;
            extent = minus(g.hi, g.lo);
            centred = false;
          }
        },
        shape.geometry);
    for (int a = 0; a < d; ++a)
    {
      if (centred)
      {
        const int m = static_cast<int>(std::ceil(extent[a] / h - 1e-9));
        grid->dims_[a] = 2 * m + 1;
        grid->origin_[a] = anchor[a] - m * h;
      }
      else
      {
        grid->dims_[a] = static_cast<int>(std::floor(extent[a] / h + 1e-9)) + 1;
        grid->origin_[a] = anchor[a];
      }
    }
  }

  const auto &dims = grid->dims_;
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (total > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
  {
    throw Error(ErrorCode::InvalidArgument, "lattice too large");
  }
  grid->lookup_.assign(total, -1);
  const double strict = 1e-10 * h;
  for (int i = 0; i < dims[0]; ++i)
  {
    for (int j = 0; j < dims[1]; ++j)
    {
      for (int k = 0; k < dims[2]; ++k)
      {
        const std::size_t flat = (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
        bool inside = false;
        if (mask)
        {
          inside = mask->bits[flat] != 0;
        }
        else
        {
          Point x{};
          const int idx[3] = {i, j, k};
          for (int a = 0; a < d; ++a)
          {
            x[a] = grid->origin_[a] + h * idx[a];
          }
          inside = shape.signed_distance(x) < -strict;
        }
        if (inside)
        {
          grid->lookup_[flat] = static_cast<std::int32_t>(grid->index_.size());
          grid->index_.push_back({i, j, k});
        }
      }
    }
  }
  if (grid->index_.empty())
  {
    throw Error(ErrorCode::InvalidArgument, "domain grid has an empty interior");
  }

  const std::size_t n = grid->index_.size();
  grid->neighbors_.resize(n * 2 * d);
  for (std::size_t node = 0; node < n; ++node)
  {
    const auto idx = grid->index_[node];
    for (int a = 0; a < d; ++a)
    {
      for (int s = 0; s < 2; ++s)
      {
        auto nb = idx;
        nb[a] += s ? 1 : -1;
        grid->neighbors_[node * 2 * d + 2 * a + s] =
            static_cast<std::int32_t>(grid->find(nb[0], nb[1], nb[2]));
      }
    }
  }
  return grid;
}

Field::Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

Field::Field(GridPtr grid, std::vector<double> values)
  : grid_(std::move(grid)), values_(std::move(values))
{
  if (values_.size() != grid_->size())
  {
    throw Error(ErrorCode::InvalidArgument, "field length does not match the grid");
  }
}

void require_same_grid(const Field &a, const Field &b)
{
  if (!a.grid_ptr() || !b.grid_ptr() || !a.grid().same_as(b.grid()))
  {
    throw Error(ErrorCode::InvalidArgument, "fields live on different grids");
  }
}

Field &Field::operator+=(const Field &o)
{
  require_same_grid(*this, o);
  parallel::for_each(size(), [&](std::size_t i) { values_[i] += o.values_[i]; });
  return *this;
}

Field &Field::operator-=(const Field &o)
{
  require_same_grid(*this, o);
  parallel::for_each(size(), [&](std::size_t i) { values_[i] -= o.values_[i]; });
  return *this;
}

Field &Field::operator*=(double s)
{
  parallel::for_each(size(), [&](std::size_t i) { values_[i] *= s; });
  return *this;
}

void Field::axpy(double a, const Field &x)
{
  require_same_grid(*this, x);
  parallel::for_each(size(), [&](std::size_t i) { values_[i] += a * x.values_[i]; });
}

Field operator+(Field a, const Field &b)
{
  a += b;
  return a;
}

Field operator-(Field a, const Field &b)
{
  a -= b;
  return a;
}

Field operator*(double s, Field a)
{
  a *= s;
  return a;
}

double lattice_dot(const Field &a, const Field &b)
{
  require_same_grid(a, b);
  const double *x = a.values().data();
  const double *y = b.values().data();
  return parallel::sum(a.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

double lattice_norm(const Field &a)
{
  const double *x = a.values().data();
  return std::sqrt(parallel::sum(a.size(), [&](std::size_t i) { return x[i] * x[i]; }));
}

double max_value(const Field &a)
{
  const auto v = a.values();
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double min_value(const Field &a)
{
  const auto v = a.values();
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

void apply_laplacian(const Field &u, Field &out)
{
  require_same_grid(u, out);
  const DomainGrid &g = u.grid();
  const int stencil = 2 * g.dim();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const std::int32_t *nb = g.neighbor_table().data();
  const double *x = u.values().data();
  double *y = out.values().data();
  parallel::for_each(u.size(),
                     [&](std::size_t i)
                     {
                       const std::int32_t *row = nb + i * stencil;
                       double s = stencil * x[i];
                       for (int k = 0; k < stencil; ++k)
                       {
                         if (row[k] >= 0)
                         {
                           s -= x[row[k]];
                         }
                       }
                       y[i] = s * inv_h2;
                     });
}

Field apply_laplacian(const Field &u)
{
  Field out(u.grid_ptr());
  apply_laplacian(u, out);
  return out;
}

double inner_h1_eps(const Field &u, const Field &w, const Params &params)
{
  require_same_grid(u, w);
  const Field lu = apply_laplacian(u);
  const DomainGrid &g = u.grid();
  const double e2 = params.eps * params.eps;
  const double *a = u.values().data();
  const double *la = lu.values().data();
  const double *b = w.values().data();
  const double s = parallel::sum(u.size(), [&](std::size_t i) { return (e2 * la[i] + a[i]) * b[i]; });
  return g.cell_volume() / std::pow(params.eps, g.dim()) * s;
}

double norm_h1_eps(const Field &u, const Params &params)
{
  return std::sqrt(std::max(0.0, inner_h1_eps(u, u, params)));
}

double lp_power_eps(const Field &u, double t, const Params &params, bool positive_part)
{
  if (!(t >= 1.0))
  {
    throw Error(ErrorCode::InvalidArgument, "Lebesgue exponent must be >= 1");
  }
  const DomainGrid &g = u.grid();
  const double *x = u.values().data();
  const double s = parallel::sum(u.size(),
                                 [&](std::size_t i)
                                 {
                                   const double v = positive_part ? std::max(x[i], 0.0) : std::abs(x[i]);
                                   return v > 0.0 ? std::pow(v, t) : 0.0;
                                 });
  return g.cell_volume() / std::pow(params.eps, g.dim()) * s;
}

double lp_norm_eps(const Field &u, double t, const Params &params, bool positive_part)
{
  return std::pow(lp_power_eps(u, t, params, positive_part), 1.0 / t);
}

void write_field(const std::filesystem::path &path, const Field &u)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  }
  const DomainGrid &g = u.grid();
  out << fmt::format("SMSFIELD v1 d={} h={:.17g} shape={} n={}\n", g.dim(), g.spacing(),
                     g.shape().canonical(), u.size());
  static_assert(sizeof(double) == 8);
  for (double v : u.values())
  {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big)
    {
      bits = __builtin_bswap64(bits);
    }
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("write to '{}' failed", path.string()));
  }
}

FieldDump read_field_dump(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  }
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "SMSFIELD" || version != "v1")
  {
    throw Error(ErrorCode::Parse, fmt::format("'{}' is not an SMSFIELD v1 dump", path.string()));
  }
  FieldDump dump;
  long long n = -1;
  bool have_d = false, have_h = false, have_shape = false;
  std::string tok;
  while (hs >> tok)
  {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
    {
      throw Error(ErrorCode::Parse, fmt::format("malformed header token '{}'", tok));
    }
    const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
    try
    {
      if (key == "d")
      {
        dump.dim = std::stoi(value);
        have_d = true;
      }
      else if (key == "h")
      {
        dump.h = std::stod(value);
        have_h = true;
      }
      else if (key == "shape")
      {
        dump.shape = DomainShape::parse(value);
        have_shape = true;
      }
      else if (key == "n")
      {
        n = std::stoll(value);
      }
    }
    catch (const std::logic_error &)
    {
      throw Error(ErrorCode::Parse, fmt::format("malformed header value '{}'", tok));
    }
  }
  if (!have_d || !have_h || !have_shape || n < 0 || dump.shape.dim != dump.dim)
  {
    throw Error(ErrorCode::Parse, fmt::format("incomplete SMSFIELD header in '{}'", path.string()));
  }
  dump.values.resize(static_cast<std::size_t>(n));
  for (auto &v : dump.values)
  {
    char bytes[8];
    if (!in.read(bytes, 8))
    {
      throw Error(ErrorCode::Parse, fmt::format("'{}' is truncated", path.string()));
    }
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big)
    {
      bits = __builtin_bswap64(bits);
    }
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof())
  {
    throw Error(ErrorCode::Parse, fmt::format("'{}' has trailing bytes", path.string()));
  }
  return dump;
}

Field read_field(const std::filesystem::path &path)
{
  FieldDump dump = read_field_dump(path);
  auto grid = build_domain(dump.shape, dump.h);
  if (grid->size() != dump.values.size())
  {
    throw Error(ErrorCode::Parse,
                fmt::format("dump has {} values but the rebuilt grid has {} interior nodes",
                            dump.values.size(), grid->size()));
  }
  return Field(std::move(grid), std::move(dump.values));
}

}  // namespace sms

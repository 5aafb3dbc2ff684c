// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#include "sms/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <fmt/format.h>

namespace sms
{

namespace
{

MaskHeader parse_header(const std::string &line, const std::string &path)
{
  std::istringstream hs(line);
  std::string magic, version, tok;
  hs >> magic >> version;
  if (magic != "SMSMASK" || version != "v1")
  {
    throw Error(ErrorCode::Parse, fmt::format("'{}' is not an SMSMASK v1 file", path));
  }
  MaskHeader h;
  int fields = 0;
  while (hs >> tok)
  {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
    {
      throw Error(ErrorCode::Parse, fmt::format("malformed mask header token '{}'", tok));
    }
    const std::string key = tok.substr(0, eq);
    std::string value = tok.substr(eq + 1);
    std::replace(value.begin(), value.end(), ',', ' ');
    std::istringstream vs(value);
    if (key == "d")
    {
      vs >> h.dim;
    }
    else if (key == "h")
    {
      vs >> h.h;
    }
    else if (key == "origin")
    {
      for (int a = 0; a < 3 && (vs >> h.origin[a]); ++a)
      {
      }
    }
    else if (key == "dims")
    {
      for (int a = 0; a < 3 && (vs >> h.dims[a]); ++a)
      {
      }
    }
    else
    {
      continue;
    }
    if (vs.fail() && !vs.eof())
    {
      throw Error(ErrorCode::Parse, fmt::format("malformed mask header value '{}'", tok));
    }
    ++fields;
  }
  if (fields < 4 || (h.dim != 2 && h.dim != 3) || !(h.h > 0.0))
  {
    throw Error(ErrorCode::Parse, fmt::format("incomplete SMSMASK header in '{}'", path));
  }
  if (h.dim == 2)
  {
    h.dims[2] = 1;
    h.origin[2] = 0.0;
  }
  return h;
}

}  // namespace

bool MaskData::inside(int i, int j, int k) const
{
  if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2])
  {
    return false;
  }
  return bits[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k] != 0;
}

double MaskData::signed_distance(const Point &x) const
{
  // Locate the nearest lattice node to decide the side, then measure the
  // distance to the closest node on the other side of the front.
  int idx[3] = {0, 0, 0};
  for (int a = 0; a < dim; ++a)
  {
    idx[a] = static_cast<int>(std::lround((x[a] - origin[a]) / h));
  }
  const bool in = inside(idx[0], idx[1], idx[2]);
  const auto &front = in ? outer_front : inner_front;
  double best = std::numeric_limits<double>::infinity();
  for (const auto &y : front)
  {
    best = std::min(best, distance(x, y));
  }
  if (!std::isfinite(best))
  {
    best = 0.0;
  }
  const double half = 0.5 * h;
  return in ? -std::max(0.0, best - half) : std::max(0.0, best - half);
}

double MaskData::inradius() const
{
  double best = 0.0;
  for (int i = 0; i < dims[0]; ++i)
  {
    for (int j = 0; j < dims[1]; ++j)
    {
      for (int k = 0; k < dims[2]; ++k)
      {
        if (inside(i, j, k))
        {
          const Point x{origin[0] + h * i, origin[1] + h * j, dim == 3 ? origin[2] + h * k : 0.0};
          best = std::max(best, -signed_distance(x));
        }
      }
    }
  }
  return best;
}

MaskHeader read_mask_header(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open mask file '{}'", path));
  }
  std::string line;
  std::getline(in, line);
  return parse_header(line, path);
}

std::shared_ptr<const MaskData> load_mask(const std::string &path)
{
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const MaskData>> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(path); it != cache.end())
  {
    return it->second;
  }
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open mask file '{}'", path));
  }
  std::string line;
  std::getline(in, line);
  auto data = std::make_shared<MaskData>();
  static_cast<MaskHeader &>(*data) = parse_header(line, path);
  const std::size_t total = static_cast<std::size_t>(data->dims[0]) * data->dims[1] * data->dims[2];
  data->bits.reserve(total);
  char c;
  while (in.get(c))
  {
    if (c == '0' || c == '1')
    {
      data->bits.push_back(c == '1');
    }
    else if (!std::isspace(static_cast<unsigned char>(c)))
    {
      throw Error(ErrorCode::Parse, fmt::format("unexpected character in mask '{}'", path));
    }
  }
  if (data->bits.size() != total)
  {
    throw Error(ErrorCode::Parse,
                fmt::format("mask '{}' holds {} cells, header says {}", path, data->bits.size(), total));
  }
  const int d = data->dim;
  for (int i = 0; i < data->dims[0]; ++i)
  {
    for (int j = 0; j < data->dims[1]; ++j)
    {
      for (int k = 0; k < data->dims[2]; ++k)
      {
        const bool in_here = data->inside(i, j, k);
        bool front = false;
        const int idx[3] = {i, j, k};
        for (int a = 0; a < d && !front; ++a)
        {
          for (int s = -1; s <= 1; s += 2)
          {
            int nb[3] = {idx[0], idx[1], idx[2]};
            nb[a] += s;
            if (data->inside(nb[0], nb[1], nb[2]) != in_here)
            {
              front = true;
              break;
            }
          }
        }
        if (front)
        {
          const Point x{data->origin[0] + data->h * i, data->origin[1] + data->h * j,
                        d == 3 ? data->origin[2] + data->h * k : 0.0};
          (in_here ? data->inner_front : data->outer_front).push_back(x);
        }
      }
    }
  }
  cache.emplace(path, data);
  return data;
}

void write_mask(const std::string &path, const MaskHeader &header, const std::vector<std::uint8_t> &bits)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error(ErrorCode::Io, fmt::format("cannot open mask file '{}' for writing", path));
  }
  const int d = header.dim;
  std::string origin, dims;
  for (int a = 0; a < d; ++a)
  {
    origin += fmt::format("{}{:.17g}", a ? "," : "", header.origin[a]);
    dims += fmt::format("{}{}", a ? "," : "", header.dims[a]);
  }
  out << fmt::format("SMSMASK v1 d={} h={:.17g} origin={} dims={}\n", d, header.h, origin, dims);
  std::size_t col = 0;
  for (auto b : bits)
  {
    out.put(b ? '1' : '0');
    if (++col % 80 == 0)
    {
      out.put('\n');
    }
  }
  out.put('\n');
}

}  // namespace sms

// Copyright (c) 2026 The sms Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Lattice masks on disk. Format: one header line
//   SMSMASK v1 d=<d> h=<h> origin=<x,y[,z]> dims=<nx,ny[,nz]>
// followed by nx*ny*nz characters '0'/'1' (whitespace ignored), last index
// fastest.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sms/types.hpp"

namespace sms
{

struct MaskHeader
{
  int dim = 3;
  double h = 0.0;
  Point origin{};
  std::array<int, 3> dims{1, 1, 1};
};

struct MaskData : MaskHeader
{
  std::vector<std::uint8_t> bits;

  bool inside(int i, int j, int k) const;
  /// Lattice-accurate (to about h) signed distance, negative inside.
  double signed_distance(const Point &x) const;
  double inradius() const;

  // Lattice coordinates of boundary-adjacent nodes on either side.
  std::vector<Point> inner_front, outer_front;
};

MaskHeader read_mask_header(const std::string &path);

/// Loads (and memoizes per path) a mask file.
std::shared_ptr<const MaskData> load_mask(const std::string &path);

void write_mask(const std::string &path, const MaskHeader &header, const std::vector<std::uint8_t> &bits);

}  // namespace sms

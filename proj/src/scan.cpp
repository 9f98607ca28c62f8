// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The gmcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>

#include "gmcal/calibration.hpp"
#include "gmcal/error.hpp"

namespace gmcal {

namespace {

// Number of grid steps in one period; throws unless it is a whole number.
std::size_t steps_per_period(const ScanGrid& g, double period) {
  const double step = (g.hi - g.lo) / static_cast<double>(g.resolution - 1);
  const double ratio = period / step;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6) {
    fail(ErrorCode::invalid_argument, "period is not a whole number of grid steps");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

double ScanGrid::periodicity_residual(double period) const {
  const auto shift = steps_per_period(*this, period);
  if (shift >= resolution) fail(ErrorCode::invalid_argument, "scan range is shorter than one period");
  double residual = 0.0;
  for (std::size_t ia = 0; ia < resolution; ++ia) {
    for (std::size_t ib = 0; ib < resolution; ++ib) {
      if (ia + shift < resolution) residual = std::max(residual, std::abs(at(ia, ib) - at(ia + shift, ib)));
      if (ib + shift < resolution) residual = std::max(residual, std::abs(at(ia, ib) - at(ia, ib + shift)));
    }
  }
  return residual;
}

std::vector<std::size_t> ScanGrid::minima_per_cell(double period) const {
  const auto shift = steps_per_period(*this, period);
  const bool periodic = (resolution - 1) % shift == 0;
  // In periodic mode the last sample duplicates the first and is dropped.
  const std::size_t m = periodic ? resolution - 1 : resolution;
  const std::size_t cells = (m + shift - 1) / shift;
  std::vector<std::size_t> counts(cells * cells, 0);

  auto neighbour = [&](std::size_t i, int d, std::size_t& out) {
    const auto j = static_cast<long long>(i) + d;
    if (periodic) {
      out = static_cast<std::size_t>((j + static_cast<long long>(m)) % static_cast<long long>(m));
      return true;
    }
    if (j < 0 || j >= static_cast<long long>(m)) return false;
    out = static_cast<std::size_t>(j);
    return true;
  };

  for (std::size_t ia = 0; ia < m; ++ia) {
    for (std::size_t ib = 0; ib < m; ++ib) {
      const double v = at(ia, ib);
      bool strict_min = true;
      for (int da = -1; da <= 1 && strict_min; ++da) {
        for (int db = -1; db <= 1 && strict_min; ++db) {
          if (da == 0 && db == 0) continue;
          std::size_t na = 0;
          std::size_t nb = 0;
          if (!neighbour(ia, da, na) || !neighbour(ib, db, nb)) {
            strict_min = false;  // edge points of a non-periodic grid are not interior
            break;
          }
          if (!(v < at(na, nb))) strict_min = false;
        }
      }
      if (strict_min) ++counts[(ia / shift) * cells + ib / shift];
    }
  }
  return counts;
}

ScanGrid scan_error_space(IntensityOracle& dev, std::size_t port, std::pair<std::size_t, std::size_t> channels,
                          double lo, double hi, std::size_t resolution, std::span<const double> base) {
  const auto n = dev.ports();
  if (resolution < 3) fail(ErrorCode::invalid_argument, "scan resolution must be at least 3");
  if (channels.first >= n || channels.second >= n || channels.first == channels.second) {
    fail(ErrorCode::invalid_argument, "scan needs two distinct channels");
  }
  if (port >= n) fail(ErrorCode::invalid_argument, "target port out of range");
  if (!(lo < hi)) fail(ErrorCode::invalid_argument, "scan range must satisfy lo < hi");
  if (!base.empty() && base.size() != n) fail(ErrorCode::invalid_argument, "base profile length mismatch");

  ScanGrid g;
  g.port = port;
  g.channel_a = channels.first;
  g.channel_b = channels.second;
  g.lo = lo;
  g.hi = hi;
  g.resolution = resolution;
  g.base = base.empty() ? std::vector<double>(n, 0.0) : std::vector<double>(base.begin(), base.end());
  g.axis.resize(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    g.axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
  }
  g.axis.back() = hi;

  g.values.resize(resolution * resolution);
  std::vector<double> x = g.base;
  for (std::size_t ia = 0; ia < resolution; ++ia) {
    for (std::size_t ib = 0; ib < resolution; ++ib) {
      x[g.channel_a] = g.axis[ia];
      x[g.channel_b] = g.axis[ib];
      g.values[ia * resolution + ib] = evaluate_objective(dev, port, x);
    }
  }
  return g;
}

}  // namespace gmcal

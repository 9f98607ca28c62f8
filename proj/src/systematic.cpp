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

#include <algorithm>
#include <cmath>

#include "gmcal/calibration.hpp"
#include "gmcal/error.hpp"

namespace gmcal {

void SystematicMapping::validate() const {
  if (!is_power_of_two(n) || n < 2) fail(ErrorCode::invalid_argument, "mapping port count must be a power of two");
  if (steps.empty()) fail(ErrorCode::invalid_argument, "mapping holds no sweep steps");
  for (const auto& step : steps) {
    if (step.channels.empty() || step.ports.empty()) {
      fail(ErrorCode::invalid_argument, "every sweep step needs channels and ports");
    }
    for (auto c : step.channels) {
      if (c >= n) fail(ErrorCode::invalid_argument, "mapping channel out of range");
    }
    for (auto p : step.ports) {
      if (p >= n) fail(ErrorCode::invalid_argument, "mapping port out of range");
    }
  }
}

SystematicMapping SystematicMapping::butterfly(std::size_t n, std::size_t port, std::span<const std::size_t> routing) {
  if (!is_power_of_two(n) || n < 2) fail(ErrorCode::invalid_argument, "port count must be a power of two >= 2");
  if (port >= n) fail(ErrorCode::invalid_argument, "target port out of range");
  if (!routing.empty() && routing.size() != n) fail(ErrorCode::invalid_argument, "routing length mismatch");
  auto channel = [&](std::size_t line) { return routing.empty() ? line : routing[line]; };

  const auto k = log2_exact(n);
  SystematicMapping m;
  m.n = n;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t group = std::size_t{1} << s;
    const std::size_t low_mask = group - 1;
    const bool last = s + 1 == k;

    // Output ports fed by the wrong output line of every stage-s coupler.
    std::vector<std::size_t> wrong;
    for (std::size_t j = 0; j < n; ++j) {
      if ((j & low_mask) == (port & low_mask) && ((j >> s) & 1u) != ((port >> s) & 1u)) wrong.push_back(j);
    }

    // Pair the groups {lines : line >> s == h} for even h with their partner h + 1.
    for (std::size_t h = 0; h < (n >> s); h += 2) {
      SweepStep step;
      for (std::size_t line = h * group; line < (h + 1) * group; ++line) step.channels.push_back(channel(line));
      std::sort(step.channels.begin(), step.channels.end());
      if (last) {
        step.ports = {port};
        step.sense = SweepSense::maximize;
      } else {
        step.ports = wrong;
        step.sense = SweepSense::minimize;
      }
      m.steps.push_back(std::move(step));
    }
  }
  return m;
}

SystematicMapping SystematicMapping::four_port_cross() {
  SystematicMapping m;
  m.n = 4;
  m.steps = {
      {{0}, {2, 3}, SweepSense::minimize},
      {{1}, {2, 3}, SweepSense::minimize},
      {{0, 2}, {0}, SweepSense::maximize},
  };
  return m;
}

CalibrationResult systematic_calibrate(IntensityOracle& dev, std::size_t port, const SystematicMapping& mapping,
                                       std::size_t sweep_resolution) {
  const auto n = dev.ports();
  mapping.validate();
  if (mapping.n != n) fail(ErrorCode::invalid_argument, "mapping is inconsistent with the device port count");
  if (port >= n) fail(ErrorCode::invalid_argument, "target port out of range");
  if (sweep_resolution < 3) fail(ErrorCode::invalid_argument, "sweep resolution must be at least 3");
  const auto [lo, hi] = dev.bounds();
  if (lo > -kPi || hi < kPi) fail(ErrorCode::invalid_argument, "actuator range must cover [-pi, pi]");

  CalibrationResult result;
  result.trace.port = port;
  std::vector<double> phases(n, 0.0);
  const double h = 2.0 * kPi / static_cast<double>(sweep_resolution);

  for (std::size_t step_index = 0; step_index < mapping.steps.size(); ++step_index) {
    const auto& step = mapping.steps[step_index];
    const double sign = step.sense == SweepSense::minimize ? 1.0 : -1.0;

    std::vector<double> score(sweep_resolution);
    for (std::size_t m = 0; m < sweep_resolution; ++m) {
      const double offset = -kPi + h * static_cast<double>(m);
      std::vector<double> x = phases;
      for (auto c : step.channels) x[c] = wrap_phase(x[c] + offset);
      IntensityReading reading = dev.measure(x);
      double s = 0.0;
      for (auto p : step.ports) s += reading.per_port[p];
      score[m] = sign * s;
      result.trace.record(0, step_index, x, std::move(reading));
    }

    const auto [min_it, max_it] = std::minmax_element(score.begin(), score.end());
    if (*max_it - *min_it <= 1e-9 * std::max(1.0, std::abs(*max_it))) {
      fail(ErrorCode::degenerate_interference,
           "sweep step " + std::to_string(step_index) + " shows no interference contrast");
    }
    const auto best = static_cast<std::size_t>(min_it - score.begin());
    const double s_prev = score[(best + sweep_resolution - 1) % sweep_resolution];
    const double s_next = score[(best + 1) % sweep_resolution];
    const double curvature = s_prev - 2.0 * score[best] + s_next;
    double refine = 0.0;
    if (curvature > 0.0) refine = std::clamp(0.5 * h * (s_prev - s_next) / curvature, -h, h);

    const double offset = -kPi + h * static_cast<double>(best) + refine;
    for (auto c : step.channels) phases[c] = wrap_phase(phases[c] + offset);
  }

  result.trace.record(0, mapping.steps.size(), phases, dev.measure(phases));
  result.codeword = Codeword{port, gauge_normalized(phases)};
  result.converged = result.trace.rows.back().relative_target >= 0.9;
  result.starts_used = 1;
  result.evaluations = result.trace.rows.size();
  return result;
}

}  // namespace gmcal

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

// Intensity-only codebook learning.
//
// Every routine here sees the device only through IntensityOracle. The
// objective for port k is J_k(x) = -I_k(x): the negated detector reading at
// the target port for unit-amplitude input exp(i x).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmcal/codebook.hpp"
#include "gmcal/device.hpp"

namespace gmcal {

double evaluate_objective(IntensityOracle& dev, std::size_t port, std::span<const double> phases);

struct GbnmConfig {
  std::size_t n_starts = 12;
  std::size_t max_iters_per_start = 100;
  double tolerance = 1e-3;             // simplex diameter (rad) that counts as converged
  double initial_edge = kPi / 2;       // edge of the regular starting simplex (rad)
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  std::optional<double> lo;            // box bounds; default to the device's actuator range
  std::optional<double> hi;
  double exclusion_radius = kPi / 4;   // restarts avoid this neighbourhood of earlier minima
  std::size_t stagnation_evals = 30;   // restart once the start's best is this stale
  bool restart_on_stagnation = true;
  std::size_t max_evaluations = 0;     // overall device-evaluation cap, 0 = none
  double quality_bar = 0.9;            // relative intensity needed to count as converged
  std::uint64_t seed = 0;

  void validate(std::size_t ports) const;
};

struct TraceRow {
  std::size_t evaluation = 0;  // 0-based device evaluation within this run
  std::size_t start = 0;
  std::size_t iteration = 0;   // optimizer iteration (sweep step for the systematic method)
  std::vector<double> phases;  // commanded profile
  IntensityReading reading;
  double relative_target = 0.0;
  double best_relative = 0.0;  // running maximum of relative_target
};

struct ConvergenceTrace {
  std::size_t port = 0;
  std::vector<TraceRow> rows;
  std::vector<double> best_phases;
  double best_relative = 0.0;

  /// Appends a row and updates the running best.
  void record(std::size_t start, std::size_t iteration, std::span<const double> phases, IntensityReading reading);
};

struct CalibrationResult {
  Codeword codeword;
  ConvergenceTrace trace;
  bool converged = false;
  std::size_t starts_used = 0;
  std::size_t evaluations = 0;
};

/// Globalized bounded Nelder-Mead: random restarts with an exclusion zone,
/// box projection, and restart on small simplex or stagnation. Channel 0 is
/// held at 0 rad (global phase is unobservable); the remaining n-1 phases
/// are optimized.
CalibrationResult gbnm_calibrate(IntensityOracle& dev, std::size_t port, const GbnmConfig& cfg);

/// Upper bound on device evaluations gbnm_calibrate may spend for `ports` channels.
std::size_t gbnm_evaluation_bound(const GbnmConfig& cfg, std::size_t ports);

struct CodebookCalibration {
  Codebook codebook;
  std::vector<CalibrationResult> channels;
  Eigen::MatrixXd gram;  // |<cw_i, cw_j>| / n of the learned codewords
  bool all_converged = false;

  double max_offdiagonal_gram() const;
};

/// Runs gbnm_calibrate for every port; channel k uses seed derive_seed(cfg.seed, k).
CodebookCalibration calibrate_codebook(IntensityOracle& dev, const GbnmConfig& cfg);

enum class SweepSense { minimize, maximize };

/// One 1-D sweep: a common offset applied to `channels`, scored on the summed
/// intensity of `ports`.
struct SweepStep {
  std::vector<std::size_t> channels;
  std::vector<std::size_t> ports;
  SweepSense sense = SweepSense::minimize;
};

/// Ordered sweep plan for the stage-by-stage method.
struct SystematicMapping {
  std::size_t n = 0;
  std::vector<SweepStep> steps;

  void validate() const;

  /// Plan for the butterfly wiring of network.hpp: at stage s, pair the
  /// 2^s-channel groups that differ in bit s, and steer their light away from
  /// the ports whose bit s differs from the target's. The last stage
  /// maximizes the target port. `routing` maps first-stage lines to input
  /// channels (input_routing of the network); empty means identity.
  static SystematicMapping butterfly(std::size_t n, std::size_t port, std::span<const std::size_t> routing = {});

  /// Literal three-sweep plan for the first codeword of a four-port device
  /// whose first stage pairs channels (0,2) and (1,3): sweep 0 and then 1
  /// to empty ports 2 and 3, then sweep {0, 2} together to fill port 0.
  static SystematicMapping four_port_cross();
};

/// Stage-sweep codeword search. Each step samples `sweep_resolution` offsets
/// over one period, takes the best sample and refines it with a three-point
/// parabola. Throws ErrorCode::degenerate_interference when a sweep shows no
/// contrast.
CalibrationResult systematic_calibrate(IntensityOracle& dev, std::size_t port, const SystematicMapping& mapping,
                                       std::size_t sweep_resolution = 64);

struct ScanGrid {
  std::size_t port = 0;
  std::size_t channel_a = 0;
  std::size_t channel_b = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t resolution = 0;
  std::vector<double> axis;    // resolution samples from lo to hi inclusive
  std::vector<double> values;  // J, row-major: values[ia * resolution + ib]
  std::vector<double> base;    // phases of the remaining channels

  double at(std::size_t ia, std::size_t ib) const { return values[ia * resolution + ib]; }

  /// Max |J(a, b) - J(a + period, b)| and the same along b, over grid points
  /// that have a partner one period away. Requires the period to be a whole
  /// number of grid steps.
  double periodicity_residual(double period = 2.0 * kPi) const;

  /// Strict local minima (8-neighbourhood) counted per period x period cell.
  /// When the range spans whole periods the grid is treated as periodic, so
  /// minima on the outer edge are found as well. Cells are listed row-major.
  std::vector<std::size_t> minima_per_cell(double period = 2.0 * kPi) const;
};

/// Objective grid over the phases of two channels; the other channels are
/// held at `base` (zeros when empty).
ScanGrid scan_error_space(IntensityOracle& dev, std::size_t port, std::pair<std::size_t, std::size_t> channels,
                          double lo, double hi, std::size_t resolution, std::span<const double> base = {});

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string noise_preset = "experiment";
  std::size_t n = 4;
  Flavor flavor = Flavor::butler;
  GbnmConfig gbnm;  // seed is overridden from `seed`
};

struct ExperimentReport {
  NoiseConfig noise;
  NetworkSpec network;
  std::vector<double> finals;           // best relative intensity per channel
  std::vector<double> reference;        // 0.937, 0.947, 0.954, 0.960
  std::vector<bool> converged;
  std::vector<double> routed_fraction;  // learned codeword re-checked on the true matrix
  std::vector<CalibrationResult> channels;
  bool all_converged = false;
};

/// Relative channel intensities reported for the free-space four-port device.
std::vector<double> reference_relative_intensities();

/// Builds a device with random inter-stage phase errors under the noise
/// preset and learns every channel with GBNM on that one device.
ExperimentReport emulate_experiment(const ExperimentConfig& cfg);

}  // namespace gmcal

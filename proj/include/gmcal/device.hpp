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

// Intensity-only view of a butterfly network with experimental
// imperfections. Calibration code talks to devices exclusively through
// IntensityOracle; the transfer matrix stays inside DeviceModel.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmcal/network.hpp"
#include "gmcal/random.hpp"

namespace gmcal {

struct NoiseConfig {
  double drift_sigma = 0.0;          // rad per evaluation, Gaussian random-walk step
  double hysteresis_backlash = 0.0;  // rad, dead band of the actuator play operator
  double visibility = 1.0;           // coherent fraction v in (0, 1]
  double detector_sigma_rel = 0.0;   // relative Gaussian detector noise
  double splitting_tolerance = 0.0;  // bar power drawn from [0.5 - tol, 0.5 + tol]
  std::uint64_t seed = 0;
  double phase_lo = -4.0 * kPi;      // actuator bounds
  double phase_hi = 4.0 * kPi;

  void validate() const;
  bool noiseless() const;

  /// Named presets: "none", "experiment", "drift", "harsh". Presets with
  /// randomized parameters (visibility range) draw them from `seed`.
  static NoiseConfig preset(std::string_view name, std::uint64_t seed);
  static std::vector<std::string> preset_names();

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct IntensityReading {
  std::vector<double> per_port;
  std::vector<double> relative;

  double total() const;
};

/// Black-box intensity measurement interface.
class IntensityOracle {
 public:
  virtual ~IntensityOracle() = default;

  virtual std::size_t ports() const = 0;
  virtual std::pair<double, double> bounds() const = 0;
  virtual IntensityReading measure(std::span<const double> phases) = 0;
  virtual std::uint64_t evaluations() const = 0;
};

struct DeviceState {
  std::vector<double> drift;
  std::vector<double> actuator;
  bool actuator_initialized = false;
  std::uint64_t evaluations = 0;
  std::string rng;  // serialized engine and normal-distribution state

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

class DeviceModel final : public IntensityOracle {
 public:
  /// Wraps an existing matrix. splitting_tolerance must be zero.
  DeviceModel(TransferMatrix matrix, NoiseConfig noise);
  /// Builds the matrix from a spec, drawing coupler splits when
  /// noise.splitting_tolerance > 0.
  DeviceModel(const NetworkSpec& spec, NoiseConfig noise);

  std::size_t ports() const override { return matrix_.size(); }
  std::pair<double, double> bounds() const override { return {noise_.phase_lo, noise_.phase_hi}; }
  IntensityReading measure(std::span<const double> phases) override;
  std::uint64_t evaluations() const override { return evaluations_; }

  double total_intensity(std::span<const double> phases);

  /// Returns the device to its freshly constructed state.
  void reset();
  DeviceState snapshot() const;
  void restore(const DeviceState& state);

  const NoiseConfig& noise() const { return noise_; }
  // Ground truth for tests and reports; never consulted by calibration.
  const TransferMatrix& transfer_matrix() const { return matrix_; }
  const std::optional<NetworkSpec>& network() const { return spec_; }

 private:
  void init_state();
  double normal();

  TransferMatrix matrix_;
  NoiseConfig noise_;
  std::optional<NetworkSpec> spec_;

  Rng rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::vector<double> drift_;
  std::vector<double> actuator_;
  bool actuator_initialized_ = false;
  std::uint64_t evaluations_ = 0;
};

}  // namespace gmcal

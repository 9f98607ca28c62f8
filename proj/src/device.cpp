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

#include "gmcal/device.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gmcal/error.hpp"

namespace gmcal {

namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kPresetStream = 3;

}  // namespace

void NoiseConfig::validate() const {
  const bool ok = drift_sigma >= 0.0 && hysteresis_backlash >= 0.0 && detector_sigma_rel >= 0.0 &&
                  splitting_tolerance >= 0.0 && splitting_tolerance <= 0.5 && visibility > 0.0 &&
                  visibility <= 1.0 && std::isfinite(phase_lo) && std::isfinite(phase_hi) && phase_lo < phase_hi;
  if (!ok) fail(ErrorCode::invalid_argument, "invalid noise configuration");
}

bool NoiseConfig::noiseless() const {
  return drift_sigma == 0.0 && hysteresis_backlash == 0.0 && visibility == 1.0 && detector_sigma_rel == 0.0 &&
         splitting_tolerance == 0.0;
}

NoiseConfig NoiseConfig::preset(std::string_view name, std::uint64_t seed) {
  NoiseConfig cfg;
  cfg.seed = seed;
  Rng rng(derive_seed(seed, kPresetStream));
  if (name == "none") return cfg;
  if (name == "experiment") {
    // Beamsplitter cubes rated 50% +/- 3%, fringe visibility 95-99%.
    cfg.visibility = std::uniform_real_distribution<double>(0.95, 0.99)(rng);
    cfg.splitting_tolerance = 0.03;
    cfg.drift_sigma = 0.002;
    cfg.hysteresis_backlash = 0.01;
    cfg.detector_sigma_rel = 0.002;
    return cfg;
  }
  if (name == "drift") {
    cfg.drift_sigma = 0.02;
    return cfg;
  }
  if (name == "harsh") {
    cfg.visibility = std::uniform_real_distribution<double>(0.85, 0.90)(rng);
    cfg.splitting_tolerance = 0.05;
    cfg.drift_sigma = 0.02;
    cfg.hysteresis_backlash = 0.05;
    cfg.detector_sigma_rel = 0.01;
    return cfg;
  }
  fail(ErrorCode::invalid_argument, "unknown noise preset '" + std::string(name) + "'");
}

std::vector<std::string> NoiseConfig::preset_names() { return {"none", "experiment", "drift", "harsh"}; }

double IntensityReading::total() const { return std::accumulate(per_port.begin(), per_port.end(), 0.0); }

DeviceModel::DeviceModel(TransferMatrix matrix, NoiseConfig noise) : matrix_(std::move(matrix)), noise_(noise) {
  noise_.validate();
  if (noise_.splitting_tolerance != 0.0) {
    fail(ErrorCode::invalid_argument, "splitting tolerance requires a network spec, not a bare matrix");
  }
  if (matrix_.size() == 0) fail(ErrorCode::invalid_argument, "empty transfer matrix");
  init_state();
}

DeviceModel::DeviceModel(const NetworkSpec& spec, NoiseConfig noise) : noise_(noise) {
  noise_.validate();
  NetworkSpec built = spec;
  if (noise_.splitting_tolerance > 0.0) {
    built.couplers = random_couplers(spec.n, noise_.splitting_tolerance, derive_seed(noise_.seed, kSplitStream));
  }
  matrix_ = compose(built);
  spec_ = std::move(built);
  init_state();
}

void DeviceModel::init_state() {
  const auto n = matrix_.size();
  rng_.seed(derive_seed(noise_.seed, kNoiseStream));
  gauss_.reset();
  drift_.assign(n, 0.0);
  actuator_.assign(n, 0.0);
  actuator_initialized_ = false;
  evaluations_ = 0;
}

double DeviceModel::normal() { return gauss_(rng_); }

IntensityReading DeviceModel::measure(std::span<const double> phases) {
  const auto n = ports();
  if (phases.size() != n) fail(ErrorCode::invalid_argument, "phase profile length does not match port count");
  for (double p : phases) {
    if (!(p >= noise_.phase_lo && p <= noise_.phase_hi)) {
      std::ostringstream os;
      os << "phase command " << p << " outside actuator bounds [" << noise_.phase_lo << ", " << noise_.phase_hi << "]";
      fail(ErrorCode::out_of_bounds, os.str());
    }
  }

  // Play operator: the actuator only follows once the command leaves the dead band.
  const double half_band = 0.5 * noise_.hysteresis_backlash;
  for (std::size_t j = 0; j < n; ++j) {
    if (!actuator_initialized_ || half_band == 0.0) {
      actuator_[j] = phases[j];
    } else {
      actuator_[j] = std::clamp(actuator_[j], phases[j] - half_band, phases[j] + half_band);
    }
  }
  actuator_initialized_ = true;

  CVector x(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) x(static_cast<Eigen::Index>(j)) = std::polar(1.0, actuator_[j] + drift_[j]);
  if (noise_.drift_sigma > 0.0) {
    for (auto& d : drift_) d += noise_.drift_sigma * normal();
  }

  const CVector y = matrix_.apply(x);
  const double v = noise_.visibility;
  const double background = (1.0 - v) * x.squaredNorm() / static_cast<double>(n);

  IntensityReading reading;
  reading.per_port.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double intensity = v * std::norm(y(static_cast<Eigen::Index>(k))) + background;
    if (noise_.detector_sigma_rel > 0.0) {
      intensity = std::max(0.0, intensity * (1.0 + noise_.detector_sigma_rel * normal()));
    }
    reading.per_port[k] = intensity;
  }
  const double total = reading.total();
  reading.relative.resize(n);
  for (std::size_t k = 0; k < n; ++k) reading.relative[k] = total > 0.0 ? reading.per_port[k] / total : 0.0;

  ++evaluations_;
  return reading;
}

double DeviceModel::total_intensity(std::span<const double> phases) { return measure(phases).total(); }

void DeviceModel::reset() { init_state(); }

DeviceState DeviceModel::snapshot() const {
  DeviceState s;
  s.drift = drift_;
  s.actuator = actuator_;
  s.actuator_initialized = actuator_initialized_;
  s.evaluations = evaluations_;
  std::ostringstream os;
  os << rng_ << ' ' << gauss_;
  s.rng = os.str();
  return s;
}

void DeviceModel::restore(const DeviceState& state) {
  const auto n = ports();
  if (state.drift.size() != n || state.actuator.size() != n) {
    fail(ErrorCode::invalid_argument, "device state does not match port count");
  }
  std::istringstream is(state.rng);
  Rng rng;
  std::normal_distribution<double> gauss;
  is >> rng >> gauss;
  if (!is) fail(ErrorCode::invalid_argument, "malformed device RNG state");
  rng_ = rng;
  gauss_ = gauss;
  drift_ = state.drift;
  actuator_ = state.actuator;
  actuator_initialized_ = state.actuator_initialized;
  evaluations_ = state.evaluations;
}

}  // namespace gmcal

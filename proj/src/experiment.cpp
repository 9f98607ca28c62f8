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

#include "gmcal/calibration.hpp"
#include "gmcal/random.hpp"

namespace gmcal {

std::vector<double> reference_relative_intensities() { return {0.937, 0.947, 0.954, 0.960}; }

ExperimentReport emulate_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.noise = NoiseConfig::preset(cfg.noise_preset, derive_seed(cfg.seed, 1));

  const NetworkSpec base = make_spec(cfg.flavor, cfg.n);
  const auto errors = random_gap_errors(cfg.n, derive_seed(cfg.seed, 2));
  DeviceModel dev(apply_errors(base, errors), report.noise);
  report.network = *dev.network();
  if (cfg.n == 4) report.reference = reference_relative_intensities();

  report.all_converged = true;
  for (std::size_t k = 0; k < cfg.n; ++k) {
    GbnmConfig gbnm = cfg.gbnm;
    gbnm.seed = derive_seed(cfg.seed, 16 + k);
    auto res = gbnm_calibrate(dev, k, gbnm);
    report.finals.push_back(res.trace.best_relative);
    report.converged.push_back(res.converged);
    report.routed_fraction.push_back(routed_fraction(dev.transfer_matrix(), res.codeword.phases, k));
    report.all_converged = report.all_converged && res.converged;
    report.channels.push_back(std::move(res));
  }
  return report;
}

}  // namespace gmcal

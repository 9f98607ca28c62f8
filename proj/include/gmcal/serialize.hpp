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

// JSON and CSV encodings of the toolkit's data types.
//
// CSV column orders:
//   trace: evaluation,start,iteration,phase_0..phase_{n-1},
//          intensity_0..intensity_{n-1},relative_target,best_relative
//   scan:  first row "phase_a\phase_b" followed by the b axis; every further
//          row is one a sample followed by J values along b.
// Lines starting with '#' carry provenance and are not data.

#pragma once

#include <string>

#include "json.hpp"

#include "gmcal/calibration.hpp"
#include "gmcal/codebook.hpp"
#include "gmcal/device.hpp"
#include "gmcal/network.hpp"

namespace gmcal {

using Json = nlohmann::ordered_json;

Json to_json(const CouplerSpec& c);
Json to_json(const NetworkSpec& spec);
Json to_json(const TransferMatrix& a);
Json to_json(const Codebook& cb);
Json to_json(const NoiseConfig& cfg);
Json to_json(const DeviceState& state);
Json to_json(const GbnmConfig& cfg);
Json to_json(const SystematicMapping& mapping);
Json to_json(const ConvergenceTrace& trace);
Json to_json(const CalibrationResult& result, bool include_trace = true);
Json to_json(const CodebookCalibration& cal, bool include_traces = true);
Json to_json(const ScanGrid& grid);
Json to_json(const ExperimentReport& report, bool include_traces = false);

NetworkSpec network_spec_from_json(const Json& j);
TransferMatrix transfer_matrix_from_json(const Json& j);
Codebook codebook_from_json(const Json& j);
/// Missing keys keep their defaults.
NoiseConfig noise_config_from_json(const Json& j, NoiseConfig defaults = {});
DeviceState device_state_from_json(const Json& j);
GbnmConfig gbnm_config_from_json(const Json& j, GbnmConfig defaults = {});
SystematicMapping systematic_mapping_from_json(const Json& j);

std::string trace_csv(const ConvergenceTrace& trace);
std::string scan_csv(const ScanGrid& grid);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace gmcal

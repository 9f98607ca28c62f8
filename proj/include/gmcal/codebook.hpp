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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmcal/network.hpp"

namespace gmcal {

/// Input phase profile that routes all power to `target_port`.
/// Phases are gauge-fixed: phases[0] == 0 and every entry lies in (-pi, pi].
struct Codeword {
  std::size_t target_port = 0;
  std::vector<double> phases;

  /// Unit-amplitude input field exp(i * phases).
  CVector field() const;
};

struct Codebook {
  std::size_t n = 0;
  double output_scale = 0.0;  // expected output field magnitude at the target port
  std::vector<Codeword> codewords;
  // |H_jk| per codeword when extracted from a matrix; empty for learned codebooks.
  std::vector<std::vector<double>> amplitudes;

  /// Unit-modulus codeword matrix, one codeword per column.
  CMatrix matrix() const;
  /// Largest | |H_jk| - 1 | over the extracted amplitudes (0 when none are stored).
  double max_amplitude_deviation() const;
};

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);

/// Shifts every phase by -phases[0] and wraps into (-pi, pi].
std::vector<double> gauge_normalized(std::span<const double> phases);

/// H = A^{-1} sqrt(n). Throws ErrorCode::singular_matrix when cond(A) >= 1e8.
Codebook extract_codebook(const TransferMatrix& a);

/// Fraction of output power that each codeword delivers to its target port.
std::vector<double> verify_codebook(const Codebook& h, const TransferMatrix& a);

/// Routed-power fraction of one phase profile for one port.
double routed_fraction(const TransferMatrix& a, std::span<const double> phases, std::size_t port);

/// min over psi of || wrap(a - b - psi) ||_2.
double codeword_distance(std::span<const double> a, std::span<const double> b);
double codeword_distance(const Codeword& a, const Codeword& b);

/// H^H H for the unit-modulus codeword matrix.
CMatrix codebook_gram(const Codebook& h);

/// Columns of `h` that hold an entry whose modulus differs from 1 by more than `tol`.
std::vector<std::size_t> non_unit_modulus_columns(const CMatrix& h, double tol = 1e-9);

}  // namespace gmcal

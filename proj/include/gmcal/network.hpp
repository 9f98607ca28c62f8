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

// Transfer matrices of radix-2 butterfly optical networks.
//
// A network with n = 2^k ports has k coupler stages. Stage s (counted from
// the input side) holds n/2 symmetric couplers, each joining the two ports
// whose indices differ only in bit s. Phase layers sit before the first
// stage, in every gap between stages, and after the last stage:
//
//   A = D_k S_{k-1} D_{k-1} ... S_0 D_0 R
//
// where D_i = diag(exp(i * phase_layers[i])) and R is the input routing
// (identity except for the Butler flavor, which feeds the stages in
// bit-reversed order). All four flavors share this representation; they
// differ only in their phase layers and routing.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gmcal {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Directional coupler [[t, i r], [i r, t]] with Fresnel coefficients t and r.
struct CouplerSpec {
  double t = 0.70710678118654752440;
  double r = 0.70710678118654752440;

  static CouplerSpec ideal() { return {}; }
  /// Lossless coupler transmitting the given fraction of power on the bar path.
  static CouplerSpec from_power_split(double bar_power);

  bool lossless(double tol = 1e-12) const;
  void validate() const;

  friend bool operator==(const CouplerSpec&, const CouplerSpec&) = default;
};

/// Per-port phases (radians) of one diagonal phase layer.
using PhaseLayer = std::vector<double>;

enum class Flavor { ideal, hadamard, butler, custom };

std::string_view to_string(Flavor f);
Flavor parse_flavor(std::string_view name);

struct NetworkSpec {
  std::size_t n = 0;
  Flavor flavor = Flavor::custom;
  std::vector<PhaseLayer> phase_layers;             // stages() + 1 layers
  std::vector<std::vector<CouplerSpec>> couplers;  // stages() x n/2

  std::size_t stages() const;
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

class TransferMatrix {
 public:
  TransferMatrix() = default;
  explicit TransferMatrix(CMatrix m);

  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t row, std::size_t col) const {
    return m_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  CVector apply(const CVector& x) const { return m_ * x; }

  /// max |(A^H A - I)_ij|
  double unitarity_error() const;
  /// Largest off-diagonal modulus of A^H A (zero when the columns are orthogonal).
  double column_orthogonality_error() const;

 private:
  CMatrix m_;
};

bool is_power_of_two(std::size_t n);
std::size_t log2_exact(std::size_t n);
std::size_t bit_reverse(std::size_t value, std::size_t bits);

/// Ports (lo, hi) joined by coupler `index` of stage `stage`.
std::pair<std::size_t, std::size_t> coupler_ports(std::size_t n, std::size_t stage, std::size_t index);

/// Permutation C_n between the recursion's coupler layers: even ports stay,
/// odd port j goes to n - j. routing[j] is the destination of port j.
std::vector<std::size_t> butterfly_routing(std::size_t n);

/// Input routing R of a network: line i of the first stage is fed by channel routing[i].
std::vector<std::size_t> input_routing(const NetworkSpec& spec);

TransferMatrix coupler_matrix(const CouplerSpec& spec);

/// C_n (half ⊗ I_2) for a half-size transfer matrix. n == 2 returns the
/// 2x2 `half` unchanged, treating it as the coupler itself.
TransferMatrix shuffle_stage(std::size_t n, const TransferMatrix& half);

/// Phase-free network of identical couplers built through the shuffle
/// recursion A_n = C_n (A_{n/2} ⊗ I_2) C_n^{-1} (I_{n/2} ⊗ A_2).
TransferMatrix build_recursive(std::size_t n, const CouplerSpec& coupler);

/// Zero-error spec of a flavor with ideal couplers.
NetworkSpec make_spec(Flavor flavor, std::size_t n);

/// Stage-by-stage composition of a spec.
TransferMatrix compose(const NetworkSpec& spec);

TransferMatrix build_ideal(std::size_t n);
TransferMatrix build_hadamard(std::size_t n);
TransferMatrix build_butler(std::size_t n);

/// Adds phase errors to `base`. `error_layers` holds either one layer per gap
/// between stages (stages() - 1 layers) or a full set of stages() + 1 layers.
/// `couplers`, when given, replaces every coupler of the network.
NetworkSpec apply_errors(NetworkSpec base, std::span<const PhaseLayer> error_layers,
                         const std::optional<std::vector<std::vector<CouplerSpec>>>& couplers = std::nullopt);

TransferMatrix build_with_errors(const NetworkSpec& base, std::span<const PhaseLayer> error_layers,
                                 const std::optional<std::vector<std::vector<CouplerSpec>>>& couplers = std::nullopt);

/// Independent uniform [0, 2pi) phase errors for every inter-stage gap.
std::vector<PhaseLayer> random_gap_errors(std::size_t n, std::uint64_t seed);

/// Couplers with bar power drawn uniformly from [0.5 - tol, 0.5 + tol].
std::vector<std::vector<CouplerSpec>> random_couplers(std::size_t n, double tolerance, std::uint64_t seed);

}  // namespace gmcal

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

#include "gmcal/network.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "gmcal/error.hpp"
#include "gmcal/random.hpp"

namespace gmcal {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_power_of_two(std::size_t n) {
  if (!is_power_of_two(n) || n < 2) {
    fail(ErrorCode::invalid_argument, "port count must be a power of two >= 2, got " + std::to_string(n));
  }
}

CMatrix permutation_matrix(const std::vector<std::size_t>& routing) {
  const auto n = routing.size();
  CMatrix p = CMatrix::Zero(idx(n), idx(n));
  for (std::size_t j = 0; j < n; ++j) p(idx(routing[j]), idx(j)) = 1.0;
  return p;
}

// Input/output phases wrapped around each coupler of a flavor:
// coupler(lo, hi) -> diag(out) * C * diag(in).
struct CouplerPhases {
  double in_lo = 0, in_hi = 0, out_lo = 0, out_hi = 0;
};

CouplerPhases flavor_phases(Flavor flavor, std::size_t n, std::size_t stage, std::size_t lo) {
  switch (flavor) {
    case Flavor::ideal:
    case Flavor::custom:
      return {};
    case Flavor::hadamard:
      // (1/sqrt2)[[1,1],[1,-1]] = diag(-i,-1) C diag(i,1)
      return {kPi / 2, 0.0, -kPi / 2, kPi};
    case Flavor::butler: {
      // Two-port Butler stage: (1/sqrt2)[[1,i],[1,-i]] = diag(-i,-1) C diag(i,i).
      if (n == 2) return {kPi / 2, kPi / 2, -kPi / 2, kPi};
      // Decimation-in-time butterfly with twiddle exp(-2 pi i j / 2^{s+1}).
      const std::size_t half = std::size_t{1} << stage;
      const auto j = static_cast<double>(lo & (half - 1));
      return {kPi / 2, -2.0 * kPi * j / static_cast<double>(2 * half), -kPi / 2, kPi};
    }
  }
  return {};
}

}  // namespace

CouplerSpec CouplerSpec::from_power_split(double bar_power) {
  if (!(bar_power >= 0.0 && bar_power <= 1.0)) {
    fail(ErrorCode::invalid_argument, "power split must lie in [0, 1]");
  }
  return {std::sqrt(bar_power), std::sqrt(1.0 - bar_power)};
}

bool CouplerSpec::lossless(double tol) const { return std::abs(t * t + r * r - 1.0) <= tol; }

void CouplerSpec::validate() const {
  if (!(t >= 0.0 && t <= 1.0 && r >= 0.0 && r <= 1.0)) {
    std::ostringstream os;
    os << "coupler coefficients must lie in [0, 1] (t=" << t << ", r=" << r << ")";
    fail(ErrorCode::invalid_argument, os.str());
  }
}

std::string_view to_string(Flavor f) {
  switch (f) {
    case Flavor::ideal: return "ideal";
    case Flavor::hadamard: return "hadamard";
    case Flavor::butler: return "butler";
    case Flavor::custom: return "custom";
  }
  return "custom";
}

Flavor parse_flavor(std::string_view name) {
  if (name == "ideal") return Flavor::ideal;
  if (name == "hadamard") return Flavor::hadamard;
  if (name == "butler") return Flavor::butler;
  if (name == "custom") return Flavor::custom;
  fail(ErrorCode::invalid_argument, "unknown flavor '" + std::string(name) + "'");
}

std::size_t NetworkSpec::stages() const { return is_power_of_two(n) ? log2_exact(n) : 0; }

void NetworkSpec::validate() const {
  require_power_of_two(n);
  const auto k = stages();
  if (phase_layers.size() != k + 1) {
    fail(ErrorCode::invalid_argument,
         "expected " + std::to_string(k + 1) + " phase layers, got " + std::to_string(phase_layers.size()));
  }
  for (const auto& layer : phase_layers) {
    if (layer.size() != n) fail(ErrorCode::invalid_argument, "phase layer length does not match port count");
    for (double p : layer) {
      if (!std::isfinite(p)) fail(ErrorCode::invalid_argument, "phase layer holds a non-finite angle");
    }
  }
  if (couplers.size() != k) {
    fail(ErrorCode::invalid_argument,
         "expected " + std::to_string(k) + " coupler stages, got " + std::to_string(couplers.size()));
  }
  for (const auto& stage : couplers) {
    if (stage.size() != n / 2) fail(ErrorCode::invalid_argument, "each stage must hold n/2 couplers");
    for (const auto& c : stage) c.validate();
  }
}

TransferMatrix::TransferMatrix(CMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) fail(ErrorCode::invalid_argument, "transfer matrix must be square");
}

double TransferMatrix::unitarity_error() const {
  const CMatrix g = m_.adjoint() * m_;
  return (g - CMatrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff();
}

double TransferMatrix::column_orthogonality_error() const {
  CMatrix g = m_.adjoint() * m_;
  g.diagonal().setZero();
  return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t log2_exact(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

std::size_t bit_reverse(std::size_t value, std::size_t bits) {
  std::size_t out = 0;
  for (std::size_t b = 0; b < bits; ++b) {
    out = (out << 1) | ((value >> b) & 1u);
  }
  return out;
}

std::pair<std::size_t, std::size_t> coupler_ports(std::size_t n, std::size_t stage, std::size_t index) {
  if (index >= n / 2 || (std::size_t{1} << stage) >= n) {
    fail(ErrorCode::invalid_argument, "coupler index out of range");
  }
  const std::size_t low_mask = (std::size_t{1} << stage) - 1;
  const std::size_t lo = ((index >> stage) << (stage + 1)) | (index & low_mask);
  return {lo, lo | (std::size_t{1} << stage)};
}

std::vector<std::size_t> butterfly_routing(std::size_t n) {
  require_power_of_two(n);
  std::vector<std::size_t> routing(n);
  for (std::size_t j = 0; j < n; ++j) routing[j] = (j % 2 == 0) ? j : n - j;
  return routing;
}

std::vector<std::size_t> input_routing(const NetworkSpec& spec) {
  std::vector<std::size_t> routing(spec.n);
  const auto k = spec.stages();
  for (std::size_t i = 0; i < spec.n; ++i) {
    routing[i] = spec.flavor == Flavor::butler ? bit_reverse(i, k) : i;
  }
  return routing;
}

TransferMatrix coupler_matrix(const CouplerSpec& spec) {
  spec.validate();
  const Complex ir(0.0, spec.r);
  CMatrix m(2, 2);
  m << spec.t, ir, ir, spec.t;
  return TransferMatrix(std::move(m));
}

TransferMatrix shuffle_stage(std::size_t n, const TransferMatrix& half) {
  require_power_of_two(n);
  if (n == 2 && half.size() == 2) return half;
  if (half.size() != n / 2) {
    fail(ErrorCode::invalid_argument, "shuffle_stage: half matrix must have n/2 = " + std::to_string(n / 2) +
                                          " ports, got " + std::to_string(half.size()));
  }
  const CMatrix kron = Eigen::kroneckerProduct(half.matrix(), CMatrix::Identity(2, 2));
  return TransferMatrix(permutation_matrix(butterfly_routing(n)) * kron);
}

TransferMatrix build_recursive(std::size_t n, const CouplerSpec& coupler) {
  require_power_of_two(n);
  const TransferMatrix a2 = coupler_matrix(coupler);
  TransferMatrix a = a2;
  for (std::size_t m = 4; m <= n; m *= 2) {
    const CMatrix c_inv = permutation_matrix(butterfly_routing(m)).transpose();
    const CMatrix first = Eigen::kroneckerProduct(CMatrix::Identity(idx(m / 2), idx(m / 2)), a2.matrix());
    a = TransferMatrix(shuffle_stage(m, a).matrix() * c_inv * first);
  }
  return a;
}

NetworkSpec make_spec(Flavor flavor, std::size_t n) {
  require_power_of_two(n);
  NetworkSpec spec;
  spec.n = n;
  spec.flavor = flavor;
  const auto k = spec.stages();
  spec.phase_layers.assign(k + 1, PhaseLayer(n, 0.0));
  spec.couplers.assign(k, std::vector<CouplerSpec>(n / 2, CouplerSpec::ideal()));
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t p = 0; p < n / 2; ++p) {
      const auto [lo, hi] = coupler_ports(n, s, p);
      const auto ph = flavor_phases(flavor, n, s, lo);
      spec.phase_layers[s][lo] += ph.in_lo;
      spec.phase_layers[s][hi] += ph.in_hi;
      spec.phase_layers[s + 1][lo] += ph.out_lo;
      spec.phase_layers[s + 1][hi] += ph.out_hi;
    }
  }
  return spec;
}

TransferMatrix compose(const NetworkSpec& spec) {
  spec.validate();
  const auto n = spec.n;
  const auto k = spec.stages();
  const auto routing = input_routing(spec);

  CMatrix a = CMatrix::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < n; ++i) a(idx(i), idx(routing[i])) = 1.0;

  auto apply_layer = [&](const PhaseLayer& layer) {
    for (std::size_t i = 0; i < n; ++i) a.row(idx(i)) *= std::polar(1.0, layer[i]);
  };

  for (std::size_t s = 0; s < k; ++s) {
    apply_layer(spec.phase_layers[s]);
    for (std::size_t p = 0; p < n / 2; ++p) {
      const auto [lo, hi] = coupler_ports(n, s, p);
      const auto& c = spec.couplers[s][p];
      const Complex ir(0.0, c.r);
      const Eigen::RowVectorXcd row_lo = a.row(idx(lo));
      const Eigen::RowVectorXcd row_hi = a.row(idx(hi));
      a.row(idx(lo)) = c.t * row_lo + ir * row_hi;
      a.row(idx(hi)) = ir * row_lo + c.t * row_hi;
    }
  }
  apply_layer(spec.phase_layers[k]);
  return TransferMatrix(std::move(a));
}

TransferMatrix build_ideal(std::size_t n) { return build_recursive(n, CouplerSpec::ideal()); }

TransferMatrix build_hadamard(std::size_t n) { return compose(make_spec(Flavor::hadamard, n)); }

TransferMatrix build_butler(std::size_t n) { return compose(make_spec(Flavor::butler, n)); }

NetworkSpec apply_errors(NetworkSpec base, std::span<const PhaseLayer> error_layers,
                         const std::optional<std::vector<std::vector<CouplerSpec>>>& couplers) {
  base.validate();
  const auto k = base.stages();
  std::size_t first = 0;
  if (error_layers.size() == k + 1) {
    first = 0;
  } else if (error_layers.size() + 1 == k) {
    first = 1;
  } else {
    fail(ErrorCode::invalid_argument, "expected " + std::to_string(k - 1) + " gap layers or " +
                                          std::to_string(k + 1) + " full layers, got " +
                                          std::to_string(error_layers.size()));
  }
  for (std::size_t i = 0; i < error_layers.size(); ++i) {
    const auto& err = error_layers[i];
    if (err.size() != base.n) fail(ErrorCode::invalid_argument, "error layer length does not match port count");
    auto& layer = base.phase_layers[first + i];
    for (std::size_t j = 0; j < base.n; ++j) layer[j] += err[j];
  }
  if (couplers) base.couplers = *couplers;
  base.validate();
  return base;
}

TransferMatrix build_with_errors(const NetworkSpec& base, std::span<const PhaseLayer> error_layers,
                                 const std::optional<std::vector<std::vector<CouplerSpec>>>& couplers) {
  return compose(apply_errors(base, error_layers, couplers));
}

std::vector<PhaseLayer> random_gap_errors(std::size_t n, std::uint64_t seed) {
  require_power_of_two(n);
  const auto k = log2_exact(n);
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::vector<PhaseLayer> layers(k - 1, PhaseLayer(n));
  for (auto& layer : layers) {
    for (auto& p : layer) p = phase(rng);
  }
  return layers;
}

std::vector<std::vector<CouplerSpec>> random_couplers(std::size_t n, double tolerance, std::uint64_t seed) {
  require_power_of_two(n);
  if (!(tolerance >= 0.0 && tolerance <= 0.5)) {
    fail(ErrorCode::invalid_argument, "splitting tolerance must lie in [0, 0.5]");
  }
  const auto k = log2_exact(n);
  Rng rng(seed);
  std::uniform_real_distribution<double> split(0.5 - tolerance, 0.5 + tolerance);
  std::vector<std::vector<CouplerSpec>> out(k, std::vector<CouplerSpec>(n / 2));
  for (auto& stage : out) {
    for (auto& c : stage) c = tolerance > 0.0 ? CouplerSpec::from_power_split(split(rng)) : CouplerSpec::ideal();
  }
  return out;
}

}  // namespace gmcal

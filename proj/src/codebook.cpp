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

#include "gmcal/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmcal/error.hpp"

namespace gmcal {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double sum_sq_wrapped(std::span<const double> d, double psi) {
  double f = 0.0;
  for (double v : d) {
    const double w = wrap_phase(v - psi);
    f += w * w;
  }
  return f;
}

}  // namespace

CVector Codeword::field() const {
  CVector x(idx(phases.size()));
  for (std::size_t j = 0; j < phases.size(); ++j) x(idx(j)) = std::polar(1.0, phases[j]);
  return x;
}

CMatrix Codebook::matrix() const {
  CMatrix h(idx(n), idx(codewords.size()));
  for (std::size_t k = 0; k < codewords.size(); ++k) h.col(idx(k)) = codewords[k].field();
  return h;
}

double Codebook::max_amplitude_deviation() const {
  double dev = 0.0;
  for (const auto& col : amplitudes) {
    for (double a : col) dev = std::max(dev, std::abs(a - 1.0));
  }
  return dev;
}

double wrap_phase(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

std::vector<double> gauge_normalized(std::span<const double> phases) {
  std::vector<double> out(phases.begin(), phases.end());
  if (out.empty()) return out;
  const double ref = out.front();
  for (auto& p : out) p = wrap_phase(p - ref);
  out.front() = 0.0;
  return out;
}

Codebook extract_codebook(const TransferMatrix& a) {
  const auto n = a.size();
  if (n == 0) fail(ErrorCode::invalid_argument, "empty transfer matrix");

  const Eigen::JacobiSVD<CMatrix> svd(a.matrix());
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin >= 1e8) {
    fail(ErrorCode::singular_matrix, "transfer matrix is singular or ill-conditioned (cond >= 1e8)");
  }

  const double scale = std::sqrt(static_cast<double>(n));
  const CMatrix h = a.matrix().partialPivLu().inverse() * scale;

  Codebook cb;
  cb.n = n;
  cb.output_scale = scale;
  cb.codewords.resize(n);
  cb.amplitudes.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> phases(n);
    auto& amps = cb.amplitudes[k];
    amps.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex v = h(idx(j), idx(k));
      phases[j] = std::arg(v);
      amps[j] = std::abs(v);
    }
    cb.codewords[k] = Codeword{k, gauge_normalized(phases)};
  }
  return cb;
}

double routed_fraction(const TransferMatrix& a, std::span<const double> phases, std::size_t port) {
  if (phases.size() != a.size() || port >= a.size()) {
    fail(ErrorCode::invalid_argument, "phase profile or port does not match the transfer matrix");
  }
  CVector x(idx(phases.size()));
  for (std::size_t j = 0; j < phases.size(); ++j) x(idx(j)) = std::polar(1.0, phases[j]);
  const CVector y = a.apply(x);
  const double total = y.squaredNorm();
  return total > 0.0 ? std::norm(y(idx(port))) / total : 0.0;
}

std::vector<double> verify_codebook(const Codebook& h, const TransferMatrix& a) {
  if (h.n != a.size()) fail(ErrorCode::invalid_argument, "codebook and transfer matrix sizes differ");
  std::vector<double> fractions;
  fractions.reserve(h.codewords.size());
  for (const auto& cw : h.codewords) fractions.push_back(routed_fraction(a, cw.phases, cw.target_port));
  return fractions;
}

double codeword_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::invalid_argument, "codewords differ in length");
  if (a.empty()) return 0.0;
  const auto n = a.size();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) d[j] = wrap_phase(a[j] - b[j]);
  std::sort(d.begin(), d.end());

  // The optimal offset is the mean of the offsets unwrapped into a window of
  // width 2pi; such a window starts at one of the sorted offsets.
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  double best = std::numeric_limits<double>::infinity();
  double shifted = 0.0;  // sum of 2pi added to the first i offsets
  for (std::size_t i = 0; i < n; ++i) {
    const double psi = (total + shifted) / static_cast<double>(n);
    best = std::min(best, sum_sq_wrapped(d, psi));
    shifted += 2.0 * kPi;
  }
  return std::sqrt(best);
}

double codeword_distance(const Codeword& a, const Codeword& b) { return codeword_distance(a.phases, b.phases); }

CMatrix codebook_gram(const Codebook& h) {
  const CMatrix m = h.matrix();
  return m.adjoint() * m;
}

std::vector<std::size_t> non_unit_modulus_columns(const CMatrix& h, double tol) {
  std::vector<std::size_t> cols;
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    if ((h.col(k).cwiseAbs().array() - 1.0).abs().maxCoeff() > tol) cols.push_back(static_cast<std::size_t>(k));
  }
  return cols;
}

}  // namespace gmcal

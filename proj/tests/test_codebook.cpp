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
#include <cmath>
#include <random>

#include "doctest.h"

#include "check.hpp"
#include "gmcal/codebook.hpp"
#include "gmcal/random.hpp"
#include "oracles.hpp"

using namespace gmcal;
using oracle::I1;

namespace {

CMatrix ideal4_codebook() {
  CMatrix h(4, 4);
  h << 1.0, -I1, -I1, -1.0,
       -I1, 1.0, -1.0, -I1,
       -I1, -1.0, 1.0, -I1,
       -1.0, -I1, -I1, 1.0;
  return h;
}

CMatrix butler4_codebook(bool printed_row) {
  CMatrix h(4, 4);
  h << 1.0, 1.0, 1.0, 1.0,
       1.0, I1, -1.0, -I1,
       1.0, -1.0, 1.0, printed_row ? 1.0 : -1.0,
       1.0, -I1, -1.0, I1;
  return h;
}

TransferMatrix random_device(std::size_t n, std::uint64_t seed, Flavor f = Flavor::custom) {
  return compose(apply_errors(make_spec(f, n), random_gap_errors(n, seed)));
}

}  // namespace

TEST_CASE("analytic codebooks") {
  const auto ideal = extract_codebook(build_ideal(4));
  CHECK(ideal.output_scale == doctest::Approx(2.0));
  CHECK(oracle::column_gauge_error(ideal.matrix(), ideal4_codebook()) < 1e-10);

  const auto had = extract_codebook(build_hadamard(4));
  CHECK(oracle::column_gauge_error(had.matrix(), oracle::sylvester(4)) < 1e-10);

  const auto but = extract_codebook(build_butler(4));
  CHECK(oracle::column_gauge_error(but.matrix(), butler4_codebook(false)) < 1e-10);
  CHECK(non_unit_modulus_columns(but.matrix()).empty());
  CHECK(but.max_amplitude_deviation() < 1e-12);

  // the printed third row is not an orthogonal unit-modulus codebook
  const CMatrix printed = butler4_codebook(true);
  CHECK((printed.adjoint() * printed - 4.0 * CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() > 1.0);
  CHECK(oracle::column_gauge_error(but.matrix(), printed) > 0.5);

  // larger butler: codeword k is a linear phase ramp of 2 pi k / n
  for (std::size_t n : {8u, 16u}) {
    const auto cb = extract_codebook(build_butler(n));
    CHECK(oracle::column_gauge_error(cb.matrix(), oracle::dft(n)) < 1e-10);
  }
}

TEST_CASE("gauge convention") {
  const auto cb = extract_codebook(random_device(8, 4));
  for (const auto& cw : cb.codewords) {
    CHECK(cw.phases.front() == 0.0);
    for (double p : cw.phases) {
      CHECK(p > -oracle::pi);
      CHECK(p <= oracle::pi);
    }
    CHECK(gauge_normalized(cw.phases) == cw.phases);
  }
  CHECK(wrap_phase(oracle::pi) == doctest::Approx(oracle::pi));
  CHECK(wrap_phase(-oracle::pi) == doctest::Approx(oracle::pi));
  CHECK(wrap_phase(5.0 * oracle::pi / 2.0) == doctest::Approx(oracle::pi / 2.0));
}

TEST_CASE("codebooks route all power under random errors") {
  for (std::size_t n : {4u, 8u, 16u}) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto a = random_device(n, derive_seed(seed, 100 + n));
      const auto cb = extract_codebook(a);
      const CMatrix h = cb.matrix();
      const CMatrix gram = h.adjoint() * h;
      REQUIRE((gram - double(n) * CMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
      if (seed % 50 == 0) {
        for (std::size_t k = 0; k < n; ++k) {
          const auto out = oracle::intensities(a.matrix(), cb.codewords[k].phases);
          for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(out[j] - (j == k ? double(n) : 0.0)) <= 1e-10);
        }
      }
      for (double f : verify_codebook(cb, a)) REQUIRE(f >= 1.0 - 1e-10);
    }
  }
}

TEST_CASE("verify codebook") {
  const auto a = build_ideal(4);
  Codebook eq4;
  eq4.n = 4;
  eq4.output_scale = 2.0;
  for (std::size_t k = 0; k < 4; ++k) eq4.codewords.push_back({k, oracle::column_phases(ideal4_codebook(), k)});
  for (double f : verify_codebook(eq4, a)) CHECK(f == doctest::Approx(1.0).epsilon(1e-12));

  const auto had = extract_codebook(build_hadamard(4));
  double worst = 1.0;
  for (double f : verify_codebook(had, a)) worst = std::min(worst, f);
  CHECK(worst < 0.9);

  CHECK_FAILS_WITH(verify_codebook(eq4, build_ideal(8)), ErrorCode::invalid_argument);
}

TEST_CASE("single gap error keeps the half-block structure") {
  const auto base = make_spec(Flavor::ideal, 4);
  const CMatrix h0 = extract_codebook(compose(base)).matrix();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 2.0 * oracle::pi);
  for (int trial = 0; trial < 100; ++trial) {
    PhaseLayer phi(4);
    for (auto& p : phi) p = u(rng);
    const auto a = build_with_errors(base, std::vector<PhaseLayer>{phi});
    const CMatrix h = extract_codebook(a).matrix();
    for (Eigen::Index k = 0; k < 4; ++k) {
      for (Eigen::Index half : {0, 2}) {
        const CVector got = h.col(k).segment(half, 2), ref = h0.col(k).segment(half, 2);
        const Complex rot = got(0) / ref(0);
        CHECK(std::abs(std::abs(rot) - 1.0) < 1e-9);
        CHECK((got - rot * ref).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
    // and that codebook routes perfectly on its own device
    for (double f : verify_codebook(extract_codebook(a), a)) CHECK(f >= 1.0 - 1e-10);
  }
}

TEST_CASE("codeword distance") {
  const std::vector<double> a = {0.0, 0.4, -2.0, 3.0};
  CHECK(codeword_distance(a, a) == 0.0);
  std::vector<double> rot = a;
  for (auto& p : rot) p += oracle::pi / 3.0;
  CHECK(codeword_distance(a, rot) < 1e-12);

  const auto had = extract_codebook(build_hadamard(4));
  const double d = codeword_distance(had.codewords[0], had.codewords[1]);
  CHECK(d == doctest::Approx(oracle::distance(had.codewords[0].phases, had.codewords[1].phases)).epsilon(1e-9));
  CHECK(d == doctest::Approx(oracle::pi).epsilon(1e-12));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 7;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    CAPTURE(trial);
    const double got = codeword_distance(x, y);
    CHECK(got == doctest::Approx(oracle::distance(x, y)).epsilon(1e-9));
    CHECK(got == doctest::Approx(codeword_distance(y, x)).epsilon(1e-12));
  }
  CHECK_FAILS_WITH(codeword_distance(a, std::vector<double>{0.0}), ErrorCode::invalid_argument);
}

TEST_CASE("singular and lossy matrices") {
  CMatrix s = CMatrix::Identity(4, 4);
  s(3, 3) = 0.0;
  CHECK_FAILS_WITH(extract_codebook(TransferMatrix(s)), ErrorCode::singular_matrix);
  s(3, 3) = 1e-9;
  CHECK_FAILS_WITH(extract_codebook(TransferMatrix(s)), ErrorCode::singular_matrix);

  const std::vector<std::vector<CouplerSpec>> lossy(2, std::vector<CouplerSpec>(2, CouplerSpec{0.53, 0.8}));
  const auto a = build_with_errors(make_spec(Flavor::ideal, 4), std::vector<PhaseLayer>{PhaseLayer(4, 0.3)}, lossy);
  const auto cb = extract_codebook(a);
  CHECK(cb.max_amplitude_deviation() > 1e-3);
  CHECK_FALSE(non_unit_modulus_columns(a.matrix().inverse() * 2.0).empty());
  // phases alone still route most of the power
  for (double f : verify_codebook(cb, a)) CHECK(f > 0.9);
}

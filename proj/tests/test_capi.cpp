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
// Exercises the shared library through its C header only.

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "gmcal/gmcal.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  gmcal_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("c api: networks") {
  gmcal_network* net = nullptr;
  REQUIRE(gmcal_network_create("ideal", 4, &net) == GMCAL_OK);
  CHECK(gmcal_network_ports(net) == 4);
  std::vector<double> re(16), im(16);
  REQUIRE(gmcal_network_matrix(net, re.data(), im.data(), 16) == GMCAL_OK);
  CHECK(re[0] == doctest::Approx(0.5));
  CHECK(im[1] == doctest::Approx(0.5));
  CHECK(re[3] == doctest::Approx(-0.5));
  CHECK(gmcal_network_matrix(net, re.data(), im.data(), 15) == GMCAL_ERR_INVALID_ARGUMENT);
  double err = 1.0;
  CHECK(gmcal_network_unitarity_error(net, &err) == GMCAL_OK);
  CHECK(err < 1e-12);

  char* spec = nullptr;
  REQUIRE(gmcal_network_spec_json(net, &spec) == GMCAL_OK);
  const json js = json::parse(take(spec));
  CHECK(js.at("flavor") == "ideal");

  REQUIRE(gmcal_network_add_random_errors(net, 5) == GMCAL_OK);
  CHECK(gmcal_network_unitarity_error(net, &err) == GMCAL_OK);
  CHECK(err < 1e-10);
  REQUIRE(gmcal_network_randomize_couplers(net, 0.03, 1) == GMCAL_OK);
  CHECK(gmcal_network_orthogonality_error(net, &err) == GMCAL_OK);
  CHECK(err < 1e-10);
  CHECK(gmcal_network_apply_errors_json(net, R"({"layers": [[0.1, 0.2, 0.3, 0.4]]})") == GMCAL_OK);
  CHECK(gmcal_network_apply_errors_json(net, R"({"layers": [[0.1]]})") == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(gmcal_last_error()).size() > 0);

  char* mj = nullptr;
  REQUIRE(gmcal_network_matrix_json(net, &mj) == GMCAL_OK);
  const std::string matrix_text = take(mj);
  gmcal_network* bare = nullptr;
  REQUIRE(gmcal_network_from_json(matrix_text.c_str(), &bare) == GMCAL_OK);
  std::vector<double> re2(16), im2(16);
  gmcal_network_matrix(net, re.data(), im.data(), 16);
  gmcal_network_matrix(bare, re2.data(), im2.data(), 16);
  CHECK(re == re2);
  CHECK(im == im2);
  char* none = nullptr;
  CHECK(gmcal_network_spec_json(bare, &none) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_network_add_random_errors(bare, 1) == GMCAL_ERR_INVALID_ARGUMENT);

  // wrapped document form
  const std::string doc = R"({"network": {"n": 2, "flavor": "hadamard"}, "matrix": {"n": 1, "re": [[9]], "im": [[0]]}})";
  gmcal_network* wrapped = nullptr;
  REQUIRE(gmcal_network_from_json(doc.c_str(), &wrapped) == GMCAL_OK);
  CHECK(gmcal_network_ports(wrapped) == 2);

  gmcal_network* bad = nullptr;
  CHECK(gmcal_network_create("fourier", 4, &bad) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(gmcal_last_error()).find("fourier") != std::string::npos);
  CHECK(gmcal_network_create("ideal", 6, &bad) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_network_from_json("{not json", &bad) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_network_create(nullptr, 4, &bad) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_network_create("ideal", 4, nullptr) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(gmcal_status_name(GMCAL_ERR_SINGULAR_MATRIX)) == "singular_matrix");
  CHECK(std::string(gmcal_version()) == "1.0.0");

  gmcal_network_destroy(wrapped);
  gmcal_network_destroy(bare);
  gmcal_network_destroy(net);
  gmcal_network_destroy(nullptr);
}

TEST_CASE("c api: codebooks") {
  gmcal_network* net = nullptr;
  REQUIRE(gmcal_network_create("hadamard", 4, &net) == GMCAL_OK);
  gmcal_codebook* cb = nullptr;
  REQUIRE(gmcal_codebook_extract(net, &cb) == GMCAL_OK);
  CHECK(gmcal_codebook_size(cb) == 4);
  std::vector<double> p(4), f(4);
  REQUIRE(gmcal_codebook_phases(cb, 1, p.data(), 4) == GMCAL_OK);
  CHECK(std::abs(p[1]) == doctest::Approx(3.141592653589793));
  CHECK(gmcal_codebook_phases(cb, 4, p.data(), 4) == GMCAL_ERR_OUT_OF_BOUNDS);
  REQUIRE(gmcal_codebook_verify(cb, net, f.data(), 4) == GMCAL_OK);
  for (double v : f) CHECK(v >= 1.0 - 1e-10);
  double g = 1.0;
  CHECK(gmcal_codebook_gram_error(cb, &g) == GMCAL_OK);
  CHECK(g < 1e-8);
  CHECK(gmcal_codebook_amplitude_deviation(cb, &g) == GMCAL_OK);
  CHECK(g < 1e-12);

  char* text = nullptr;
  REQUIRE(gmcal_codebook_to_json(cb, &text) == GMCAL_OK);
  const std::string s = take(text);
  gmcal_codebook* cb2 = nullptr;
  REQUIRE(gmcal_codebook_from_json(s.c_str(), &cb2) == GMCAL_OK);
  std::vector<double> p2(4);
  gmcal_codebook_phases(cb2, 1, p2.data(), 4);
  gmcal_codebook_phases(cb, 1, p.data(), 4);
  CHECK(p == p2);

  const double a[4] = {0, 0, 0, 0}, b[4] = {0.5, 0.5, 0.5, 0.5};
  double d = 1.0;
  CHECK(gmcal_codeword_distance(a, b, 4, &d) == GMCAL_OK);
  CHECK(d < 1e-12);

  gmcal_network* sing = nullptr;
  REQUIRE(gmcal_network_from_json(R"({"n": 2, "re": [[1, 1], [1, 1]], "im": [[0, 0], [0, 0]]})", &sing) == GMCAL_OK);
  gmcal_codebook* none = nullptr;
  CHECK(gmcal_codebook_extract(sing, &none) == GMCAL_ERR_SINGULAR_MATRIX);
  CHECK(none == nullptr);

  gmcal_codebook_destroy(cb2);
  gmcal_codebook_destroy(cb);
  gmcal_network_destroy(sing);
  gmcal_network_destroy(net);
}

TEST_CASE("c api: devices and calibration") {
  gmcal_network* net = nullptr;
  REQUIRE(gmcal_network_create("butler", 4, &net) == GMCAL_OK);
  REQUIRE(gmcal_network_add_random_errors(net, 8) == GMCAL_OK);

  char* noise = nullptr;
  REQUIRE(gmcal_noise_preset_json("experiment", 3, &noise) == GMCAL_OK);
  const std::string noise_text = take(noise);
  CHECK(gmcal_noise_preset_json("storm", 3, &noise) == GMCAL_ERR_INVALID_ARGUMENT);

  gmcal_device* dev = nullptr;
  REQUIRE(gmcal_device_create(net, noise_text.c_str(), &dev) == GMCAL_OK);
  CHECK(gmcal_device_ports(dev) == 4);
  const double x[4] = {0.1, 0.2, 0.3, 0.4};
  double out[4];
  REQUIRE(gmcal_device_measure(dev, x, 4, out, 4) == GMCAL_OK);
  const double far[4] = {0, 0, 0, 100};
  CHECK(gmcal_device_measure(dev, far, 4, out, 4) == GMCAL_ERR_OUT_OF_BOUNDS);

  char* snap = nullptr;
  REQUIRE(gmcal_device_snapshot_json(dev, &snap) == GMCAL_OK);
  const std::string snap_text = take(snap);
  double a1[4], a2[4];
  gmcal_device_measure(dev, x, 4, a1, 4);
  REQUIRE(gmcal_device_restore_json(dev, snap_text.c_str()) == GMCAL_OK);
  gmcal_device_measure(dev, x, 4, a2, 4);
  for (int k = 0; k < 4; ++k) CHECK(a1[k] == a2[k]);
  uint64_t evals = 0;
  gmcal_device_evaluations(dev, &evals);
  CHECK(evals == 2);
  CHECK(gmcal_device_reset(dev) == GMCAL_OK);
  gmcal_device_evaluations(dev, &evals);
  CHECK(evals == 0);

  gmcal_calibration* cal = nullptr;
  REQUIRE(gmcal_calibrate_gbnm(dev, 2, R"({"seed": 4})", &cal) == GMCAL_OK);
  CHECK(gmcal_calibration_channels(cal) == 1);
  size_t port = 9;
  gmcal_calibration_port(cal, 0, &port);
  CHECK(port == 2);
  double best = 0.0;
  gmcal_calibration_best_relative(cal, 0, &best);
  CHECK(best > 0.9);
  int conv = 0;
  gmcal_calibration_converged(cal, 0, &conv);
  CHECK(conv == 1);
  CHECK(gmcal_calibration_converged(cal, 1, &conv) == GMCAL_ERR_OUT_OF_BOUNDS);
  char* csv = nullptr;
  REQUIRE(gmcal_calibration_trace_csv(cal, 0, &csv) == GMCAL_OK);
  CHECK(take(csv).rfind("evaluation,start,iteration", 0) == 0);
  gmcal_codebook* none = nullptr;
  CHECK(gmcal_calibration_codebook(cal, &none) == GMCAL_ERR_INVALID_ARGUMENT);
  gmcal_calibration_destroy(cal);

  gmcal_device* clean = nullptr;
  REQUIRE(gmcal_device_create(net, nullptr, &clean) == GMCAL_OK);
  REQUIRE(gmcal_calibrate_codebook(clean, R"({"seed": 1})", &cal) == GMCAL_OK);
  CHECK(gmcal_calibration_channels(cal) == 4);
  gmcal_codebook* learned = nullptr;
  REQUIRE(gmcal_calibration_codebook(cal, &learned) == GMCAL_OK);
  std::vector<double> f(4);
  REQUIRE(gmcal_codebook_verify(learned, net, f.data(), 4) == GMCAL_OK);
  for (double v : f) CHECK(v >= 0.999);
  char* cj = nullptr;
  REQUIRE(gmcal_calibration_to_json(cal, 0, &cj) == GMCAL_OK);
  const json cal_json = json::parse(take(cj));
  CHECK(cal_json.at("all_converged") == true);
  CHECK_FALSE(cal_json.at("channels")[0].contains("trace"));
  gmcal_codebook_destroy(learned);
  gmcal_calibration_destroy(cal);

  REQUIRE(gmcal_calibrate_systematic(clean, 1, nullptr, 64, &cal) == GMCAL_OK);
  std::vector<double> cw(4);
  REQUIRE(gmcal_calibration_codeword(cal, 0, cw.data(), 4) == GMCAL_OK);
  gmcal_device* probe = nullptr;
  gmcal_device_create(net, nullptr, &probe);
  gmcal_device_measure(probe, cw.data(), 4, out, 4);
  CHECK(out[1] / (out[0] + out[1] + out[2] + out[3]) >= 0.999);
  gmcal_calibration_destroy(cal);
  CHECK(gmcal_calibrate_systematic(clean, 0, R"({"n": 8, "steps": [{"channels": [0], "ports": [1]}]})", 64, &cal) ==
        GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_calibrate_gbnm(clean, 0, R"({"n_starts": 0})", &cal) == GMCAL_ERR_INVALID_ARGUMENT);

  gmcal_scan* scan = nullptr;
  REQUIRE(gmcal_scan_run(clean, 0, 1, 2, -4 * 3.141592653589793, 4 * 3.141592653589793, 81, nullptr, &scan) ==
          GMCAL_OK);
  double res = 1.0;
  CHECK(gmcal_scan_periodicity_residual(scan, 2 * 3.141592653589793, &res) == GMCAL_OK);
  CHECK(res < 1e-9);
  size_t cells = 0;
  std::vector<size_t> counts(16);
  CHECK(gmcal_scan_minima_per_cell(scan, 2 * 3.141592653589793, counts.data(), counts.size(), &cells) == GMCAL_OK);
  CHECK(cells == 16);
  for (auto c : counts) CHECK(c == 1);
  char* sc = nullptr;
  REQUIRE(gmcal_scan_csv(scan, &sc) == GMCAL_OK);
  CHECK(take(sc).size() > 100);
  gmcal_scan_destroy(scan);
  CHECK(gmcal_scan_run(clean, 0, 1, 1, -1, 1, 10, nullptr, &scan) == GMCAL_ERR_INVALID_ARGUMENT);

  gmcal_device_destroy(probe);
  gmcal_device_destroy(clean);
  gmcal_device_destroy(dev);
  gmcal_network_destroy(net);
}

TEST_CASE("c api: experiment") {
  char* report = nullptr;
  gmcal_calibration* ch = nullptr;
  REQUIRE(gmcal_emulate_experiment(1, nullptr, &report, &ch) == GMCAL_OK);
  const json r = json::parse(take(report));
  CHECK(r.at("finals").size() == 4);
  CHECK(r.at("reference")[0] == 0.937);
  CHECK(gmcal_calibration_channels(ch) == 4);
  gmcal_calibration_destroy(ch);

  REQUIRE(gmcal_emulate_experiment(1, R"({"noise_preset": "none"})", &report, nullptr) == GMCAL_OK);
  const json clean = json::parse(take(report));
  for (double f : clean.at("finals")) CHECK(f >= 0.999);

  CHECK(gmcal_emulate_experiment(1, R"({"colour": "red"})", &report, nullptr) == GMCAL_ERR_INVALID_ARGUMENT);
  CHECK(gmcal_emulate_experiment(1, R"({"noise_preset": "storm"})", &report, nullptr) == GMCAL_ERR_INVALID_ARGUMENT);
}

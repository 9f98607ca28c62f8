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
// Runs the gmcal executable named by $GMCAL_CLI.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const char* w = std::getenv("GMCAL_WORK");
    fs::path p = w ? w : fs::temp_directory_path() / "gmcal_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const char* cli = std::getenv("GMCAL_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "GMCAL_CLI is not set");
  const std::string cmd = std::string(cli) + " " + args + " > " + (work() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string dir(const std::string& name) { return (work() / name).string(); }

double re(const json& m, int i, int k) { return m["re"][i][k].get<double>(); }
double im(const json& m, int i, int k) { return m["im"][i][k].get<double>(); }

}  // namespace

TEST_CASE("build") {
  REQUIRE(run("--out-dir " + dir("b1") + " build --flavor ideal --n 4") == 0);
  const json doc = load(work() / "b1" / "network.json");
  CHECK(doc["config"]["flavor"] == "ideal");
  const json& m = doc["matrix"];
  CHECK(re(m, 0, 0) == doctest::Approx(0.5));
  CHECK(im(m, 0, 1) == doctest::Approx(0.5));
  CHECK(re(m, 0, 3) == doctest::Approx(-0.5));
  CHECK(re(m, 2, 1) == doctest::Approx(-0.5));
  CHECK(im(m, 3, 2) == doctest::Approx(0.5));
  CHECK(doc["report"]["unitarity_error"].get<double>() < 1e-12);

  REQUIRE(run("--out-dir " + dir("b2") + " build --flavor hadamard --n 2") == 0);
  const json h = load(work() / "b2" / "network.json")["matrix"];
  const double s = std::sqrt(0.5);
  CHECK(re(h, 0, 0) == doctest::Approx(s));
  CHECK(re(h, 0, 1) == doctest::Approx(s));
  CHECK(re(h, 1, 0) == doctest::Approx(s));
  CHECK(re(h, 1, 1) == doctest::Approx(-s));

  REQUIRE(run("--out-dir " + dir("b3") + " --seed 7 build --flavor custom --n 8 --random-phases") == 0);
  const json r = load(work() / "b3" / "network.json");
  CHECK(r["config"]["seed"] == 7);
  CHECK(r["report"]["unitarity_error"].get<double>() < 1e-10);
  CHECK(r["network"]["phase_layers"].size() == 4);

  CHECK(run("--out-dir " + dir("b4") + " build --flavor custom --n 8 --random-phases") == 2);
  CHECK(run("--out-dir " + dir("b4") + " build --flavor ideal --n 6") == 2);
  CHECK(run("--out-dir " + dir("b4") + " build --flavor fourier --n 4") == 2);
  CHECK(run("--out-dir " + dir("b4") + " frobnicate") == 2);
  CHECK(run("--help") == 0);

  // never overwrite silently
  CHECK(run("--out-dir " + dir("b1") + " build --flavor hadamard --n 4") == 5);
  CHECK(load(work() / "b1" / "network.json")["config"]["flavor"] == "ideal");
  CHECK(run("--out-dir " + dir("b1") + " --force build --flavor hadamard --n 4") == 0);
  CHECK(load(work() / "b1" / "network.json")["config"]["flavor"] == "hadamard");

  std::ofstream(work() / "errors.json") << R"({"layers": [[0.1, 0.2, 0.3, 0.4]]})";
  REQUIRE(run("--out-dir " + dir("b5") + " build --flavor ideal --n 4 --errors " + (work() / "errors.json").string()) == 0);
  CHECK(load(work() / "b5" / "network.json")["config"]["errors"]["layers"][0][3] == 0.4);
  REQUIRE(run("--out-dir " + dir("b6") + " --seed 2 build --flavor ideal --n 4 --split-tolerance 0.03") == 0);
  CHECK(load(work() / "b6" / "network.json")["network"]["couplers"][0][0]["t"] != std::sqrt(0.5));
}

TEST_CASE("codebook") {
  REQUIRE(run("--out-dir " + dir("c0") + " build --flavor butler --n 4") == 0);
  const std::string net = (work() / "c0" / "network.json").string();
  REQUIRE(run("--out-dir " + dir("c1") + " codebook --matrix " + net) == 0);
  const json doc = load(work() / "c1" / "codebook.json");
  for (double f : doc["report"]["routed_fraction"]) CHECK(f >= 1.0 - 1e-10);
  CHECK(doc["report"]["orthogonal"] == true);
  CHECK(doc["report"]["non_unit_modulus_columns"].empty());
  CHECK(doc["codebook"]["codewords"][1]["phases_rad"][1].get<double>() == doctest::Approx(M_PI / 2));

  std::ofstream(work() / "singular.json") << R"({"n": 2, "re": [[1, 1], [1, 1]], "im": [[0, 0], [0, 0]]})";
  CHECK(run("--out-dir " + dir("c2") + " codebook --matrix " + (work() / "singular.json").string()) == 3);
  std::ofstream(work() / "broken.json") << "{\"n\": ";
  CHECK(run("--out-dir " + dir("c2") + " codebook --matrix " + (work() / "broken.json").string()) == 2);
  CHECK(run("--out-dir " + dir("c2") + " codebook --matrix " + (work() / "missing.json").string()) == 2);
}

TEST_CASE("scan") {
  REQUIRE(run("--out-dir " + dir("s1") + " scan --flavor ideal --n 4") == 0);
  const std::string csv = slurp(work() / "s1" / "scan.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# config: {", 0) == 0);
  int rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++rows;
    cols = std::count(line.begin(), line.end(), ',');
  }
  CHECK(rows == 162);
  CHECK(cols == 161);
  const json rep = load(work() / "s1" / "scan.json")["report"];
  CHECK(rep["periodic_within_1e-9"] == true);
  CHECK(rep["one_minimum_per_cell"] == true);
  CHECK(rep["minima_per_cell"].size() == 16);

  REQUIRE(run("--out-dir " + dir("s2") + " scan --flavor ideal --n 4 --lo -3.141592653589793 --hi 3.141592653589793 "
              "--resolution 41 --channels 1,2 --hold-codeword") == 0);
  const json one = load(work() / "s2" / "scan.json")["report"];
  CHECK(one["minima_per_cell"] == json::array({1}));

  REQUIRE(run("--out-dir " + dir("s3") + " --seed 3 scan --flavor butler --n 4 --noise-preset harsh --resolution 81") == 0);
  CHECK(load(work() / "s3" / "scan.json")["report"]["noiseless"] == false);
  CHECK(run("--out-dir " + dir("s4") + " scan --flavor ideal --n 4 --noise-preset harsh") == 2);
  CHECK(run("--out-dir " + dir("s4") + " scan --flavor ideal --n 4 --channels 1,1") == 2);
  CHECK(run("--out-dir " + dir("s4") + " scan --flavor ideal --n 4 --resolution 2") == 2);
}

TEST_CASE("calibrate") {
  REQUIRE(run("--out-dir " + dir("k1") + " --seed 3 calibrate --flavor custom --n 4 --random-phases") == 0);
  const json doc = load(work() / "k1" / "calibration.json");
  CHECK(doc["report"]["all_converged"] == true);
  for (const auto& row : doc["report"]["channels"]) CHECK(row["distance_to_analytic"].get<double>() < 0.05);
  CHECK(doc["result"]["codebook"]["codewords"].size() == 4);
  for (int k = 0; k < 4; ++k) {
    const std::string t = slurp(work() / "k1" / ("trace_port" + std::to_string(k) + ".csv"));
    CHECK(t.rfind("# config: {", 0) == 0);
    CHECK(t.find("\nevaluation,start,iteration,phase_0") != std::string::npos);
  }

  REQUIRE(run("--out-dir " + dir("k2") + " calibrate --flavor butler --n 8 --method systematic --channel 5") == 0);
  const json sys = load(work() / "k2" / "calibration.json");
  CHECK(sys["report"]["channels"][0]["port"] == 5);
  CHECK(sys["report"]["channels"][0]["best_relative"].get<double>() >= 0.999);
  CHECK(fs::exists(work() / "k2" / "trace_port5.csv"));

  REQUIRE(run("--out-dir " + dir("k3") + " build --flavor hadamard --n 4") == 0);
  REQUIRE(run("--out-dir " + dir("k3") + " --seed 1 calibrate --matrix " + (work() / "k3" / "network.json").string() +
              " --channel 2") == 0);

  CHECK(run("--out-dir " + dir("k4") + " calibrate --flavor ideal --n 4") == 2);  // GBNM needs a seed
  CHECK(run("--out-dir " + dir("k4") + " --seed 1 calibrate --flavor ideal --n 4 --channel 9") == 2);
  CHECK(run("--out-dir " + dir("k4") + " --seed 1 calibrate --flavor ideal --n 4 --channel x") == 2);
  CHECK(run("--out-dir " + dir("k5") + " --seed 1 calibrate --flavor ideal --n 4 --channel 0 --iters 0 --starts 1") == 4);
  CHECK(fs::exists(work() / "k5" / "calibration.json"));
}

TEST_CASE("emulate-experiment") {
  REQUIRE(run("--out-dir " + dir("e1") + " --seed 1 emulate-experiment") == 0);
  const json doc = load(work() / "e1" / "experiment.json");
  CHECK(doc["config"]["noise_preset"] == "experiment");
  CHECK(doc["report"]["comparison"].size() == 4);
  for (double f : doc["report"]["finals"]) {
    CHECK(f >= 0.90);
    CHECK(f <= 1.00);
  }
  CHECK(doc["report"]["comparison"][3]["reference"] == 0.96);

  REQUIRE(run("--out-dir " + dir("e2") + " --seed 1 emulate-experiment --noise-preset none") == 0);
  for (double f : load(work() / "e2" / "experiment.json")["report"]["finals"]) CHECK(f >= 0.999);

  CHECK(run("--out-dir " + dir("e3") + " --seed 1 emulate-experiment --iters 0") == 4);
  CHECK(run("--out-dir " + dir("e4") + " emulate-experiment") == 2);
}

TEST_CASE("config files and determinism") {
  const std::string flags = "--seed 11 calibrate --flavor butler --n 4 --random-phases --noise-preset experiment";
  REQUIRE(run("--out-dir " + dir("d1") + " " + flags) == 0);
  REQUIRE(run("--out-dir " + dir("d2") + " " + flags) == 0);

  std::ofstream(work() / "cfg.json") << R"({"seed": 11, "flavor": "butler", "n": 4, "random_phases": true,
                                           "noise_preset": "experiment"})";
  REQUIRE(run("--out-dir " + dir("d3") + " --config " + (work() / "cfg.json").string() + " calibrate") == 0);

  int files = 0;
  for (const auto& entry : fs::directory_iterator(work() / "d1")) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    const std::string a = slurp(entry.path());
    CHECK(a == slurp(work() / "d2" / name));
    CHECK(a == slurp(work() / "d3" / name));
    ++files;
  }
  CHECK(files == 5);

  // explicit flags win over the file
  REQUIRE(run("--out-dir " + dir("d4") + " --config " + (work() / "cfg.json").string() + " calibrate --channel 1 --seed 12") == 0);
  const json d4 = load(work() / "d4" / "calibration.json");
  CHECK(d4["config"]["seed"] == 12);
  CHECK(d4["config"]["channel"] == "1");

  std::ofstream(work() / "bad.json") << R"({"colour": "red"})";
  CHECK(run("--out-dir " + dir("d5") + " --config " + (work() / "bad.json").string() + " build") == 2);
}

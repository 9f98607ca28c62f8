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
// gmcal command-line front end. Talks to the library only through gmcal.h.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmcal/gmcal.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kInvalidConfig = 2,
  kSingular = 3,
  kNotConverged = 4,
  kIo = 5,
  kDegenerate = 6,
};

struct Failure {
  int code;
  std::string message;
};

int exit_for(gmcal_status s) {
  switch (s) {
    case GMCAL_OK: return kOk;
    case GMCAL_ERR_INVALID_ARGUMENT:
    case GMCAL_ERR_OUT_OF_BOUNDS: return kInvalidConfig;
    case GMCAL_ERR_SINGULAR_MATRIX: return kSingular;
    case GMCAL_ERR_DEGENERATE_INTERFERENCE: return kDegenerate;
    case GMCAL_ERR_IO: return kIo;
    default: return kInternal;
  }
}

void check(gmcal_status s) {
  if (s != GMCAL_OK) throw Failure{exit_for(s), std::string(gmcal_status_name(s)) + ": " + gmcal_last_error()};
}

[[noreturn]] void invalid(const std::string& msg) { throw Failure{kInvalidConfig, msg}; }

std::string take(char* s) {
  std::string out = s;
  gmcal_string_free(s);
  return out;
}

Json take_json(char* s) { return Json::parse(take(s)); }

template <class T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using Network = std::unique_ptr<gmcal_network, Deleter<gmcal_network, gmcal_network_destroy>>;
using Codebook = std::unique_ptr<gmcal_codebook, Deleter<gmcal_codebook, gmcal_codebook_destroy>>;
using Device = std::unique_ptr<gmcal_device, Deleter<gmcal_device, gmcal_device_destroy>>;
using Calibration = std::unique_ptr<gmcal_calibration, Deleter<gmcal_calibration, gmcal_calibration_destroy>>;
using Scan = std::unique_ptr<gmcal_scan, Deleter<gmcal_scan, gmcal_scan_destroy>>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "cannot read " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    invalid(path + ": " + e.what());
  }
}

// ---- options

struct Options {
  CLI::App app{"Transfer matrices, codebooks and intensity-only calibration of butterfly optical networks",
               "gmcal"};

  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool force = false;
  std::string config;

  // shared network source
  std::string flavor = "ideal";
  std::size_t n = 4;
  bool random_phases = false;
  double split_tolerance = 0.0;
  std::string errors_file;
  std::string matrix_file;

  std::string output;
  std::string noise_preset = "none";

  // scan
  std::vector<std::size_t> channels = {0, 1};
  std::size_t port = 0;
  double lo = -4.0 * kPi;
  double hi = 4.0 * kPi;
  std::size_t scan_resolution = 161;
  bool hold_codeword = false;

  // calibrate / experiment
  std::string channel = "all";
  std::string method = "gbnm";
  std::size_t starts = 12;
  std::size_t iters = 100;
  double tolerance = 1e-3;
  std::size_t stagnation = 30;
  std::size_t sweep_resolution = 64;
  std::string mapping_file;

  CLI::App* build = nullptr;
  CLI::App* codebook = nullptr;
  CLI::App* scan = nullptr;
  CLI::App* calibrate = nullptr;
  CLI::App* experiment = nullptr;

  Options() {
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", seed, "Master seed (required for stochastic runs)");
    app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--force", force, "Overwrite existing output files");
    app.add_option("--config", config, "JSON file of option values; explicit flags take precedence")
        ->check(CLI::ExistingFile);

    const std::vector<std::string> flavors = {"ideal", "hadamard", "butler", "custom"};
    const std::vector<std::string> presets = {"none", "experiment", "drift", "harsh"};

    build = app.add_subcommand("build", "Build a transfer matrix and report its unitarity");
    build->add_option("--flavor", flavor)->check(CLI::IsMember(flavors))->capture_default_str();
    build->add_option("--n", n, "Port count (power of two)")->capture_default_str();
    build->add_flag("--random-phases", random_phases, "Uniform random phase errors in every inter-stage gap");
    build->add_option("--split-tolerance", split_tolerance, "Draw coupler power splits from 0.5 +/- tol")
        ->capture_default_str();
    build->add_option("--errors", errors_file, "JSON file {\"layers\": [...], \"couplers\": [...]}")
        ->check(CLI::ExistingFile);
    build->add_option("--output", output, "Output file name")->default_str("network.json");

    codebook = app.add_subcommand("codebook", "Invert a transfer matrix into its codebook");
    codebook->add_option("--matrix", matrix_file, "Network or matrix JSON")->required()->check(CLI::ExistingFile);
    codebook->add_option("--output", output, "Output file name")->default_str("codebook.json");

    scan = app.add_subcommand("scan", "Objective grid over the phases of two channels");
    add_source(scan);
    scan->add_option("--channels", channels, "Two channels, comma separated")->delimiter(',')->expected(2);
    scan->add_option("--port", port, "Target port")->capture_default_str();
    scan->add_option("--lo", lo)->capture_default_str();
    scan->add_option("--hi", hi)->capture_default_str();
    scan->add_option("--resolution", scan_resolution, "Samples per axis")->capture_default_str();
    scan->add_option("--noise-preset", noise_preset)->check(CLI::IsMember(presets))->capture_default_str();
    scan->add_flag("--hold-codeword", hold_codeword, "Hold the other channels at the analytic codeword");

    calibrate = app.add_subcommand("calibrate", "Learn codewords from intensity readings");
    add_source(calibrate);
    calibrate->add_option("--channel", channel, "Port index or 'all'")->capture_default_str();
    calibrate->add_option("--method", method)
        ->check(CLI::IsMember(std::vector<std::string>{"gbnm", "systematic"}))
        ->capture_default_str();
    calibrate->add_option("--noise-preset", noise_preset)->check(CLI::IsMember(presets))->capture_default_str();
    add_gbnm(calibrate);
    calibrate->add_option("--resolution", sweep_resolution, "Systematic sweep samples per period")
        ->capture_default_str();
    calibrate->add_option("--mapping", mapping_file, "Systematic sweep plan JSON")->check(CLI::ExistingFile);

    experiment = app.add_subcommand("emulate-experiment", "Four-port free-space experiment under realistic noise");
    experiment->add_option("--noise-preset", noise_preset)->check(CLI::IsMember(presets))->default_str("experiment");
    experiment->add_option("--flavor", flavor)->check(CLI::IsMember(flavors))->default_str("butler");
    experiment->add_option("--n", n)->capture_default_str();
    add_gbnm(experiment);
  }

  void add_source(CLI::App* sub) {
    sub->add_option("--matrix", matrix_file, "Network or matrix JSON (e.g. from build)")->check(CLI::ExistingFile);
    sub->add_option("--flavor", flavor)
        ->check(CLI::IsMember(std::vector<std::string>{"ideal", "hadamard", "butler", "custom"}))
        ->capture_default_str();
    sub->add_option("--n", n)->capture_default_str();
    sub->add_flag("--random-phases", random_phases, "Uniform random phase errors in every inter-stage gap");
  }

  void add_gbnm(CLI::App* sub) {
    sub->add_option("--starts", starts, "GBNM random starts")->capture_default_str();
    sub->add_option("--iters", iters, "Nelder-Mead iterations per start")->capture_default_str();
    sub->add_option("--tolerance", tolerance, "Simplex diameter stop (rad)")->capture_default_str();
    sub->add_option("--stagnation", stagnation, "Restart after this many evaluations without improvement")
        ->capture_default_str();
  }

  CLI::App* selected() const {
    for (CLI::App* s : {build, codebook, scan, calibrate, experiment})
      if (s->parsed()) return s;
    return nullptr;
  }
};

std::string scalar_arg(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  invalid("unsupported config value " + v.dump());
}

// Turns config-file entries that were not given on the command line into
// extra arguments.
std::vector<std::string> config_args(const Options& o, const Json& cfg) {
  if (!cfg.is_object()) invalid("config file must hold a JSON object");
  CLI::App* sub = o.selected();
  std::vector<std::string> args;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "subcommand") {
      if (value != sub->get_name()) invalid("config is for subcommand " + value.dump());
      continue;
    }
    std::string flag = "--" + key;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    const CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option(flag);
    } catch (const CLI::OptionNotFound&) {
      try {
        opt = o.app.get_option(flag);
      } catch (const CLI::OptionNotFound&) {
        invalid("unknown config key '" + key + "'");
      }
    }
    if (flag == "--config" || flag == "--out-dir" || flag == "--force") invalid("'" + key + "' cannot come from a config file");
    if (opt->count() > 0 || value.is_null()) continue;
    if (value.is_boolean()) {
      if (opt->get_expected_min() != 0) invalid("config key '" + key + "' expects a value");
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar_arg(v);
      args.push_back(joined);
    } else {
      args.push_back(scalar_arg(value));
    }
  }
  return args;
}

// ---- outputs

class Outputs {
 public:
  Outputs(const Options& o) : dir_(o.out_dir), force_(o.force) {}

  void plan(const std::string& name) { names_.push_back(name); }

  // Refuses before any work is done if a planned file exists.
  void preflight() const {
    for (const auto& name : names_) {
      const fs::path p = dir_ / name;
      if (fs::exists(p) && !force_) {
        throw Failure{kIo, p.string() + " exists (use --force to overwrite)"};
      }
    }
  }

  void write(const std::string& name, const std::string& text) const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure{kIo, "cannot create " + dir_.string() + ": " + ec.message()};
    const fs::path p = dir_ / name;
    if (fs::exists(p) && !force_) throw Failure{kIo, p.string() + " exists (use --force to overwrite)"};
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw Failure{kIo, "cannot write " + p.string()};
    std::cout << "wrote " << p.string() << '\n';
  }

  void write_json(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }

  void write_csv(const std::string& name, const Json& config, const std::string& body) const {
    write(name, "# config: " + config.dump() + "\n" + body);
  }

 private:
  fs::path dir_;
  bool force_;
  std::vector<std::string> names_;
};

std::uint64_t need_seed(const Options& o, const std::string& why) {
  if (!o.seed) invalid("--seed is required " + why);
  return *o.seed;
}

Json seed_json(const Options& o) { return o.seed ? Json(*o.seed) : Json(nullptr); }

Network network_from_file(const std::string& path) {
  const std::string text = read_file(path);
  gmcal_network* net = nullptr;
  check(gmcal_network_from_json(text.c_str(), &net));
  return Network(net);
}

Network network_from_flavor(const std::string& flavor, std::size_t n) {
  gmcal_network* net = nullptr;
  check(gmcal_network_create(flavor.c_str(), n, &net));
  return Network(net);
}

// Network for scan/calibrate, and the config entries describing it.
Network source_network(const Options& o, Json& config) {
  if (!o.matrix_file.empty()) {
    config["matrix"] = o.matrix_file;
    if (o.random_phases) invalid("--random-phases applies to --flavor networks only");
    return network_from_file(o.matrix_file);
  }
  config["flavor"] = o.flavor;
  config["n"] = o.n;
  config["random_phases"] = o.random_phases;
  Network net = network_from_flavor(o.flavor, o.n);
  if (o.random_phases) check(gmcal_network_add_random_errors(net.get(), need_seed(o, "with --random-phases")));
  return net;
}

Json noise_json(const Options& o) {
  if (o.noise_preset != "none") need_seed(o, "with a noise preset");
  char* text = nullptr;
  check(gmcal_noise_preset_json(o.noise_preset.c_str(), o.seed.value_or(0), &text));
  return take_json(text);
}

Json gbnm_json(const Options& o) {
  return Json{{"n_starts", o.starts}, {"max_iters_per_start", o.iters}, {"tolerance", o.tolerance},
              {"stagnation_evals", o.stagnation}};
}

std::vector<double> matrix_phases(const gmcal_codebook* cb, std::size_t port, std::size_t n) {
  std::vector<double> p(n);
  check(gmcal_codebook_phases(cb, port, p.data(), n));
  return p;
}

Json network_report(const gmcal_network* net) {
  double unit = 0.0, orth = 0.0;
  check(gmcal_network_unitarity_error(net, &unit));
  check(gmcal_network_orthogonality_error(net, &orth));
  return Json{{"unitarity_error", unit}, {"column_orthogonality_error", orth}, {"unitary", unit < 1e-10}};
}

Json network_json(const gmcal_network* net) {
  Json j;
  char* spec = nullptr;
  if (gmcal_network_spec_json(net, &spec) == GMCAL_OK) j["network"] = take_json(spec);
  char* m = nullptr;
  check(gmcal_network_matrix_json(net, &m));
  j["matrix"] = take_json(m);
  return j;
}

// ---- subcommands

int run_build(const Options& o) {
  Json config{{"subcommand", "build"}, {"seed", seed_json(o)}, {"flavor", o.flavor}, {"n", o.n},
              {"random_phases", o.random_phases}, {"split_tolerance", o.split_tolerance}};
  Json errors;
  if (!o.errors_file.empty()) {
    errors = read_json(o.errors_file);
    config["errors"] = errors;
  }
  const std::string name = o.output.empty() ? "network.json" : o.output;
  Outputs out(o);
  out.plan(name);
  out.preflight();

  Network net = network_from_flavor(o.flavor, o.n);
  if (!errors.is_null()) check(gmcal_network_apply_errors_json(net.get(), errors.dump().c_str()));
  if (o.random_phases) check(gmcal_network_add_random_errors(net.get(), need_seed(o, "with --random-phases")));
  if (o.split_tolerance > 0.0) {
    const std::uint64_t seed = need_seed(o, "with --split-tolerance");
    check(gmcal_network_randomize_couplers(net.get(), o.split_tolerance, seed ^ 0x5eedc0u));
  }

  Json doc{{"config", config}};
  const Json net_doc = network_json(net.get());
  for (const auto& [k, v] : net_doc.items()) doc[k] = v;
  doc["report"] = network_report(net.get());
  out.write_json(name, doc);
  std::cout << "unitarity error " << doc["report"]["unitarity_error"].get<double>() << '\n';
  return kOk;
}

int run_codebook(const Options& o) {
  Json config{{"subcommand", "codebook"}, {"seed", seed_json(o)}, {"matrix", o.matrix_file}};
  const std::string name = o.output.empty() ? "codebook.json" : o.output;
  Outputs out(o);
  out.plan(name);
  out.preflight();

  Network net = network_from_file(o.matrix_file);
  gmcal_codebook* raw = nullptr;
  check(gmcal_codebook_extract(net.get(), &raw));
  Codebook cb(raw);
  const std::size_t n = gmcal_network_ports(net.get());

  char* text = nullptr;
  check(gmcal_codebook_to_json(cb.get(), &text));
  Json codebook = take_json(text);
  std::vector<double> fractions(n);
  check(gmcal_codebook_verify(cb.get(), net.get(), fractions.data(), n));
  double gram = 0.0, amp = 0.0;
  check(gmcal_codebook_gram_error(cb.get(), &gram));
  check(gmcal_codebook_amplitude_deviation(cb.get(), &amp));
  Json non_unit = Json::array();
  for (std::size_t k = 0; k < n; ++k) {
    for (double a : codebook["amplitudes"][k]) {
      if (std::abs(a - 1.0) > 1e-9) {
        non_unit.push_back(k);
        break;
      }
    }
  }

  Json doc{{"config", config},
           {"codebook", codebook},
           {"report",
            {{"routed_fraction", fractions},
             {"gram_error", gram},
             {"orthogonal", gram < 1e-8},
             {"max_amplitude_deviation", amp},
             {"non_unit_modulus_columns", non_unit}}}};
  out.write_json(name, doc);
  std::cout << "gram error " << gram << ", max amplitude deviation " << amp << '\n';
  return kOk;
}

int run_scan(const Options& o) {
  Json config{{"subcommand", "scan"}, {"seed", seed_json(o)}};
  Network net = source_network(o, config);
  if (o.channels.size() != 2) invalid("--channels needs exactly two indices");
  config["channels"] = o.channels;
  config["port"] = o.port;
  config["lo"] = o.lo;
  config["hi"] = o.hi;
  config["resolution"] = o.scan_resolution;
  config["noise_preset"] = o.noise_preset;
  config["hold_codeword"] = o.hold_codeword;
  const Json noise = noise_json(o);
  config["noise"] = noise;

  Outputs out(o);
  out.plan("scan.csv");
  out.plan("scan.json");
  out.preflight();

  const std::size_t n = gmcal_network_ports(net.get());
  std::vector<double> base;
  if (o.hold_codeword) {
    gmcal_codebook* raw = nullptr;
    check(gmcal_codebook_extract(net.get(), &raw));
    Codebook cb(raw);
    if (o.port >= n) invalid("--port out of range");
    base = matrix_phases(cb.get(), o.port, n);
  }

  gmcal_device* dev_raw = nullptr;
  check(gmcal_device_create(net.get(), noise.dump().c_str(), &dev_raw));
  Device dev(dev_raw);
  gmcal_scan* scan_raw = nullptr;
  check(gmcal_scan_run(dev.get(), o.port, o.channels[0], o.channels[1], o.lo, o.hi, o.scan_resolution,
                       base.empty() ? nullptr : base.data(), &scan_raw));
  Scan scan(scan_raw);

  Json report{{"noiseless", o.noise_preset == "none"}};
  double residual = 0.0;
  if (gmcal_scan_periodicity_residual(scan.get(), 2.0 * kPi, &residual) == GMCAL_OK) {
    report["periodicity_residual"] = residual;
    report["periodic_within_1e-9"] = residual < 1e-9;
  } else {
    report["periodicity_residual"] = nullptr;
    report["periodicity_note"] = gmcal_last_error();
  }
  std::size_t cells = 0;
  if (gmcal_scan_minima_per_cell(scan.get(), 2.0 * kPi, nullptr, 0, &cells) == GMCAL_OK) {
    std::vector<std::size_t> counts(cells);
    check(gmcal_scan_minima_per_cell(scan.get(), 2.0 * kPi, counts.data(), cells, &cells));
    report["minima_per_cell"] = counts;
    bool one = !counts.empty();
    for (auto c : counts) one = one && c == 1;
    report["one_minimum_per_cell"] = one;
  } else {
    report["minima_per_cell"] = nullptr;
  }

  char* csv = nullptr;
  check(gmcal_scan_csv(scan.get(), &csv));
  out.write_csv("scan.csv", config, take(csv));
  out.write_json("scan.json", Json{{"config", config}, {"base", base}, {"report", report}});
  return kOk;
}

int run_calibrate(const Options& o) {
  Json config{{"subcommand", "calibrate"}, {"seed", seed_json(o)}};
  Network net = source_network(o, config);
  const std::size_t n = gmcal_network_ports(net.get());
  config["method"] = o.method;
  config["channel"] = o.channel;
  config["noise_preset"] = o.noise_preset;
  const Json noise = noise_json(o);
  config["noise"] = noise;

  std::vector<std::size_t> ports;
  if (o.channel == "all") {
    for (std::size_t k = 0; k < n; ++k) ports.push_back(k);
  } else {
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(o.channel, &used);
      if (used != o.channel.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      invalid("--channel must be a port index or 'all'");
    }
    if (k >= n) invalid("--channel out of range");
    ports.push_back(k);
  }

  Json method_cfg;
  std::string mapping;
  if (o.method == "gbnm") {
    method_cfg = gbnm_json(o);
    method_cfg["seed"] = need_seed(o, "for GBNM");
  } else {
    method_cfg = Json{{"sweep_resolution", o.sweep_resolution}};
    if (!o.mapping_file.empty()) {
      if (ports.size() != 1) invalid("--mapping needs a single --channel");
      const Json m = read_json(o.mapping_file);
      method_cfg["mapping"] = m;
      mapping = m.dump();
    }
  }
  config[o.method] = method_cfg;

  Outputs out(o);
  out.plan("calibration.json");
  for (auto k : ports) out.plan("trace_port" + std::to_string(k) + ".csv");
  out.preflight();

  gmcal_device* dev_raw = nullptr;
  check(gmcal_device_create(net.get(), noise.dump().c_str(), &dev_raw));
  Device dev(dev_raw);

  // Each result handle holds one or more channels.
  std::vector<Calibration> results;
  Json summary;
  if (o.method == "gbnm" && ports.size() == n) {
    gmcal_calibration* cal = nullptr;
    check(gmcal_calibrate_codebook(dev.get(), method_cfg.dump().c_str(), &cal));
    results.emplace_back(cal);
    char* text = nullptr;
    check(gmcal_calibration_to_json(cal, 0, &text));
    summary = take_json(text);
  } else {
    summary["channels"] = Json::array();
    for (auto k : ports) {
      gmcal_calibration* cal = nullptr;
      if (o.method == "gbnm") {
        Json c = method_cfg;
        check(gmcal_calibrate_gbnm(dev.get(), k, c.dump().c_str(), &cal));
      } else {
        check(gmcal_calibrate_systematic(dev.get(), k, mapping.empty() ? nullptr : mapping.c_str(),
                                         o.sweep_resolution, &cal));
      }
      results.emplace_back(cal);
      char* text = nullptr;
      check(gmcal_calibration_to_json(cal, 0, &text));
      summary["channels"].push_back(take_json(text)["channels"][0]);
    }
  }

  // Compare against the analytic codebook of the nominal network when it exists.
  gmcal_codebook* analytic_raw = nullptr;
  Codebook analytic;
  if (gmcal_codebook_extract(net.get(), &analytic_raw) == GMCAL_OK) analytic.reset(analytic_raw);

  bool all_converged = true;
  Json checks = Json::array();
  for (const auto& cal : results) {
    for (std::size_t i = 0; i < gmcal_calibration_channels(cal.get()); ++i) {
      std::size_t k = 0;
      int conv = 0;
      double best = 0.0;
      check(gmcal_calibration_port(cal.get(), i, &k));
      check(gmcal_calibration_converged(cal.get(), i, &conv));
      check(gmcal_calibration_best_relative(cal.get(), i, &best));
      all_converged = all_converged && conv != 0;
      Json row{{"port", k}, {"best_relative", best}, {"converged", conv != 0}};
      if (analytic) {
        std::vector<double> learned(n);
        check(gmcal_calibration_codeword(cal.get(), i, learned.data(), n));
        const auto ref = matrix_phases(analytic.get(), k, n);
        double d = 0.0;
        check(gmcal_codeword_distance(learned.data(), ref.data(), n, &d));
        row["distance_to_analytic"] = d;
      }
      checks.push_back(row);
      char* csv = nullptr;
      check(gmcal_calibration_trace_csv(cal.get(), i, &csv));
      out.write_csv("trace_port" + std::to_string(k) + ".csv", config, take(csv));
      std::cout << "port " << k << ": best relative " << best << (conv ? "" : " (not converged)") << '\n';
    }
  }

  Json doc{{"config", config}, {"device", network_json(net.get())}, {"result", summary}};
  doc["device"]["noise"] = noise;
  doc["report"] = Json{{"all_converged", all_converged}, {"channels", checks}};
  out.write_json("calibration.json", doc);
  return all_converged ? kOk : kNotConverged;
}

int run_experiment(const Options& o) {
  const std::uint64_t seed = need_seed(o, "for emulate-experiment");
  auto given = [&](const char* name) { return o.experiment->get_option(name)->count() > 0; };
  const std::string preset = given("--noise-preset") ? o.noise_preset : "experiment";
  const std::string flavor = given("--flavor") ? o.flavor : "butler";
  const Json overrides{{"noise_preset", preset}, {"n", o.n}, {"flavor", flavor}, {"gbnm", gbnm_json(o)}};
  Json config{{"subcommand", "emulate-experiment"}, {"seed", seed}};
  for (auto& [k, v] : overrides.items()) config[k] = v;

  Outputs out(o);
  out.plan("experiment.json");
  for (std::size_t k = 0; k < o.n; ++k) out.plan("trace_port" + std::to_string(k) + ".csv");
  out.preflight();

  char* text = nullptr;
  gmcal_calibration* raw = nullptr;
  check(gmcal_emulate_experiment(seed, overrides.dump().c_str(), &text, &raw));
  Calibration cal(raw);
  Json report = take_json(text);

  Json comparison = Json::array();
  const auto& finals = report["finals"];
  const auto& reference = report["reference"];
  for (std::size_t k = 0; k < finals.size(); ++k) {
    Json row{{"channel", k}, {"final", finals[k]}};
    if (k < reference.size()) {
      row["reference"] = reference[k];
      row["difference_pp"] = 100.0 * (finals[k].get<double>() - reference[k].get<double>());
    }
    comparison.push_back(row);
    std::printf("channel %zu: final %.4f", k, finals[k].get<double>());
    if (k < reference.size()) std::printf("  reference %.3f", reference[k].get<double>());
    std::printf("\n");
  }
  report["comparison"] = comparison;

  for (std::size_t i = 0; i < gmcal_calibration_channels(cal.get()); ++i) {
    char* csv = nullptr;
    check(gmcal_calibration_trace_csv(cal.get(), i, &csv));
    out.write_csv("trace_port" + std::to_string(i) + ".csv", config, take(csv));
  }
  out.write_json("experiment.json", Json{{"config", config}, {"report", report}});
  return report["all_converged"].get<bool>() ? kOk : kNotConverged;
}

int dispatch(const Options& o) {
  CLI::App* sub = o.selected();
  if (sub == o.build) return run_build(o);
  if (sub == o.codebook) return run_codebook(o);
  if (sub == o.scan) return run_scan(o);
  if (sub == o.calibrate) return run_calibrate(o);
  return run_experiment(o);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back

  auto parse = [](Options& o, std::vector<std::string> a) -> std::optional<int> {
    try {
      o.app.parse(a);
    } catch (const CLI::ParseError& e) {
      const int rc = o.app.exit(e);
      return rc == 0 ? kOk : kInvalidConfig;
    }
    return std::nullopt;
  };

  try {
    auto opts = std::make_unique<Options>();
    if (auto rc = parse(*opts, args)) return *rc;
    if (!opts->config.empty()) {
      const auto extra = config_args(*opts, read_json(opts->config));
      std::vector<std::string> merged(extra.rbegin(), extra.rend());
      merged.insert(merged.end(), args.begin(), args.end());
      opts = std::make_unique<Options>();
      if (auto rc = parse(*opts, merged)) return *rc;
    }
    return dispatch(*opts);
  } catch (const Failure& f) {
    std::cerr << "gmcal: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "gmcal: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

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

#include "gmcal/serialize.hpp"

#include <charconv>
#include <sstream>

#include "gmcal/error.hpp"

namespace gmcal {

namespace {

// nlohmann exceptions become invalid_argument errors with the offending context.
template <typename F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("malformed ") + what + " JSON: " + e.what());
  }
}

std::vector<std::string> trace_columns(std::size_t n) {
  std::vector<std::string> cols = {"evaluation", "start", "iteration"};
  for (std::size_t j = 0; j < n; ++j) cols.push_back("phase_" + std::to_string(j));
  for (std::size_t j = 0; j < n; ++j) cols.push_back("intensity_" + std::to_string(j));
  cols.emplace_back("relative_target");
  cols.emplace_back("best_relative");
  return cols;
}

std::size_t trace_ports(const ConvergenceTrace& trace) {
  return trace.rows.empty() ? trace.best_phases.size() : trace.rows.front().phases.size();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json to_json(const CouplerSpec& c) { return Json{{"t", c.t}, {"r", c.r}}; }

Json to_json(const NetworkSpec& spec) {
  Json couplers = Json::array();
  for (const auto& stage : spec.couplers) {
    Json s = Json::array();
    for (const auto& c : stage) s.push_back(to_json(c));
    couplers.push_back(std::move(s));
  }
  return Json{{"n", spec.n},
              {"flavor", std::string(to_string(spec.flavor))},
              {"phase_layers", spec.phase_layers},
              {"couplers", std::move(couplers)}};
}

NetworkSpec network_spec_from_json(const Json& j) {
  return parse_guard("network spec", [&] {
    const auto n = j.at("n").get<std::size_t>();
    const Flavor flavor = parse_flavor(j.value("flavor", std::string("custom")));
    NetworkSpec spec = make_spec(flavor, n);
    if (j.contains("phase_layers")) spec.phase_layers = j.at("phase_layers").get<std::vector<PhaseLayer>>();
    if (j.contains("couplers")) {
      spec.couplers.clear();
      for (const auto& stage : j.at("couplers")) {
        std::vector<CouplerSpec> s;
        for (const auto& c : stage) s.push_back({c.at("t").get<double>(), c.at("r").get<double>()});
        spec.couplers.push_back(std::move(s));
      }
    }
    spec.validate();
    return spec;
  });
}

Json to_json(const TransferMatrix& a) {
  const auto n = a.size();
  Json re = Json::array();
  Json im = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(n), m(n);
    for (std::size_t k = 0; k < n; ++k) {
      r[k] = a(i, k).real();
      m[k] = a(i, k).imag();
    }
    re.push_back(r);
    im.push_back(m);
  }
  return Json{{"n", n}, {"re", std::move(re)}, {"im", std::move(im)}};
}

TransferMatrix transfer_matrix_from_json(const Json& j) {
  return parse_guard("transfer matrix", [&] {
    const auto n = j.at("n").get<std::size_t>();
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    const auto im = j.at("im").get<std::vector<std::vector<double>>>();
    if (re.size() != n || im.size() != n) fail(ErrorCode::invalid_argument, "matrix row count does not match n");
    CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (re[i].size() != n || im[i].size() != n) fail(ErrorCode::invalid_argument, "matrix row length mismatch");
      for (std::size_t k = 0; k < n; ++k) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = Complex(re[i][k], im[i][k]);
      }
    }
    return TransferMatrix(std::move(m));
  });
}

Json to_json(const Codebook& cb) {
  Json words = Json::array();
  for (const auto& cw : cb.codewords) words.push_back(Json{{"target_port", cw.target_port}, {"phases_rad", cw.phases}});
  Json j{{"n", cb.n}, {"output_scale", cb.output_scale}, {"codewords", std::move(words)}};
  if (!cb.amplitudes.empty()) j["amplitudes"] = cb.amplitudes;
  return j;
}

Codebook codebook_from_json(const Json& j) {
  return parse_guard("codebook", [&] {
    Codebook cb;
    cb.n = j.at("n").get<std::size_t>();
    cb.output_scale = j.at("output_scale").get<double>();
    for (const auto& w : j.at("codewords")) {
      Codeword cw{w.at("target_port").get<std::size_t>(), w.at("phases_rad").get<std::vector<double>>()};
      if (cw.phases.size() != cb.n || cw.target_port >= cb.n) {
        fail(ErrorCode::invalid_argument, "codeword does not match codebook size");
      }
      cb.codewords.push_back(std::move(cw));
    }
    if (j.contains("amplitudes")) cb.amplitudes = j.at("amplitudes").get<std::vector<std::vector<double>>>();
    return cb;
  });
}

Json to_json(const NoiseConfig& c) {
  return Json{{"drift_sigma", c.drift_sigma},
              {"hysteresis_backlash", c.hysteresis_backlash},
              {"visibility", c.visibility},
              {"detector_sigma_rel", c.detector_sigma_rel},
              {"splitting_tolerance", c.splitting_tolerance},
              {"seed", c.seed},
              {"phase_bounds", {c.phase_lo, c.phase_hi}}};
}

NoiseConfig noise_config_from_json(const Json& j, NoiseConfig c) {
  return parse_guard("noise config", [&] {
    c.drift_sigma = j.value("drift_sigma", c.drift_sigma);
    c.hysteresis_backlash = j.value("hysteresis_backlash", c.hysteresis_backlash);
    c.visibility = j.value("visibility", c.visibility);
    c.detector_sigma_rel = j.value("detector_sigma_rel", c.detector_sigma_rel);
    c.splitting_tolerance = j.value("splitting_tolerance", c.splitting_tolerance);
    c.seed = j.value("seed", c.seed);
    if (j.contains("phase_bounds")) {
      const auto b = j.at("phase_bounds").get<std::vector<double>>();
      if (b.size() != 2) fail(ErrorCode::invalid_argument, "phase_bounds must hold [lo, hi]");
      c.phase_lo = b[0];
      c.phase_hi = b[1];
    }
    c.validate();
    return c;
  });
}

Json to_json(const DeviceState& s) {
  return Json{{"drift", s.drift},
              {"actuator", s.actuator},
              {"actuator_initialized", s.actuator_initialized},
              {"evaluations", s.evaluations},
              {"rng", s.rng}};
}

DeviceState device_state_from_json(const Json& j) {
  return parse_guard("device state", [&] {
    DeviceState s;
    s.drift = j.at("drift").get<std::vector<double>>();
    s.actuator = j.at("actuator").get<std::vector<double>>();
    s.actuator_initialized = j.at("actuator_initialized").get<bool>();
    s.evaluations = j.at("evaluations").get<std::uint64_t>();
    s.rng = j.at("rng").get<std::string>();
    return s;
  });
}

Json to_json(const GbnmConfig& c) {
  return Json{{"n_starts", c.n_starts},
              {"max_iters_per_start", c.max_iters_per_start},
              {"tolerance", c.tolerance},
              {"initial_edge", c.initial_edge},
              {"reflection", c.reflection},
              {"expansion", c.expansion},
              {"contraction", c.contraction},
              {"shrink", c.shrink},
              {"lo", c.lo ? Json(*c.lo) : Json(nullptr)},
              {"hi", c.hi ? Json(*c.hi) : Json(nullptr)},
              {"exclusion_radius", c.exclusion_radius},
              {"stagnation_evals", c.stagnation_evals},
              {"restart_on_stagnation", c.restart_on_stagnation},
              {"max_evaluations", c.max_evaluations},
              {"quality_bar", c.quality_bar},
              {"seed", c.seed}};
}

GbnmConfig gbnm_config_from_json(const Json& j, GbnmConfig c) {
  return parse_guard("GBNM config", [&] {
    c.n_starts = j.value("n_starts", c.n_starts);
    c.max_iters_per_start = j.value("max_iters_per_start", c.max_iters_per_start);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.initial_edge = j.value("initial_edge", c.initial_edge);
    c.reflection = j.value("reflection", c.reflection);
    c.expansion = j.value("expansion", c.expansion);
    c.contraction = j.value("contraction", c.contraction);
    c.shrink = j.value("shrink", c.shrink);
    if (j.contains("lo")) c.lo = j.at("lo").is_null() ? std::nullopt : std::optional<double>(j.at("lo").get<double>());
    if (j.contains("hi")) c.hi = j.at("hi").is_null() ? std::nullopt : std::optional<double>(j.at("hi").get<double>());
    c.exclusion_radius = j.value("exclusion_radius", c.exclusion_radius);
    c.stagnation_evals = j.value("stagnation_evals", c.stagnation_evals);
    c.restart_on_stagnation = j.value("restart_on_stagnation", c.restart_on_stagnation);
    c.max_evaluations = j.value("max_evaluations", c.max_evaluations);
    c.quality_bar = j.value("quality_bar", c.quality_bar);
    c.seed = j.value("seed", c.seed);
    return c;
  });
}

Json to_json(const SystematicMapping& m) {
  Json steps = Json::array();
  for (const auto& s : m.steps) {
    steps.push_back(Json{{"channels", s.channels},
                         {"ports", s.ports},
                         {"sense", s.sense == SweepSense::minimize ? "minimize" : "maximize"}});
  }
  return Json{{"n", m.n}, {"steps", std::move(steps)}};
}

SystematicMapping systematic_mapping_from_json(const Json& j) {
  return parse_guard("systematic mapping", [&] {
    SystematicMapping m;
    m.n = j.at("n").get<std::size_t>();
    for (const auto& s : j.at("steps")) {
      SweepStep step;
      step.channels = s.at("channels").get<std::vector<std::size_t>>();
      step.ports = s.at("ports").get<std::vector<std::size_t>>();
      const auto sense = s.value("sense", std::string("minimize"));
      if (sense != "minimize" && sense != "maximize") fail(ErrorCode::invalid_argument, "unknown sweep sense");
      step.sense = sense == "minimize" ? SweepSense::minimize : SweepSense::maximize;
      m.steps.push_back(std::move(step));
    }
    m.validate();
    return m;
  });
}

Json to_json(const ConvergenceTrace& trace) {
  Json rows = Json::array();
  for (const auto& r : trace.rows) {
    Json row = Json::array({r.evaluation, r.start, r.iteration});
    for (double p : r.phases) row.push_back(p);
    for (double i : r.reading.per_port) row.push_back(i);
    row.push_back(r.relative_target);
    row.push_back(r.best_relative);
    rows.push_back(std::move(row));
  }
  return Json{{"port", trace.port},
              {"columns", trace_columns(trace_ports(trace))},
              {"rows", std::move(rows)},
              {"best_phases", trace.best_phases},
              {"best_relative", trace.best_relative}};
}

Json to_json(const CalibrationResult& r, bool include_trace) {
  Json j{{"target_port", r.codeword.target_port},
         {"phases_rad", r.codeword.phases},
         {"best_relative", r.trace.best_relative},
         {"converged", r.converged},
         {"starts_used", r.starts_used},
         {"evaluations", r.evaluations}};
  if (include_trace) j["trace"] = to_json(r.trace);
  return j;
}

Json to_json(const CodebookCalibration& cal, bool include_traces) {
  Json channels = Json::array();
  for (const auto& c : cal.channels) channels.push_back(to_json(c, include_traces));
  std::vector<std::vector<double>> gram(static_cast<std::size_t>(cal.gram.rows()));
  for (Eigen::Index i = 0; i < cal.gram.rows(); ++i) {
    for (Eigen::Index k = 0; k < cal.gram.cols(); ++k) gram[static_cast<std::size_t>(i)].push_back(cal.gram(i, k));
  }
  return Json{{"codebook", to_json(cal.codebook)},
              {"all_converged", cal.all_converged},
              {"gram_abs_over_n", gram},
              {"max_offdiagonal_gram", cal.max_offdiagonal_gram()},
              {"channels", std::move(channels)}};
}

Json to_json(const ScanGrid& g) {
  std::vector<std::vector<double>> rows(g.resolution);
  for (std::size_t ia = 0; ia < g.resolution; ++ia) {
    rows[ia].assign(g.values.begin() + static_cast<std::ptrdiff_t>(ia * g.resolution),
                    g.values.begin() + static_cast<std::ptrdiff_t>((ia + 1) * g.resolution));
  }
  return Json{{"port", g.port},
              {"channels", {g.channel_a, g.channel_b}},
              {"lo", g.lo},
              {"hi", g.hi},
              {"resolution", g.resolution},
              {"base", g.base},
              {"axis", g.axis},
              {"values", rows}};
}

Json to_json(const ExperimentReport& r, bool include_traces) {
  Json channels = Json::array();
  for (const auto& c : r.channels) channels.push_back(to_json(c, include_traces));
  Json j{{"noise", to_json(r.noise)},
         {"network", to_json(r.network)},
         {"finals", r.finals},
         {"reference", r.reference},
         {"converged", Json::array()},
         {"routed_fraction", r.routed_fraction},
         {"all_converged", r.all_converged},
         {"channels", std::move(channels)}};
  for (bool c : r.converged) j["converged"].push_back(c);
  return j;
}

std::string trace_csv(const ConvergenceTrace& trace) {
  std::ostringstream os;
  const auto cols = trace_columns(trace_ports(trace));
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.evaluation << ',' << r.start << ',' << r.iteration;
    for (double p : r.phases) os << ',' << format_double(p);
    for (double v : r.reading.per_port) os << ',' << format_double(v);
    os << ',' << format_double(r.relative_target) << ',' << format_double(r.best_relative) << '\n';
  }
  return os.str();
}

std::string scan_csv(const ScanGrid& g) {
  std::ostringstream os;
  os << "phase_a\\phase_b";
  for (double b : g.axis) os << ',' << format_double(b);
  os << '\n';
  for (std::size_t ia = 0; ia < g.resolution; ++ia) {
    os << format_double(g.axis[ia]);
    for (std::size_t ib = 0; ib < g.resolution; ++ib) os << ',' << format_double(g.at(ia, ib));
    os << '\n';
  }
  return os.str();
}

}  // namespace gmcal

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
// extern "C" wrappers. Exceptions never cross this boundary.

#include "gmcal/gmcal.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmcal/calibration.hpp"
#include "gmcal/codebook.hpp"
#include "gmcal/device.hpp"
#include "gmcal/error.hpp"
#include "gmcal/network.hpp"
#include "gmcal/serialize.hpp"

struct gmcal_network {
  std::optional<gmcal::NetworkSpec> spec;
  gmcal::TransferMatrix matrix;
};

struct gmcal_codebook {
  gmcal::Codebook cb;
};

struct gmcal_device {
  std::unique_ptr<gmcal::DeviceModel> model;
};

struct gmcal_calibration {
  std::vector<gmcal::CalibrationResult> channels;
  std::optional<gmcal::CodebookCalibration> codebook;
};

struct gmcal_scan {
  gmcal::ScanGrid grid;
};

namespace {

thread_local std::string g_last_error;

gmcal_status to_status(gmcal::ErrorCode c) {
  switch (c) {
    case gmcal::ErrorCode::invalid_argument: return GMCAL_ERR_INVALID_ARGUMENT;
    case gmcal::ErrorCode::singular_matrix: return GMCAL_ERR_SINGULAR_MATRIX;
    case gmcal::ErrorCode::out_of_bounds: return GMCAL_ERR_OUT_OF_BOUNDS;
    case gmcal::ErrorCode::degenerate_interference: return GMCAL_ERR_DEGENERATE_INTERFERENCE;
    case gmcal::ErrorCode::io: return GMCAL_ERR_IO;
  }
  return GMCAL_ERR_INTERNAL;
}

template <class F>
gmcal_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return GMCAL_OK;
  } catch (const gmcal::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return GMCAL_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GMCAL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GMCAL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GMCAL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) gmcal::fail(gmcal::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  need(out, "output pointer");
  *out = dup_string(s);
}

gmcal::Json parse(const char* text) {
  need(text, "json text");
  try {
    return gmcal::Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    gmcal::fail(gmcal::ErrorCode::invalid_argument, std::string("malformed json: ") + e.what());
  }
}

const gmcal::CalibrationResult& slot(const gmcal_calibration* cal, std::size_t index) {
  need(cal, "calibration");
  if (index >= cal->channels.size())
    gmcal::fail(gmcal::ErrorCode::out_of_bounds, "channel index " + std::to_string(index) + " out of range");
  return cal->channels[index];
}

void check_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    gmcal::fail(gmcal::ErrorCode::invalid_argument,
                std::string(what) + " has length " + std::to_string(got) + ", expected " + std::to_string(want));
}

}  // namespace

extern "C" {

const char* gmcal_version(void) { return "1.0.0"; }

const char* gmcal_last_error(void) { return g_last_error.c_str(); }

const char* gmcal_status_name(gmcal_status status) {
  switch (status) {
    case GMCAL_OK: return "ok";
    case GMCAL_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case GMCAL_ERR_SINGULAR_MATRIX: return "singular_matrix";
    case GMCAL_ERR_OUT_OF_BOUNDS: return "out_of_bounds";
    case GMCAL_ERR_DEGENERATE_INTERFERENCE: return "degenerate_interference";
    case GMCAL_ERR_IO: return "io";
    case GMCAL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void gmcal_string_free(char* s) { std::free(s); }

// ---- networks

gmcal_status gmcal_network_create(const char* flavor, size_t n, gmcal_network** out) {
  return guarded([&] {
    need(flavor, "flavor");
    need(out, "output pointer");
    auto net = std::make_unique<gmcal_network>();
    net->spec = gmcal::make_spec(gmcal::parse_flavor(flavor), n);
    net->matrix = gmcal::compose(*net->spec);
    *out = net.release();
  });
}

gmcal_status gmcal_network_from_json(const char* json, gmcal_network** out) {
  return guarded([&] {
    need(out, "output pointer");
    gmcal::Json j = parse(json);
    auto net = std::make_unique<gmcal_network>();
    if (j.is_object() && j.contains("network")) {
      net->spec = gmcal::network_spec_from_json(j.at("network"));
    } else if (j.is_object() && j.contains("matrix")) {
      net->matrix = gmcal::transfer_matrix_from_json(j.at("matrix"));
    } else if (j.is_object() && j.contains("re")) {
      net->matrix = gmcal::transfer_matrix_from_json(j);
    } else {
      net->spec = gmcal::network_spec_from_json(j);
    }
    if (net->spec) net->matrix = gmcal::compose(*net->spec);
    *out = net.release();
  });
}

void gmcal_network_destroy(gmcal_network* net) { delete net; }

gmcal_status gmcal_network_add_random_errors(gmcal_network* net, uint64_t seed) {
  return guarded([&] {
    need(net, "network");
    if (!net->spec) gmcal::fail(gmcal::ErrorCode::invalid_argument, "network has no layer description");
    auto errs = gmcal::random_gap_errors(net->spec->n, seed);
    gmcal::NetworkSpec spec = gmcal::apply_errors(*net->spec, errs);
    net->matrix = gmcal::compose(spec);
    net->spec = std::move(spec);
  });
}

gmcal_status gmcal_network_apply_errors_json(gmcal_network* net, const char* json) {
  return guarded([&] {
    need(net, "network");
    if (!net->spec) gmcal::fail(gmcal::ErrorCode::invalid_argument, "network has no layer description");
    gmcal::Json j = parse(json);
    std::vector<gmcal::PhaseLayer> layers;
    if (j.contains("layers")) layers = j.at("layers").get<std::vector<gmcal::PhaseLayer>>();
    std::optional<std::vector<std::vector<gmcal::CouplerSpec>>> couplers;
    if (j.contains("couplers")) {
      // reuse the spec parser for coupler validation
      gmcal::Json tmp = gmcal::to_json(*net->spec);
      tmp["couplers"] = j.at("couplers");
      couplers = gmcal::network_spec_from_json(tmp).couplers;
    }
    gmcal::NetworkSpec spec = gmcal::apply_errors(*net->spec, layers, couplers);
    net->matrix = gmcal::compose(spec);
    net->spec = std::move(spec);
  });
}

gmcal_status gmcal_network_randomize_couplers(gmcal_network* net, double tolerance, uint64_t seed) {
  return guarded([&] {
    need(net, "network");
    if (!net->spec) gmcal::fail(gmcal::ErrorCode::invalid_argument, "network has no layer description");
    gmcal::NetworkSpec spec = *net->spec;
    spec.couplers = gmcal::random_couplers(spec.n, tolerance, seed);
    spec.validate();
    net->matrix = gmcal::compose(spec);
    net->spec = std::move(spec);
  });
}

size_t gmcal_network_ports(const gmcal_network* net) { return net ? net->matrix.size() : 0; }

gmcal_status gmcal_network_matrix(const gmcal_network* net, double* re, double* im, size_t count) {
  return guarded([&] {
    need(net, "network");
    need(re, "re");
    need(im, "im");
    const std::size_t n = net->matrix.size();
    check_len(count, n * n, "matrix buffer");
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        re[r * n + c] = net->matrix(r, c).real();
        im[r * n + c] = net->matrix(r, c).imag();
      }
  });
}

gmcal_status gmcal_network_unitarity_error(const gmcal_network* net, double* out) {
  return guarded([&] {
    need(net, "network");
    need(out, "output pointer");
    *out = net->matrix.unitarity_error();
  });
}

gmcal_status gmcal_network_orthogonality_error(const gmcal_network* net, double* out) {
  return guarded([&] {
    need(net, "network");
    need(out, "output pointer");
    *out = net->matrix.column_orthogonality_error();
  });
}

gmcal_status gmcal_network_spec_json(const gmcal_network* net, char** out) {
  return guarded([&] {
    need(net, "network");
    if (!net->spec) gmcal::fail(gmcal::ErrorCode::invalid_argument, "network has no layer description");
    emit(out, gmcal::to_json(*net->spec).dump());
  });
}

gmcal_status gmcal_network_matrix_json(const gmcal_network* net, char** out) {
  return guarded([&] {
    need(net, "network");
    emit(out, gmcal::to_json(net->matrix).dump());
  });
}

// ---- codebooks

gmcal_status gmcal_codebook_extract(const gmcal_network* net, gmcal_codebook** out) {
  return guarded([&] {
    need(net, "network");
    need(out, "output pointer");
    *out = new gmcal_codebook{gmcal::extract_codebook(net->matrix)};
  });
}

gmcal_status gmcal_codebook_from_json(const char* json, gmcal_codebook** out) {
  return guarded([&] {
    need(out, "output pointer");
    gmcal::Json j = parse(json);
    if (j.is_object() && j.contains("codebook")) j = j.at("codebook");
    *out = new gmcal_codebook{gmcal::codebook_from_json(j)};
  });
}

void gmcal_codebook_destroy(gmcal_codebook* cb) { delete cb; }

gmcal_status gmcal_codebook_to_json(const gmcal_codebook* cb, char** out) {
  return guarded([&] {
    need(cb, "codebook");
    emit(out, gmcal::to_json(cb->cb).dump());
  });
}

size_t gmcal_codebook_size(const gmcal_codebook* cb) { return cb ? cb->cb.n : 0; }

gmcal_status gmcal_codebook_phases(const gmcal_codebook* cb, size_t port, double* phases, size_t n) {
  return guarded([&] {
    need(cb, "codebook");
    need(phases, "phases");
    if (port >= cb->cb.codewords.size()) gmcal::fail(gmcal::ErrorCode::out_of_bounds, "port out of range");
    const auto& p = cb->cb.codewords[port].phases;
    check_len(n, p.size(), "phase buffer");
    std::copy(p.begin(), p.end(), phases);
  });
}

gmcal_status gmcal_codebook_verify(const gmcal_codebook* cb, const gmcal_network* net, double* fractions, size_t n) {
  return guarded([&] {
    need(cb, "codebook");
    need(net, "network");
    need(fractions, "fractions");
    auto f = gmcal::verify_codebook(cb->cb, net->matrix);
    check_len(n, f.size(), "fraction buffer");
    std::copy(f.begin(), f.end(), fractions);
  });
}

gmcal_status gmcal_codebook_gram_error(const gmcal_codebook* cb, double* out) {
  return guarded([&] {
    need(cb, "codebook");
    need(out, "output pointer");
    gmcal::CMatrix g = gmcal::codebook_gram(cb->cb);
    const auto n = static_cast<double>(cb->cb.n);
    g.diagonal().array() -= n;
    *out = g.cwiseAbs().maxCoeff();
  });
}

gmcal_status gmcal_codebook_amplitude_deviation(const gmcal_codebook* cb, double* out) {
  return guarded([&] {
    need(cb, "codebook");
    need(out, "output pointer");
    *out = cb->cb.max_amplitude_deviation();
  });
}

gmcal_status gmcal_codeword_distance(const double* a, const double* b, size_t n, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "output pointer");
    *out = gmcal::codeword_distance(std::span<const double>(a, n), std::span<const double>(b, n));
  });
}

// ---- devices

gmcal_status gmcal_noise_preset_json(const char* name, uint64_t seed, char** out) {
  return guarded([&] {
    need(name, "preset name");
    emit(out, gmcal::to_json(gmcal::NoiseConfig::preset(name, seed)).dump());
  });
}

gmcal_status gmcal_device_create(const gmcal_network* net, const char* noise_json, gmcal_device** out) {
  return guarded([&] {
    need(net, "network");
    need(out, "output pointer");
    gmcal::NoiseConfig noise;
    if (noise_json != nullptr) noise = gmcal::noise_config_from_json(parse(noise_json));
    auto dev = std::make_unique<gmcal_device>();
    if (net->spec)
      dev->model = std::make_unique<gmcal::DeviceModel>(*net->spec, noise);
    else
      dev->model = std::make_unique<gmcal::DeviceModel>(net->matrix, noise);
    *out = dev.release();
  });
}

void gmcal_device_destroy(gmcal_device* dev) { delete dev; }

size_t gmcal_device_ports(const gmcal_device* dev) { return dev ? dev->model->ports() : 0; }

gmcal_status gmcal_device_measure(gmcal_device* dev, const double* phases, size_t n, double* per_port, size_t n_out) {
  return guarded([&] {
    need(dev, "device");
    need(phases, "phases");
    need(per_port, "output buffer");
    check_len(n_out, dev->model->ports(), "output buffer");
    auto r = dev->model->measure(std::span<const double>(phases, n));
    std::copy(r.per_port.begin(), r.per_port.end(), per_port);
  });
}

gmcal_status gmcal_device_reset(gmcal_device* dev) {
  return guarded([&] {
    need(dev, "device");
    dev->model->reset();
  });
}

gmcal_status gmcal_device_snapshot_json(const gmcal_device* dev, char** out) {
  return guarded([&] {
    need(dev, "device");
    emit(out, gmcal::to_json(dev->model->snapshot()).dump());
  });
}

gmcal_status gmcal_device_restore_json(gmcal_device* dev, const char* json) {
  return guarded([&] {
    need(dev, "device");
    dev->model->restore(gmcal::device_state_from_json(parse(json)));
  });
}

gmcal_status gmcal_device_noise_json(const gmcal_device* dev, char** out) {
  return guarded([&] {
    need(dev, "device");
    emit(out, gmcal::to_json(dev->model->noise()).dump());
  });
}

gmcal_status gmcal_device_evaluations(const gmcal_device* dev, uint64_t* out) {
  return guarded([&] {
    need(dev, "device");
    need(out, "output pointer");
    *out = dev->model->evaluations();
  });
}

// ---- calibration

gmcal_status gmcal_calibrate_gbnm(gmcal_device* dev, size_t port, const char* cfg_json, gmcal_calibration** out) {
  return guarded([&] {
    need(dev, "device");
    need(out, "output pointer");
    gmcal::GbnmConfig cfg;
    if (cfg_json != nullptr) cfg = gmcal::gbnm_config_from_json(parse(cfg_json));
    auto cal = std::make_unique<gmcal_calibration>();
    cal->channels.push_back(gmcal::gbnm_calibrate(*dev->model, port, cfg));
    *out = cal.release();
  });
}

gmcal_status gmcal_calibrate_codebook(gmcal_device* dev, const char* cfg_json, gmcal_calibration** out) {
  return guarded([&] {
    need(dev, "device");
    need(out, "output pointer");
    gmcal::GbnmConfig cfg;
    if (cfg_json != nullptr) cfg = gmcal::gbnm_config_from_json(parse(cfg_json));
    auto cal = std::make_unique<gmcal_calibration>();
    cal->codebook = gmcal::calibrate_codebook(*dev->model, cfg);
    cal->channels = cal->codebook->channels;
    *out = cal.release();
  });
}

gmcal_status gmcal_calibrate_systematic(gmcal_device* dev, size_t port, const char* mapping_json,
                                        size_t sweep_resolution, gmcal_calibration** out) {
  return guarded([&] {
    need(dev, "device");
    need(out, "output pointer");
    gmcal::SystematicMapping mapping;
    if (mapping_json != nullptr) {
      mapping = gmcal::systematic_mapping_from_json(parse(mapping_json));
    } else {
      const auto& spec = dev->model->network();
      std::vector<std::size_t> routing;
      if (spec) routing = gmcal::input_routing(*spec);
      mapping = gmcal::SystematicMapping::butterfly(dev->model->ports(), port, routing);
    }
    auto cal = std::make_unique<gmcal_calibration>();
    cal->channels.push_back(gmcal::systematic_calibrate(*dev->model, port, mapping, sweep_resolution));
    *out = cal.release();
  });
}

void gmcal_calibration_destroy(gmcal_calibration* cal) { delete cal; }

size_t gmcal_calibration_channels(const gmcal_calibration* cal) { return cal ? cal->channels.size() : 0; }

gmcal_status gmcal_calibration_port(const gmcal_calibration* cal, size_t index, size_t* port) {
  return guarded([&] {
    need(port, "output pointer");
    *port = slot(cal, index).codeword.target_port;
  });
}

gmcal_status gmcal_calibration_converged(const gmcal_calibration* cal, size_t index, int* out) {
  return guarded([&] {
    need(out, "output pointer");
    *out = slot(cal, index).converged ? 1 : 0;
  });
}

gmcal_status gmcal_calibration_best_relative(const gmcal_calibration* cal, size_t index, double* out) {
  return guarded([&] {
    need(out, "output pointer");
    *out = slot(cal, index).trace.best_relative;
  });
}

gmcal_status gmcal_calibration_codeword(const gmcal_calibration* cal, size_t index, double* phases, size_t n) {
  return guarded([&] {
    need(phases, "phases");
    const auto& p = slot(cal, index).codeword.phases;
    check_len(n, p.size(), "phase buffer");
    std::copy(p.begin(), p.end(), phases);
  });
}

gmcal_status gmcal_calibration_trace_csv(const gmcal_calibration* cal, size_t index, char** out) {
  return guarded([&] { emit(out, gmcal::trace_csv(slot(cal, index).trace)); });
}

gmcal_status gmcal_calibration_to_json(const gmcal_calibration* cal, int include_traces, char** out) {
  return guarded([&] {
    need(cal, "calibration");
    if (cal->codebook) {
      emit(out, gmcal::to_json(*cal->codebook, include_traces != 0).dump());
      return;
    }
    gmcal::Json arr = gmcal::Json::array();
    for (const auto& c : cal->channels) arr.push_back(gmcal::to_json(c, include_traces != 0));
    gmcal::Json j;
    j["channels"] = std::move(arr);
    emit(out, j.dump());
  });
}

gmcal_status gmcal_calibration_codebook(const gmcal_calibration* cal, gmcal_codebook** out) {
  return guarded([&] {
    need(cal, "calibration");
    need(out, "output pointer");
    if (!cal->codebook) gmcal::fail(gmcal::ErrorCode::invalid_argument, "calibration holds no codebook");
    *out = new gmcal_codebook{cal->codebook->codebook};
  });
}

// ---- scans

gmcal_status gmcal_scan_run(gmcal_device* dev, size_t port, size_t channel_a, size_t channel_b, double lo, double hi,
                            size_t resolution, const double* base, gmcal_scan** out) {
  return guarded([&] {
    need(dev, "device");
    need(out, "output pointer");
    std::span<const double> b;
    if (base != nullptr) b = std::span<const double>(base, dev->model->ports());
    *out = new gmcal_scan{gmcal::scan_error_space(*dev->model, port, {channel_a, channel_b}, lo, hi, resolution, b)};
  });
}

void gmcal_scan_destroy(gmcal_scan* scan) { delete scan; }

gmcal_status gmcal_scan_csv(const gmcal_scan* scan, char** out) {
  return guarded([&] {
    need(scan, "scan");
    emit(out, gmcal::scan_csv(scan->grid));
  });
}

gmcal_status gmcal_scan_to_json(const gmcal_scan* scan, char** out) {
  return guarded([&] {
    need(scan, "scan");
    emit(out, gmcal::to_json(scan->grid).dump());
  });
}

gmcal_status gmcal_scan_periodicity_residual(const gmcal_scan* scan, double period, double* out) {
  return guarded([&] {
    need(scan, "scan");
    need(out, "output pointer");
    *out = scan->grid.periodicity_residual(period);
  });
}

gmcal_status gmcal_scan_minima_per_cell(const gmcal_scan* scan, double period, size_t* counts, size_t capacity,
                                        size_t* n_cells) {
  return guarded([&] {
    need(scan, "scan");
    need(n_cells, "output pointer");
    auto cells = scan->grid.minima_per_cell(period);
    *n_cells = cells.size();
    if (counts != nullptr)
      for (std::size_t i = 0; i < cells.size() && i < capacity; ++i) counts[i] = cells[i];
  });
}

// ---- experiment

gmcal_status gmcal_emulate_experiment(uint64_t seed, const char* overrides_json, char** report_json,
                                      gmcal_calibration** channels) {
  return guarded([&] {
    need(report_json, "output pointer");
    gmcal::ExperimentConfig cfg;
    cfg.seed = seed;
    if (overrides_json != nullptr) {
      gmcal::Json j = parse(overrides_json);
      if (!j.is_object()) gmcal::fail(gmcal::ErrorCode::invalid_argument, "overrides must be an object");
      for (const auto& [key, v] : j.items()) {
        if (key == "noise_preset")
          cfg.noise_preset = v.get<std::string>();
        else if (key == "n")
          cfg.n = v.get<std::size_t>();
        else if (key == "flavor")
          cfg.flavor = gmcal::parse_flavor(v.get<std::string>());
        else if (key == "gbnm")
          cfg.gbnm = gmcal::gbnm_config_from_json(v, cfg.gbnm);
        else
          gmcal::fail(gmcal::ErrorCode::invalid_argument, "unknown experiment key '" + key + "'");
      }
    }
    gmcal::ExperimentReport report = gmcal::emulate_experiment(cfg);
    std::string text = gmcal::to_json(report, false).dump();
    std::unique_ptr<gmcal_calibration> cal;
    if (channels != nullptr) {
      cal = std::make_unique<gmcal_calibration>();
      cal->channels = std::move(report.channels);
    }
    *report_json = dup_string(text);
    if (channels != nullptr) *channels = cal.release();
  });
}

}  // extern "C"

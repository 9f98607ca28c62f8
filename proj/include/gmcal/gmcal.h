/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The gmcal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 * ------------------------------------------------------------------------
 */

/*
 * C interface of libgmcal: transfer matrices of butterfly optical networks,
 * their codebooks, simulated intensity-only devices and codebook learning.
 *
 * Conventions:
 *  - Every function that can fail returns a gmcal_status. On failure a
 *    description is available from gmcal_last_error() on the same thread.
 *  - Objects are opaque handles created by *_create / *_from_* functions and
 *    released with the matching *_destroy. Destroying NULL is a no-op.
 *  - Strings returned through char** are owned by the caller and must be
 *    released with gmcal_string_free().
 *  - Phases are radians. Matrices are row-major.
 *  - Handles are not thread-safe; use one device per thread.
 */

#ifndef GMCAL_H
#define GMCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(GMCAL_BUILDING_LIBRARY)
#  define GMCAL_API __attribute__((visibility("default")))
#else
#  define GMCAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gmcal_status {
  GMCAL_OK = 0,
  GMCAL_ERR_INVALID_ARGUMENT = 1,
  GMCAL_ERR_SINGULAR_MATRIX = 2,
  GMCAL_ERR_OUT_OF_BOUNDS = 3,
  GMCAL_ERR_DEGENERATE_INTERFERENCE = 4,
  GMCAL_ERR_IO = 5,
  GMCAL_ERR_INTERNAL = 99
} gmcal_status;

typedef struct gmcal_network gmcal_network;
typedef struct gmcal_codebook gmcal_codebook;
typedef struct gmcal_device gmcal_device;
typedef struct gmcal_calibration gmcal_calibration;
typedef struct gmcal_scan gmcal_scan;

GMCAL_API const char* gmcal_version(void);
GMCAL_API const char* gmcal_last_error(void);
GMCAL_API const char* gmcal_status_name(gmcal_status status);
GMCAL_API void gmcal_string_free(char* s);

/* ---- networks ---------------------------------------------------------- */

/* flavor: "ideal", "hadamard", "butler" or "custom"; n a power of two. */
GMCAL_API gmcal_status gmcal_network_create(const char* flavor, size_t n, gmcal_network** out);
/* Accepts a network spec, a bare matrix {"n","re","im"}, or a document
 * holding either under "network" / "matrix" (the spec wins). */
GMCAL_API gmcal_status gmcal_network_from_json(const char* json, gmcal_network** out);
GMCAL_API void gmcal_network_destroy(gmcal_network* net);

/* Adds uniform [0, 2pi) errors to every inter-stage gap. */
GMCAL_API gmcal_status gmcal_network_add_random_errors(gmcal_network* net, uint64_t seed);
/* {"layers": [[...], ...], "couplers": [[{"t":..,"r":..}, ...], ...]};
 * layers holds one entry per gap or stages+1 entries; couplers is optional. */
GMCAL_API gmcal_status gmcal_network_apply_errors_json(gmcal_network* net, const char* json);
/* Redraws every coupler with bar power uniform in [0.5 - tol, 0.5 + tol]. */
GMCAL_API gmcal_status gmcal_network_randomize_couplers(gmcal_network* net, double tolerance, uint64_t seed);

GMCAL_API size_t gmcal_network_ports(const gmcal_network* net);
/* re and im receive n*n entries each; count must be n*n. */
GMCAL_API gmcal_status gmcal_network_matrix(const gmcal_network* net, double* re, double* im, size_t count);
GMCAL_API gmcal_status gmcal_network_unitarity_error(const gmcal_network* net, double* out);
GMCAL_API gmcal_status gmcal_network_orthogonality_error(const gmcal_network* net, double* out);
/* Fails with GMCAL_ERR_INVALID_ARGUMENT for networks loaded from a bare matrix. */
GMCAL_API gmcal_status gmcal_network_spec_json(const gmcal_network* net, char** out);
GMCAL_API gmcal_status gmcal_network_matrix_json(const gmcal_network* net, char** out);

/* ---- codebooks --------------------------------------------------------- */

GMCAL_API gmcal_status gmcal_codebook_extract(const gmcal_network* net, gmcal_codebook** out);
GMCAL_API gmcal_status gmcal_codebook_from_json(const char* json, gmcal_codebook** out);
GMCAL_API void gmcal_codebook_destroy(gmcal_codebook* cb);
GMCAL_API gmcal_status gmcal_codebook_to_json(const gmcal_codebook* cb, char** out);
GMCAL_API size_t gmcal_codebook_size(const gmcal_codebook* cb);
GMCAL_API gmcal_status gmcal_codebook_phases(const gmcal_codebook* cb, size_t port, double* phases, size_t n);
/* Routed-power fraction of every codeword on `net`. */
GMCAL_API gmcal_status gmcal_codebook_verify(const gmcal_codebook* cb, const gmcal_network* net, double* fractions,
                                             size_t n);
/* max |H^H H - n I| of the unit-modulus codeword matrix. */
GMCAL_API gmcal_status gmcal_codebook_gram_error(const gmcal_codebook* cb, double* out);
GMCAL_API gmcal_status gmcal_codebook_amplitude_deviation(const gmcal_codebook* cb, double* out);
GMCAL_API gmcal_status gmcal_codeword_distance(const double* a, const double* b, size_t n, double* out);

/* ---- devices ----------------------------------------------------------- */

/* Preset names: "none", "experiment", "drift", "harsh". */
GMCAL_API gmcal_status gmcal_noise_preset_json(const char* name, uint64_t seed, char** out);
/* noise_json may be NULL for a noiseless device. */
GMCAL_API gmcal_status gmcal_device_create(const gmcal_network* net, const char* noise_json, gmcal_device** out);
GMCAL_API void gmcal_device_destroy(gmcal_device* dev);
GMCAL_API size_t gmcal_device_ports(const gmcal_device* dev);
GMCAL_API gmcal_status gmcal_device_measure(gmcal_device* dev, const double* phases, size_t n, double* per_port,
                                            size_t n_out);
GMCAL_API gmcal_status gmcal_device_reset(gmcal_device* dev);
GMCAL_API gmcal_status gmcal_device_snapshot_json(const gmcal_device* dev, char** out);
GMCAL_API gmcal_status gmcal_device_restore_json(gmcal_device* dev, const char* json);
GMCAL_API gmcal_status gmcal_device_noise_json(const gmcal_device* dev, char** out);
GMCAL_API gmcal_status gmcal_device_evaluations(const gmcal_device* dev, uint64_t* out);

/* ---- calibration ------------------------------------------------------- */

/* cfg_json may be NULL (defaults: 12 starts x 100 iterations). */
GMCAL_API gmcal_status gmcal_calibrate_gbnm(gmcal_device* dev, size_t port, const char* cfg_json,
                                            gmcal_calibration** out);
/* Learns every port; the result also carries the assembled codebook. */
GMCAL_API gmcal_status gmcal_calibrate_codebook(gmcal_device* dev, const char* cfg_json, gmcal_calibration** out);
/* mapping_json may be NULL to use the butterfly plan of the device's network. */
GMCAL_API gmcal_status gmcal_calibrate_systematic(gmcal_device* dev, size_t port, const char* mapping_json,
                                                  size_t sweep_resolution, gmcal_calibration** out);
GMCAL_API void gmcal_calibration_destroy(gmcal_calibration* cal);
GMCAL_API size_t gmcal_calibration_channels(const gmcal_calibration* cal);
/* Index is the channel slot (0 .. channels-1), not the port number. */
GMCAL_API gmcal_status gmcal_calibration_port(const gmcal_calibration* cal, size_t index, size_t* port);
GMCAL_API gmcal_status gmcal_calibration_converged(const gmcal_calibration* cal, size_t index, int* out);
GMCAL_API gmcal_status gmcal_calibration_best_relative(const gmcal_calibration* cal, size_t index, double* out);
GMCAL_API gmcal_status gmcal_calibration_codeword(const gmcal_calibration* cal, size_t index, double* phases,
                                                  size_t n);
GMCAL_API gmcal_status gmcal_calibration_trace_csv(const gmcal_calibration* cal, size_t index, char** out);
GMCAL_API gmcal_status gmcal_calibration_to_json(const gmcal_calibration* cal, int include_traces, char** out);
/* Only for results of gmcal_calibrate_codebook. */
GMCAL_API gmcal_status gmcal_calibration_codebook(const gmcal_calibration* cal, gmcal_codebook** out);

/* ---- error-space scans ------------------------------------------------- */

/* base may be NULL (other channels held at 0). */
GMCAL_API gmcal_status gmcal_scan_run(gmcal_device* dev, size_t port, size_t channel_a, size_t channel_b, double lo,
                                      double hi, size_t resolution, const double* base, gmcal_scan** out);
GMCAL_API void gmcal_scan_destroy(gmcal_scan* scan);
GMCAL_API gmcal_status gmcal_scan_csv(const gmcal_scan* scan, char** out);
GMCAL_API gmcal_status gmcal_scan_to_json(const gmcal_scan* scan, char** out);
GMCAL_API gmcal_status gmcal_scan_periodicity_residual(const gmcal_scan* scan, double period, double* out);
/* Writes up to `capacity` per-cell counts; *n_cells receives the cell count. */
GMCAL_API gmcal_status gmcal_scan_minima_per_cell(const gmcal_scan* scan, double period, size_t* counts,
                                                  size_t capacity, size_t* n_cells);

/* ---- experiment emulation ---------------------------------------------- */

/* overrides_json may be NULL; keys: "noise_preset", "n", "flavor", "gbnm".
 * Writes the report JSON and, when `channels` is not NULL, a calibration
 * handle holding the per-channel traces. */
GMCAL_API gmcal_status gmcal_emulate_experiment(uint64_t seed, const char* overrides_json, char** report_json,
                                                gmcal_calibration** channels);

#ifdef __cplusplus
}
#endif

#endif /* GMCAL_H */

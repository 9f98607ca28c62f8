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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmcal/calibration.hpp"
#include "gmcal/error.hpp"
#include "gmcal/random.hpp"

namespace gmcal {

namespace {

using Point = std::vector<double>;

struct Vertex {
  Point x;
  double f = 0.0;
};

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Regular simplex with the given edge; vertex 0 is the origin.
std::vector<Point> regular_simplex_offsets(std::size_t dim, double edge) {
  const auto d = static_cast<double>(dim);
  const double p = edge / (d * std::sqrt(2.0)) * (std::sqrt(d + 1.0) + d - 1.0);
  const double q = edge / (d * std::sqrt(2.0)) * (std::sqrt(d + 1.0) - 1.0);
  std::vector<Point> out(dim + 1, Point(dim, 0.0));
  for (std::size_t i = 1; i <= dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) out[i][j] = (j + 1 == i) ? p : q;
  }
  return out;
}

struct BudgetExhausted {};

// Evaluates free coordinates on the device and records every reading.
class Evaluator {
 public:
  Evaluator(IntensityOracle& dev, std::size_t port, double pinned, std::size_t cap, ConvergenceTrace& trace)
      : dev_(dev), port_(port), pinned_(pinned), cap_(cap), trace_(trace) {}

  double operator()(const Point& free, std::size_t start, std::size_t iteration) {
    if (cap_ != 0 && used_ >= cap_) throw BudgetExhausted{};
    std::vector<double> full(free.size() + 1);
    full[0] = pinned_;
    std::copy(free.begin(), free.end(), full.begin() + 1);
    IntensityReading reading = dev_.measure(full);
    const double j = -reading.per_port[port_];
    trace_.record(start, iteration, full, std::move(reading));
    ++used_;
    return j;
  }

  std::size_t used() const { return used_; }

 private:
  IntensityOracle& dev_;
  std::size_t port_;
  double pinned_;
  std::size_t cap_;
  ConvergenceTrace& trace_;
  std::size_t used_ = 0;
};

}  // namespace

double evaluate_objective(IntensityOracle& dev, std::size_t port, std::span<const double> phases) {
  if (port >= dev.ports()) fail(ErrorCode::invalid_argument, "target port out of range");
  return -dev.measure(phases).per_port[port];
}

void ConvergenceTrace::record(std::size_t start, std::size_t iteration, std::span<const double> phases,
                              IntensityReading reading) {
  TraceRow row;
  row.evaluation = rows.size();
  row.start = start;
  row.iteration = iteration;
  row.phases.assign(phases.begin(), phases.end());
  row.relative_target = reading.relative.at(port);
  row.reading = std::move(reading);
  if (rows.empty() || row.relative_target > best_relative) {
    best_relative = row.relative_target;
    best_phases = row.phases;
  }
  row.best_relative = best_relative;
  rows.push_back(std::move(row));
}

void GbnmConfig::validate(std::size_t ports) const {
  const bool ok = n_starts >= 1 && tolerance >= 0.0 && initial_edge > 0.0 && reflection > 0.0 && expansion > 1.0 &&
                  contraction > 0.0 && contraction < 1.0 && shrink > 0.0 && shrink < 1.0 && exclusion_radius >= 0.0 &&
                  ports >= 2;
  if (!ok) fail(ErrorCode::invalid_argument, "invalid GBNM configuration");
  if (lo && hi && !(*lo < *hi)) fail(ErrorCode::invalid_argument, "GBNM bounds must satisfy lo < hi");
}

std::size_t gbnm_evaluation_bound(const GbnmConfig& cfg, std::size_t ports) {
  const std::size_t dim = ports - 1;
  // Per iteration: reflection, expansion or contraction, and possibly a shrink of dim vertices.
  return cfg.n_starts * (cfg.max_iters_per_start * (dim + 2) + dim + 1);
}

CalibrationResult gbnm_calibrate(IntensityOracle& dev, std::size_t port, const GbnmConfig& cfg) {
  const auto n = dev.ports();
  cfg.validate(n);
  if (port >= n) fail(ErrorCode::invalid_argument, "target port out of range");

  const auto [dev_lo, dev_hi] = dev.bounds();
  const double lo = cfg.lo.value_or(dev_lo);
  const double hi = cfg.hi.value_or(dev_hi);
  if (lo < dev_lo || hi > dev_hi) fail(ErrorCode::invalid_argument, "GBNM bounds exceed the actuator range");

  const std::size_t dim = n - 1;
  const double pinned = std::clamp(0.0, lo, hi);
  auto project = [&](Point& x) {
    for (auto& v : x) v = std::clamp(v, lo, hi);
  };

  CalibrationResult result;
  result.trace.port = port;
  Evaluator eval(dev, port, pinned, cfg.max_evaluations, result.trace);

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  std::vector<Point> found;  // best point of every finished start
  const auto offsets = regular_simplex_offsets(dim, cfg.initial_edge);
  bool met_tolerance = false;

  try {
    for (std::size_t start = 0; start < cfg.n_starts; ++start) {
      // Uniform restart outside the exclusion zone of earlier minima.
      Point x0(dim);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        for (auto& v : x0) v = uniform(rng);
        const bool clear = std::all_of(found.begin(), found.end(),
                                       [&](const Point& m) { return distance(m, x0) > cfg.exclusion_radius; });
        if (clear) break;
      }
      ++result.starts_used;

      std::vector<Vertex> simplex;
      simplex.push_back({x0, eval(x0, start, 0)});
      double start_best = simplex.front().f;
      std::size_t last_improvement = eval.used();
      auto note = [&](double f) {
        if (f < start_best) {
          start_best = f;
          last_improvement = eval.used();
        }
      };
      auto evaluate = [&](const Point& x, std::size_t iteration) {
        const double f = eval(x, start, iteration);
        note(f);
        return f;
      };

      if (cfg.max_iters_per_start > 0) {
        for (std::size_t i = 1; i <= dim; ++i) {
          Point x = x0;
          for (std::size_t j = 0; j < dim; ++j) x[j] += offsets[i][j];
          project(x);
          simplex.push_back({x, evaluate(x, 0)});
        }
      }

      auto order = [&] {
        std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
      };
      auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i) d = std::max(d, distance(simplex[i].x, simplex[0].x));
        return d;
      };

      for (std::size_t it = 1; it <= cfg.max_iters_per_start; ++it) {
        order();
        if (diameter() < cfg.tolerance) {
          met_tolerance = true;
          break;
        }
        if (cfg.restart_on_stagnation && eval.used() - last_improvement >= cfg.stagnation_evals) break;

        Point centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
          for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i].x[j] / static_cast<double>(dim);
        }
        auto along = [&](const Point& from, double coef) {
          Point x(dim);
          for (std::size_t j = 0; j < dim; ++j) x[j] = centroid[j] + coef * (from[j] - centroid[j]);
          project(x);
          return x;
        };
        Vertex& worst = simplex.back();
        const double f_second_worst = simplex[dim - 1].f;

        Point xr = along(worst.x, -cfg.reflection);
        const double fr = evaluate(xr, it);
        if (fr < simplex.front().f) {
          Point xe = along(worst.x, -cfg.reflection * cfg.expansion);
          const double fe = evaluate(xe, it);
          worst = fe < fr ? Vertex{std::move(xe), fe} : Vertex{std::move(xr), fr};
          continue;
        }
        if (fr < f_second_worst) {
          worst = Vertex{std::move(xr), fr};
          continue;
        }
        const bool outside = fr < worst.f;
        Point xc = outside ? along(worst.x, -cfg.reflection * cfg.contraction) : along(worst.x, cfg.contraction);
        const double fc = evaluate(xc, it);
        if (outside ? fc <= fr : fc < worst.f) {
          worst = Vertex{std::move(xc), fc};
          continue;
        }
        const Point best = simplex.front().x;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          for (std::size_t j = 0; j < dim; ++j) simplex[i].x[j] = best[j] + cfg.shrink * (simplex[i].x[j] - best[j]);
          project(simplex[i].x);
          simplex[i].f = evaluate(simplex[i].x, it);
        }
      }
      order();
      if (simplex.size() > 1 && diameter() < cfg.tolerance) met_tolerance = true;
      found.push_back(simplex.front().x);
    }
  } catch (const BudgetExhausted&) {
  }

  result.evaluations = eval.used();
  result.converged = met_tolerance && result.trace.best_relative >= cfg.quality_bar;
  result.codeword = Codeword{port, gauge_normalized(result.trace.best_phases)};
  return result;
}

double CodebookCalibration::max_offdiagonal_gram() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (i != j) m = std::max(m, gram(i, j));
    }
  }
  return m;
}

CodebookCalibration calibrate_codebook(IntensityOracle& dev, const GbnmConfig& cfg) {
  const auto n = dev.ports();
  CodebookCalibration out;
  out.codebook.n = n;
  out.codebook.output_scale = std::sqrt(static_cast<double>(n));
  out.all_converged = true;
  for (std::size_t k = 0; k < n; ++k) {
    GbnmConfig channel_cfg = cfg;
    channel_cfg.seed = derive_seed(cfg.seed, k);
    auto res = gbnm_calibrate(dev, k, channel_cfg);
    out.all_converged = out.all_converged && res.converged;
    out.codebook.codewords.push_back(res.codeword);
    out.channels.push_back(std::move(res));
  }
  out.gram = codebook_gram(out.codebook).cwiseAbs() / static_cast<double>(n);
  return out;
}

}  // namespace gmcal

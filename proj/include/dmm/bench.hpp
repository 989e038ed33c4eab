#pragma once

// Experiment drivers: accuracy runs over seeds on synthetic data, and runtime
// scaling sweeps over T or D1.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dmm/cluster_detector.hpp"
#include "dmm/error.hpp"
#include "dmm/eval.hpp"
#include "dmm/synth.hpp"

namespace dmm {

struct RunRecord {
  std::uint64_t seed = 0;
  std::size_t T = 0;
  std::size_t variables = 0;
  double seconds = 0.0;   // fit only, generation excluded
  double macro_f1 = 0.0;
  int K = 0;
  int K_true = 0;
  std::size_t segments = 0;
  double lambda = 0.0;
};

struct ExperimentConfig {
  std::string sequence = "A";
  Shape dims{10};
  std::size_t window = 4;
  std::vector<double> lambda_grid{0.5, 1.0, 2.0, 4.0};
  FitOptions fit;
  SynthConfig synth;
};

inline RunRecord run_synthetic(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto syn = gen_tts(cfg.sequence, cfg.dims, seed, cfg.synth);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = fit(syn.tensor, cfg.window, cfg.lambda_grid, seed, cfg.fit);
  const auto t1 = std::chrono::steady_clock::now();
  RunRecord r;
  r.seed = seed;
  r.T = syn.tensor.length();
  r.variables = syn.tensor.variables();
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  r.macro_f1 = macro_f1(res.assignments.time_labels(), syn.truth.labels).macro_f1;
  r.K = res.K;
  r.K_true = static_cast<int>(syn.truth.true_networks.size());
  r.segments = res.assignments.segmentation.count();
  r.lambda = res.lambda;
  return r;
}

inline std::vector<RunRecord> accuracy_runs(const ExperimentConfig& cfg, std::uint64_t first_seed, std::size_t seeds) {
  std::vector<RunRecord> out;
  for (std::size_t i = 0; i < seeds; ++i) out.push_back(run_synthetic(cfg, first_seed + i));
  return out;
}

enum class ScaleAxis { T, D1 };

// One run per value. For T the per-cluster observation count is rescaled so the
// sequence spans exactly T steps; for D1 the first mode is resized and T comes
// from cfg.synth.
inline std::vector<RunRecord> scaling_runs(const ExperimentConfig& cfg, ScaleAxis axis,
                                           const std::vector<std::size_t>& values, std::uint64_t seed) {
  const auto seq = parse_sequence(cfg.sequence);
  std::vector<RunRecord> out;
  for (std::size_t v : values) {
    ExperimentConfig c = cfg;
    if (axis == ScaleAxis::T) {
      if (v == 0 || v % seq.size() != 0) {
        throw InvalidArgument("scaling: T=" + std::to_string(v) + " is not a multiple of the sequence length " +
                              std::to_string(seq.size()));
      }
      c.synth.observations_per_segment = v / seq.size();
    } else {
      if (v == 0 || c.dims.empty()) throw InvalidArgument("scaling: D1 must be >= 1");
      c.dims[0] = v;
    }
    out.push_back(run_synthetic(c, seed));
  }
  return out;
}

// Least-squares slope of log(seconds) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& seconds) {
  if (x.size() != seconds.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need >= 2 paired points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(seconds[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(seconds[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace dmm

#pragma once

// Segment clustering. For each K = 2, 3, ... an EM loop alternates
//   E-step: every segment goes to the model under which it is cheapest to code,
//   M-step: every cluster's mode networks are refitted on its pooled members,
// and K stops growing at the first K whose total description cost exceeds the
// previous one. The outermost level repeats segmentation + clustering for each
// lambda in a grid and keeps the cheapest run.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "dmm/error.hpp"
#include "dmm/glasso.hpp"
#include "dmm/mdl.hpp"
#include "dmm/model.hpp"
#include "dmm/random.hpp"
#include "dmm/segmentation.hpp"
#include "dmm/segmenter.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct ClusterOptions {
  AdmmConfig admm;
  int restarts = 1;
  int max_em_iters = 20;
  int max_k = 20;
  unsigned threads = 1;

  void validate() const {
    admm.validate();
    if (restarts < 1 || max_em_iters < 1 || max_k < 1) {
      throw InvalidArgument("cluster options: restarts, max_em_iters and max_k must be >= 1");
    }
  }
};

struct KTrace {
  int k_requested = 0;
  int k_effective = 0;
  double total = 0.0;
  int em_iterations = 0;
  bool em_converged = true;
};

struct LambdaTrace {
  double lambda = 0.0;
  double total = 0.0;
  int K = 0;
  std::size_t segments = 0;
};

struct ClusterDiagnostics {
  std::vector<KTrace> k_trace;
  int em_iterations = 0;
  bool em_converged = true;
  std::size_t segmenter_sweeps = 0;
  std::size_t segmenter_initial_segments = 0;
  std::size_t degenerate_fits = 0;
  std::size_t unconverged_fits = 0;
  std::vector<LambdaTrace> lambda_trace;
};

struct ClusterParams {
  Assignments assignments;
  std::vector<ClusterModel> models;
  double lambda = 0.0;
  int K = 0;
  CostBreakdown costs;
  ClusterDiagnostics diagnostics;
};

// E-step. Returns ids in 1..models.size(); clusters may end up empty, so the
// result is not compacted.
inline Assignments assign_segments(const TensorTS& x, const std::vector<ClusterModel>& models,
                                   const Segmentation& cp) {
  if (models.empty()) throw InvalidArgument("assign_segments: no models");
  cp.validate();
  if (cp.length != x.length()) throw InvalidArgument("assign_segments: segmentation length mismatch");
  const std::size_t m = cp.count();
  std::vector<double> best(m, std::numeric_limits<double>::infinity());
  Assignments a;
  a.segmentation = cp;
  a.segment_cluster.assign(m, 1);
  a.K = static_cast<int>(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto ll = total_log_likelihood(x, models[k]);
    for (std::size_t i = 0; i < m; ++i) {
      double cost = 0.0;
      for (std::size_t t = cp.start(i); t < cp.end(i); ++t) cost -= ll[t - 1];
      if (cost < best[i]) {
        best[i] = cost;
        a.segment_cluster[i] = static_cast<int>(k) + 1;
      }
    }
  }
  return a;
}

// M-step: pools every member time step of each cluster.
inline std::vector<ClusterModel> infer_networks(const TensorTS& x, const Assignments& a, double lambda,
                                                const AdmmConfig& cfg = {}) {
  std::vector<ClusterModel> models;
  models.reserve(static_cast<std::size_t>(a.K));
  for (int k = 1; k <= a.K; ++k) {
    const auto times = a.cluster_times(k);
    if (times.empty()) throw InvalidArgument("infer_networks: cluster " + std::to_string(k) + " is empty");
    models.push_back(fit_cluster_model(gather_times(x, times), lambda, cfg));
  }
  return models;
}

namespace detail {

// Drops empty clusters and renumbers by first appearance, keeping models aligned.
inline void compact_with_models(Assignments& a, std::vector<ClusterModel>& models) {
  const auto old_to_new = a.compact();
  std::vector<ClusterModel> kept(static_cast<std::size_t>(a.K));
  for (std::size_t old = 1; old < old_to_new.size(); ++old) {
    if (old_to_new[old] > 0 && old - 1 < models.size()) {
      kept[static_cast<std::size_t>(old_to_new[old] - 1)] = std::move(models[old - 1]);
    }
  }
  models = std::move(kept);
}

struct EmResult {
  Assignments assignments;
  std::vector<ClusterModel> models;
  CostBreakdown costs;
  int iterations = 0;
  bool converged = false;
};

inline EmResult run_em(const TensorTS& x, const Segmentation& cp, int K, double lambda, Rng& rng,
                       const ClusterOptions& opts) {
  const std::size_t m = cp.count();
  Assignments a;
  a.segmentation = cp;
  a.K = K;
  a.segment_cluster.assign(m, 0);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t j = 0; j < m; ++j) {
    a.segment_cluster[order[j]] =
        j < static_cast<std::size_t>(K) ? static_cast<int>(j) + 1 : static_cast<int>(rng.below(static_cast<std::uint64_t>(K))) + 1;
  }
  a.compact();

  EmResult res;
  auto models = infer_networks(x, a, lambda, opts.admm);
  std::set<std::vector<int>> seen{a.segment_cluster};
  for (int it = 1; it <= opts.max_em_iters; ++it) {
    res.iterations = it;
    Assignments raw = assign_segments(x, models, cp);
    Assignments canon = raw;
    canon.compact();
    if (canon.segment_cluster == a.segment_cluster) {
      // Same partition: keep the E-step labelling so models line up with it.
      compact_with_models(raw, models);
      a = std::move(raw);
      res.converged = true;
      break;
    }
    const bool repeated = !seen.insert(canon.segment_cluster).second;
    a = std::move(canon);
    models = infer_networks(x, a, lambda, opts.admm);
    if (repeated) break;
  }
  res.costs = cost_total(x, models, a, lambda);
  res.assignments = std::move(a);
  res.models = std::move(models);
  return res;
}

}  // namespace detail

inline ClusterParams detect_clusters(const TensorTS& x, const Segmentation& cp, double lambda, std::uint64_t seed,
                                     const ClusterOptions& opts = {}) {
  opts.validate();
  cp.validate();
  if (cp.length != x.length()) throw InvalidArgument("detect_clusters: segmentation length mismatch");
  const std::size_t m = cp.count();

  ClusterParams best;
  best.lambda = lambda;
  best.assignments.segmentation = cp;
  best.assignments.segment_cluster.assign(m, 1);
  best.assignments.K = 1;
  best.models = infer_networks(x, best.assignments, lambda, opts.admm);
  best.costs = cost_total(x, best.models, best.assignments, lambda);
  best.K = 1;
  best.diagnostics.k_trace.push_back({1, 1, best.costs.total, 0, true});

  double previous = best.costs.total;
  const int k_cap = static_cast<int>(std::min<std::size_t>(m, static_cast<std::size_t>(opts.max_k)));
  for (int K = 2; K <= k_cap; ++K) {
    std::vector<detail::EmResult> runs(static_cast<std::size_t>(opts.restarts));
    auto one = [&](std::size_t r) {
      Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(r));
      runs[r] = detail::run_em(x, cp, K, lambda, rng, opts);
    };
    detail::parallel_for(runs.size(), opts.threads, one);
    // Strict < keeps the lowest restart index on ties, whatever the scheduling.
    std::size_t pick = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (runs[r].costs.total < runs[pick].costs.total) pick = r;
    }
    detail::EmResult chosen = std::move(runs[pick]);
    best.diagnostics.k_trace.push_back(
        {K, chosen.assignments.K, chosen.costs.total, chosen.iterations, chosen.converged});
    if (chosen.costs.total > previous) break;
    previous = chosen.costs.total;
    if (chosen.costs.total < best.costs.total) {
      best.assignments = std::move(chosen.assignments);
      best.models = std::move(chosen.models);
      best.costs = chosen.costs;
      best.K = best.assignments.K;
      best.diagnostics.em_iterations = chosen.iterations;
      best.diagnostics.em_converged = chosen.converged;
    }
  }
  return best;
}

struct FitOptions {
  ClusterOptions cluster;
  SegmenterOptions segmenter;
};

// Full pipeline over a lambda grid, starting from `initial` cut points.
inline ClusterParams fit(const TensorTS& x, const Segmentation& initial, const std::vector<double>& lambda_grid,
                         std::uint64_t seed, const FitOptions& opts = {}) {
  if (lambda_grid.empty()) throw InvalidArgument("fit: empty lambda grid");
  for (double l : lambda_grid) {
    if (!(l >= 0.0)) throw InvalidArgument("fit: lambda values must be >= 0");
  }
  // Grid points are independent; with threads > 1 they run concurrently and the
  // inner stages run single-threaded.
  FitOptions inner = opts;
  const bool grid_parallel = opts.cluster.threads > 1 && lambda_grid.size() > 1;
  if (grid_parallel) {
    inner.cluster.threads = 1;
    inner.segmenter.threads = 1;
  }
  std::vector<ClusterParams> runs(lambda_grid.size());
  detail::parallel_for(runs.size(), grid_parallel ? opts.cluster.threads : 1u, [&](std::size_t i) {
    SegmenterDiagnostics sd;
    const Segmentation cp = detect(x, initial, lambda_grid[i], inner.segmenter, &sd);
    ClusterParams res = detect_clusters(x, cp, lambda_grid[i], seed, inner.cluster);
    res.diagnostics.segmenter_sweeps = sd.sweeps.size();
    res.diagnostics.segmenter_initial_segments = initial.count();
    res.diagnostics.degenerate_fits = sd.degenerate_fits;
    res.diagnostics.unconverged_fits = sd.unconverged_fits;
    runs[i] = std::move(res);
  });
  std::vector<LambdaTrace> trace;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    trace.push_back({lambda_grid[i], runs[i].costs.total, runs[i].K, runs[i].assignments.segmentation.count()});
    if (runs[i].costs.total < runs[pick].costs.total) pick = i;
  }
  ClusterParams best = std::move(runs[pick]);
  best.diagnostics.lambda_trace = std::move(trace);
  return best;
}

inline ClusterParams fit(const TensorTS& x, std::size_t window, const std::vector<double>& lambda_grid,
                         std::uint64_t seed, const FitOptions& opts = {}) {
  return fit(x, init_cutpoints(x.length(), window), lambda_grid, seed, opts);
}

inline ClusterParams fit(const TensorTS& x, const InitialWindows& windows, const std::vector<double>& lambda_grid,
                         std::uint64_t seed, const FitOptions& opts = {}) {
  return fit(x, init_cutpoints(x.length(), windows), lambda_grid, seed, opts);
}

}  // namespace dmm

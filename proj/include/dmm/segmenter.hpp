#pragma once

// Bottom-up cut point detection. Starting from a fine initial segmentation,
// each sweep walks the segments left to right and, for the active triple
// (s_i, s_{i+1}, s_{i+2}), compares
//
//   solo : s_i | s_{i+1} | s_{i+2}
//   left : s_i + s_{i+1} | s_{i+2}
//   right: s_i | s_{i+1} + s_{i+2}
//
// by total description cost, each segment coded as its own cluster. Sweeps
// repeat until the cut points stop changing.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <map>
#include <thread>
#include <utility>
#include <vector>

#include "dmm/error.hpp"
#include "dmm/glasso.hpp"
#include "dmm/mdl.hpp"
#include "dmm/model.hpp"
#include "dmm/segmentation.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct InitialWindows {
  std::vector<std::size_t> sizes;
};

// Constant window w; a trailing remainder shorter than w is the last segment.
inline Segmentation init_cutpoints(std::size_t T, std::size_t w) {
  if (T == 0) throw InvalidArgument("init_cutpoints: empty series");
  if (w == 0) throw InvalidArgument("init_cutpoints: window must be >= 1");
  Segmentation s;
  s.length = T;
  for (std::size_t t = 1; t <= T; t += w) s.cut_points.push_back(t);
  return s;
}

inline Segmentation init_cutpoints(std::size_t T, const InitialWindows& windows) {
  std::size_t total = 0;
  Segmentation s;
  s.length = T;
  for (std::size_t sz : windows.sizes) {
    if (sz == 0) throw InvalidArgument("init_cutpoints: window sizes must be positive");
    s.cut_points.push_back(total + 1);
    total += sz;
  }
  if (total != T) {
    throw InvalidArgument("init_cutpoints: window sizes sum to " + std::to_string(total) + ", expected " +
                          std::to_string(T));
  }
  return s;
}

inline ClusterModel fit_segment_model(const TensorTS& x, std::size_t a, std::size_t b, double lambda,
                                      const AdmmConfig& cfg = {}) {
  return fit_cluster_model(slice_time(x, a, b), lambda, cfg);
}

struct SegmenterOptions {
  AdmmConfig admm;
  unsigned threads = 1;
  int max_sweeps = 10000;
};

struct SweepInfo {
  std::size_t segments_before = 0;
  std::size_t segments_after = 0;
  std::size_t new_fits = 0;
};

struct SegmenterDiagnostics {
  std::vector<SweepInfo> sweeps;
  std::size_t degenerate_fits = 0;
  std::size_t unconverged_fits = 0;
};

namespace detail {

// Cost pieces of one segment coded as its own cluster.
struct SegmentCost {
  std::size_t length = 0;
  double model_bits = 0.0;
  double data_nll = 0.0;
  double l1 = 0.0;
  bool degenerate = false;
  bool converged = true;
};

inline SegmentCost evaluate_segment(const TensorTS& x, std::size_t a, std::size_t b, double lambda,
                                    const AdmmConfig& cfg) {
  const TensorTS seg = slice_time(x, a, b);
  const ClusterModel model = fit_cluster_model(seg, lambda, cfg);
  SegmentCost c;
  c.length = b - a;
  c.model_bits = model_cost(model);
  c.l1 = l1_cost(model, lambda);
  for (double v : total_log_likelihood(seg, model)) c.data_nll -= v;
  c.degenerate = model.degenerate;
  c.converged = std::all_of(model.networks.begin(), model.networks.end(),
                            [](const ModeNetwork& n) { return n.converged; });
  return c;
}

// Runs fn(0..n-1) on up to `threads` workers (strided); rethrows the first
// worker exception after all have joined.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Memoizes segment costs by (a, b). Fits are deterministic, so reusing an
// entry across sweeps gives the same numbers as refitting it.
class SegmentCostCache {
 public:
  SegmentCostCache(const TensorTS& x, double lambda, const AdmmConfig& cfg, SegmenterDiagnostics* diag)
      : x_(x), lambda_(lambda), cfg_(cfg), diag_(diag) {}

  const SegmentCost& get(std::size_t a, std::size_t b) {
    auto it = cache_.find({a, b});
    if (it != cache_.end()) return it->second;
    return insert({a, b}, evaluate_segment(x_, a, b, lambda_, cfg_));
  }

  // Computes all missing ranges, in parallel when threads > 1.
  void prefetch(const std::vector<std::pair<std::size_t, std::size_t>>& ranges, unsigned threads) {
    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (const auto& r : ranges) {
      if (!cache_.contains(r) && std::find(todo.begin(), todo.end(), r) == todo.end()) todo.push_back(r);
    }
    if (todo.empty()) return;
    std::vector<SegmentCost> results(todo.size());
    parallel_for(todo.size(), threads, [&](std::size_t i) {
      results[i] = evaluate_segment(x_, todo[i].first, todo[i].second, lambda_, cfg_);
    });
    for (std::size_t i = 0; i < todo.size(); ++i) insert(todo[i], std::move(results[i]));
  }

  std::size_t fits() const { return fits_; }

 private:
  const SegmentCost& insert(std::pair<std::size_t, std::size_t> key, SegmentCost c) {
    ++fits_;
    if (diag_ != nullptr) {
      diag_->degenerate_fits += c.degenerate ? 1 : 0;
      diag_->unconverged_fits += c.converged ? 0 : 1;
    }
    return cache_.emplace(key, std::move(c)).first->second;
  }

  const TensorTS& x_;
  double lambda_;
  AdmmConfig cfg_;
  SegmenterDiagnostics* diag_;
  std::map<std::pair<std::size_t, std::size_t>, SegmentCost> cache_;
  std::size_t fits_ = 0;
};

// Total cost of segments each coded as its own cluster (K = m = count).
inline double local_cost(std::initializer_list<const SegmentCost*> segs) {
  std::vector<std::size_t> sizes;
  double c = 0.0;
  for (const auto* s : segs) {
    sizes.push_back(s->length);
    c += s->model_bits + s->data_nll + s->l1;
  }
  return c + cost_assign(sizes.size(), sizes.size(), sizes);
}

}  // namespace detail

inline Segmentation detect(const TensorTS& x, const Segmentation& initial, double lambda,
                           const SegmenterOptions& opts = {}, SegmenterDiagnostics* diag = nullptr) {
  initial.validate();
  if (initial.length != x.length()) throw InvalidArgument("detect: segmentation length does not match tensor");
  if (!(lambda >= 0.0)) throw InvalidArgument("detect: lambda must be >= 0");
  opts.admm.validate();

  detail::SegmentCostCache cache(x, lambda, opts.admm, diag);
  Segmentation cp = initial;

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const std::size_t m = cp.count();
    const std::size_t fits_before = cache.fits();
    if (opts.threads > 1) {
      std::vector<std::pair<std::size_t, std::size_t>> ranges;
      for (std::size_t i = 0; i < m; ++i) {
        ranges.emplace_back(cp.start(i), cp.end(i));
        if (i + 1 < m) ranges.emplace_back(cp.start(i), cp.end(i + 1));
      }
      cache.prefetch(ranges, opts.threads);
    }

    auto solo = [&](std::size_t i) -> const detail::SegmentCost& { return cache.get(cp.start(i), cp.end(i)); };
    auto pair = [&](std::size_t i) -> const detail::SegmentCost& { return cache.get(cp.start(i), cp.end(i + 1)); };

    Segmentation next;
    next.length = cp.length;
    std::size_t id = 0;
    while (id < m) {
      if (id + 2 < m) {
        const double c_solo = detail::local_cost({&solo(id), &solo(id + 1), &solo(id + 2)});
        const double c_left = detail::local_cost({&pair(id), &solo(id + 2)});
        const double c_right = detail::local_cost({&solo(id), &pair(id + 1)});
        if (c_solo <= c_left && c_solo <= c_right) {
          next.cut_points.push_back(cp.start(id));
          id += 1;
        } else if (c_left <= c_right) {
          next.cut_points.push_back(cp.start(id));
          id += 2;
        } else {
          next.cut_points.push_back(cp.start(id));
          next.cut_points.push_back(cp.start(id + 1));
          id += 3;
        }
      } else if (id + 1 < m) {
        const double c_solo = detail::local_cost({&solo(id), &solo(id + 1)});
        const double c_merge = detail::local_cost({&pair(id)});
        next.cut_points.push_back(cp.start(id));
        id += c_merge < c_solo ? 2 : 1;
      } else {
        next.cut_points.push_back(cp.start(id));
        id += 1;
      }
    }

    if (diag != nullptr) diag->sweeps.push_back({m, next.count(), cache.fits() - fits_before});
    if (next == cp) break;
    cp = std::move(next);
  }
  return cp;
}

}  // namespace dmm

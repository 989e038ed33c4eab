#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include "dmm/cluster_detector.hpp"
#include "dmm/error.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct EvalReport {
  double macro_f1 = 0.0;
  std::map<int, int> matching;  // predicted id -> truth id
  std::vector<int> truth_classes;
  std::vector<double> per_class_f1;  // aligned with truth_classes
  double loglik = 0.0;
  std::size_t n_segments = 0;
  std::size_t n_clusters = 0;
};

// Maximum-weight assignment of rows to columns (Hungarian algorithm, O(n^3)).
// Returns for every row the matched column or -1.
inline std::vector<int> max_weight_matching(const std::vector<std::vector<double>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};
  // Square cost matrix (minimization), 1-based internals.
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) cost[i + 1][j + 1] = -weight[i][j];

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

namespace detail {

inline double f1_score(std::size_t overlap, std::size_t pred_size, std::size_t truth_size) {
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(pred_size);
  const double recall = static_cast<double>(overlap) / static_cast<double>(truth_size);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

// Per-class F1 table: rows = predicted clusters, cols = truth classes.
struct F1Table {
  std::vector<int> pred_ids;
  std::vector<int> truth_ids;
  std::vector<std::vector<double>> f1;
};

inline F1Table f1_table(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) {
    throw DataError("macro_f1: label lengths differ (" + std::to_string(pred.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  }
  std::map<int, std::size_t> pred_count, truth_count;
  std::map<std::pair<int, int>, std::size_t> overlap;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    ++pred_count[pred[t]];
    ++truth_count[truth[t]];
    ++overlap[{pred[t], truth[t]}];
  }
  F1Table tab;
  for (auto [id, c] : pred_count) tab.pred_ids.push_back(id);
  for (auto [id, c] : truth_count) tab.truth_ids.push_back(id);
  tab.f1.assign(tab.pred_ids.size(), std::vector<double>(tab.truth_ids.size(), 0.0));
  for (std::size_t i = 0; i < tab.pred_ids.size(); ++i) {
    for (std::size_t j = 0; j < tab.truth_ids.size(); ++j) {
      const auto it = overlap.find({tab.pred_ids[i], tab.truth_ids[j]});
      const std::size_t ov = it == overlap.end() ? 0 : it->second;
      tab.f1[i][j] = detail::f1_score(ov, pred_count[tab.pred_ids[i]], truth_count[tab.truth_ids[j]]);
    }
  }
  return tab;
}

// Macro-F1 over the truth classes after the injective predicted->truth
// matching that maximizes it. Unmatched truth classes score 0.
inline EvalReport macro_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  const F1Table tab = f1_table(pred, truth);
  EvalReport rep;
  rep.truth_classes = tab.truth_ids;
  rep.per_class_f1.assign(tab.truth_ids.size(), 0.0);
  if (tab.truth_ids.empty()) return rep;
  const auto match = max_weight_matching(tab.f1);
  for (std::size_t i = 0; i < match.size(); ++i) {
    if (match[i] < 0) continue;
    const auto j = static_cast<std::size_t>(match[i]);
    rep.matching[tab.pred_ids[i]] = tab.truth_ids[j];
    rep.per_class_f1[j] = tab.f1[i][j];
  }
  double s = 0.0;
  for (double f : rep.per_class_f1) s += f;
  rep.macro_f1 = s / static_cast<double>(rep.per_class_f1.size());
  return rep;
}

// Total log-likelihood (nats) of x under the fitted clustering.
inline double total_loglik(const TensorTS& x, const ClusterParams& result) {
  return -cost_data(x, result.models, result.assignments);
}

inline void loglik_report(const TensorTS& x, const ClusterParams& result, EvalReport& rep) {
  rep.loglik = total_loglik(x, result);
  rep.n_segments = result.assignments.segmentation.count();
  rep.n_clusters = static_cast<std::size_t>(result.K);
}

}  // namespace dmm

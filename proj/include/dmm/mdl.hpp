#pragma once

// Total description cost of a clustering:
//
//   cost_total = cost_assign + cost_model + cost_data + cost_l1
//
// Log bases follow the cost definitions: log* is base 2, the model term uses
// natural logs, and the data term is a negative log-likelihood in nats. Only
// differences of totals are ever compared, so mixing units is harmless as
// long as it is consistent. log* omits Rissanen's additive constant.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dmm/error.hpp"
#include "dmm/model.hpp"
#include "dmm/segmentation.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

// Bits per stored float.
inline constexpr double kFloatBits = 32.0;

struct CostBreakdown {
  double assign = 0.0;
  double model = 0.0;
  double data = 0.0;
  double l1 = 0.0;
  double total = 0.0;

  static CostBreakdown of(double assign, double model, double data, double l1) {
    return {assign, model, data, l1, assign + model + data + l1};
  }
};

// Sum of iterated base-2 logarithms while positive; log_star(1) == 0.
inline double log_star(std::size_t x) {
  if (x < 1) throw InvalidArgument("log_star: argument must be >= 1");
  double sum = 0.0;
  double v = std::log2(static_cast<double>(x));
  while (v > 0.0) {
    sum += v;
    v = std::log2(v);
  }
  return sum;
}

// log*(K) + log*(m) + m log*(K) + sum_k log*(|A_k|) for explicit sizes.
inline double cost_assign(std::size_t K, std::size_t m, std::span<const std::size_t> cluster_sizes) {
  double c = log_star(K) + log_star(m) + static_cast<double>(m) * log_star(K);
  for (std::size_t s : cluster_sizes) {
    if (s == 0) throw InvalidArgument("cost_assign: empty cluster");
    c += log_star(s);
  }
  return c;
}

inline double cost_assign(const Assignments& a) {
  const auto sizes = a.cluster_sizes();
  return cost_assign(static_cast<std::size_t>(a.K), a.segmentation.count(), sizes);
}

// Model bits of one cluster.
inline double model_cost(const ClusterModel& model) {
  const double N = static_cast<double>(model.order());
  double c = 0.0;
  for (const auto& net : model.networks) {
    const double dn = static_cast<double>(net.dim());
    const std::size_t nnz = net.upper_support_count();
    double term = dn * (std::log(dn) + kFloatBits);
    if (nnz > 0) {
      term += log_star(nnz) + static_cast<double>(nnz) * (std::log(dn * (dn - 1.0) / 2.0) + kFloatBits);
    }
    c += term / (dn * dn * N);
  }
  return c;
}

inline double cost_model(std::span<const ClusterModel> models) {
  double c = 0.0;
  for (const auto& m : models) c += model_cost(m);
  return c;
}

inline double l1_cost(const ClusterModel& model, double lambda) {
  double c = 0.0;
  for (const auto& net : model.networks) c += lambda * net.offdiag_l1();
  return c;
}

inline double cost_l1(std::span<const ClusterModel> models, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("cost_l1: lambda must be >= 0");
  double c = 0.0;
  for (const auto& m : models) c += l1_cost(m, lambda);
  return c;
}

// Negative log-likelihood of time steps [a, b) under `model`.
inline double segment_data_cost(const TensorTS& x, std::size_t a, std::size_t b, const ClusterModel& model) {
  const auto ll = total_log_likelihood(slice_time(x, a, b), model);
  double s = 0.0;
  for (double v : ll) s += v;
  return -s;
}

inline double cost_data(const TensorTS& x, std::span<const ClusterModel> models, const Assignments& a) {
  if (a.segmentation.length != x.length()) throw InvalidArgument("cost_data: assignment length mismatch");
  double c = 0.0;
  for (std::size_t i = 0; i < a.segment_cluster.size(); ++i) {
    const int k = a.segment_cluster[i];
    if (k < 1 || static_cast<std::size_t>(k) > models.size()) throw InvalidArgument("cost_data: unknown cluster id");
    c += segment_data_cost(x, a.segmentation.start(i), a.segmentation.end(i), models[static_cast<std::size_t>(k - 1)]);
  }
  return c;
}

inline CostBreakdown cost_total(const TensorTS& x, std::span<const ClusterModel> models, const Assignments& a,
                                double lambda) {
  if (models.size() != static_cast<std::size_t>(a.K)) throw InvalidArgument("cost_total: one model per cluster required");
  return CostBreakdown::of(cost_assign(a), cost_model(models), cost_data(x, models, a), cost_l1(models, lambda));
}

}  // namespace dmm

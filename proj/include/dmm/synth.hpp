#pragma once

// Ground-truth generator for synthetic tensor time series. Each cluster gets
// one Erdos-Renyi network per mode (edge probability 0.2, weights uniform on
// [-0.6,-0.3] U [0.3,0.6]), assembled hierarchically and shifted by
// (0.1 + |lambda_min|) I to make it positive definite. Observations vec(X_t)
// are drawn i.i.d. from N(0, Theta_k^{-1}) within each segment.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmm/error.hpp"
#include "dmm/model.hpp"
#include "dmm/random.hpp"
#include "dmm/segmentation.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct SynthConfig {
  double edge_probability = 0.2;
  double weight_min = 0.3;
  double weight_max = 0.6;
  double eigen_margin = 0.1;
  std::size_t observations_per_segment = 100;  // cluster k holds this many times G_k steps
  std::size_t min_segment_length = 20;
};

struct GroundTruth {
  std::vector<int> labels;  // cluster id per time step
  Segmentation true_cut_points;
  std::vector<int> segment_cluster;
  std::vector<std::vector<Eigen::MatrixXd>> true_networks;  // [cluster][mode]
  std::vector<Eigen::MatrixXd> assembled_precisions;        // [cluster]
};

inline Eigen::MatrixXd gen_mode_network(std::size_t dn, Rng& rng, const SynthConfig& cfg = {}) {
  if (dn == 0) throw InvalidArgument("gen_mode_network: dimension must be >= 1");
  const auto n = static_cast<Eigen::Index>(dn);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!rng.bernoulli(cfg.edge_probability)) continue;
      const double mag = rng.uniform(cfg.weight_min, cfg.weight_max);
      const double w = rng.bernoulli(0.5) ? mag : -mag;
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

inline Eigen::MatrixXd build_cluster_precision(const std::vector<Eigen::MatrixXd>& networks,
                                               const SynthConfig& cfg = {}) {
  Eigen::MatrixXd theta = assemble_hierarchical(networks);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta, Eigen::EigenvaluesOnly);
  const double c = es.eigenvalues().minCoeff();
  theta.diagonal().array() += cfg.eigen_margin + std::abs(c);
  return theta;
}

// Parses "A".."D" or an explicit comma-separated id list such as "1,2,1".
inline std::vector<int> parse_sequence(const std::string& spec) {
  static const std::map<std::string, std::vector<int>> named = {
      {"A", {1, 2, 1}},
      {"B", {1, 2, 3, 2, 1}},
      {"C", {1, 2, 3, 4, 1, 2, 3, 4}},
      {"D", {1, 2, 2, 1, 3, 3, 3, 1}},
  };
  if (auto it = named.find(spec); it != named.end()) return it->second;
  std::vector<int> ids;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      ids.push_back(v);
    } catch (const std::exception&) {
      throw InvalidArgument("invalid sequence '" + spec + "'");
    }
  }
  if (ids.empty()) throw InvalidArgument("invalid sequence '" + spec + "'");
  const int K = *std::max_element(ids.begin(), ids.end());
  for (int k = 1; k <= K; ++k) {
    if (std::find(ids.begin(), ids.end(), k) == ids.end()) {
      throw InvalidArgument("sequence must use every cluster id 1..K");
    }
  }
  return ids;
}

namespace detail {

// Uniform composition of `total` into `parts` pieces, each >= min_len.
inline std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts, std::size_t min_len,
                                                   Rng& rng) {
  if (parts * min_len > total) throw InvalidArgument("segment minimum too large for cluster size");
  const std::size_t free = total - parts * min_len;
  // Stars and bars: choose parts-1 bar positions among free + parts - 1 slots.
  const std::size_t slots = free + parts - 1;
  std::vector<std::size_t> pool(slots);
  for (std::size_t i = 0; i < slots; ++i) pool[i] = i;
  for (std::size_t i = 0; i + 1 < parts; ++i) std::swap(pool[i], pool[i + rng.below(slots - i)]);
  std::vector<std::size_t> bars(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(parts - 1));
  std::sort(bars.begin(), bars.end());
  std::vector<std::size_t> out;
  std::size_t prev = 0;
  for (std::size_t b : bars) {
    out.push_back(b - prev + min_len);
    prev = b + 1;
  }
  out.push_back(slots - prev + min_len);
  return out;
}

}  // namespace detail

struct SynthResult {
  TensorTS tensor;
  GroundTruth truth;
};

inline SynthResult gen_tts(const std::vector<int>& sequence, const Shape& dims, std::uint64_t seed,
                           const SynthConfig& cfg = {}) {
  if (sequence.empty()) throw InvalidArgument("gen_tts: empty sequence");
  if (dims.empty() || std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
    throw InvalidArgument("gen_tts: dimensions must be positive");
  }
  const int K = *std::max_element(sequence.begin(), sequence.end());
  Rng rng(seed);

  GroundTruth gt;
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::MatrixXd> nets;
    for (std::size_t dn : dims) nets.push_back(gen_mode_network(dn, rng, cfg));
    gt.assembled_precisions.push_back(build_cluster_precision(nets, cfg));
    gt.true_networks.push_back(std::move(nets));
  }

  // Segment lengths: cluster k's total is split over its occurrences in order.
  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    const auto g = static_cast<std::size_t>(std::count(sequence.begin(), sequence.end(), k));
    parts[static_cast<std::size_t>(k - 1)] =
        detail::random_composition(cfg.observations_per_segment * g, g, cfg.min_segment_length, rng);
  }
  std::vector<std::size_t> used(static_cast<std::size_t>(K), 0);
  gt.true_cut_points.cut_points.clear();
  std::size_t t = 1;
  for (int k : sequence) {
    const auto ki = static_cast<std::size_t>(k - 1);
    const std::size_t len = parts[ki][used[ki]++];
    gt.true_cut_points.cut_points.push_back(t);
    gt.segment_cluster.push_back(k);
    gt.labels.insert(gt.labels.end(), len, k);
    t += len;
  }
  const std::size_t T = t - 1;
  gt.true_cut_points.length = T;

  // Samples: x = L^{-T} z with Theta = L L^T, so Cov(x) = Theta^{-1}.
  const std::size_t D = shape_product(dims);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
  for (const auto& theta : gt.assembled_precisions) factors.emplace_back(theta);
  std::vector<double> data(D * T);
  Eigen::VectorXd z(static_cast<Eigen::Index>(D));
  for (std::size_t step = 0; step < T; ++step) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const auto& llt = factors[static_cast<std::size_t>(gt.labels[step] - 1)];
    const Eigen::VectorXd xv = llt.matrixU().solve(z);
    std::copy(xv.data(), xv.data() + xv.size(), data.begin() + static_cast<std::ptrdiff_t>(step * D));
  }
  Shape shape = dims;
  shape.push_back(T);
  return {TensorTS(std::move(shape), std::move(data)), std::move(gt)};
}

inline SynthResult gen_tts(const std::string& sequence, const Shape& dims, std::uint64_t seed,
                           const SynthConfig& cfg = {}) {
  return gen_tts(parse_sequence(sequence), dims, seed, cfg);
}

}  // namespace dmm

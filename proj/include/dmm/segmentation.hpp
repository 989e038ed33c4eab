#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dmm/error.hpp"

namespace dmm {

// Cut points cp_1 = 1 < cp_2 < ... < cp_m <= T (1-based); segment i covers
// [cp_i, cp_{i+1}) with the sentinel cp_{m+1} = T + 1.
struct Segmentation {
  std::vector<std::size_t> cut_points;
  std::size_t length = 0;  // T

  std::size_t count() const { return cut_points.size(); }
  // Zero-based segment index i.
  std::size_t start(std::size_t i) const { return cut_points[i]; }
  std::size_t end(std::size_t i) const { return i + 1 < cut_points.size() ? cut_points[i + 1] : length + 1; }
  std::size_t size(std::size_t i) const { return end(i) - start(i); }

  void validate() const {
    if (length == 0 || cut_points.empty() || cut_points.front() != 1) {
      throw InvalidArgument("segmentation must start at time 1");
    }
    for (std::size_t i = 1; i < cut_points.size(); ++i) {
      if (cut_points[i] <= cut_points[i - 1]) throw InvalidArgument("cut points must increase strictly");
    }
    if (cut_points.back() > length) throw InvalidArgument("cut point beyond series end");
  }

  bool operator==(const Segmentation&) const = default;
};

// Segment-to-cluster assignment. Cluster ids are 1..K.
struct Assignments {
  Segmentation segmentation;
  std::vector<int> segment_cluster;
  int K = 0;

  // |A_k| for k = 1..K (index k-1).
  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < segment_cluster.size(); ++i) {
      sizes[static_cast<std::size_t>(segment_cluster[i] - 1)] += segmentation.size(i);
    }
    return sizes;
  }

  // Time steps (1-based, increasing) of cluster k.
  std::vector<std::size_t> cluster_times(int k) const {
    std::vector<std::size_t> times;
    for (std::size_t i = 0; i < segment_cluster.size(); ++i) {
      if (segment_cluster[i] != k) continue;
      for (std::size_t t = segmentation.start(i); t < segmentation.end(i); ++t) times.push_back(t);
    }
    return times;
  }

  // Cluster id of every time step.
  std::vector<int> time_labels() const {
    std::vector<int> labels;
    labels.reserve(segmentation.length);
    for (std::size_t i = 0; i < segment_cluster.size(); ++i) {
      labels.insert(labels.end(), segmentation.size(i), segment_cluster[i]);
    }
    return labels;
  }

  void validate() const {
    segmentation.validate();
    if (segment_cluster.size() != segmentation.count()) {
      throw InvalidArgument("one cluster id per segment required");
    }
    if (K < 1) throw InvalidArgument("K must be >= 1");
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    for (int c : segment_cluster) {
      if (c < 1 || c > K) throw InvalidArgument("cluster id out of range: " + std::to_string(c));
      seen[static_cast<std::size_t>(c - 1)] = true;
    }
    for (bool s : seen) {
      if (!s) throw InvalidArgument("empty cluster in assignments");
    }
  }

  // Renumbers clusters 1..K' in order of first appearance after dropping
  // unused ids. Returns old id -> new id (0 for dropped ids).
  std::vector<int> compact() {
    std::map<int, int> remap;
    for (int& c : segment_cluster) {
      auto [it, inserted] = remap.try_emplace(c, static_cast<int>(remap.size()) + 1);
      c = it->second;
    }
    std::vector<int> old_to_new(static_cast<std::size_t>(std::max(K, 0)) + 1, 0);
    for (auto [o, n] : remap) {
      if (o >= 0 && static_cast<std::size_t>(o) < old_to_new.size()) old_to_new[static_cast<std::size_t>(o)] = n;
    }
    K = static_cast<int>(remap.size());
    return old_to_new;
  }
};

}  // namespace dmm

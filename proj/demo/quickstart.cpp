// Generate a small 3rd-order series with two regimes, fit it, and print what
// was found: the chosen lambda and K, the segments, accuracy against the
// generator's labels, and the strongest edges of each cluster's first mode.

#include <algorithm>
#include <cstdio>
#include <vector>

#include "dmm/dmm.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  const auto syn = dmm::gen_tts("A", {6, 4}, seed);
  const auto& x = syn.tensor;
  std::printf("series: %zu x %zu over %zu steps\n", x.dim(1), x.dim(2), x.length());

  const auto res = dmm::fit(x, 4, {0.5, 1, 2, 4}, seed);
  std::printf("lambda %.2g, K = %d, total cost %.1f\n", res.lambda, res.K, res.costs.total);

  const auto& a = res.assignments;
  for (std::size_t i = 0; i < a.segmentation.count(); ++i) {
    std::printf("  [%4zu, %4zu)  cluster %d\n", a.segmentation.start(i), a.segmentation.end(i),
                a.segment_cluster[i]);
  }
  const auto rep = dmm::macro_f1(a.time_labels(), syn.truth.labels);
  std::printf("macro-F1 vs truth: %.3f\n", rep.macro_f1);

  for (int k = 1; k <= res.K; ++k) {
    const auto& net = res.models[static_cast<std::size_t>(k - 1)].networks[0];
    const auto pc = dmm::partial_correlation(net.psi);
    struct Edge { Eigen::Index i, j; double w; };
    std::vector<Edge> edges;
    for (Eigen::Index i = 0; i < pc.rows(); ++i)
      for (Eigen::Index j = i + 1; j < pc.cols(); ++j)
        if (net.support(i, j)) edges.push_back({i, j, pc(i, j)});
    std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return std::abs(l.w) > std::abs(r.w); });
    std::printf("cluster %d, mode 1: %zu edges", k, edges.size());
    for (std::size_t e = 0; e < std::min<std::size_t>(3, edges.size()); ++e) {
      std::printf("%s v%ld-v%ld %+.2f", e ? "," : ":", static_cast<long>(edges[e].i + 1),
                  static_cast<long>(edges[e].j + 1), edges[e].w);
    }
    std::printf("\n");
  }
}

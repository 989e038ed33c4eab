#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dmm/cluster_detector.hpp"
#include "dmm/synth.hpp"

namespace {

dmm::ClusterModel scalar_model(double mean, double precision) {
  dmm::ClusterModel m;
  dmm::ModeNetwork net;
  net.mode = 1;
  net.psi = Eigen::MatrixXd::Constant(1, 1, precision);
  net.support = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(1, 1, true);
  m.networks = {net};
  m.mean_vec = Eigen::VectorXd::Constant(1, mean);
  return m;
}

double support_f1(const Eigen::MatrixXd& truth, const dmm::ModeNetwork& net) {
  double tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i)
    for (Eigen::Index j = i + 1; j < truth.cols(); ++j) {
      const bool t = truth(i, j) != 0.0, e = net.support(i, j);
      tp += t && e;
      fp += !t && e;
      fn += t && !e;
    }
  return tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 1.0;
}

dmm::Assignments truth_assignments(const dmm::GroundTruth& gt) {
  dmm::Assignments a;
  a.segmentation = gt.true_cut_points;
  a.segment_cluster = gt.segment_cluster;
  a.K = *std::max_element(gt.segment_cluster.begin(), gt.segment_cluster.end());
  return a;
}

}  // namespace

TEST(AssignSegments, SingleModelTakesEverything) {
  const dmm::TensorTS x({1, 6}, {0, 1, 2, 3, 4, 5});
  const auto a = dmm::assign_segments(x, {scalar_model(0, 1)}, dmm::init_cutpoints(6, 2));
  EXPECT_EQ(a.segment_cluster, (std::vector<int>{1, 1, 1}));
}

TEST(AssignSegments, PicksHigherLikelihoodModel) {
  const dmm::TensorTS x({1, 4}, {0.1, -0.1, 0.1, -0.1});
  // N(0, 100) has precision 0.01.
  const auto a = dmm::assign_segments(x, {scalar_model(0, 0.01), scalar_model(0, 1)}, dmm::init_cutpoints(4, 4));
  EXPECT_EQ(a.segment_cluster, (std::vector<int>{2}));
}

TEST(AssignSegments, TiesGoToLowestId) {
  const dmm::TensorTS x({1, 6}, {0.3, 1, -2, 3, 0, 5});
  const auto m = scalar_model(0.5, 2);
  const auto a = dmm::assign_segments(x, {m, m, m}, dmm::init_cutpoints(6, 2));
  EXPECT_EQ(a.segment_cluster, (std::vector<int>{1, 1, 1}));
}

TEST(AssignSegments, RejectsBadInput) {
  const dmm::TensorTS x({1, 4}, {0, 0, 0, 0});
  EXPECT_THROW(dmm::assign_segments(x, {}, dmm::init_cutpoints(4, 2)), dmm::InvalidArgument);
  EXPECT_THROW(dmm::assign_segments(x, {scalar_model(0, 1)}, dmm::init_cutpoints(5, 2)), dmm::InvalidArgument);
}

TEST(InferNetworks, WholeRangeMatchesSegmentFit) {
  const auto syn = dmm::gen_tts("A", {4, 3}, 1);
  const std::size_t T = syn.tensor.length();
  dmm::Assignments a;
  a.segmentation = dmm::init_cutpoints(T, 50);
  a.segment_cluster.assign(a.segmentation.count(), 1);
  a.K = 1;
  const auto models = dmm::infer_networks(syn.tensor, a, 1.5);
  const auto whole = dmm::fit_cluster_model(syn.tensor, 1.5);
  ASSERT_EQ(models.size(), 1u);
  for (std::size_t n = 0; n < 2; ++n) EXPECT_TRUE(models[0].networks[n].psi.isApprox(whole.networks[n].psi, 1e-12));
}

TEST(InferNetworks, PoolingIgnoresSegmentOrder) {
  const auto syn = dmm::gen_tts("A", {4}, 2);
  const std::size_t T = syn.tensor.length(), D = 4;
  dmm::Assignments a;
  a.segmentation = dmm::init_cutpoints(T, 60);  // 5 segments of 60
  a.segment_cluster = {1, 2, 1, 2, 1};
  a.K = 2;
  // Swap the data of segments 1 and 5 (both cluster 1).
  std::vector<double> v = syn.tensor.data();
  for (std::size_t t = 0; t < 60; ++t)
    for (std::size_t d = 0; d < D; ++d) std::swap(v[t * D + d], v[(t + 240) * D + d]);
  const auto m1 = dmm::infer_networks(syn.tensor, a, 1.0);
  const auto m2 = dmm::infer_networks(dmm::TensorTS(syn.tensor.shape(), v), a, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_TRUE(m1[k].networks[0].psi.isApprox(m2[k].networks[0].psi, 1e-9));
    EXPECT_TRUE(m1[k].mean_vec.isApprox(m2[k].mean_vec, 1e-12));
  }
}

TEST(InferNetworks, RejectsEmptyCluster) {
  const dmm::TensorTS x({1, 4}, {0, 1, 0, 1});
  dmm::Assignments a;
  a.segmentation = dmm::init_cutpoints(4, 2);
  a.segment_cluster = {1, 1};
  a.K = 2;
  EXPECT_THROW(dmm::infer_networks(x, a, 1.0), dmm::InvalidArgument);
}

// With the true assignment, lambda tuned per instance over a small grid.
TEST(InferNetworks, RecoversSupportGivenTrueAssignment) {
  double sum = 0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto syn = dmm::gen_tts("A", {10, 10}, seed);
    const auto a = truth_assignments(syn.truth);
    std::vector<double> best(4, 0.0);  // [cluster][mode]
    for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      const auto models = dmm::infer_networks(syn.tensor, a, lambda);
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t n = 0; n < 2; ++n)
          best[k * 2 + n] =
              std::max(best[k * 2 + n], support_f1(syn.truth.true_networks[k][n], models[k].networks[n]));
    }
    for (double b : best) {
      sum += b;
      ++count;
    }
  }
  EXPECT_GT(sum / count, 0.8);
}

// Re-running the E-step with fixed models never raises cost_data.
TEST(EStep, DoesNotIncreaseDataCost) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto syn = dmm::gen_tts("B", {5}, seed);
    const auto cp = dmm::init_cutpoints(syn.tensor.length(), 25);
    dmm::Assignments a;
    a.segmentation = cp;
    a.K = 3;
    for (std::size_t i = 0; i < cp.count(); ++i) a.segment_cluster.push_back(static_cast<int>(i % 3) + 1);
    const auto models = dmm::infer_networks(syn.tensor, a, 1.0);
    const auto next = dmm::assign_segments(syn.tensor, models, cp);
    EXPECT_LE(dmm::cost_data(syn.tensor, models, next), dmm::cost_data(syn.tensor, models, a) + 1e-9);
  }
}

TEST(DetectClusters, SingleClusterDataSelectsOne) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    dmm::SynthConfig cfg;
    cfg.observations_per_segment = 400;
    const auto syn = dmm::gen_tts("1", {5, 4}, seed, cfg);
    const auto res = dmm::detect_clusters(syn.tensor, dmm::init_cutpoints(400, 50), 1.0, seed);
    EXPECT_EQ(res.K, 1) << "seed " << seed;
    ASSERT_GE(res.diagnostics.k_trace.size(), 2u);
    EXPECT_GT(res.diagnostics.k_trace[1].total, res.diagnostics.k_trace[0].total);
  }
}

TEST(DetectClusters, SequenceASelectsTwoMostly) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto syn = dmm::gen_tts("A", {10, 10}, seed);
    const auto cp = dmm::detect(syn.tensor, dmm::init_cutpoints(syn.tensor.length(), 4), 1.0);
    hits += dmm::detect_clusters(syn.tensor, cp, 1.0, seed).K == 2;
  }
  EXPECT_GE(hits, 7);
}

class ClusterProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(ClusterProperty, PartitionFixedPointAndCosts) {
  const std::uint64_t seed = GetParam();
  const auto syn = dmm::gen_tts("C", {5, 3}, seed);
  const auto cp = dmm::detect(syn.tensor, dmm::init_cutpoints(syn.tensor.length(), 8), 1.0);
  const auto res = dmm::detect_clusters(syn.tensor, cp, 1.0, seed);
  const auto& a = res.assignments;
  EXPECT_NO_THROW(a.validate());
  ASSERT_EQ(res.models.size(), static_cast<std::size_t>(res.K));

  // Every time step in exactly one cluster.
  std::vector<int> hits(syn.tensor.length(), 0);
  for (int k = 1; k <= a.K; ++k)
    for (std::size_t t : a.cluster_times(k)) ++hits[t - 1];
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

  if (res.diagnostics.em_converged) {
    EXPECT_EQ(dmm::assign_segments(syn.tensor, res.models, a.segmentation).segment_cluster, a.segment_cluster);
  }
  const auto again = dmm::cost_total(syn.tensor, res.models, a, res.lambda);
  EXPECT_NEAR(again.total, res.costs.total, 1e-6);

  const auto twice = dmm::detect_clusters(syn.tensor, cp, 1.0, seed);
  EXPECT_EQ(twice.assignments.segment_cluster, a.segment_cluster);
  EXPECT_EQ(twice.costs.total, res.costs.total);
}

TEST_P(ClusterProperty, RestartThreadsAreDeterministic) {
  const std::uint64_t seed = GetParam();
  const auto syn = dmm::gen_tts("B", {4}, seed);
  const auto cp = dmm::init_cutpoints(syn.tensor.length(), 25);
  dmm::ClusterOptions one, many;
  one.restarts = many.restarts = 3;
  many.threads = 3;
  const auto a = dmm::detect_clusters(syn.tensor, cp, 1.0, seed, one);
  const auto b = dmm::detect_clusters(syn.tensor, cp, 1.0, seed, many);
  EXPECT_EQ(a.assignments.segment_cluster, b.assignments.segment_cluster);
  EXPECT_EQ(a.costs.total, b.costs.total);
}

INSTANTIATE_TEST_SUITE_P(Seeds, ClusterProperty, ::testing::Values(1, 2, 3, 4));

TEST(Fit, SingleLambdaMatchesPipeline) {
  const auto syn = dmm::gen_tts("A", {5}, 4);
  const auto init = dmm::init_cutpoints(syn.tensor.length(), 4);
  const auto res = dmm::fit(syn.tensor, init, {2.0}, 4);
  const auto manual = dmm::detect_clusters(syn.tensor, dmm::detect(syn.tensor, init, 2.0), 2.0, 4);
  EXPECT_EQ(res.assignments.segment_cluster, manual.assignments.segment_cluster);
  EXPECT_EQ(res.assignments.segmentation, manual.assignments.segmentation);
  EXPECT_EQ(res.costs.total, manual.costs.total);
}

TEST(Fit, ReportsMinimumOverGrid) {
  const auto syn = dmm::gen_tts("A", {5}, 5);
  const std::vector<double> grid{0.5, 1, 2, 4};
  const auto res = dmm::fit(syn.tensor, 4, grid, 5);
  ASSERT_EQ(res.diagnostics.lambda_trace.size(), grid.size());
  for (const auto& l : res.diagnostics.lambda_trace) EXPECT_LE(res.costs.total, l.total);
  EXPECT_TRUE(std::find(grid.begin(), grid.end(), res.lambda) != grid.end());

  dmm::FitOptions par;
  par.cluster.threads = 4;
  const auto p = dmm::fit(syn.tensor, 4, grid, 5, par);
  EXPECT_EQ(p.costs.total, res.costs.total);
  EXPECT_EQ(p.assignments.segment_cluster, res.assignments.segment_cluster);
}

TEST(Fit, RejectsBadGrid) {
  const auto syn = dmm::gen_tts("A", {3}, 6);
  EXPECT_THROW(dmm::fit(syn.tensor, 4, {}, 1), dmm::InvalidArgument);
  EXPECT_THROW(dmm::fit(syn.tensor, 4, {1.0, -1.0}, 1), dmm::InvalidArgument);
}

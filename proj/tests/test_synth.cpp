#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmm/synth.hpp"

namespace {

double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Eigen::MatrixXd sample_cov(const dmm::TensorTS& x) {
  const auto D = static_cast<Eigen::Index>(x.variables());
  const auto T = static_cast<Eigen::Index>(x.length());
  const Eigen::Map<const Eigen::MatrixXd> X(x.data().data(), D, T);
  const Eigen::VectorXd mu = X.rowwise().mean();
  const Eigen::MatrixXd C = X.colwise() - mu;
  return C * C.transpose() / static_cast<double>(T);
}

}  // namespace

TEST(GenModeNetwork, ScalarModeHasNoEdges) {
  dmm::Rng rng(1);
  EXPECT_EQ(dmm::gen_mode_network(1, rng), Eigen::MatrixXd::Zero(1, 1));
  EXPECT_THROW(dmm::gen_mode_network(0, rng), dmm::InvalidArgument);
}

TEST(GenModeNetwork, WeightsSymmetricInRangeAtRate) {
  dmm::Rng rng(2);
  std::size_t pairs = 0, edges = 0;
  while (pairs < 10000) {
    const auto a = dmm::gen_mode_network(15, rng);
    EXPECT_EQ(a, a.transpose());
    EXPECT_TRUE(a.diagonal().isZero(0));
    for (Eigen::Index i = 0; i < 15; ++i)
      for (Eigen::Index j = i + 1; j < 15; ++j) {
        const double w = std::abs(a(i, j));
        ++pairs;
        if (w == 0.0) continue;
        ++edges;
        EXPECT_GE(w, 0.3);
        EXPECT_LE(w, 0.6);
      }
  }
  EXPECT_NEAR(static_cast<double>(edges) / static_cast<double>(pairs), 0.2, 0.02);
}

TEST(BuildClusterPrecision, ZeroNetworks) {
  const auto th = dmm::build_cluster_precision({Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(2, 2)});
  EXPECT_TRUE(th.isApprox(0.1 * Eigen::MatrixXd::Identity(6, 6), 1e-15));
}

TEST(BuildClusterPrecision, ShiftLandsMinimumEigenvalueAtMargin) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 0.5, 0.5, 0;  // eigenvalues -0.5, 0.5
  const auto th = dmm::build_cluster_precision({a});
  EXPECT_NEAR(min_eig(th), 0.1, 1e-12);

  dmm::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t2 = dmm::build_cluster_precision({dmm::gen_mode_network(4, rng), dmm::gen_mode_network(3, rng)});
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(t2).info(), Eigen::Success);
    EXPECT_GE(min_eig(t2), 0.1 - 1e-12);
  }
}

TEST(ParseSequence, NamedAndExplicit) {
  EXPECT_EQ(dmm::parse_sequence("A"), (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(dmm::parse_sequence("D"), (std::vector<int>{1, 2, 2, 1, 3, 3, 3, 1}));
  EXPECT_EQ(dmm::parse_sequence("2,1,2"), (std::vector<int>{2, 1, 2}));
  EXPECT_THROW(dmm::parse_sequence("E"), dmm::InvalidArgument);
  EXPECT_THROW(dmm::parse_sequence("1,3"), dmm::InvalidArgument);
  EXPECT_THROW(dmm::parse_sequence("1,,2"), dmm::InvalidArgument);
  EXPECT_THROW(dmm::parse_sequence("0,1"), dmm::InvalidArgument);
}

TEST(GenTts, SequenceALayout) {
  const auto syn = dmm::gen_tts("A", {10}, 1);
  EXPECT_EQ(syn.tensor.length(), 300u);
  EXPECT_EQ(syn.tensor.shape(), (dmm::Shape{10, 300}));
  EXPECT_EQ(std::count(syn.truth.labels.begin(), syn.truth.labels.end(), 1), 200);
  EXPECT_EQ(std::count(syn.truth.labels.begin(), syn.truth.labels.end(), 2), 100);
  EXPECT_EQ(syn.truth.segment_cluster, (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(syn.truth.true_networks.size(), 2u);
  EXPECT_EQ(syn.truth.assembled_precisions.size(), 2u);
}

class GenTtsProperty : public ::testing::TestWithParam<std::string> {};

TEST_P(GenTtsProperty, LabelsFollowCutPointsAndSizes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto syn = dmm::gen_tts(GetParam(), {3, 2}, seed);
    const auto& gt = syn.truth;
    const auto seq = dmm::parse_sequence(GetParam());
    ASSERT_NO_THROW(gt.true_cut_points.validate());
    ASSERT_EQ(gt.true_cut_points.count(), seq.size());
    EXPECT_EQ(syn.tensor.length(), 100 * seq.size());
    std::vector<std::size_t> per_cluster(gt.true_networks.size(), 0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto a = gt.true_cut_points.start(i), b = gt.true_cut_points.end(i);
      EXPECT_GE(b - a, 20u);
      per_cluster[static_cast<std::size_t>(seq[i] - 1)] += b - a;
      for (std::size_t t = a; t < b; ++t) ASSERT_EQ(gt.labels[t - 1], seq[i]);
    }
    for (std::size_t k = 0; k < per_cluster.size(); ++k) {
      const auto g = static_cast<std::size_t>(std::count(seq.begin(), seq.end(), static_cast<int>(k) + 1));
      EXPECT_EQ(per_cluster[k], 100 * g);
    }
    for (const auto& th : gt.assembled_precisions) EXPECT_GE(min_eig(th), 0.1 - 1e-10);
  }
}

INSTANTIATE_TEST_SUITE_P(Sequences, GenTtsProperty, ::testing::Values("A", "B", "C", "D"));

TEST(GenTts, DeterministicPerSeed) {
  const auto a = dmm::gen_tts("C", {4, 3}, 99);
  const auto b = dmm::gen_tts("C", {4, 3}, 99);
  const auto c = dmm::gen_tts("C", {4, 3}, 100);
  EXPECT_EQ(a.tensor.data(), b.tensor.data());
  EXPECT_EQ(a.truth.labels, b.truth.labels);
  EXPECT_EQ(a.truth.true_cut_points, b.truth.true_cut_points);
  EXPECT_NE(a.tensor.data(), c.tensor.data());
}

TEST(GenTts, SampleCovarianceMatchesTruth) {
  dmm::SynthConfig cfg;
  cfg.observations_per_segment = 10000;
  const auto syn = dmm::gen_tts("1", {3, 2}, 5, cfg);
  const Eigen::MatrixXd truth = syn.truth.assembled_precisions[0].inverse();
  const Eigen::MatrixXd S = sample_cov(syn.tensor);
  // The margin pins the smallest precision eigenvalue at 0.1, so covariance
  // entries reach ~10; compare on the correlation scale, where the standard
  // error at n = 10^4 is about 0.01-0.014.
  const Eigen::VectorXd sd = truth.diagonal().cwiseSqrt();
  const Eigen::MatrixXd scaled = (S - truth).cwiseQuotient(sd * sd.transpose());
  EXPECT_LT(scaled.cwiseAbs().maxCoeff(), 0.05) << "truth\n" << truth << "\nsample\n" << S;
}

TEST(GenTts, ScalarVarianceWithinThreeStandardErrors) {
  dmm::SynthConfig cfg;
  cfg.observations_per_segment = 20000;
  const auto syn = dmm::gen_tts("1", {1}, 6, cfg);
  const double var = 1.0 / syn.truth.assembled_precisions[0](0, 0);
  const double n = 20000;
  const auto& d = syn.tensor.data();
  const double sum_sq = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
  // Known zero mean: the estimator sum x^2 / n has standard error var * sqrt(2/n).
  EXPECT_NEAR(sum_sq / n, var, 3 * var * std::sqrt(2 / n));
}

TEST(GenTts, RejectsBadInput) {
  EXPECT_THROW(dmm::gen_tts("A", {}, 1), dmm::InvalidArgument);
  EXPECT_THROW(dmm::gen_tts("A", {3, 0}, 1), dmm::InvalidArgument);
  dmm::SynthConfig cfg;
  cfg.min_segment_length = 110;  // cluster 1 of A has 200 steps over 2 segments
  EXPECT_THROW(dmm::gen_tts("A", {3}, 1, cfg), dmm::InvalidArgument);
}

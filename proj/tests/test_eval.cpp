#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dmm/eval.hpp"
#include "dmm/synth.hpp"
#include "oracles.hpp"

TEST(MacroF1, IdenticalLabels) {
  const std::vector<int> y{1, 1, 2, 3, 3, 3};
  const auto r = dmm::macro_f1(y, y);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.matching, (std::map<int, int>{{1, 1}, {2, 2}, {3, 3}}));
}

TEST(MacroF1, SwappedIds) {
  const std::vector<int> truth{1, 1, 1, 2, 2};
  const std::vector<int> pred{2, 2, 2, 1, 1};
  const auto r = dmm::macro_f1(pred, truth);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.matching.at(2), 1);
  EXPECT_EQ(r.matching.at(1), 2);
}

TEST(MacroF1, TwentyFlippedPoints) {
  std::vector<int> truth(200, 1), pred;
  std::fill(truth.begin() + 100, truth.end(), 2);
  pred = truth;
  std::fill(pred.begin() + 100, pred.begin() + 120, 1);
  const double f1_1 = 2 * (100.0 / 120) * 1 / (100.0 / 120 + 1);
  const double f1_2 = 2 * 1 * 0.8 / (1 + 0.8);
  const auto r = dmm::macro_f1(pred, truth);
  EXPECT_NEAR(r.macro_f1, (f1_1 + f1_2) / 2, 1e-12);
  EXPECT_NEAR(r.macro_f1, 0.899, 1e-3);
}

TEST(MacroF1, UnmatchedClassesScoreZero) {
  // One predicted cluster, two truth classes: the second class gets F1 = 0.
  const std::vector<int> truth{1, 1, 2, 2};
  const std::vector<int> pred{7, 7, 7, 7};
  const auto r = dmm::macro_f1(pred, truth);
  EXPECT_NEAR(r.macro_f1, (2 * 0.5 * 1 / 1.5) / 2, 1e-12);
  EXPECT_THROW(dmm::macro_f1({1, 2}, {1}), dmm::DataError);
}

TEST(MaxWeightMatching, RectangularInputs) {
  const std::vector<std::vector<double>> w{{1, 5, 0}, {4, 4, 0}};
  EXPECT_EQ(dmm::max_weight_matching(w), (std::vector<int>{1, 0}));
  const std::vector<std::vector<double>> tall{{1}, {3}, {2}};
  const auto m = dmm::max_weight_matching(tall);
  EXPECT_EQ(m, (std::vector<int>{-1, 0, -1}));
}

// Hungarian matching against brute force over every injective matching.
TEST(MacroF1Property, MatchesExhaustiveSearch) {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int kp = 1 + static_cast<int>(gen() % 6), kt = 1 + static_cast<int>(gen() % 6);
    const std::size_t T = 5 + gen() % 60;
    std::vector<int> pred(T), truth(T);
    for (std::size_t t = 0; t < T; ++t) {
      truth[t] = 1 + static_cast<int>(gen() % static_cast<unsigned>(kt));
      // Mostly follow truth through a random relabeling, with noise.
      pred[t] = gen() % 3 == 0 ? 1 + static_cast<int>(gen() % static_cast<unsigned>(kp))
                               : 1 + (truth[t] * 7 + trial) % kp;
    }
    ASSERT_NEAR(dmm::macro_f1(pred, truth).macro_f1, oracle::macro_f1_exhaustive(pred, truth), 1e-12)
        << "trial " << trial;
  }
}

TEST(MacroF1Property, InvariantUnderPredictedRelabeling) {
  std::mt19937 gen(78);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 40;
    std::vector<int> pred(T), truth(T);
    for (std::size_t t = 0; t < T; ++t) {
      truth[t] = 1 + static_cast<int>(gen() % 4);
      pred[t] = 1 + static_cast<int>(gen() % 5);
    }
    std::vector<int> perm{11, 12, 13, 14, 15};
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<int> relabeled(T);
    for (std::size_t t = 0; t < T; ++t) relabeled[t] = perm[static_cast<std::size_t>(pred[t] - 1)];
    EXPECT_NEAR(dmm::macro_f1(pred, truth).macro_f1, dmm::macro_f1(relabeled, truth).macro_f1, 1e-12);
  }
}

namespace {

dmm::ClusterParams scalar_standard_normal(std::size_t T) {
  dmm::ClusterParams p;
  dmm::ClusterModel m;
  dmm::ModeNetwork net;
  net.mode = 1;
  net.psi = Eigen::MatrixXd::Identity(1, 1);
  net.support = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(1, 1, true);
  m.networks = {net};
  m.mean_vec = Eigen::VectorXd::Zero(1);
  p.models = {m};
  p.assignments.segmentation = dmm::init_cutpoints(T, T);
  p.assignments.segment_cluster = {1};
  p.assignments.K = 1;
  p.K = 1;
  return p;
}

}  // namespace

TEST(Loglik, StandardNormalBand) {
  const std::size_t T = 5000;
  std::mt19937 gen(9);
  std::normal_distribution<double> nd;
  std::vector<double> v(T);
  for (double& e : v) e = nd(gen);
  const dmm::TensorTS x({1, T}, v);
  const auto p = scalar_standard_normal(T);
  dmm::EvalReport rep;
  dmm::loglik_report(x, p, rep);
  // E[ll] = -0.5 log(2 pi) - 0.5, Var[ll] = 1/2 per sample.
  const double mean = -0.5 * std::log(2 * std::numbers::pi) - 0.5;
  EXPECT_NEAR(rep.loglik, mean * T, 3 * std::sqrt(T / 2.0));
  EXPECT_EQ(rep.n_segments, 1u);
  EXPECT_EQ(rep.n_clusters, 1u);

  long double direct = 0;
  for (double e : v) direct += oracle::mvn_logpdf(Eigen::VectorXd::Constant(1, e), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  EXPECT_NEAR(rep.loglik, static_cast<double>(direct), 1e-8);
}

TEST(Loglik, EqualsNegativeDataCost) {
  const auto syn = dmm::gen_tts("A", {4, 3}, 3);
  const auto res = dmm::fit(syn.tensor, 4, {1.0}, 3);
  EXPECT_NEAR(dmm::total_loglik(syn.tensor, res), -res.costs.data, 1e-9 * std::abs(res.costs.data));
}

TEST(Loglik, UnpenalizedRefitDoesNotDecrease) {
  const auto syn = dmm::gen_tts("B", {4}, 4);
  auto res = dmm::fit(syn.tensor, 4, {2.0}, 4);
  const double before = dmm::total_loglik(syn.tensor, res);
  res.models = dmm::infer_networks(syn.tensor, res.assignments, 0.0);
  EXPECT_GE(dmm::total_loglik(syn.tensor, res), before - 1e-9);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dmm/mdl.hpp"
#include "oracles.hpp"

namespace {

dmm::ModeNetwork network_of(const Eigen::MatrixXd& psi, std::size_t mode) {
  dmm::ModeNetwork net;
  net.mode = mode;
  net.psi = psi;
  net.support = (psi.array() != 0.0).matrix();
  net.converged = true;
  return net;
}

dmm::ClusterModel scalar_model(double mean, double precision) {
  dmm::ClusterModel m;
  m.networks = {network_of(Eigen::MatrixXd::Constant(1, 1, precision), 1)};
  m.mean_vec = Eigen::VectorXd::Constant(1, mean);
  return m;
}

dmm::Assignments assignments(std::vector<std::size_t> cps, std::size_t T, std::vector<int> ids, int K) {
  dmm::Assignments a;
  a.segmentation.cut_points = std::move(cps);
  a.segmentation.length = T;
  a.segment_cluster = std::move(ids);
  a.K = K;
  return a;
}

}  // namespace

TEST(LogStar, UnitVectors) {
  EXPECT_EQ(dmm::log_star(1), 0.0);
  EXPECT_NEAR(dmm::log_star(2), 1.0, 1e-12);
  EXPECT_NEAR(dmm::log_star(16), 7.0, 1e-12);
  EXPECT_THROW(dmm::log_star(0), dmm::InvalidArgument);
}

TEST(LogStar, MatchesLongDoubleOracle) {
  for (std::size_t x : {3, 5, 7, 100, 200, 300, 4096, 65536, 1000003}) {
    EXPECT_NEAR(dmm::log_star(x), static_cast<double>(oracle::log_star(x)), 1e-12) << x;
  }
}

TEST(CostAssign, SingleSegmentSingleCluster) {
  const auto a = assignments({1}, 300, {1}, 1);
  EXPECT_NEAR(dmm::cost_assign(a), static_cast<double>(oracle::log_star(300)), 1e-9);
}

TEST(CostAssign, TwoClustersThreeSegments) {
  const auto a = assignments({1, 101, 201}, 300, {1, 2, 1}, 2);
  const long double want = oracle::log_star(2) + oracle::log_star(3) + 3 * oracle::log_star(2) +
                           oracle::log_star(200) + oracle::log_star(100);
  EXPECT_NEAR(dmm::cost_assign(a), static_cast<double>(want), 1e-9);
  // Renaming cluster ids changes nothing.
  EXPECT_DOUBLE_EQ(dmm::cost_assign(assignments({1, 101, 201}, 300, {2, 1, 2}, 2)), dmm::cost_assign(a));
}

TEST(CostAssign, EmptyClusterRejected) {
  const std::vector<std::size_t> sizes{5, 0};
  EXPECT_THROW(dmm::cost_assign(2, 2, sizes), dmm::InvalidArgument);
}

TEST(CostModel, EmptyAndDenseTwoByTwo) {
  dmm::ClusterModel m;
  m.networks = {network_of(Eigen::MatrixXd::Identity(2, 2), 1)};
  const double empty = 2 * (std::log(2.0) + 32) / 4;
  EXPECT_NEAR(dmm::model_cost(m), empty, 1e-9);

  Eigen::MatrixXd p(2, 2);
  p << 1, .3, .3, 1;
  m.networks = {network_of(p, 1)};
  const double dense = empty + (static_cast<double>(oracle::log_star(1)) + 1 * (std::log(1.0) + 32)) / 4;
  EXPECT_NEAR(dmm::model_cost(m), dense, 1e-9);
  const std::vector<dmm::ClusterModel> two{m, m};
  EXPECT_NEAR(dmm::cost_model(two), 2 * dense, 1e-9);
}

TEST(CostModel, DoublingOrderHalvesPerModeTerm) {
  Eigen::MatrixXd p(3, 3);
  p << 1, .2, 0, .2, 1, .1, 0, .1, 1;
  dmm::ClusterModel one, two;
  one.networks = {network_of(p, 1)};
  two.networks = {network_of(p, 1), network_of(p, 2)};
  // Two identical modes, each divided by 2: same total as one mode.
  EXPECT_NEAR(dmm::model_cost(two), dmm::model_cost(one), 1e-12);
  EXPECT_GT(dmm::model_cost(one), 0.0);
}

TEST(CostL1, Examples) {
  Eigen::MatrixXd p(2, 2);
  p << 1, -.4, -.4, 1;
  dmm::ClusterModel m;
  m.networks = {network_of(p, 1)};
  const std::vector<dmm::ClusterModel> ms{m};
  EXPECT_NEAR(dmm::cost_l1(ms, 1.5), 1.5 * 0.8, 1e-12);
  EXPECT_EQ(dmm::cost_l1(ms, 0.0), 0.0);
  m.networks = {network_of(Eigen::MatrixXd::Identity(3, 3), 1)};
  const std::vector<dmm::ClusterModel> diag{m};
  EXPECT_EQ(dmm::cost_l1(diag, 4.0), 0.0);
  EXPECT_THROW(dmm::cost_l1(ms, -1.0), dmm::InvalidArgument);
}

TEST(CostData, StandardNormalAtMean) {
  const std::size_t T = 7;
  const dmm::TensorTS x({1, T}, std::vector<double>(T, 0.0));
  const std::vector<dmm::ClusterModel> ms{scalar_model(0.0, 1.0)};
  const auto a = assignments({1}, T, {1}, 1);
  EXPECT_NEAR(dmm::cost_data(x, ms, a), T * 0.5 * std::log(2 * std::numbers::pi), 1e-12);
}

TEST(CostData, BetterClusterLowersCost) {
  const dmm::TensorTS x({1, 4}, {0.0, 0.1, 5.0, 5.1});
  const std::vector<dmm::ClusterModel> ms{scalar_model(0.0, 1.0), scalar_model(5.0, 1.0)};
  const double wrong = dmm::cost_data(x, ms, assignments({1, 3}, 4, {1, 1}, 2));
  const double right = dmm::cost_data(x, ms, assignments({1, 3}, 4, {1, 2}, 2));
  EXPECT_LT(right, wrong);
}

namespace {

struct Fixture {
  dmm::TensorTS x;
  std::vector<dmm::ClusterModel> models;
  dmm::Assignments a;
};

Fixture random_fixture(unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  const std::size_t T = 30;
  std::vector<double> v(2 * 3 * T);
  for (double& e : v) e = nd(gen);
  Fixture f{dmm::TensorTS({2, 3, T}, v), {}, assignments({1, 8, 15, 22}, T, {1, 2, 1, 3}, 3)};
  for (int k = 0; k < 3; ++k) {
    const auto part = dmm::slice_time(f.x, 1 + 7 * static_cast<std::size_t>(k), 9 + 7 * static_cast<std::size_t>(k));
    f.models.push_back(dmm::fit_cluster_model(part, 0.3));
  }
  return f;
}

}  // namespace

TEST(CostTotal, SumsComponentsAndIsDeterministic) {
  const auto f = random_fixture(1);
  const auto c = dmm::cost_total(f.x, f.models, f.a, 0.7);
  EXPECT_NEAR(c.total, c.assign + c.model + c.data + c.l1, 1e-9);
  EXPECT_GE(c.assign, 0.0);
  EXPECT_GE(c.model, 0.0);
  EXPECT_GE(c.l1, 0.0);
  EXPECT_TRUE(std::isfinite(c.total));
  const auto again = dmm::cost_total(f.x, f.models, f.a, 0.7);
  EXPECT_EQ(c.total, again.total);
}

TEST(CostTotal, AffineInLambda) {
  const auto f = random_fixture(2);
  double slope = 0;
  for (const auto& m : f.models)
    for (const auto& net : m.networks) slope += net.offdiag_l1();
  const double base = dmm::cost_total(f.x, f.models, f.a, 0.0).total;
  for (double lambda : {0.5, 1.0, 3.0, 10.0}) {
    EXPECT_NEAR(dmm::cost_total(f.x, f.models, f.a, lambda).total, base + lambda * slope, 1e-9 * (1 + std::abs(base)));
  }
}

TEST(CostTotal, InvariantUnderClusterRelabeling) {
  auto f = random_fixture(3);
  const double before = dmm::cost_total(f.x, f.models, f.a, 1.0).total;
  // Swap ids 1 <-> 3 in both the assignment and the model list.
  for (int& c : f.a.segment_cluster) c = c == 1 ? 3 : (c == 3 ? 1 : c);
  std::swap(f.models[0], f.models[2]);
  EXPECT_NEAR(dmm::cost_total(f.x, f.models, f.a, 1.0).total, before, 1e-9 * std::abs(before));
}

TEST(CostTotal, RejectsModelCountMismatch) {
  auto f = random_fixture(4);
  f.models.pop_back();
  EXPECT_THROW(dmm::cost_total(f.x, f.models, f.a, 1.0), dmm::InvalidArgument);
}

TEST(CostTotal, InvariantUnderReorderingSegmentsWithinCluster) {
  const auto f = random_fixture(5);
  // Segments 1 and 3 (times 1..7 and 15..21) both belong to cluster 1; swap their data.
  const std::size_t D = f.x.variables();
  std::vector<double> v = f.x.data();
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t d = 0; d < D; ++d) std::swap(v[t * D + d], v[(t + 14) * D + d]);
  const dmm::TensorTS y(f.x.shape(), v);
  const double a = dmm::cost_total(f.x, f.models, f.a, 0.4).total;
  const double b = dmm::cost_total(y, f.models, f.a, 0.4).total;
  EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
}

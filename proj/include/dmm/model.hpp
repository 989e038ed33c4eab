#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dmm/error.hpp"
#include "dmm/glasso.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

// Model of one cluster: one precision matrix per non-temporal mode plus the
// empirical mean of the member observations in vec order.
struct ClusterModel {
  std::vector<ModeNetwork> networks;
  Eigen::VectorXd mean_vec;
  std::size_t member_count = 0;
  bool degenerate = false;  // some mode fell back to a diagonal network

  std::size_t order() const { return networks.size(); }

  Shape dims() const {
    Shape d;
    for (const auto& net : networks) d.push_back(net.dim());
    return d;
  }

  // mu_d for every d as columns of a D_n x p^(n) matrix (1-based n).
  Eigen::MatrixXd mode_means(std::size_t n) const {
    Shape shape = dims();
    shape.push_back(1);
    TensorTS one(std::move(shape), std::vector<double>(mean_vec.data(), mean_vec.data() + mean_vec.size()));
    return mode_slices(one, n).columns;
  }
};

// Hierarchical D x D precision: Theta^(1) = Psi^(1); Theta^(n) holds
// Theta^(n-1) on its block diagonal and psi^(n)_ij * I off the diagonal.
inline Eigen::MatrixXd assemble_hierarchical(const std::vector<Eigen::MatrixXd>& psis) {
  if (psis.empty()) throw InvalidArgument("assemble_hierarchical: no networks");
  for (const auto& p : psis) {
    if (p.rows() != p.cols() || p.rows() == 0) throw InvalidArgument("assemble_hierarchical: networks must be square");
  }
  Eigen::MatrixXd theta = psis[0];
  for (std::size_t n = 1; n < psis.size(); ++n) {
    const Eigen::Index inner = theta.rows();
    const Eigen::Index dn = psis[n].rows();
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(inner * dn, inner * dn);
    for (Eigen::Index i = 0; i < dn; ++i) {
      for (Eigen::Index j = 0; j < dn; ++j) {
        auto block = next.block(i * inner, j * inner, inner, inner);
        if (i == j) {
          block = theta;
        } else if (psis[n](i, j) != 0.0) {
          block.diagonal().setConstant(psis[n](i, j));
        }
      }
    }
    theta = std::move(next);
  }
  return theta;
}

inline Eigen::MatrixXd assemble_hierarchical(const std::vector<ModeNetwork>& networks) {
  std::vector<Eigen::MatrixXd> psis;
  psis.reserve(networks.size());
  for (const auto& net : networks) psis.push_back(net.psi);
  return assemble_hierarchical(psis);
}

// Per-time sum over modes of ll^(n).
inline std::vector<double> total_log_likelihood(const TensorTS& x, const ClusterModel& model) {
  if (model.order() != x.order() || model.dims() != x.dims()) {
    throw InvalidArgument("total_log_likelihood: model does not match tensor shape");
  }
  std::vector<double> out(x.length(), 0.0);
  for (std::size_t n = 1; n <= x.order(); ++n) {
    const auto ll = mode_log_likelihood(mode_slices(x, n), model.mode_means(n), model.networks[n - 1]);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += ll[t];
  }
  return out;
}

// Fits every mode network on all time steps of x.
inline ClusterModel fit_cluster_model(const TensorTS& x, double lambda, const AdmmConfig& cfg = {}) {
  ClusterModel model;
  const std::size_t T = x.length(), D = x.variables();
  model.member_count = T;
  model.mean_vec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = x.time_row(t);
    model.mean_vec += Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(D));
  }
  model.mean_vec /= static_cast<double>(T);

  for (std::size_t n = 1; n <= x.order(); ++n) {
    const auto slices = mode_slices(x, n);
    try {
      model.networks.push_back(fit_network(compute_mode_stats(slices), lambda, cfg));
    } catch (const InsufficientData&) {
      const Eigen::VectorXd mu = slices.columns.rowwise().mean();
      const Eigen::VectorXd var =
          (slices.columns.colwise() - mu).array().square().rowwise().mean().matrix();
      model.networks.push_back(diagonal_network(n, var));
      model.degenerate = true;
    }
  }
  return model;
}

}  // namespace dmm

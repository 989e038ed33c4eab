#pragma once

// Per-mode sparse precision estimation.
//
// For mode n the fitted network minimizes
//
//   lambda * ||Psi||_od,1 + (t/2) * (tr(S Psi) - log det Psi)
//
// where S pools the (x_{t,d} - mu_d) outer products over all T*p^(n) slices
// and t is the number of time steps. Dividing the per-mode log-likelihood by
// p^(n) is exactly what makes the pooled S carry weight t rather than t*p.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmm/error.hpp"
#include "dmm/tensor.hpp"

namespace dmm {

struct ModeStats {
  std::size_t mode = 1;        // 1-based
  Eigen::MatrixXd means;       // D_n x p^(n); column d is mu_d
  Eigen::MatrixXd pooled_cov;  // D_n x D_n
  std::size_t t_count = 0;
  std::size_t probdim = 0;
};

struct ModeNetwork {
  std::size_t mode = 1;
  Eigen::MatrixXd psi;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support;
  bool converged = true;
  int iterations = 0;

  std::size_t dim() const { return static_cast<std::size_t>(psi.rows()); }

  // Structural nonzeros strictly above the diagonal.
  std::size_t upper_support_count() const {
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < support.rows(); ++i)
      for (Eigen::Index j = i + 1; j < support.cols(); ++j) c += support(i, j) ? 1 : 0;
    return c;
  }

  double offdiag_l1() const {
    return psi.cwiseAbs().sum() - psi.diagonal().cwiseAbs().sum();
  }
};

struct AdmmConfig {
  double rho = 1.0;
  double abs_tol = 1e-6;
  double rel_tol = 1e-5;
  int max_iter = 1000;
  // Residual balancing: rho is rescaled while the primal and dual residuals
  // differ by more than 10x, for at most this many changes.
  int max_rho_updates = 50;

  void validate() const {
    if (!(rho > 0.0) || !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1 || max_rho_updates < 0) {
      throw InvalidArgument("ADMM config: rho, tolerances must be > 0, max_iter >= 1, max_rho_updates >= 0");
    }
  }
};

inline ModeStats compute_mode_stats(const ModeSlices& slices) {
  const std::size_t T = slices.steps, p = slices.probdim;
  if (T == 0 || T * p < 2) {
    throw InsufficientData("mode " + std::to_string(slices.mode) + ": need at least 2 samples, have " +
                           std::to_string(T * p));
  }
  const auto dn = static_cast<Eigen::Index>(slices.dim());
  ModeStats st;
  st.mode = slices.mode;
  st.t_count = T;
  st.probdim = p;
  st.means = Eigen::MatrixXd::Zero(dn, static_cast<Eigen::Index>(p));
  for (std::size_t t = 0; t < T; ++t)
    st.means += slices.columns.middleCols(static_cast<Eigen::Index>(t * p), static_cast<Eigen::Index>(p));
  st.means /= static_cast<double>(T);

  Eigen::MatrixXd centered = slices.columns;
  for (std::size_t t = 0; t < T; ++t)
    centered.middleCols(static_cast<Eigen::Index>(t * p), static_cast<Eigen::Index>(p)) -= st.means;
  st.pooled_cov = Eigen::MatrixXd::Zero(dn, dn);
  st.pooled_cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  st.pooled_cov = st.pooled_cov.selfadjointView<Eigen::Lower>();
  st.pooled_cov /= static_cast<double>(T * p);
  return st;
}

// Value of the penalized objective the solver minimizes.
inline double network_objective(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& S, double t_count,
                                double lambda) {
  Eigen::LLT<Eigen::MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double od = psi.cwiseAbs().sum() - psi.diagonal().cwiseAbs().sum();
  return lambda * od + 0.5 * t_count * ((S.cwiseProduct(psi)).sum() - logdet);
}

namespace detail {

inline bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace detail

// ADMM graphical lasso. The problem is solved in the equivalent normalized
// form  tr(S Psi) - log det Psi + (2 lambda / t) ||Psi||_od,1,  so cfg.rho is a
// penalty on that scale (rho_unnormalized = rho * t / 2).
//
// Iterations run on the correlation-scaled problem R = D S D with D_ii =
// S_ii^-1/2 and entrywise penalties alpha / (s_i s_j); Psi = D Psi_R D has the
// same minimizer and support. Residuals are measured on the scaled problem.
inline ModeNetwork fit_network(const ModeStats& stats, double lambda, const AdmmConfig& cfg = {}) {
  cfg.validate();
  if (!(lambda >= 0.0)) throw InvalidArgument("fit_network: lambda must be >= 0");
  const Eigen::MatrixXd& S = stats.pooled_cov;
  const Eigen::Index n = S.rows();
  if (S.cols() != n || n == 0) throw InvalidArgument("fit_network: pooled covariance must be square");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("fit_network: pooled covariance not symmetric");
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      throw InvalidArgument("fit_network: pooled covariance has a negative eigenvalue");
    }
  }
  if (stats.t_count == 0) throw InvalidArgument("fit_network: t_count must be positive");

  const double t = static_cast<double>(stats.t_count);
  const double alpha = 2.0 * lambda / t;

  const double max_diag = S.diagonal().maxCoeff();
  const double floor = max_diag > 0.0 ? 1e-12 * max_diag : 1.0;
  Eigen::VectorXd sd(n);
  for (Eigen::Index i = 0; i < n; ++i) sd(i) = std::sqrt(std::max(S(i, i), floor));
  const Eigen::VectorXd inv_sd = sd.cwiseInverse();
  const Eigen::MatrixXd R = inv_sd.asDiagonal() * S * inv_sd.asDiagonal();
  const Eigen::MatrixXd weight = alpha * (inv_sd * inv_sd.transpose());

  double rho = cfg.rho;
  int rho_updates = 0;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd Z_prev(n, n), rhs(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n);
  Eigen::VectorXd roots(n);

  ModeNetwork net;
  net.mode = stats.mode;
  net.converged = false;
  int it = 0;
  for (it = 1; it <= cfg.max_iter; ++it) {
    // Theta-step: rho*Theta - Theta^{-1} = rho*(Z - U) - R.
    rhs.noalias() = rho * (Z - U) - R;
    es.compute(rhs);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i) roots(i) = (ev(i) + std::sqrt(ev(i) * ev(i) + 4.0 * rho)) / (2.0 * rho);
    theta.noalias() = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();

    // Z-step: soft-threshold off-diagonals of Theta + U.
    Z_prev = Z;
    Z = theta + U;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        const double k = weight(i, j) / rho;
        const double v = Z(i, j);
        Z(i, j) = v > k ? v - k : (v < -k ? v + k : 0.0);
      }
    }
    U += theta - Z;

    const double r_norm = (theta - Z).norm();
    const double s_norm = rho * (Z - Z_prev).norm();
    const double eps_pri = cfg.abs_tol + cfg.rel_tol * std::max(theta.norm(), Z.norm());
    const double eps_dual = cfg.abs_tol + cfg.rel_tol * rho * U.norm();
    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      net.converged = true;
      break;
    }
    if (rho_updates < cfg.max_rho_updates) {
      // U is the scaled dual y / rho, so it moves inversely to rho.
      if (r_norm > 10.0 * s_norm) {
        rho *= 2.0;
        U /= 2.0;
        ++rho_updates;
      } else if (s_norm > 10.0 * r_norm) {
        rho /= 2.0;
        U *= 2.0;
        ++rho_updates;
      }
    }
  }
  net.iterations = std::min(it, cfg.max_iter);

  // Z carries the exact sparsity pattern; prefer it whenever it is PD.
  Eigen::MatrixXd Zs = 0.5 * (Z + Z.transpose());
  net.support.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) net.support(i, j) = (i == j) || Zs(i, j) != 0.0;
  if (detail::is_positive_definite(Zs)) {
    net.psi = inv_sd.asDiagonal() * Zs * inv_sd.asDiagonal();
  } else {
    net.psi = inv_sd.asDiagonal() * (0.5 * (theta + theta.transpose())) * inv_sd.asDiagonal();
    net.converged = false;
  }
  return net;
}

// Diagonal fallback for slices too short to estimate a covariance.
inline ModeNetwork diagonal_network(std::size_t mode, const Eigen::VectorXd& variances) {
  const Eigen::Index n = variances.size();
  ModeNetwork net;
  net.mode = mode;
  net.psi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) net.psi(i, i) = 1.0 / std::max(variances(i), 1e-6);
  net.support = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n);
  net.converged = false;
  return net;
}

// Per-time ll^(n): average over the p^(n) slices of the D_n-variate Gaussian
// log density. `means` is D_n x p^(n).
inline std::vector<double> mode_log_likelihood(const ModeSlices& slices, const Eigen::MatrixXd& means,
                                               const ModeNetwork& net) {
  const auto dn = static_cast<Eigen::Index>(slices.dim());
  const auto p = static_cast<Eigen::Index>(slices.probdim);
  if (net.psi.rows() != dn || net.psi.cols() != dn || means.rows() != dn || means.cols() != p) {
    throw InvalidArgument("mode_log_likelihood: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(net.psi);
  if (llt.info() != Eigen::Success) throw NumericError("mode_log_likelihood: network is not positive definite");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double constant =
      0.5 * logdet - 0.5 * static_cast<double>(dn) * std::log(2.0 * std::numbers::pi);

  std::vector<double> out(slices.steps);
  Eigen::MatrixXd resid(dn, p);
  for (std::size_t t = 0; t < slices.steps; ++t) {
    resid = slices.columns.middleCols(static_cast<Eigen::Index>(t) * p, p) - means;
    // r^T Psi r = ||L^T r||^2
    const Eigen::MatrixXd w = llt.matrixU() * resid;
    out[t] = -0.5 * w.squaredNorm() / static_cast<double>(p) + constant;
  }
  return out;
}

}  // namespace dmm

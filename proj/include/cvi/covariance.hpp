#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "cvi/errors.hpp"

namespace cvi {

/// Running regularized Gram matrix and its episode snapshot.
///
/// The inverse and determinant of the running matrix are maintained through
/// the Sherman-Morrison and matrix determinant identities and recomputed from
/// a Cholesky factorization every kRefreshPeriod updates.
class CovarianceState {
 public:
  static constexpr std::int64_t kRefreshPeriod = 256;

  CovarianceState() = default;

  CovarianceState(Eigen::Index dim, double lambda)
      : lambda_(lambda),
        lambda_bar_(lambda * Eigen::MatrixXd::Identity(dim, dim)),
        inv_bar_((1.0 / lambda) * Eigen::MatrixXd::Identity(dim, dim)),
        det_bar_(std::pow(lambda, static_cast<double>(dim))),
        lambda_episode_(lambda_bar_),
        inv_episode_(inv_bar_),
        det_episode_(det_bar_) {
    if (!(lambda > 0.0)) throw ConfigError("CovarianceState: lambda must be positive");
  }

  /// Adds phi phi^T to the running matrix. Returns phi^T Lambda_prev^{-1} phi.
  double rank_one_update(const Eigen::VectorXd& phi) {
    const Eigen::VectorXd u = inv_bar_ * phi;
    const double potential = phi.dot(u);
    const double ratio = 1.0 + potential;
    if (!(ratio > 0.0) || !std::isfinite(ratio))
      throw NumericalBreakdown("rank_one_update: determinant ratio is not positive");
    lambda_bar_.noalias() += phi * phi.transpose();
    inv_bar_.noalias() -= (u * u.transpose()) / ratio;
    det_bar_ *= ratio;
    ++updates_;
    if (updates_ % kRefreshPeriod == 0) refresh();
    return potential;
  }

  bool should_advance_episode() const { return 2.0 * det_episode_ < det_bar_; }

  /// Freezes the running matrix as the new episode matrix.
  void begin_episode() {
    refresh();
    lambda_episode_ = lambda_bar_;
    inv_episode_ = inv_bar_;
    det_episode_ = det_bar_;
  }

  /// Recomputes inverse and determinant of the running matrix from scratch.
  void refresh() {
    const Eigen::LLT<Eigen::MatrixXd> llt(lambda_bar_);
    if (llt.info() != Eigen::Success) throw NumericalBreakdown("CovarianceState: running matrix lost definiteness");
    const auto n = lambda_bar_.rows();
    inv_bar_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
    inv_bar_ = 0.5 * (inv_bar_ + inv_bar_.transpose()).eval();
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    double det = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) det *= diag(i) * diag(i);
    det_bar_ = det;
  }

  /// phi^T Lambda_k^{-1} phi against the frozen episode matrix, floored at zero.
  double episode_quadratic(const Eigen::VectorXd& phi) const { return std::max(phi.dot(inv_episode_ * phi), 0.0); }
  double running_quadratic(const Eigen::VectorXd& phi) const { return std::max(phi.dot(inv_bar_ * phi), 0.0); }

  Eigen::Index dim() const { return lambda_bar_.rows(); }
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& lambda_bar() const { return lambda_bar_; }
  const Eigen::MatrixXd& inv_bar() const { return inv_bar_; }
  double det_bar() const { return det_bar_; }
  const Eigen::MatrixXd& lambda_episode() const { return lambda_episode_; }
  const Eigen::MatrixXd& inv_episode() const { return inv_episode_; }
  double det_episode() const { return det_episode_; }
  std::int64_t updates() const { return updates_; }

 private:
  double lambda_ = 1.0;
  Eigen::MatrixXd lambda_bar_;
  Eigen::MatrixXd inv_bar_;
  double det_bar_ = 1.0;
  Eigen::MatrixXd lambda_episode_;
  Eigen::MatrixXd inv_episode_;
  double det_episode_ = 1.0;
  std::int64_t updates_ = 0;
};

}  // namespace cvi

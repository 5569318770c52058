#pragma once

#include <span>
#include <vector>

#include "macrostate/model.hpp"
#include "macrostate/operators.hpp"

namespace macrostate {

/// Lagrange multipliers of a generalized Gibbs state. zeta0 = log Z carries normalization;
/// zeta is indexed like the operator list the state was built from.
struct MacrostateParams {
  double zeta0 = 0.0;
  RealVector zeta;

  bool finite() const { return std::isfinite(zeta0) && zeta.allFinite(); }
};

/// w = exp(-zeta0 - sum_j zeta_j A_j). Immutable after construction; caches the eigensystem of
/// the normalized exponent C = log w, which every Kubo-form evaluation works in.
class GibbsState {
 public:
  GibbsState(std::span<const HermitianOperator> ops, const RealVector& zeta);

  const MacrostateParams& params() const noexcept { return params_; }
  const DensityOperator& state() const noexcept { return state_; }
  /// Eigenvalues c_m of the normalized exponent (log-probabilities).
  const RealVector& log_weights() const noexcept { return log_weights_; }
  const RealVector& probabilities() const noexcept { return probabilities_; }
  const ComplexMatrix& basis() const noexcept { return basis_; }
  /// <A_j> for the operators the state was built from.
  const RealVector& expectations() const noexcept { return expectations_; }
  Index dim() const noexcept { return log_weights_.size(); }

  ComplexMatrix to_basis(const ComplexMatrix& m) const { return basis_.adjoint() * m * basis_; }
  ComplexMatrix from_basis(const ComplexMatrix& m) const { return basis_ * m * basis_.adjoint(); }
  /// Matrix of divided differences (e^{c_m} - e^{c_n}) / (c_m - c_n).
  const Eigen::MatrixXd& kernel() const noexcept { return kernel_; }

  /// int_0^1 du e^{uC} a e^{(1-u)C}, returned in the computational basis.
  HermitianOperator kubo_transform(const HermitianOperator& a) const;

 private:
  MacrostateParams params_;
  DensityOperator state_;
  RealVector log_weights_;
  RealVector probabilities_;
  ComplexMatrix basis_;
  RealVector expectations_;
  Eigen::MatrixXd kernel_;
};

/// (e^x - e^y)/(x - y), continued by its series when |x - y| < 1e-8.
double exp_divided_difference(double x, double y);

GibbsState gibbs_state(std::span<const HermitianOperator> ops, const RealVector& zeta);
GibbsState gibbs_state(const RelevantSet& set, const RealVector& zeta);

/// log Tr exp(-sum_j zeta_j A_j), evaluated with a max-eigenvalue shift.
double log_partition(std::span<const HermitianOperator> ops, const RealVector& zeta);

/// zeta0 + sum_j zeta_j <A_j>, checked against -sum_m p_m log p_m (nats).
double entropy(const GibbsState& g);

/// Kubo correlation Tr a int_0^1 e^{uC} b e^{(1-u)C} du - <a><b>.
double kubo_inner(const HermitianOperator& a, const HermitianOperator& b, const GibbsState& g);
Eigen::MatrixXd kubo_covariance(std::span<const HermitianOperator> ops, const GibbsState& g);

/// First-order cumulant approximation of Tr probe e^{c_op + perturbation} / Tr e^{c_op + perturbation}.
double cumulant_expectation(const HermitianOperator& c_op, const HermitianOperator& perturbation,
                            const HermitianOperator& probe);

}  // namespace macrostate

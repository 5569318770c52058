#pragma once

#include <optional>
#include <vector>

#include "macrostate/gibbs.hpp"

namespace macrostate {

struct InversionSettings {
  double tol = 1e-10;               ///< on |<A_j> - target_j| / (1 + |target_j|)
  int max_iters = 200;
  double damping = 1.0;             ///< initial Newton step scale
  double regularization = 1e-12;    ///< relative ridge added when cond(K) > condition_limit
  double condition_limit = 1e12;
  double zeta_bound = 1e6;          ///< |zeta|_inf beyond this is treated as divergence
  double independence_limit = 1e12; ///< Gram condition number allowed for {1} u ops

  void validate() const;
};

/// Diagnostics of one inversion.
struct InversionReport {
  int iterations = 0;
  bool regularized = false;
  double residual = 0.0;
  std::vector<double> dual_values;  ///< F(zeta) at every accepted iterate, starting point included
};

/// Maximum-entropy state reproducing `targets`: minimizes the convex dual
/// F(zeta) = log Z(zeta) + zeta . targets by damped Newton with the Kubo covariance as Hessian.
GibbsState invert_macrostate(std::span<const HermitianOperator> ops, const RealVector& targets,
                             const std::optional<MacrostateParams>& init = std::nullopt,
                             const InversionSettings& settings = {}, InversionReport* report = nullptr);
GibbsState invert_macrostate(const RelevantSet& set, const RealVector& targets,
                             const std::optional<MacrostateParams>& init = std::nullopt,
                             const InversionSettings& settings = {}, InversionReport* report = nullptr);

/// Gibbs state with the same relevant expectations as rho.
GibbsState project_macrostate(const DensityOperator& rho, std::span<const HermitianOperator> ops,
                              const std::optional<MacrostateParams>& init = std::nullopt,
                              const InversionSettings& settings = {}, InversionReport* report = nullptr);
GibbsState project_macrostate(const DensityOperator& rho, const RelevantSet& set,
                              const std::optional<MacrostateParams>& init = std::nullopt,
                              const InversionSettings& settings = {}, InversionReport* report = nullptr);

RealVector expectations(std::span<const HermitianOperator> ops, const DensityOperator& rho);

}  // namespace macrostate

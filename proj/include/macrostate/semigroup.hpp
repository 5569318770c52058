#pragma once

#include <optional>
#include <string>
#include <vector>

#include "macrostate/evolution.hpp"

namespace macrostate {

/// Split of each observable into a part in span{1, constants of motion} and a remainder that is
/// Kubo-orthogonal to that span at the given Gibbs state.
struct OrthogonalDecomposition {
  /// Orthonormal basis of the parallel span in the non-centered Kubo product Tr a Phi(b).
  /// The first element is the identity.
  std::vector<HermitianOperator> basis_parallel;
  std::vector<std::string> parallel_labels;
  std::vector<std::string> dropped;  ///< constants removed as numerically dependent
  Eigen::MatrixXd gram_parallel;     ///< non-centered Kubo Gram matrix of the retained constants, identity first
  std::vector<std::string> labels;
  std::vector<HermitianOperator> parallel;
  std::vector<HermitianOperator> orthogonal;
};

/// Gram-Schmidt in the Kubo product of g. Vectors whose Kubo norm after projection falls below
/// 1e-10 (relative to their own norm when that exceeds 1) are dropped and listed.
OrthogonalDecomposition decompose(std::span<const HermitianOperator> observables, std::span<const std::string> labels,
                                  std::span<const HermitianOperator> conserved,
                                  std::span<const std::string> conserved_labels, const GibbsState& g);
/// Driven operators of the set against its conserved ones.
OrthogonalDecomposition decompose(const RelevantSet& relevant, const GibbsState& g);

/// Non-centered Kubo product Tr a Phi(b) = <a, b> + <a><b>.
double kubo_product(const HermitianOperator& a, const HermitianOperator& b, const GibbsState& g);

/// (a(tau) - a) / tau with a(tau) the Heisenberg evolution of a.
HermitianOperator coarse_grained_generator(const HermitianOperator& a_perp, const HermitianOperator& h, double tau);

struct ReducedStep {
  GibbsState state;
  RealVector targets;
};

/// One explicit Euler step of the reduced law: driven expectations move by
/// dt Tr[(L'_tau a_perp) w], conserved ones are copied unchanged, and the multipliers are re-solved.
/// `dec` must be the decomposition of the driven operators of `relevant` at `g`.
ReducedStep reduced_dynamics_step(const OrthogonalDecomposition& dec, const RelevantSet& relevant, const GibbsState& g,
                                  const HermitianOperator& h, double tau, double dt,
                                  const InversionSettings& settings = {});

/// Repeated reduced steps from g0 with the decomposition recomputed at every step.
Trajectory reduced_trajectory(const RelevantSet& relevant, const GibbsState& g0, const HermitianOperator& h, double tau,
                              double dt, double t0, double t_end, const InversionSettings& settings = {});

struct TauIndependence {
  std::vector<double> taus;
  std::vector<double> values;      ///< Tr[(L'_tau a) w] per tau
  double spread = 0.0;             ///< (max - min) / max |value| over the grid; 0 when all vanish
  /// Longest run of >= 3 consecutive grid points with spread below the threshold, as [first, last].
  std::optional<std::pair<std::size_t, std::size_t>> plateau;
};

TauIndependence tau_independence_diagnostic(const HermitianOperator& a_perp, const HermitianOperator& h,
                                            const GibbsState& g, const std::vector<double>& tau_grid,
                                            double threshold = 0.05);

}  // namespace macrostate

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "macrostate/maxent.hpp"
#include "macrostate/preparation.hpp"

namespace macrostate {

enum class ModeFamily { fourier, cosine };

std::string to_string(ModeFamily family);
ModeFamily mode_family_from_string(const std::string& s);

/// Orthonormal real functions over the lattice sites; column n is u_n. Complex Fourier modes are
/// paired into cosine/sine combinations so that every transformed operator is Hermitian.
struct ModeBasis {
  Eigen::MatrixXd functions;  ///< num_sites x n_max
  std::vector<std::string> names;

  int num_sites() const { return static_cast<int>(functions.rows()); }
  int n_max() const { return static_cast<int>(functions.cols()); }
};

/// First n_max functions of the family (n_max <= 0 or > num_sites keeps all of them). u_0 is constant.
ModeBasis make_mode_basis(int num_sites, int n_max, ModeFamily family = ModeFamily::fourier);

/// a_n = sum_site u_n(site) A(site) for each retained n.
std::vector<HermitianOperator> mode_transform(std::span<const HermitianOperator> densities, const ModeBasis& basis);

/// Modes of the site densities (mode 0 flagged conserved when it commutes with H), followed by the
/// constants of motion that are independent of them.
RelevantSet mode_relevant_set(const ObservableSet& obs, const ModeBasis& basis);

/// Time-indexed macrostate record on a uniform grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<MacrostateParams> zeta;
  std::vector<RealVector> expectations;
  std::vector<double> entropy;
  std::vector<RealVector> zeta_dot;
  std::vector<std::string> labels;
  std::vector<bool> conserved;
  /// Exponent part not carried by -zeta.A at the first grid time (preparation history, boundary
  /// term, quench residual), in the computational basis. Empty means zero.
  std::optional<HermitianOperator> initial_history;
  /// Smallest eigenvalue of the Kubo covariance over the driven operators seen along the run.
  double min_driven_kubo_eigenvalue = 0.0;

  std::size_t size() const { return times.size(); }
  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

struct MemorySettings {
  double tau = 1.0;
  bool truncate_history = false;
  double dt = 0.01;
  int order = 1;                  ///< cumulant order; only 1 is implemented
  double step_bound = 1.0;        ///< reject a step when |zeta_dot|_inf * dt exceeds this

  void validate() const;
};

/// Uniform grid t0, t0 + dt, ..., t0 + n dt with n dt the multiple of dt nearest to t_end - t0.
std::vector<double> uniform_grid(double t0, double t_end, double dt);

/// Evolves rho0 (the state at times.front()) exactly and projects onto the relevant set at each grid
/// time, warm-starting every inversion from the previous multipliers. zeta_dot is filled by finite
/// differences, so it is meaningful only on a uniform grid.
Trajectory exact_macrostate_trajectory(const DensityOperator& rho0, const RelevantSet& relevant,
                                       const HermitianOperator& h, const std::vector<double>& times,
                                       const InversionSettings& settings = {});

/// log rho0 - log w, where w is the Gibbs state of the relevant set with rho0's expectations.
HermitianOperator history_residual(const DensityOperator& rho0, const GibbsState& w);

/// Everything that seeds the history operator at the start of the dynamics.
struct InitialHistory {
  double t0 = 0.0;
  std::optional<PreparationSchedule> schedule;
  std::optional<HermitianOperator> residual;  ///< e.g. a quench residual from history_residual
};

/// S(t') lagged to time t: the preparation source on [T, t0) and
/// sum_l [zeta_dot_l(t') a_l + zeta_l(t') adot_l] on [t0, t], both Heisenberg-shifted by -(t - t').
/// The dynamics branch reads zeta and zeta_dot from `traj` at the grid time t_prime.
HermitianOperator memory_kernel_term(double t, double t_prime, const InitialHistory& init, const Trajectory& traj,
                                     const RelevantSet& relevant, const ObservableSet& obs,
                                     const HermitianOperator& h);

/// Solves -K zeta_dot = r at the grid time t of `traj` (K: full Kubo covariance of the relevant
/// set at zeta(t); r: zero on conserved rows, Tr(adot_j w) + <adot_j, B(t)> on driven rows). B(t) is
/// the history operator assembled from memory_kernel_term by trapezoid over the stored grid; the
/// unknown zeta_dot(t) inside the endpoint node is solved for implicitly.
RealVector zeta_dot_solve(double t, const Trajectory& traj, const InitialHistory& init, const RelevantSet& relevant,
                          const ObservableSet& obs, const HermitianOperator& h, const MemorySettings& mem);

/// Fixed-step RK4 on the pair (zeta, B) where B is the history operator in the eigenbasis of H.
/// B obeys dB/dt = -i[H, B] + S(t) (minus the source leaving the window under truncation), so the
/// memory integral is carried exactly to the order of the integrator.
Trajectory integrate_zeta(const MacrostateParams& zeta_init, const InitialHistory& init, const RelevantSet& relevant,
                          const ObservableSet& obs, const HermitianOperator& h, const MemorySettings& mem,
                          double t_end);

/// Stepwise entropy change over lag tau and the gap to the equilibrium entropy.
struct EntropyReport {
  double tau = 0.0;
  int lag_steps = 0;
  std::vector<double> times;   ///< t with t - tau on the grid
  std::vector<double> steps;   ///< S(t) - S(t - tau)
  int negative_steps = 0;      ///< steps below -1e-8
  double first_step = 0.0;     ///< S(t0 + tau) - S(t0)
  double equilibrium_entropy = 0.0;
  std::vector<double> equilibrium_gap;  ///< S_eq - S(t) for every grid time
  double min_equilibrium_gap = 0.0;
};

/// tau is rounded to the nearest multiple of the grid step; the trajectory must cover 2 tau.
/// The equilibrium state maximizes entropy with only the conserved expectations of the first
/// grid time fixed.
EntropyReport entropy_report(const Trajectory& traj, double tau, const RelevantSet& relevant,
                             const InversionSettings& settings = {});

/// Normalized Kubo autocorrelations of the driven operators (made orthogonal to the constants of
/// motion) at a stationary Gibbs state.
struct TauEstimate {
  std::vector<double> times;
  std::vector<std::string> labels;                  ///< driven operators probed
  std::vector<std::vector<double>> correlations;    ///< [probe][time]
  std::vector<std::optional<double>> crossings;     ///< first time below 1/e, per probe
  std::vector<std::optional<double>> recurrences;   ///< first return above the threshold after the crossing
  std::optional<double> tau_est;                    ///< max crossing over probes
  std::optional<double> recurrence;                 ///< earliest recurrence over probes
  bool no_driven = false;

  /// True when a crossing exists and tau stays inside the probed window, short of the first recurrence.
  bool certifies(double tau) const;
};

TauEstimate estimate_tau(const RelevantSet& relevant, const HermitianOperator& h, const GibbsState& equilibrium,
                         double t_max, double dt, double recurrence_threshold = 0.9);

/// Gibbs state of the conserved operators of `relevant` with the expectations they have in rho.
GibbsState equilibrium_state(const DensityOperator& rho, const RelevantSet& relevant,
                             const InversionSettings& settings = {});

}  // namespace macrostate
